#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tvlearn/objective.hpp"
#include "tvlearn/params.hpp"

namespace tvlearn {

enum class RunMode { full_batch, dynamic_sampling };

RunMode parse_run_mode(std::string_view name);
std::string_view to_string(RunMode mode);

/// How a grown sample is formed.
enum class SampleGrowth {
  resample,  // fresh draw every iteration (default)
  nested     // prefixes of one seeded permutation, so samples only gain indices
};

SampleGrowth parse_sample_growth(std::string_view name);
std::string_view to_string(SampleGrowth growth);

struct ArmijoConfig {
  double eta = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 25;
};

struct RunConfig {
  RunMode mode = RunMode::dynamic_sampling;
  double theta = 0.5;
  double initial_sample_fraction = 0.20;
  int max_outer_iters = 200;
  /// Stop when ||grad J_S|| * max(1, ||lambda||) <= grad_tol * J_S, i.e. the
  /// log-parameter sensitivity of J_S is small. Sample noise in the gradient
  /// is of this order for |S| ~ 4, so much tighter values force S up to N.
  double grad_tol = 0.05;
  /// Stop when ||lambda_{k+1} - lambda_k|| <= step_tol * ||lambda_k||.
  double step_tol = 1e-6;
  double curvature_eps = 1e-10;
  ParamVec lambda0{1000.0};
  ArmijoConfig armijo;
  SampleGrowth growth = SampleGrowth::resample;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Initial sample size: round(fraction * N), at least 1.
std::size_t initial_sample_size(double fraction, std::size_t n);

struct IterationRecord {
  int iteration = 0;
  Eigen::VectorXd lambda;     // lambda_k
  double value = 0.0;         // J_{S_k}(lambda_k)
  Eigen::VectorXd grad;       // grad J_{S_k}(lambda_k)
  std::size_t sample_size = 0;
  double alpha = 0.0;         // accepted step length (0 if no step was taken)
  Eigen::VectorXd direction;  // d_k
  bool bfgs_updated = false;  // whether the inverse Hessian was updated this iteration
  bool variance_ok = true;    // descent test outcome on S_k
  int line_search_evals = 0;
  std::size_t pde_solves = 0;  // cumulative state solves after this iteration
};

struct RunResult {
  ParamVec lambda_hat;
  std::vector<IterationRecord> trace;
  std::size_t pde_solve_count = 0;  // all nonlinear state solves
  std::size_t line_search_solves = 0;
  std::size_t adjoint_solves = 0;
  int outer_iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::size_t initial_sample_size = 0;
  std::size_t final_sample_size = 0;
};

/// Algorithm: per iteration draw S_k (or take all constraints), evaluate
/// grad J_{S_k}, apply the pending BFGS update, step along -H grad with Armijo
/// backtracking, then run the variance test and grow |S| for the next
/// iteration when it fails. Curvature pairs use gradients of the same sample
/// at both ends of the step.
RunResult run(SampledObjective& objective, const RunConfig& cfg);

using BatchEvaluator = std::function<BatchEvaluation(const Eigen::VectorXd&)>;

struct LineSearchResult {
  double alpha = 0.0;
  Eigen::VectorXd lambda;
  int evals = 0;
  std::size_t state_solves = 0;
  std::size_t adjoint_solves = 0;
  BatchEvaluation accepted;
};

/// Largest step keeping every component strictly positive:
/// 0.99 * min over d_i < 0 of (-lambda_i / d_i); +inf if no component decreases.
double positivity_bound(const Eigen::VectorXd& lambda, const Eigen::VectorXd& direction);

/// Backtracking from alpha_max = min(1, positivity_bound) until
///   J(lambda + alpha d) - J(lambda) <= alpha * eta * grad^T d.
/// Throws LineSearchError for a non-descent direction (no evaluation spent)
/// or when max_backtracks is exhausted.
LineSearchResult armijo_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& direction,
                               double value, const Eigen::VectorXd& grad,
                               const BatchEvaluator& evaluate, const ArmijoConfig& cfg);

struct BfgsUpdate {
  Eigen::MatrixXd inv_hessian;
  bool updated = false;
};

/// Inverse BFGS update, skipped unless s^T y > curvature_eps * ||s|| ||y||.
BfgsUpdate bfgs_update(const Eigen::MatrixXd& inv_hessian, const Eigen::VectorXd& s,
                       const Eigen::VectorXd& y, double curvature_eps = 1e-10);

}  // namespace tvlearn
