#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tvlearn/dataset.hpp"
#include "tvlearn/objective.hpp"
#include "tvlearn/state_solver.hpp"

namespace tvlearn {

/// Image the adjoint right-hand side measures the state against. The upper
/// level fits the clean image; `noisy` reproduces the variant that uses f_k.
enum class MisfitTarget { clean, noisy };

struct AdjointSolution {
  ImageGrid p;
  SolveReport linear;
};

/// Adjoint operator at a converged state: the transpose of the generalized
/// state Jacobian.
SparseMatrix adjoint_operator(const ImageGrid& u_hat, const ImageGrid& f, const ParamVec& lambda,
                              const FidelitySpec& spec, const StateConfig& cfg);

/// Solves A^T p = -(u_hat - target).
AdjointSolution solve_adjoint(const ImageGrid& u_hat, const ImageGrid& f,
                              const ImageGrid& u_clean, const ParamVec& lambda,
                              const FidelitySpec& spec, const StateConfig& cfg,
                              MisfitTarget misfit = MisfitTarget::clean);

/// l(lambda, f_k) = ||u_hat - u_clean||^2 in L2, i.e. h^2 * sum of squares.
double constraint_loss(const ImageGrid& u_hat, const ImageGrid& u_clean);

/// Gradient of l(lambda, f_k): component i is 2 * integral of
/// phi_i'(u_hat, f) * p, with phi' = h1_gamma(u - f) for the impulse term and
/// (u - f) for the Gaussian term.
std::vector<double> constraint_gradient(const ImageGrid& u_hat, const ImageGrid& p,
                                        const ImageGrid& f, const FidelitySpec& spec,
                                        const StateConfig& cfg);

struct GradientSample {
  std::size_t k = 0;
  double loss = 0.0;
  std::vector<double> grad;  // grad l(lambda, f_k)
  SolveReport state_report;
  SolveReport adjoint_report;
  double adjoint_linear_residual = 0.0;
};

struct BatchGradient {
  double value = 0.0;           // J_S
  std::vector<double> grad;     // grad J_S = 1/(2|S|) sum grad l_k
  std::vector<GradientSample> samples;  // ascending k
  std::vector<std::size_t> sample_indices;
  std::size_t state_solves = 0;
  std::size_t adjoint_solves = 0;
};

/// Last state computed for each constraint, used to warm start the next
/// solve of the same constraint. Slots are independent, so concurrent
/// writes to distinct k are safe.
class WarmStartCache {
 public:
  explicit WarmStartCache(std::size_t n = 0) : slots_(n) {}

  std::size_t size() const noexcept { return slots_.size(); }
  const std::optional<ImageGrid>& get(std::size_t k) const { return slots_.at(k); }
  void put(std::size_t k, ImageGrid u) { slots_.at(k) = std::move(u); }
  void clear() {
    for (auto& s : slots_) s.reset();
  }

 private:
  std::vector<std::optional<ImageGrid>> slots_;
};

struct GradientOptions {
  MisfitTarget misfit = MisfitTarget::clean;
  /// Skip the adjoint solve and leave grad zero.
  bool value_only = false;
  /// Worker threads for the per-constraint solves (1 = serial).
  unsigned threads = 1;
};

GradientSample evaluate_constraint(const TrainingPair& pair, const ParamVec& lambda,
                                   const FidelitySpec& spec, const StateConfig& cfg,
                                   const std::optional<ImageGrid>& warm_start = {},
                                   const GradientOptions& opts = {},
                                   ImageGrid* state_out = nullptr);

/// State + adjoint solve for every k in `indices` and aggregation in ascending
/// index order, so results do not depend on the order of `indices` or on the
/// thread schedule. Solver failures are rethrown annotated with k.
BatchGradient batch_gradient(const TrainingSet& ts, std::span<const std::size_t> indices,
                             const ParamVec& lambda, const FidelitySpec& spec,
                             const StateConfig& cfg, WarmStartCache* warm = nullptr,
                             const GradientOptions& opts = {});

/// SampledObjective backed by the lower-level TV problems of a training set.
class PdeObjective final : public SampledObjective {
 public:
  PdeObjective(const TrainingSet& ts, FidelitySpec spec, StateConfig cfg,
               GradientOptions opts = {});

  std::size_t population() const override { return ts_.size(); }
  std::size_t dim() const override { return spec_.dim(); }
  BatchEvaluation evaluate(const Eigen::VectorXd& lambda,
                           std::span<const std::size_t> indices) override;

  /// Largest number of Newton iterations any state solve has used.
  int max_newton_iterations() const noexcept { return max_newton_iterations_; }
  std::size_t unconverged_solves() const noexcept { return unconverged_; }

 private:
  const TrainingSet& ts_;
  FidelitySpec spec_;
  StateConfig cfg_;
  GradientOptions opts_;
  WarmStartCache warm_;
  int max_newton_iterations_ = 0;
  std::size_t unconverged_ = 0;
};

}  // namespace tvlearn
