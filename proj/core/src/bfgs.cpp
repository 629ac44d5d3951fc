#include "tvlearn/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "tvlearn/error.hpp"
#include "tvlearn/sampling.hpp"

namespace tvlearn {

RunMode parse_run_mode(std::string_view name) {
  if (name == "full" || name == "full_batch") return RunMode::full_batch;
  if (name == "dynamic" || name == "dynamic_sampling") return RunMode::dynamic_sampling;
  throw InvalidArgument("unknown run mode '" + std::string(name) + "'");
}

std::string_view to_string(RunMode mode) {
  return mode == RunMode::full_batch ? "full" : "dynamic";
}

SampleGrowth parse_sample_growth(std::string_view name) {
  if (name == "resample") return SampleGrowth::resample;
  if (name == "nested") return SampleGrowth::nested;
  throw InvalidArgument("unknown sample growth '" + std::string(name) + "'");
}

std::string_view to_string(SampleGrowth growth) {
  return growth == SampleGrowth::resample ? "resample" : "nested";
}

void RunConfig::validate() const {
  if (!(theta >= 0.0 && theta < 1.0)) throw InvalidArgument("RunConfig: theta must lie in [0,1)");
  if (!(initial_sample_fraction > 0.0 && initial_sample_fraction <= 1.0)) {
    throw InvalidArgument("RunConfig: initial_sample_fraction must lie in (0,1]");
  }
  if (max_outer_iters < 1) throw InvalidArgument("RunConfig: max_outer_iters must be >= 1");
  if (!(grad_tol >= 0.0) || !(step_tol >= 0.0)) {
    throw InvalidArgument("RunConfig: tolerances must be >= 0");
  }
  if (lambda0.size() == 0) throw InvalidArgument("RunConfig: lambda0 is empty");
  for (double w : lambda0.weights()) {
    if (!(w > 0.0)) throw InvalidArgument("RunConfig: lambda0 must be strictly positive");
  }
  if (!(armijo.eta > 0.0 && armijo.eta < 1.0)) throw InvalidArgument("RunConfig: eta must lie in (0,1)");
  if (!(armijo.backtrack_factor > 0.0 && armijo.backtrack_factor < 1.0)) {
    throw InvalidArgument("RunConfig: backtrack_factor must lie in (0,1)");
  }
  if (armijo.max_backtracks < 0) throw InvalidArgument("RunConfig: max_backtracks must be >= 0");
}

std::size_t initial_sample_size(double fraction, std::size_t n) {
  const auto s = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(s, 1, n);
}

double positivity_bound(const Eigen::VectorXd& lambda, const Eigen::VectorXd& direction) {
  double bound = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (direction[i] < 0.0) bound = std::min(bound, -lambda[i] / direction[i]);
  }
  return 0.99 * bound;
}

LineSearchResult armijo_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& direction,
                               double value, const Eigen::VectorXd& grad,
                               const BatchEvaluator& evaluate, const ArmijoConfig& cfg) {
  const double slope = grad.dot(direction);
  if (!(slope < 0.0)) throw LineSearchError("armijo_search: direction is not a descent direction");

  LineSearchResult out;
  double alpha = std::min(1.0, positivity_bound(lambda, direction));
  for (int backtrack = 0; backtrack <= cfg.max_backtracks; ++backtrack) {
    Eigen::VectorXd trial = lambda + alpha * direction;
    BatchEvaluation ev = evaluate(trial);
    ++out.evals;
    out.state_solves += ev.state_solves;
    out.adjoint_solves += ev.adjoint_solves;
    if (std::isfinite(ev.value) && ev.value - value <= alpha * cfg.eta * slope) {
      out.alpha = alpha;
      out.lambda = std::move(trial);
      out.accepted = std::move(ev);
      return out;
    }
    alpha *= cfg.backtrack_factor;
  }
  throw LineSearchError("armijo_search: no sufficient decrease after " +
                        std::to_string(cfg.max_backtracks) + " backtracks");
}

BfgsUpdate bfgs_update(const Eigen::MatrixXd& inv_hessian, const Eigen::VectorXd& s,
                       const Eigen::VectorXd& y, double curvature_eps) {
  if (s.size() != inv_hessian.rows() || y.size() != inv_hessian.rows()) {
    throw DimensionMismatch("bfgs_update: s, y must match the matrix dimension");
  }
  const double sy = s.dot(y);
  if (!(sy > curvature_eps * s.norm() * y.norm())) return {inv_hessian, false};
  const double rho = 1.0 / sy;
  const auto d = inv_hessian.rows();
  const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d) - rho * y * s.transpose();
  Eigen::MatrixXd h = v.transpose() * inv_hessian * v + rho * s * s.transpose();
  h = 0.5 * (h + h.transpose());
  return {std::move(h), true};
}

namespace {

// Relative first-order test on the current batch.
bool gradient_small(const BatchEvaluation& ev, const Eigen::VectorXd& lambda, double tol) {
  return ev.grad.norm() * std::max(1.0, lambda.norm()) <= tol * std::abs(ev.value);
}

}  // namespace

RunResult run(SampledObjective& objective, const RunConfig& cfg) {
  cfg.validate();
  const std::size_t n = objective.population();
  const std::size_t d = objective.dim();
  if (n == 0) throw InvalidArgument("run: empty training set");
  if (cfg.lambda0.size() != d) throw DimensionMismatch("run: lambda0 has the wrong dimension");

  const bool dynamic = cfg.mode == RunMode::dynamic_sampling;
  const std::size_t s0 = dynamic ? initial_sample_size(cfg.initial_sample_fraction, n) : n;
  SampleState sampler(n, s0, cfg.theta, cfg.seed);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  RunResult res;
  res.initial_sample_size = s0;
  Eigen::VectorXd lambda = cfg.lambda0.as_vector();
  Eigen::MatrixXd inv_h;
  bool scaled_once = false;
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pending;  // (s, y)
  bool fallback_used = false;
  std::size_t grow_to = 0;

  for (int k = 0; k < cfg.max_outer_iters; ++k) {
    // Draw S_k.
    std::vector<std::size_t> indices;
    if (!dynamic) {
      indices = all;
    } else {
      if (grow_to > sampler.size()) sampler.resize(grow_to);
      indices = cfg.growth == SampleGrowth::nested ? sampler.nested() : sampler.draw();
    }

    BatchEvaluation ev = objective.evaluate(lambda, indices);
    res.pde_solve_count += ev.state_solves;
    res.adjoint_solves += ev.adjoint_solves;
    if (!std::isfinite(ev.value) || !ev.grad.allFinite()) {
      throw SolverError("run: non-finite objective at iteration " + std::to_string(k));
    }

    IterationRecord rec;
    rec.iteration = k;
    rec.lambda = lambda;
    rec.value = ev.value;
    rec.grad = ev.grad;
    rec.sample_size = indices.size();

    // Inverse Hessian: scaled identity from the first gradient, then the
    // pending curvature pair from the previous step.
    if (inv_h.size() == 0) {
      const double gnorm = ev.grad.norm();
      inv_h = Eigen::MatrixXd::Identity(d, d) / (gnorm > 0.0 ? gnorm : 1.0);
    }
    if (pending) {
      const auto& [s, y] = *pending;
      if (!scaled_once && s.dot(y) > 0.0) {
        inv_h = Eigen::MatrixXd::Identity(d, d) * (s.dot(y) / y.dot(y));
        scaled_once = true;
      }
      BfgsUpdate up = bfgs_update(inv_h, s, y, cfg.curvature_eps);
      inv_h = std::move(up.inv_hessian);
      rec.bfgs_updated = up.updated;
      pending.reset();
    }

    if (gradient_small(ev, lambda, cfg.grad_tol)) {
      rec.pde_solves = res.pde_solve_count;
      res.trace.push_back(std::move(rec));
      res.converged = true;
      res.stop_reason = "gradient tolerance";
      break;
    }

    Eigen::VectorXd direction = -inv_h * ev.grad;
    if (!(ev.grad.dot(direction) < 0.0)) {
      inv_h = Eigen::MatrixXd::Identity(d, d) / std::max(ev.grad.norm(), 1e-300);
      direction = -inv_h * ev.grad;
    }

    auto eval_on_sample = [&](const Eigen::VectorXd& trial) {
      return objective.evaluate(trial, indices);
    };
    std::optional<LineSearchResult> ls;
    try {
      ls = armijo_search(lambda, direction, ev.value, ev.grad, eval_on_sample, cfg.armijo);
    } catch (const LineSearchError&) {
      if (fallback_used) {
        rec.direction = direction;
        rec.pde_solves = res.pde_solve_count;
        res.trace.push_back(std::move(rec));
        res.stop_reason = "line search failed twice";
        break;
      }
      // One retry along the scaled steepest-descent direction.
      fallback_used = true;
      inv_h = Eigen::MatrixXd::Identity(d, d) / std::max(ev.grad.norm(), 1e-300);
      scaled_once = false;
      direction = -inv_h * ev.grad;
      try {
        ls = armijo_search(lambda, direction, ev.value, ev.grad, eval_on_sample, cfg.armijo);
      } catch (const LineSearchError&) {
        rec.direction = direction;
        rec.pde_solves = res.pde_solve_count;
        res.trace.push_back(std::move(rec));
        res.stop_reason = "line search failed twice";
        break;
      }
    }
    res.pde_solve_count += ls->state_solves;
    res.line_search_solves += ls->state_solves;
    res.adjoint_solves += ls->adjoint_solves;

    const Eigen::VectorXd step = ls->lambda - lambda;
    pending.emplace(step, ls->accepted.grad - ev.grad);

    // Descent test on the gradients of S_k at lambda_k; growth applies next
    // iteration.
    if (dynamic && indices.size() >= 2 && indices.size() < n) {
      const Eigen::VectorXd var = variance_estimate(ev.sample_grads);
      rec.variance_ok = condition_holds(var, ev.grad, indices.size(), n, cfg.theta);
      if (!rec.variance_ok) grow_to = next_size(var, ev.grad, indices.size(), n, cfg.theta);
    }

    rec.alpha = ls->alpha;
    rec.direction = direction;
    rec.line_search_evals = ls->evals;
    rec.pde_solves = res.pde_solve_count;
    res.trace.push_back(std::move(rec));

    const double rel_step = step.norm() / lambda.norm();
    lambda = ls->lambda;
    if (rel_step <= cfg.step_tol) {
      res.converged = true;
      res.stop_reason = "step tolerance";
      break;
    }
  }
  if (res.stop_reason.empty()) res.stop_reason = "max outer iterations";

  res.lambda_hat = ParamVec(lambda);
  res.outer_iterations = static_cast<int>(res.trace.size());
  res.final_sample_size = res.trace.empty() ? s0 : res.trace.back().sample_size;
  return res;
}

}  // namespace tvlearn
