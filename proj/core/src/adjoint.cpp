#include "tvlearn/adjoint.hpp"

#include <algorithm>
#include <string>

#include "parallel.hpp"
#include "tvlearn/error.hpp"

namespace tvlearn {

SparseMatrix adjoint_operator(const ImageGrid& u_hat, const ImageGrid& f, const ParamVec& lambda,
                              const FidelitySpec& spec, const StateConfig& cfg) {
  return state_jacobian(u_hat, f, lambda, spec, cfg).transpose();
}

AdjointSolution solve_adjoint(const ImageGrid& u_hat, const ImageGrid& f,
                              const ImageGrid& u_clean, const ParamVec& lambda,
                              const FidelitySpec& spec, const StateConfig& cfg,
                              MisfitTarget misfit) {
  require_same_shape(u_hat, f, "solve_adjoint");
  require_same_shape(u_hat, u_clean, "solve_adjoint");
  const ImageGrid& target = misfit == MisfitTarget::clean ? u_clean : f;
  const auto n = static_cast<Eigen::Index>(u_hat.size());
  Eigen::VectorXd rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    rhs[k] = -(u_hat[uk] - target[uk]);
  }
  LinearSolution sol = solve_symmetric(adjoint_operator(u_hat, f, lambda, spec, cfg), rhs, cfg);
  return {ImageGrid(u_hat.rows(), u_hat.cols(), u_hat.h(),
                    std::vector<double>(sol.x.data(), sol.x.data() + n)),
          sol.report};
}

double constraint_loss(const ImageGrid& u_hat, const ImageGrid& u_clean) {
  require_same_shape(u_hat, u_clean, "constraint_loss");
  double s = 0.0;
  for (std::size_t k = 0; k < u_hat.size(); ++k) {
    const double d = u_hat[k] - u_clean[k];
    s += d * d;
  }
  return u_hat.h() * u_hat.h() * s;
}

std::vector<double> constraint_gradient(const ImageGrid& u_hat, const ImageGrid& p,
                                        const ImageGrid& f, const FidelitySpec& spec,
                                        const StateConfig& cfg) {
  require_same_shape(u_hat, p, "constraint_gradient");
  require_same_shape(u_hat, f, "constraint_gradient");
  // d/dlambda_i of ||u_hat - u||^2 = 2 (u_hat - u, du/dlambda_i) and
  // J du/dlambda_i = -phi_i', so with J^T p = -(u_hat - u) the sign is +.
  std::vector<double> g(spec.dim(), 0.0);
  for (std::size_t k = 0; k < u_hat.size(); ++k) {
    const double r = u_hat[k] - f[k];
    if (spec.kind == FidelityKind::gaussian_only) {
      g[0] += r * p[k];
    } else {
      g[0] += huber_sign(r, cfg.huber) * p[k];
      g[1] += r * p[k];
    }
  }
  const double w = 2.0 * u_hat.h() * u_hat.h();
  for (double& gi : g) gi *= w;
  return g;
}

GradientSample evaluate_constraint(const TrainingPair& pair, const ParamVec& lambda,
                                   const FidelitySpec& spec, const StateConfig& cfg,
                                   const std::optional<ImageGrid>& warm_start,
                                   const GradientOptions& opts, ImageGrid* state_out) {
  StateSolution state = solve_state(pair.noisy, lambda, spec, cfg, warm_start);
  GradientSample s;
  s.k = pair.index;
  s.loss = constraint_loss(state.u, pair.clean);
  s.state_report = state.report;
  if (opts.value_only) {
    s.grad.assign(spec.dim(), 0.0);
  } else {
    AdjointSolution adj =
        solve_adjoint(state.u, pair.noisy, pair.clean, lambda, spec, cfg, opts.misfit);
    s.grad = constraint_gradient(state.u, adj.p, pair.noisy, spec, cfg);
    s.adjoint_report = adj.linear;
    s.adjoint_linear_residual = adj.linear.final_residual_norm;
  }
  if (state_out) *state_out = std::move(state.u);
  return s;
}

BatchGradient batch_gradient(const TrainingSet& ts, std::span<const std::size_t> indices,
                             const ParamVec& lambda, const FidelitySpec& spec,
                             const StateConfig& cfg, WarmStartCache* warm,
                             const GradientOptions& opts) {
  if (indices.empty()) throw InvalidArgument("batch_gradient: empty sample");
  lambda.require_dim(spec);
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("batch_gradient: duplicate sample index");
  }
  if (sorted.back() >= ts.size()) throw InvalidArgument("batch_gradient: index out of range");
  if (warm && warm->size() != ts.size()) {
    throw DimensionMismatch("batch_gradient: warm-start cache size differs from N");
  }

  BatchGradient out;
  out.sample_indices = sorted;
  out.samples.resize(sorted.size());
  detail::parallel_for(sorted.size(), opts.threads, [&](std::size_t i) {
    const std::size_t k = sorted[i];
    try {
      ImageGrid state;
      const std::optional<ImageGrid> start = warm ? warm->get(k) : std::nullopt;
      out.samples[i] = evaluate_constraint(ts[k], lambda, spec, cfg, start, opts, &state);
      if (warm) warm->put(k, std::move(state));
    } catch (const SolverError& e) {
      throw SolverError("constraint " + std::to_string(k) + ": " + e.what());
    }
  });

  const double scale = 1.0 / (2.0 * static_cast<double>(sorted.size()));
  out.grad.assign(spec.dim(), 0.0);
  for (const auto& s : out.samples) {
    out.value += s.loss;
    for (std::size_t i = 0; i < spec.dim(); ++i) out.grad[i] += s.grad[i];
  }
  out.value *= scale;
  for (double& g : out.grad) g *= scale;
  out.state_solves = sorted.size();
  out.adjoint_solves = opts.value_only ? 0 : sorted.size();
  return out;
}

PdeObjective::PdeObjective(const TrainingSet& ts, FidelitySpec spec, StateConfig cfg,
                           GradientOptions opts)
    : ts_(ts), spec_(spec), cfg_(cfg), opts_(opts), warm_(ts.size()) {
  cfg_.validate();
}

BatchEvaluation PdeObjective::evaluate(const Eigen::VectorXd& lambda,
                                       std::span<const std::size_t> indices) {
  const BatchGradient bg = batch_gradient(ts_, indices, ParamVec(lambda), spec_, cfg_, &warm_, opts_);
  BatchEvaluation ev;
  ev.value = bg.value;
  ev.grad = Eigen::Map<const Eigen::VectorXd>(bg.grad.data(), static_cast<Eigen::Index>(bg.grad.size()));
  ev.indices = bg.sample_indices;
  ev.state_solves = bg.state_solves;
  ev.adjoint_solves = bg.adjoint_solves;
  ev.sample_grads.reserve(bg.samples.size());
  for (const auto& s : bg.samples) {
    ev.sample_grads.push_back(
        0.5 * Eigen::Map<const Eigen::VectorXd>(s.grad.data(), static_cast<Eigen::Index>(s.grad.size())));
    max_newton_iterations_ = std::max(max_newton_iterations_, s.state_report.iterations);
    if (!s.state_report.converged) ++unconverged_;
  }
  return ev;
}

}  // namespace tvlearn
