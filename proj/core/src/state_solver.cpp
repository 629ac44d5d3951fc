#include "tvlearn/state_solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tvlearn/error.hpp"

namespace tvlearn {

void StateConfig::validate() const {
  if (!(epsilon > 0.0)) throw InvalidArgument("StateConfig: epsilon must be > 0");
  huber.validate();
  if (max_iter < 1) throw InvalidArgument("StateConfig: max_iter must be >= 1");
  if (!(step_tol > 0.0) || !(residual_tol > 0.0) || !(linear_solver_tol > 0.0)) {
    throw InvalidArgument("StateConfig: tolerances must be > 0");
  }
  if (max_damping < 0) throw InvalidArgument("StateConfig: max_damping must be >= 0");
}

namespace {

Eigen::Map<const Eigen::VectorXd> as_map(const ImageGrid& u) {
  return {u.values().data(), static_cast<Eigen::Index>(u.size())};
}

void check_inputs(const ImageGrid& u, const ImageGrid& f, const ParamVec& lambda,
                  const FidelitySpec& spec) {
  require_same_shape(u, f, "state solver");
  lambda.require_dim(spec);
}

// Pointwise derivative of the fidelity potential with respect to u.
double fidelity_term(double r, const ParamVec& lambda, const FidelitySpec& spec,
                     const HuberParams& hp) {
  if (spec.kind == FidelityKind::gaussian_only) return lambda[0] * r;
  return lambda[0] * huber_sign(r, hp) + lambda[1] * r;
}

double fidelity_curvature(double r, const ParamVec& lambda, const FidelitySpec& spec,
                          const HuberParams& hp) {
  if (spec.kind == FidelityKind::gaussian_only) return lambda[0];
  return lambda[0] * huber_sign_deriv(r, hp) + lambda[1];
}

double fidelity_potential(double r, const ParamVec& lambda, const FidelitySpec& spec,
                          const HuberParams& hp) {
  if (spec.kind == FidelityKind::gaussian_only) return 0.5 * lambda[0] * r * r;
  return lambda[0] * huber_abs(r, hp) + 0.5 * lambda[1] * r * r;
}

}  // namespace

ImageGrid state_residual(const ImageGrid& u, const ImageGrid& f, const ParamVec& lambda,
                         const FidelitySpec& spec, const StateConfig& cfg) {
  check_inputs(u, f, lambda, spec);
  VectorField flux = gradient(u, cfg.boundary);
  for (std::size_t k = 0; k < flux.size(); ++k) {
    const Eigen::Vector2d hz = huber_vec({flux.x[k], flux.y[k]}, cfg.huber);
    flux.x[k] = hz[0];
    flux.y[k] = hz[1];
  }
  const ImageGrid lap = laplacian(u, cfg.boundary);
  const ImageGrid div = divergence(flux, cfg.boundary);
  ImageGrid r(u.rows(), u.cols(), u.h());
  for (std::size_t k = 0; k < r.size(); ++k) {
    r[k] = -cfg.epsilon * lap[k] - div[k] + fidelity_term(u[k] - f[k], lambda, spec, cfg.huber);
  }
  return r;
}

double state_energy(const ImageGrid& u, const ImageGrid& f, const ParamVec& lambda,
                    const FidelitySpec& spec, const StateConfig& cfg) {
  check_inputs(u, f, lambda, spec);
  const VectorField g = gradient(u, cfg.boundary);
  double e = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Eigen::Vector2d z{g.x[k], g.y[k]};
    e += 0.5 * cfg.epsilon * z.squaredNorm() + huber_norm(z, cfg.huber) +
         fidelity_potential(u[k] - f[k], lambda, spec, cfg.huber);
  }
  return u.h() * u.h() * e;
}

SparseMatrix state_jacobian(const ImageGrid& u, const ImageGrid& f, const ParamVec& lambda,
                            const FidelitySpec& spec, const StateConfig& cfg) {
  check_inputs(u, f, lambda, spec);
  const auto n = static_cast<Eigen::Index>(u.size());
  const DifferenceMatrices d = difference_matrices(u.rows(), u.cols(), u.h(), cfg.boundary);
  const VectorField g = gradient(u, cfg.boundary);

  Eigen::VectorXd a11(n), a12(n), a22(n), fid(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const Eigen::Matrix2d jac = huber_vec_jac({g.x[uk], g.y[uk]}, cfg.huber);
    a11[k] = jac(0, 0) + cfg.epsilon;
    a12[k] = jac(0, 1);
    a22[k] = jac(1, 1) + cfg.epsilon;
    fid[k] = fidelity_curvature(u[uk] - f[uk], lambda, spec, cfg.huber);
  }
  const SparseMatrix dxt = d.dx.transpose();
  const SparseMatrix dyt = d.dy.transpose();
  SparseMatrix cross = dxt * a12.asDiagonal() * d.dy;
  SparseMatrix jac = dxt * a11.asDiagonal() * d.dx + dyt * a22.asDiagonal() * d.dy;
  jac += cross;
  jac += SparseMatrix(cross.transpose());
  SparseMatrix diag(n, n);
  diag.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index k = 0; k < n; ++k) diag.insert(k, k) = fid[k];
  jac += diag;
  jac.makeCompressed();
  return jac;
}

LinearSolution solve_symmetric(const SparseMatrix& a, const Eigen::VectorXd& b,
                               const StateConfig& cfg) {
  LinearSolution out;
  out.report.linear_solves = 1;
  out.report.iterations = 1;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.x = Eigen::VectorXd::Zero(b.size());
    out.report.converged = true;
    return out;
  }
  if (static_cast<std::size_t>(a.rows()) < cfg.iterative_threshold) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
      throw SolverError("linear solve: singular or indefinite system");
    }
    out.x = ldlt.solve(b);
  } else {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(cfg.linear_solver_tol);
    cg.setMaxIterations(10 * a.rows());
    cg.compute(a);
    out.x = cg.solve(b);
    out.report.iterations = static_cast<int>(cg.iterations());
  }
  if (!out.x.allFinite()) throw SolverError("linear solve: non-finite solution");
  const double rel = (a * out.x - b).norm() / bnorm;
  out.report.final_residual_norm = rel;
  out.report.converged = rel <= cfg.linear_solver_tol;
  if (!out.report.converged) {
    throw SolverError("linear solve: relative residual " + std::to_string(rel) +
                      " above tolerance");
  }
  return out;
}

namespace {

// Dual variables per pixel: q ~ h_gamma(Du) for the TV term and
// s ~ h1_gamma(u - f) for the impulse fidelity (mixed kind only).
struct DualField {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> s;
};

DualField consistent_dual(const ImageGrid& u, const ImageGrid& f, const StateConfig& cfg) {
  const VectorField g = gradient(u, cfg.boundary);
  DualField q{std::vector<double>(g.size()), std::vector<double>(g.size()),
              std::vector<double>(g.size())};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Eigen::Vector2d hz = huber_vec({g.x[k], g.y[k]}, cfg.huber);
    q.x[k] = hz[0];
    q.y[k] = hz[1];
    q.s[k] = huber_sign(u[k] - f[k], cfg.huber);
  }
  return q;
}

struct PrimalDualStep {
  ImageGrid du;
  DualField dq;
  SolveReport linear;
};

// Curvature of the impulse term, max(1/gamma, |r|) s = r linearized with s
// projected onto [-1, 1]; equals huber_sign_deriv once s = h1_gamma(r).
double impulse_curvature(double r, double s, double gamma) {
  const double a = std::abs(r);
  if (a < 1.0 / gamma) return gamma;
  const double sp = std::clamp(s, -1.0, 1.0);
  return (1.0 - sp * (r > 0.0 ? 1.0 : -1.0)) / a;
}

// Semismooth Newton step on the primal-dual system
//   eps D'D u + D'q + fidelity(u - f) = 0,   max(1/gamma, |Du|) q = Du,
// with the dual eliminated. On active pixels the dual enters the linearization
// through its projection onto the unit ball, symmetrized, which keeps the
// reduced matrix positive semidefinite. With q = h_gamma(Du) this reduces to
// the primal generalized Jacobian.
PrimalDualStep primal_dual_step(const ImageGrid& u, const DualField& q, const ImageGrid& f,
                                const ParamVec& lambda, const FidelitySpec& spec,
                                const StateConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(u.size());
  const double inv_gamma = 1.0 / cfg.huber.gamma;
  const DifferenceMatrices d = difference_matrices(u.rows(), u.cols(), u.h(), cfg.boundary);
  const VectorField g = gradient(u, cfg.boundary);

  Eigen::VectorXd a11(n), a12(n), a22(n), fid(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const Eigen::Vector2d z{g.x[uk], g.y[uk]};
    const double r = z.norm();
    Eigen::Matrix2d b;
    if (r < inv_gamma) {
      b = cfg.huber.gamma * Eigen::Matrix2d::Identity();
    } else {
      Eigen::Vector2d qk{q.x[uk], q.y[uk]};
      qk /= std::max(1.0, qk.norm());
      const Eigen::Vector2d nz = z / r;
      b = (Eigen::Matrix2d::Identity() - 0.5 * (qk * nz.transpose() + nz * qk.transpose())) / r;
    }
    a11[k] = b(0, 0) + cfg.epsilon;
    a12[k] = b(0, 1);
    a22[k] = b(1, 1) + cfg.epsilon;
    const double res = u[uk] - f[uk];
    fid[k] = spec.kind == FidelityKind::gaussian_only
                 ? lambda[0]
                 : lambda[0] * impulse_curvature(res, q.s[uk], cfg.huber.gamma) + lambda[1];
  }
  const SparseMatrix dxt = d.dx.transpose();
  const SparseMatrix dyt = d.dy.transpose();
  SparseMatrix cross = dxt * a12.asDiagonal() * d.dy;
  SparseMatrix jac = dxt * a11.asDiagonal() * d.dx + dyt * a22.asDiagonal() * d.dy;
  jac += cross;
  jac += SparseMatrix(cross.transpose());
  jac += SparseMatrix(fid.asDiagonal());

  const ImageGrid r = state_residual(u, f, lambda, spec, cfg);
  LinearSolution sol = solve_symmetric(jac, -as_map(r), cfg);

  PrimalDualStep out{ImageGrid(u.rows(), u.cols(), u.h(),
                               std::vector<double>(sol.x.data(), sol.x.data() + n)),
                     DualField{std::vector<double>(u.size()), std::vector<double>(u.size()),
                               std::vector<double>(u.size())},
                     sol.report};
  // Recover the dual update from the linearized second equation (unsymmetrized).
  const VectorField gd = gradient(out.du, cfg.boundary);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Eigen::Vector2d z{g.x[k], g.y[k]};
    const Eigen::Vector2d dz{gd.x[k], gd.y[k]};
    const Eigen::Vector2d qk{q.x[k], q.y[k]};
    const double r = z.norm();
    const double m = std::max(inv_gamma, r);
    Eigen::Vector2d dq = (dz - (m * qk - z)) / m;
    if (r >= inv_gamma) dq -= qk * (z.dot(dz) / (r * m));
    out.dq.x[k] = dq[0];
    out.dq.y[k] = dq[1];
    if (spec.kind == FidelityKind::mixed_l1_l2) {
      const double res = u[k] - f[k];
      const double a = std::abs(res);
      const double ms = std::max(inv_gamma, a);
      double ds = (out.du[k] - (ms * q.s[k] - res)) / ms;
      if (a >= inv_gamma) ds -= q.s[k] * (res * out.du[k]) / (a * ms);
      out.dq.s[k] = ds;
    }
  }
  return out;
}

}  // namespace

NewtonStep newton_step(const ImageGrid& u, const ImageGrid& f, const ParamVec& lambda,
                       const FidelitySpec& spec, const StateConfig& cfg) {
  const ImageGrid r = state_residual(u, f, lambda, spec, cfg);
  const SparseMatrix jac = state_jacobian(u, f, lambda, spec, cfg);
  LinearSolution sol = solve_symmetric(jac, -as_map(r), cfg);
  std::vector<double> step(sol.x.data(), sol.x.data() + sol.x.size());
  return {ImageGrid(u.rows(), u.cols(), u.h(), std::move(step)), sol.report};
}

StateSolution solve_state(const ImageGrid& f, const ParamVec& lambda, const FidelitySpec& spec,
                          const StateConfig& cfg, const std::optional<ImageGrid>& u0) {
  cfg.validate();
  lambda.require_dim(spec);
  if (spec.kind == FidelityKind::gaussian_only && lambda[0] == 0.0 &&
      cfg.boundary == Boundary::neumann) {
    throw SolverError("solve_state: lambda = 0 with Neumann boundary is singular up to constants");
  }
  if (spec.kind == FidelityKind::mixed_l1_l2 && lambda[1] == 0.0 &&
      cfg.boundary == Boundary::neumann) {
    throw SolverError("solve_state: lambda_2 = 0 with Neumann boundary is not well-posed");
  }

  StateSolution out{u0 ? *u0 : f, {}};
  if (u0) require_same_shape(*u0, f, "solve_state warm start");
  ImageGrid& u = out.u;
  SolveReport& rep = out.report;
  DualField q = consistent_dual(u, f, cfg);

  const double target = cfg.residual_tol * (1.0 + norm2(f));
  const double rms = std::sqrt(static_cast<double>(f.size()));
  const double h2 = f.h() * f.h();
  ImageGrid r_cur = state_residual(u, f, lambda, spec, cfg);
  double rnorm = norm2(r_cur);
  double energy = state_energy(u, f, lambda, spec, cfg);
  if (!std::isfinite(rnorm)) throw SolverError("solve_state: non-finite initial residual");

  while (rnorm > target && rep.iterations < cfg.max_iter) {
    const PrimalDualStep ns = primal_dual_step(u, q, f, lambda, spec, cfg);
    rep.linear_solves += ns.linear.linear_solves;

    // Halve the step until the residual does not grow or the (convex) energy
    // decreases sufficiently; du is a descent direction for the energy.
    const double slope = h2 * as_map(r_cur).dot(as_map(ns.du));
    double t = 1.0;
    ImageGrid trial = u;
    double trial_norm = 0.0;
    ImageGrid trial_r;
    for (int damp = 0;; ++damp) {
      for (std::size_t k = 0; k < u.size(); ++k) trial[k] = u[k] + t * ns.du[k];
      trial_r = state_residual(trial, f, lambda, spec, cfg);
      trial_norm = norm2(trial_r);
      if (trial_norm <= rnorm || damp >= cfg.max_damping) break;
      if (slope < 0.0 && state_energy(trial, f, lambda, spec, cfg) <= energy + 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (!std::isfinite(trial_norm)) throw SolverError("solve_state: iterate became non-finite");

    for (std::size_t k = 0; k < u.size(); ++k) {
      q.x[k] += t * ns.dq.x[k];
      q.y[k] += t * ns.dq.y[k];
      q.s[k] += t * ns.dq.s[k];
    }
    u = std::move(trial);
    r_cur = std::move(trial_r);
    rnorm = trial_norm;
    energy = state_energy(u, f, lambda, spec, cfg);
    ++rep.iterations;
    rep.final_step_norm = t * norm2(ns.du) / rms;
    if (rep.final_step_norm <= cfg.step_tol) break;
  }
  rep.final_residual_norm = rnorm;
  rep.converged = rnorm <= target;
  return out;
}

}  // namespace tvlearn
