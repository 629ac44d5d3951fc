#pragma once

#include <optional>

#include "tvlearn/grid.hpp"
#include "tvlearn/grid_ops.hpp"
#include "tvlearn/params.hpp"

namespace tvlearn {

struct StateConfig {
  double epsilon = 1e-12;  // artificial diffusion
  HuberParams huber{100.0};
  int max_iter = 35;
  /// Newton stops once the RMS step falls below this.
  double step_tol = 1e-9;
  /// Convergence requires ||residual||_2 <= residual_tol * (1 + ||f||_2).
  double residual_tol = 1e-6;
  /// Relative residual required from every linear solve.
  double linear_solver_tol = 1e-10;
  int max_damping = 10;
  Boundary boundary = Boundary::dirichlet;
  /// Grids with at least this many pixels use preconditioned CG instead of a
  /// sparse Cholesky factorization.
  std::size_t iterative_threshold = 64 * 64;

  void validate() const;
};

struct SolveReport {
  int iterations = 0;
  double final_step_norm = 0.0;
  double final_residual_norm = 0.0;
  bool converged = false;
  int linear_solves = 0;
};

/// Pointwise residual of -eps*Lap(u) - div h_gamma(grad u) + fidelity(u - f).
ImageGrid state_residual(const ImageGrid& u, const ImageGrid& f, const ParamVec& lambda,
                         const FidelitySpec& spec, const StateConfig& cfg);

/// Discrete energy whose gradient (divided by h^2) is state_residual:
///   h^2 * sum( eps/2 |Du|^2 + H_gamma(Du) + fidelity potential ).
double state_energy(const ImageGrid& u, const ImageGrid& f, const ParamVec& lambda,
                    const FidelitySpec& spec, const StateConfig& cfg);

/// Generalized Jacobian of state_residual at u (symmetric, branch chosen by u).
SparseMatrix state_jacobian(const ImageGrid& u, const ImageGrid& f, const ParamVec& lambda,
                            const FidelitySpec& spec, const StateConfig& cfg);

struct LinearSolution {
  Eigen::VectorXd x;
  SolveReport report;
};

/// Solves a symmetric system: sparse Cholesky below cfg.iterative_threshold
/// unknowns, Jacobi-preconditioned CG otherwise. Throws SolverError when the
/// system is singular or the tolerance is not met.
LinearSolution solve_symmetric(const SparseMatrix& a, const Eigen::VectorXd& b,
                               const StateConfig& cfg);

struct NewtonStep {
  ImageGrid step;
  SolveReport linear;
};

/// Undamped semismooth Newton step: J(u) step = -residual(u).
NewtonStep newton_step(const ImageGrid& u, const ImageGrid& f, const ParamVec& lambda,
                       const FidelitySpec& spec, const StateConfig& cfg);

struct StateSolution {
  ImageGrid u;
  SolveReport report;
};

/// Damped semismooth Newton for the lower-level problem, started from u0
/// (defaults to f).
StateSolution solve_state(const ImageGrid& f, const ParamVec& lambda, const FidelitySpec& spec,
                          const StateConfig& cfg, const std::optional<ImageGrid>& u0 = {});

}  // namespace tvlearn
