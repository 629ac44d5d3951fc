#pragma once

#include <Eigen/Core>
#include <string_view>

#include <Eigen/SparseCore>

#include "tvlearn/grid.hpp"

namespace tvlearn {

/// Ghost-value convention for the difference stencils.
///  - dirichlet: u = 0 outside the grid (default).
///  - neumann:   replicated ghost values, so the backward difference vanishes
///               on the first row/column.
enum class Boundary { dirichlet, neumann };

Boundary parse_boundary(std::string_view name);
std::string_view to_string(Boundary bc);

struct HuberParams {
  double gamma = 100.0;

  /// Throws InvalidArgument unless gamma >= 1.
  void validate() const;
};

/// Backward-difference gradient scaled by 1/h.
VectorField gradient(const ImageGrid& u, Boundary bc = Boundary::dirichlet);

/// Forward-difference divergence scaled by 1/h; the negative adjoint of
/// gradient() under the same boundary convention.
ImageGrid divergence(const VectorField& w, Boundary bc = Boundary::dirichlet);

/// Five-point Laplacian scaled by 1/h^2, evaluated with the same expression
/// tree as divergence(gradient(u)).
ImageGrid laplacian(const ImageGrid& u, Boundary bc = Boundary::dirichlet);

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Matrix forms of the x- and y-components of gradient() acting on the
/// row-major pixel vector.
struct DifferenceMatrices {
  SparseMatrix dx;
  SparseMatrix dy;
};

DifferenceMatrices difference_matrices(std::size_t rows, std::size_t cols, double h,
                                       Boundary bc = Boundary::dirichlet);

// Huberized TV subdifferential: h(z) = z / max(1/gamma, |z|).
Eigen::Vector2d huber_vec(const Eigen::Vector2d& z, const HuberParams& p);
Eigen::Matrix2d huber_vec_jac(const Eigen::Vector2d& z, const HuberParams& p);

/// Huber function whose gradient is huber_vec.
double huber_norm(const Eigen::Vector2d& z, const HuberParams& p);

// Huberized sign: gamma*t on |t| <= 1/gamma, sign(t) outside.
double huber_sign(double t, const HuberParams& p);
double huber_sign_deriv(double t, const HuberParams& p);

/// Huberized absolute value whose derivative is huber_sign.
double huber_abs(double t, const HuberParams& p);

}  // namespace tvlearn
