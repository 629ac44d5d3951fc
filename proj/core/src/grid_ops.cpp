#include "tvlearn/grid_ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tvlearn/error.hpp"

namespace tvlearn {

Boundary parse_boundary(std::string_view name) {
  if (name == "dirichlet") return Boundary::dirichlet;
  if (name == "neumann") return Boundary::neumann;
  throw InvalidArgument("unknown boundary '" + std::string(name) + "'");
}

std::string_view to_string(Boundary bc) { return bc == Boundary::dirichlet ? "dirichlet" : "neumann"; }

void HuberParams::validate() const {
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("HuberParams: gamma must be >= 1");
  }
}

namespace {

// Ghost value seen by the backward difference at the first row/column.
inline double ghost(double first, Boundary bc) { return bc == Boundary::neumann ? first : 0.0; }

}  // namespace

VectorField gradient(const ImageGrid& u, Boundary bc) {
  const std::size_t rows = u.rows(), cols = u.cols();
  const double inv_h = 1.0 / u.h();
  VectorField g(rows, cols, u.h());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double c = u(i, j);
      const double left = j > 0 ? u(i, j - 1) : ghost(c, bc);
      const double up = i > 0 ? u(i - 1, j) : ghost(c, bc);
      g.x[i * cols + j] = (c - left) * inv_h;
      g.y[i * cols + j] = (c - up) * inv_h;
    }
  }
  return g;
}

// div w(i,j) = (w(i,j+1) - w(i,j))/h + (w(i+1,j) - w(i,j))/h with w = 0 past
// the last row/column. Under Neumann the first-row/column fluxes are dropped,
// mirroring the identically-zero backward differences there.
ImageGrid divergence(const VectorField& w, Boundary bc) {
  const std::size_t rows = w.rows, cols = w.cols;
  if (w.x.size() != rows * cols || w.y.size() != rows * cols) {
    throw DimensionMismatch("divergence: component length does not match grid");
  }
  const double inv_h = 1.0 / w.h;
  const bool neumann = bc == Boundary::neumann;
  ImageGrid out(rows, cols, w.h);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t k = i * cols + j;
      const double wx = (neumann && j == 0) ? 0.0 : w.x[k];
      const double wy = (neumann && i == 0) ? 0.0 : w.y[k];
      const double wx_next = j + 1 < cols ? w.x[k + 1] : 0.0;
      const double wy_next = i + 1 < rows ? w.y[k + cols] : 0.0;
      out[k] = (wx_next - wx) * inv_h + (wy_next - wy) * inv_h;
    }
  }
  return out;
}

ImageGrid laplacian(const ImageGrid& u, Boundary bc) {
  const std::size_t rows = u.rows(), cols = u.cols();
  const double inv_h = 1.0 / u.h();
  const bool neumann = bc == Boundary::neumann;
  auto dx = [&](std::size_t i, std::size_t j) {
    if (neumann && j == 0) return 0.0;
    const double left = j > 0 ? u(i, j - 1) : 0.0;
    return (u(i, j) - left) * inv_h;
  };
  auto dy = [&](std::size_t i, std::size_t j) {
    if (neumann && i == 0) return 0.0;
    const double up = i > 0 ? u(i - 1, j) : 0.0;
    return (u(i, j) - up) * inv_h;
  };
  ImageGrid out(rows, cols, u.h());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double wx_next = j + 1 < cols ? dx(i, j + 1) : 0.0;
      const double wy_next = i + 1 < rows ? dy(i + 1, j) : 0.0;
      out(i, j) = (wx_next - dx(i, j)) * inv_h + (wy_next - dy(i, j)) * inv_h;
    }
  }
  return out;
}

DifferenceMatrices difference_matrices(std::size_t rows, std::size_t cols, double h,
                                       Boundary bc) {
  const auto n = static_cast<Eigen::Index>(rows * cols);
  const double inv_h = 1.0 / h;
  const bool neumann = bc == Boundary::neumann;
  std::vector<Eigen::Triplet<double>> tx, ty;
  tx.reserve(2 * rows * cols);
  ty.reserve(2 * rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto k = static_cast<Eigen::Index>(i * cols + j);
      if (j > 0) {
        tx.emplace_back(k, k, inv_h);
        tx.emplace_back(k, k - 1, -inv_h);
      } else if (!neumann) {
        tx.emplace_back(k, k, inv_h);
      }
      if (i > 0) {
        ty.emplace_back(k, k, inv_h);
        ty.emplace_back(k, k - static_cast<Eigen::Index>(cols), -inv_h);
      } else if (!neumann) {
        ty.emplace_back(k, k, inv_h);
      }
    }
  }
  DifferenceMatrices d{SparseMatrix(n, n), SparseMatrix(n, n)};
  d.dx.setFromTriplets(tx.begin(), tx.end());
  d.dy.setFromTriplets(ty.begin(), ty.end());
  return d;
}

Eigen::Vector2d huber_vec(const Eigen::Vector2d& z, const HuberParams& p) {
  return z / std::max(1.0 / p.gamma, z.norm());
}

Eigen::Matrix2d huber_vec_jac(const Eigen::Vector2d& z, const HuberParams& p) {
  const double r = z.norm();
  if (r < 1.0 / p.gamma) {
    return p.gamma * Eigen::Matrix2d::Identity();
  }
  return (Eigen::Matrix2d::Identity() - z * z.transpose() / (r * r)) / r;
}

double huber_norm(const Eigen::Vector2d& z, const HuberParams& p) {
  const double r = z.norm();
  if (r < 1.0 / p.gamma) return 0.5 * p.gamma * r * r;
  return r - 0.5 / p.gamma;
}

double huber_sign(double t, const HuberParams& p) {
  if (std::abs(t) <= 1.0 / p.gamma) return p.gamma * t;
  return t > 0.0 ? 1.0 : -1.0;
}

double huber_sign_deriv(double t, const HuberParams& p) {
  return std::abs(t) <= 1.0 / p.gamma ? p.gamma : 0.0;
}

double huber_abs(double t, const HuberParams& p) {
  const double a = std::abs(t);
  if (a <= 1.0 / p.gamma) return 0.5 * p.gamma * t * t;
  return a - 0.5 / p.gamma;
}

}  // namespace tvlearn
