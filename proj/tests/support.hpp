#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tvlearn/dataset.hpp"
#include "tvlearn/grid.hpp"
#include "tvlearn/grid_ops.hpp"
#include "tvlearn/objective.hpp"

namespace tvtest {

using tvlearn::Boundary;
using tvlearn::ImageGrid;
using tvlearn::VectorField;

inline ImageGrid random_image(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                              double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ImageGrid g(rows, cols, 1.0 / static_cast<double>(cols));
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = u(rng);
  return g;
}

inline VectorField random_field(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorField w(rows, cols, 1.0 / static_cast<double>(cols));
  for (std::size_t k = 0; k < w.size(); ++k) {
    w.x[k] = u(rng);
    w.y[k] = u(rng);
  }
  return w;
}

// Dense backward-difference matrices written out pixel by pixel, independent
// of the library's sparse assembly. Dirichlet: zero ghost before the first
// row/column. Neumann: the first-row/column difference is zero.
struct DenseStencil {
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
};

inline DenseStencil dense_stencil(std::size_t rows, std::size_t cols, double h, Boundary bc) {
  const auto n = static_cast<Eigen::Index>(rows * cols);
  DenseStencil s{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  auto id = [&](std::size_t i, std::size_t j) { return static_cast<Eigen::Index>(i * cols + j); };
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto k = id(i, j);
      if (j > 0) {
        s.dx(k, k) = 1.0 / h;
        s.dx(k, id(i, j - 1)) = -1.0 / h;
      } else if (bc == Boundary::dirichlet) {
        s.dx(k, k) = 1.0 / h;
      }
      if (i > 0) {
        s.dy(k, k) = 1.0 / h;
        s.dy(k, id(i - 1, j)) = -1.0 / h;
      } else if (bc == Boundary::dirichlet) {
        s.dy(k, k) = 1.0 / h;
      }
    }
  }
  return s;
}

inline Eigen::VectorXd vec(const ImageGrid& u) {
  return Eigen::Map<const Eigen::VectorXd>(u.values().data(), static_cast<Eigen::Index>(u.size()));
}

inline Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// l_k(lambda) = (lambda - c_k)^T A (lambda - c_k) with SPD A, so
// J_S = 1/(2|S|) sum l_k has minimizer mean(c_k) over S and Hessian A.
class QuadraticObjective final : public tvlearn::SampledObjective {
 public:
  QuadraticObjective(std::vector<Eigen::VectorXd> centers, Eigen::MatrixXd a)
      : centers_(std::move(centers)), a_(std::move(a)) {}

  std::size_t population() const override { return centers_.size(); }
  std::size_t dim() const override { return static_cast<std::size_t>(a_.rows()); }

  tvlearn::BatchEvaluation evaluate(const Eigen::VectorXd& lambda,
                                    std::span<const std::size_t> indices) override {
    tvlearn::BatchEvaluation ev;
    ev.grad = Eigen::VectorXd::Zero(a_.rows());
    const double scale = 1.0 / (2.0 * static_cast<double>(indices.size()));
    for (std::size_t k : indices) {
      const Eigen::VectorXd r = lambda - centers_.at(k);
      const Eigen::VectorXd gk = 2.0 * a_ * r;
      ev.value += scale * r.dot(a_ * r);
      ev.grad += scale * gk;
      ev.sample_grads.push_back(0.5 * gk);
      ev.indices.push_back(k);
    }
    ev.state_solves = indices.size();
    ev.adjoint_solves = indices.size();
    ++calls_;
    return ev;
  }

  Eigen::VectorXd minimizer(std::span<const std::size_t> indices) const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(a_.rows());
    for (std::size_t k : indices) m += centers_.at(k);
    return m / static_cast<double>(indices.size());
  }

  Eigen::VectorXd minimizer() const {
    std::vector<std::size_t> all(centers_.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    return minimizer(all);
  }

  const Eigen::MatrixXd& hessian() const { return a_; }
  int calls() const { return calls_; }

 private:
  std::vector<Eigen::VectorXd> centers_;
  Eigen::MatrixXd a_;
  int calls_ = 0;
};

inline QuadraticObjective scalar_quadratic(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c(2.0, 4.0);
  std::vector<Eigen::VectorXd> centers;
  for (std::size_t k = 0; k < n; ++k) centers.push_back(Eigen::VectorXd::Constant(1, c(rng)));
  // l_k = (lambda - c_k)^2 so J = sum (lambda - c_k)^2 / 2N.
  return QuadraticObjective(std::move(centers), Eigen::MatrixXd::Identity(1, 1));
}

}  // namespace tvtest
