#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tvlearn {

/// Value and gradient of a sampled objective J_S(lambda) = 1/(2|S|) sum l_k.
struct BatchEvaluation {
  double value = 0.0;
  Eigen::VectorXd grad;
  /// Per-constraint contributions (1/2) grad l_k, in ascending index order;
  /// their mean is `grad`.
  std::vector<Eigen::VectorXd> sample_grads;
  std::vector<std::size_t> indices;
  std::size_t state_solves = 0;
  std::size_t adjoint_solves = 0;
};

/// Objective the outer optimizer sees: a population of N constraints that can
/// be evaluated on any index subset. Implementations must be deterministic in
/// (lambda, indices, call history).
class SampledObjective {
 public:
  virtual ~SampledObjective() = default;

  virtual std::size_t population() const = 0;
  virtual std::size_t dim() const = 0;

  /// Evaluates J_S and its gradient at lambda. `indices` are distinct and
  /// lie in [0, population()).
  virtual BatchEvaluation evaluate(const Eigen::VectorXd& lambda,
                                   std::span<const std::size_t> indices) = 0;
};

}  // namespace tvlearn
