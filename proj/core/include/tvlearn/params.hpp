#pragma once

#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace tvlearn {

/// Which fidelity terms weight the lower-level problem.
///  - gaussian_only: lambda (u - f)                              d = 1
///  - mixed_l1_l2:   lambda_1 h1(u - f) + lambda_2 (u - f)        d = 2
enum class FidelityKind { gaussian_only, mixed_l1_l2 };

FidelityKind parse_fidelity_kind(std::string_view name);
std::string_view to_string(FidelityKind kind);

struct FidelitySpec {
  FidelityKind kind = FidelityKind::gaussian_only;

  std::size_t dim() const noexcept { return kind == FidelityKind::gaussian_only ? 1 : 2; }

  static FidelitySpec gaussian() { return {FidelityKind::gaussian_only}; }
  static FidelitySpec mixed() { return {FidelityKind::mixed_l1_l2}; }
};

/// Nonnegative fidelity weights lambda_1..lambda_d.
class ParamVec {
 public:
  ParamVec() = default;
  ParamVec(std::initializer_list<double> weights);
  explicit ParamVec(std::vector<double> weights);
  explicit ParamVec(const Eigen::VectorXd& weights);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_.at(i); }
  std::span<const double> weights() const noexcept { return weights_; }
  Eigen::VectorXd as_vector() const;

  /// Throws DimensionMismatch if the size differs from spec.dim().
  void require_dim(const FidelitySpec& spec) const;

  friend bool operator==(const ParamVec&, const ParamVec&) = default;

 private:
  std::vector<double> weights_;
};

}  // namespace tvlearn
