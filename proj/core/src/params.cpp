#include "tvlearn/params.hpp"

#include <cmath>
#include <string>

#include "tvlearn/error.hpp"

namespace tvlearn {

FidelityKind parse_fidelity_kind(std::string_view name) {
  if (name == "gaussian" || name == "gaussian_only") return FidelityKind::gaussian_only;
  if (name == "mixed" || name == "mixed_l1_l2") return FidelityKind::mixed_l1_l2;
  throw InvalidArgument("unknown fidelity kind '" + std::string(name) + "'");
}

std::string_view to_string(FidelityKind kind) {
  return kind == FidelityKind::gaussian_only ? "gaussian" : "mixed";
}

ParamVec::ParamVec(std::initializer_list<double> weights)
    : ParamVec(std::vector<double>(weights)) {}

ParamVec::ParamVec(std::vector<double> weights) : weights_(std::move(weights)) {
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("ParamVec: weights must be finite and >= 0");
    }
  }
}

ParamVec::ParamVec(const Eigen::VectorXd& weights)
    : ParamVec(std::vector<double>(weights.data(), weights.data() + weights.size())) {}

Eigen::VectorXd ParamVec::as_vector() const {
  return Eigen::Map<const Eigen::VectorXd>(weights_.data(),
                                           static_cast<Eigen::Index>(weights_.size()));
}

void ParamVec::require_dim(const FidelitySpec& spec) const {
  if (weights_.size() != spec.dim()) {
    throw DimensionMismatch("ParamVec: expected " + std::to_string(spec.dim()) +
                            " weights for " + std::string(to_string(spec.kind)) + " fidelity, got " +
                            std::to_string(weights_.size()));
  }
}

}  // namespace tvlearn
