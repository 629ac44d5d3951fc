#include "tvlearn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tvlearn/error.hpp"

namespace tvlearn {

Eigen::VectorXd variance_estimate(std::span<const Eigen::VectorXd> grads) {
  if (grads.size() < 2) throw InvalidArgument("variance_estimate: need at least 2 gradients");
  const auto d = grads.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& g : grads) {
    if (g.size() != d) throw DimensionMismatch("variance_estimate: gradient lengths differ");
    mean += g;
  }
  mean /= static_cast<double>(grads.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& g : grads) var += (g - mean).cwiseAbs2();
  return var / static_cast<double>(grads.size() - 1);
}

bool condition_holds(const Eigen::VectorXd& var, const Eigen::VectorXd& grad, std::size_t size,
                     std::size_t n, double theta) {
  if (size < 1 || size > n) throw InvalidArgument("condition_holds: need 1 <= size <= N");
  if (size == n || n == 1) return true;
  const double lhs = var.lpNorm<1>() / static_cast<double>(size) *
                     static_cast<double>(n - size) / static_cast<double>(n - 1);
  return lhs <= theta * theta * grad.squaredNorm();
}

std::size_t next_size(const Eigen::VectorXd& var, const Eigen::VectorXd& grad,
                      std::size_t current, std::size_t n, double theta) {
  if (current >= n) return n;
  const double v = var.lpNorm<1>();
  const double denom = v + theta * theta * static_cast<double>(n - 1) * grad.squaredNorm();
  std::size_t s = n;
  if (v == 0.0) {
    s = current + 1;
  } else if (denom > 0.0) {
    const double raw = std::ceil(static_cast<double>(n) * v / denom);
    if (raw < static_cast<double>(n)) s = static_cast<std::size_t>(std::max(raw, 0.0));
  }
  s = std::min(n, std::max(current + 1, s));
  // The closed form can land one off the descent test when the bound is an
  // exact integer; settle such ties against the test itself.
  while (s > current + 1 && condition_holds(var, grad, s - 1, n, theta)) --s;
  while (s < n && !condition_holds(var, grad, s, n, theta)) ++s;
  return s;
}

std::vector<std::size_t> draw_sample(std::size_t n, std::size_t size, std::mt19937_64& rng) {
  if (size < 1 || size > n) throw InvalidArgument("draw_sample: need 1 <= size <= N");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t t = 0; t < size; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, n - 1);
    std::swap(idx[t], idx[pick(rng)]);
  }
  idx.resize(size);
  std::sort(idx.begin(), idx.end());
  return idx;
}

SampleState::SampleState(std::size_t n, std::size_t initial_size, double theta,
                         std::uint64_t seed)
    : n_(n), size_(initial_size), theta_(theta), seed_(seed), rng_(seed) {
  if (n == 0) throw InvalidArgument("SampleState: N must be >= 1");
  if (initial_size < 1 || initial_size > n) {
    throw InvalidArgument("SampleState: need 1 <= |S| <= N");
  }
  if (!(theta >= 0.0 && theta < 1.0)) throw InvalidArgument("SampleState: theta must lie in [0,1)");
}

const std::vector<std::size_t>& SampleState::draw() {
  indices_ = draw_sample(n_, size_, rng_);
  ++draws_;
  return indices_;
}

const std::vector<std::size_t>& SampleState::nested() {
  if (order_.empty()) {
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }
  indices_.assign(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(size_));
  std::sort(indices_.begin(), indices_.end());
  ++draws_;
  return indices_;
}

void SampleState::resize(std::size_t new_size) {
  if (new_size < size_ || new_size > n_) {
    throw InvalidArgument("SampleState: sample size may only grow up to N");
  }
  size_ = new_size;
}

}  // namespace tvlearn
