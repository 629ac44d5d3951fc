#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tvlearn {

/// Componentwise sample variance (divisor |S| - 1) of per-constraint gradients.
/// Throws InvalidArgument for fewer than two gradients.
Eigen::VectorXd variance_estimate(std::span<const Eigen::VectorXd> grads);

/// Dynamic-sampling descent test
///   (||var||_1 / size) * (N - size)/(N - 1) <= theta^2 ||grad||_2^2.
/// Always true when size == N or N == 1.
bool condition_holds(const Eigen::VectorXd& var, const Eigen::VectorXd& grad, std::size_t size,
                     std::size_t n, double theta);

/// Sample size that restores the descent test under frozen statistics:
///   ceil(N ||var||_1 / (||var||_1 + theta^2 (N-1) ||grad||^2)),
/// clamped to [current + 1, N].
std::size_t next_size(const Eigen::VectorXd& var, const Eigen::VectorXd& grad,
                      std::size_t current, std::size_t n, double theta);

/// Current sample and the generator that draws it.
class SampleState {
 public:
  SampleState(std::size_t n, std::size_t initial_size, double theta, std::uint64_t seed);

  std::size_t population() const noexcept { return n_; }
  std::size_t size() const noexcept { return size_; }
  double theta() const noexcept { return theta_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t draw_counter() const noexcept { return draws_; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }

  /// Fresh uniform draw without replacement of size() indices from [0, N),
  /// sorted ascending.
  const std::vector<std::size_t>& draw();

  /// Nested-growth mode: the sample is the first size() entries of one
  /// uniformly random permutation fixed by the seed, so samples only ever
  /// gain indices as they grow.
  const std::vector<std::size_t>& nested();

  /// Sets the size used by the next draw(); must not shrink.
  void resize(std::size_t new_size);

 private:
  std::size_t n_;
  std::size_t size_;
  double theta_;
  std::uint64_t seed_;
  std::size_t draws_ = 0;
  std::mt19937_64 rng_;
  std::vector<std::size_t> indices_;
  std::vector<std::size_t> order_;
};

/// Stateless draw of `size` distinct indices from [0, n), sorted ascending.
std::vector<std::size_t> draw_sample(std::size_t n, std::size_t size, std::mt19937_64& rng);

}  // namespace tvlearn
