#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "tvlearn/grid.hpp"

namespace tvlearn {

enum class PhantomKind { ellipses, rectangles, blobs };

PhantomKind parse_phantom_kind(std::string_view name);
std::string_view to_string(PhantomKind kind);

/// How impulse-corrupted pixels are replaced.
enum class ImpulseKind {
  salt_and_pepper,  // 0 or 1 with probability 1/2 each
  zero              // "missing" pixels set to 0
};

ImpulseKind parse_impulse_kind(std::string_view name);
std::string_view to_string(ImpulseKind kind);

struct NoiseModelSpec {
  double gaussian_sigma = 0.05;
  double impulse_fraction = 0.0;
  std::uint64_t seed = 0;
  ImpulseKind impulse_kind = ImpulseKind::salt_and_pepper;

  void validate() const;
};

struct TrainingPair {
  ImageGrid clean;
  ImageGrid noisy;
  std::size_t index = 0;

  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

/// Ordered dictionary of clean/noisy pairs sharing one grid shape.
class TrainingSet {
 public:
  TrainingSet() = default;
  explicit TrainingSet(std::vector<TrainingPair> pairs);

  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const TrainingPair& operator[](std::size_t k) const { return pairs_.at(k); }
  const std::vector<TrainingPair>& pairs() const noexcept { return pairs_; }

  std::size_t rows() const noexcept { return empty() ? 0 : pairs_.front().clean.rows(); }
  std::size_t cols() const noexcept { return empty() ? 0 : pairs_.front().clean.cols(); }

  friend bool operator==(const TrainingSet&, const TrainingSet&) = default;

 private:
  std::vector<TrainingPair> pairs_;
};

/// Piecewise-constant synthetic phantom with values in [0, 1]. Deterministic
/// in (kind, rows, cols, seed). Requires rows, cols >= 8.
ImageGrid make_phantom(PhantomKind kind, std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Additive i.i.d. normal noise; values are not clipped.
ImageGrid add_gaussian_noise(const ImageGrid& u, double sigma, std::uint64_t seed);

/// Replaces exactly round(fraction * size) uniformly chosen pixels.
ImageGrid add_impulse_noise(const ImageGrid& u, double fraction, std::uint64_t seed,
                            ImpulseKind kind = ImpulseKind::salt_and_pepper);

/// Builds N pairs; pair k draws its phantom and noise from sub-seeds of
/// noise.seed. Gaussian noise is applied before impulse noise.
TrainingSet build_training_set(PhantomKind kind, std::size_t rows, std::size_t cols,
                               std::size_t n, const NoiseModelSpec& noise);

// .tvbl container: "TVBL", u32 version, u32 rows, u32 cols, u32 N, then per
// pair rows*cols clean f64 followed by rows*cols noisy f64, all little-endian.
// Version 2 additionally prefixes every pair with its own u32 rows/cols; it is
// produced by save_pairs() and load_set() rejects it when shapes differ.
inline constexpr std::uint32_t kTvblVersion = 1;
inline constexpr std::uint32_t kTvblPerPairShapeVersion = 2;

void save_set(const TrainingSet& set, const std::filesystem::path& path);
TrainingSet load_set(const std::filesystem::path& path);

/// Writes pairs in the version-2 layout without requiring a shared shape.
void save_pairs(const std::vector<TrainingPair>& pairs, const std::filesystem::path& path);

/// ASCII PGM (P2) export; values are clamped to [0,1] and scaled to maxval.
void write_pgm(const ImageGrid& image, const std::filesystem::path& path, int maxval = 255);
ImageGrid read_pgm(const std::filesystem::path& path);

}  // namespace tvlearn
