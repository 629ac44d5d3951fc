#include "tvlearn/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "tvlearn/error.hpp"
#include "tvlearn/random.hpp"

namespace tvlearn {

ImpulseKind parse_impulse_kind(std::string_view name) {
  if (name == "salt_and_pepper") return ImpulseKind::salt_and_pepper;
  if (name == "zero") return ImpulseKind::zero;
  throw InvalidArgument("unknown impulse kind '" + std::string(name) + "'");
}

std::string_view to_string(ImpulseKind kind) {
  return kind == ImpulseKind::salt_and_pepper ? "salt_and_pepper" : "zero";
}

PhantomKind parse_phantom_kind(std::string_view name) {
  if (name == "ellipses") return PhantomKind::ellipses;
  if (name == "rectangles") return PhantomKind::rectangles;
  if (name == "blobs") return PhantomKind::blobs;
  throw InvalidArgument("unknown phantom kind '" + std::string(name) + "'");
}

std::string_view to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::ellipses: return "ellipses";
    case PhantomKind::rectangles: return "rectangles";
    case PhantomKind::blobs: return "blobs";
  }
  return "unknown";
}

void NoiseModelSpec::validate() const {
  if (!(gaussian_sigma >= 0.0) || !std::isfinite(gaussian_sigma)) {
    throw InvalidArgument("noise: gaussian_sigma must be >= 0");
  }
  if (!(impulse_fraction >= 0.0 && impulse_fraction <= 1.0)) {
    throw InvalidArgument("noise: impulse_fraction must lie in [0, 1]");
  }
}

TrainingSet::TrainingSet(std::vector<TrainingPair> pairs) : pairs_(std::move(pairs)) {
  for (const auto& p : pairs_) {
    require_same_shape(p.clean, p.noisy, "TrainingPair");
    require_same_shape(p.clean, pairs_.front().clean, "TrainingSet");
    for (double v : p.clean.values()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw InvalidArgument("TrainingPair: clean pixel values must lie in [0, 1]");
      }
    }
  }
}

namespace {

// Paints shapes in normalized coordinates (x, y) in [0,1]^2 with the pixel
// centre convention; later shapes overwrite earlier ones.
struct Canvas {
  ImageGrid image;

  template <class Inside>
  void paint(double value, Inside inside) {
    const auto rows = image.rows(), cols = image.cols();
    for (std::size_t i = 0; i < rows; ++i) {
      const double y = (static_cast<double>(i) + 0.5) / static_cast<double>(rows);
      for (std::size_t j = 0; j < cols; ++j) {
        const double x = (static_cast<double>(j) + 0.5) / static_cast<double>(cols);
        if (inside(x, y)) image(i, j) = value;
      }
    }
  }
};

}  // namespace

ImageGrid make_phantom(PhantomKind kind, std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows < 8 || cols < 8) {
    throw InvalidArgument("make_phantom: rows and cols must be >= 8");
  }
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(kind)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  Canvas canvas{ImageGrid(rows, cols, 1.0 / static_cast<double>(cols))};
  const double background = uniform(0.05, 0.2);
  for (double& v : canvas.image.values()) v = background;

  const int shapes = 3 + static_cast<int>(rng() % 3);
  for (int s = 0; s < shapes; ++s) {
    // The first shape is large so every phantom carries real structure.
    const double scale = s == 0 ? 1.0 : 0.55;
    const double value = uniform(0.45, 0.95);
    const double cx = s == 0 ? uniform(0.4, 0.6) : uniform(0.2, 0.8);
    const double cy = s == 0 ? uniform(0.4, 0.6) : uniform(0.2, 0.8);
    switch (kind) {
      case PhantomKind::ellipses: {
        const double a = scale * uniform(0.18, 0.35);
        const double b = scale * uniform(0.12, 0.3);
        const double phi = uniform(0.0, std::numbers::pi);
        const double c = std::cos(phi), sn = std::sin(phi);
        canvas.paint(value, [=](double x, double y) {
          const double dx = x - cx, dy = y - cy;
          const double u = (c * dx + sn * dy) / a, w = (-sn * dx + c * dy) / b;
          return u * u + w * w <= 1.0;
        });
        break;
      }
      case PhantomKind::rectangles: {
        const double hw = scale * uniform(0.12, 0.3);
        const double hh = scale * uniform(0.12, 0.3);
        canvas.paint(value, [=](double x, double y) {
          return std::abs(x - cx) <= hw && std::abs(y - cy) <= hh;
        });
        break;
      }
      case PhantomKind::blobs: {
        // Union of a few overlapping disks around the blob centre.
        std::array<std::array<double, 3>, 3> disks{};
        for (auto& d : disks) {
          d = {cx + uniform(-0.08, 0.08), cy + uniform(-0.08, 0.08), scale * uniform(0.1, 0.22)};
        }
        canvas.paint(value, [=](double x, double y) {
          return std::any_of(disks.begin(), disks.end(), [&](const auto& d) {
            return (x - d[0]) * (x - d[0]) + (y - d[1]) * (y - d[1]) <= d[2] * d[2];
          });
        });
        break;
      }
    }
  }
  return std::move(canvas.image);
}

ImageGrid add_gaussian_noise(const ImageGrid& u, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("add_gaussian_noise: sigma must be >= 0");
  ImageGrid f = u;
  if (sigma == 0.0) return f;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (double& v : f.values()) v += normal(rng);
  return f;
}

ImageGrid add_impulse_noise(const ImageGrid& u, double fraction, std::uint64_t seed,
                            ImpulseKind kind) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("add_impulse_noise: fraction must lie in [0, 1]");
  }
  ImageGrid f = u;
  const std::size_t n = u.size();
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (count == 0) return f;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` entries form a uniform subset.
  for (std::size_t t = 0; t < count; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, n - 1);
    std::swap(idx[t], idx[pick(rng)]);
  }
  std::bernoulli_distribution coin(0.5);
  for (std::size_t t = 0; t < count; ++t) {
    f[idx[t]] = kind == ImpulseKind::zero ? 0.0 : (coin(rng) ? 1.0 : 0.0);
  }
  return f;
}

TrainingSet build_training_set(PhantomKind kind, std::size_t rows, std::size_t cols,
                               std::size_t n, const NoiseModelSpec& noise) {
  if (n == 0) throw InvalidArgument("build_training_set: N must be >= 1");
  noise.validate();
  std::vector<TrainingPair> pairs;
  pairs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t base = derive_seed(noise.seed, k);
    ImageGrid clean = make_phantom(kind, rows, cols, derive_seed(base, 0));
    ImageGrid noisy = add_gaussian_noise(clean, noise.gaussian_sigma, derive_seed(base, 1));
    if (noise.impulse_fraction > 0.0) {
      noisy = add_impulse_noise(noisy, noise.impulse_fraction, derive_seed(base, 2),
                                noise.impulse_kind);
    }
    pairs.push_back(TrainingPair{std::move(clean), std::move(noisy), k});
  }
  return TrainingSet(std::move(pairs));
}

// --- persistence -----------------------------------------------------------

namespace {

constexpr std::array<char, 4> kMagic{'T', 'V', 'B', 'L'};

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), 4);
}

void put_f64(std::ostream& os, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), 8);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError("tvbl: unexpected end of file");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::vector<double> get_f64s(std::istream& is, std::size_t count) {
  std::vector<unsigned char> raw(count * 8);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw FormatError("tvbl: unexpected end of file");
  }
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(raw[8 * k + i]) << (8 * i);
    out[k] = std::bit_cast<double>(v);
  }
  return out;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw InvalidArgument(std::string("tvbl: ") + what + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

void write_pair_values(std::ostream& os, const TrainingPair& p) {
  for (double v : p.clean.values()) put_f64(os, v);
  for (double v : p.noisy.values()) put_f64(os, v);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream os(path, mode);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

}  // namespace

void save_set(const TrainingSet& set, const std::filesystem::path& path) {
  auto os = open_out(path, std::ios::binary | std::ios::trunc);
  os.write(kMagic.data(), 4);
  put_u32(os, kTvblVersion);
  put_u32(os, checked_u32(set.rows(), "rows"));
  put_u32(os, checked_u32(set.cols(), "cols"));
  put_u32(os, checked_u32(set.size(), "N"));
  for (const auto& p : set.pairs()) write_pair_values(os, p);
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

void save_pairs(const std::vector<TrainingPair>& pairs, const std::filesystem::path& path) {
  auto os = open_out(path, std::ios::binary | std::ios::trunc);
  os.write(kMagic.data(), 4);
  put_u32(os, kTvblPerPairShapeVersion);
  put_u32(os, pairs.empty() ? 0 : checked_u32(pairs.front().clean.rows(), "rows"));
  put_u32(os, pairs.empty() ? 0 : checked_u32(pairs.front().clean.cols(), "cols"));
  put_u32(os, checked_u32(pairs.size(), "N"));
  for (const auto& p : pairs) {
    put_u32(os, checked_u32(p.clean.rows(), "rows"));
    put_u32(os, checked_u32(p.clean.cols(), "cols"));
    write_pair_values(os, p);
  }
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

TrainingSet load_set(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kMagic) {
    throw FormatError("tvbl: bad magic in '" + path.string() + "'");
  }
  const std::uint32_t version = get_u32(is);
  if (version != kTvblVersion && version != kTvblPerPairShapeVersion) {
    throw FormatError("tvbl: unsupported version " + std::to_string(version));
  }
  const std::uint32_t rows = get_u32(is);
  const std::uint32_t cols = get_u32(is);
  const std::uint32_t n = get_u32(is);
  if (n > 0 && (rows == 0 || cols == 0)) throw FormatError("tvbl: zero grid dimension");

  std::vector<TrainingPair> pairs;
  pairs.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    std::uint32_t r = rows, c = cols;
    if (version == kTvblPerPairShapeVersion) {
      r = get_u32(is);
      c = get_u32(is);
      if (r != rows || c != cols) {
        throw DimensionMismatch("tvbl: pair " + std::to_string(k) + " is " + std::to_string(r) +
                                "x" + std::to_string(c) + ", expected " + std::to_string(rows) +
                                "x" + std::to_string(cols));
      }
    }
    const std::size_t count = static_cast<std::size_t>(r) * c;
    const double h = 1.0 / static_cast<double>(c);
    ImageGrid clean(r, c, h, get_f64s(is, count));
    ImageGrid noisy(r, c, h, get_f64s(is, count));
    pairs.push_back(TrainingPair{std::move(clean), std::move(noisy), k});
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError("tvbl: trailing bytes in '" + path.string() + "'");
  }
  return TrainingSet(std::move(pairs));
}

void write_pgm(const ImageGrid& image, const std::filesystem::path& path, int maxval) {
  if (maxval < 1 || maxval > 65535) throw InvalidArgument("write_pgm: maxval out of range");
  auto os = open_out(path, std::ios::trunc);
  os << "P2\n" << image.cols() << ' ' << image.rows() << '\n' << maxval << '\n';
  for (std::size_t i = 0; i < image.rows(); ++i) {
    for (std::size_t j = 0; j < image.cols(); ++j) {
      const double v = std::clamp(image(i, j), 0.0, 1.0);
      os << std::lround(v * maxval) << (j + 1 < image.cols() ? ' ' : '\n');
    }
  }
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

ImageGrid read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  // Strip comments before tokenizing.
  std::stringstream clean;
  for (std::string line; std::getline(is, line);) {
    clean << line.substr(0, line.find('#')) << '\n';
  }
  std::string magic;
  long cols = 0, rows = 0, maxval = 0;
  if (!(clean >> magic >> cols >> rows >> maxval) || magic != "P2" || cols <= 0 || rows <= 0 ||
      maxval <= 0) {
    throw FormatError("pgm: bad header in '" + path.string() + "'");
  }
  std::vector<double> values(static_cast<std::size_t>(rows * cols));
  for (double& v : values) {
    long raw = 0;
    if (!(clean >> raw) || raw < 0 || raw > maxval) throw FormatError("pgm: bad pixel data");
    v = static_cast<double>(raw) / static_cast<double>(maxval);
  }
  return ImageGrid(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols),
                   1.0 / static_cast<double>(cols), std::move(values));
}

}  // namespace tvlearn
