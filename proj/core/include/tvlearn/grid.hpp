#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tvlearn {

/// Rectangular image of scalar pixel values, stored row-major, together with
/// the mesh step `h` of the discretization. Row index `i` runs along the
/// y-direction, column index `j` along the x-direction.
class ImageGrid {
 public:
  ImageGrid() = default;
  ImageGrid(std::size_t rows, std::size_t cols, double h);
  ImageGrid(std::size_t rows, std::size_t cols, double h, std::vector<double> values);

  /// Zero image with the default mesh step h = 1/cols.
  static ImageGrid zeros(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  double h() const noexcept { return h_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool same_shape(const ImageGrid& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_ && h_ == other.h_;
  }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  double h_ = 1.0;
  std::vector<double> values_;
};

/// Two-component field living on the pixels of an ImageGrid (e.g. a
/// discrete gradient).
struct VectorField {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double h = 1.0;
  std::vector<double> x;
  std::vector<double> y;

  VectorField() = default;
  VectorField(std::size_t rows, std::size_t cols, double h);

  std::size_t size() const noexcept { return x.size(); }
};

/// Throws DimensionMismatch unless both images share rows, cols and h.
void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what);

double inner(const ImageGrid& a, const ImageGrid& b);
double inner(const VectorField& a, const VectorField& b);
double norm2(const ImageGrid& a);
double norm2(std::span<const double> a);

/// Mean squared pixel error.
double mse(const ImageGrid& a, const ImageGrid& b);

ImageGrid operator-(const ImageGrid& a, const ImageGrid& b);
ImageGrid operator+(const ImageGrid& a, const ImageGrid& b);

}  // namespace tvlearn
