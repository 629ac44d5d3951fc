#include "tvlearn/grid.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tvlearn/error.hpp"

namespace tvlearn {

ImageGrid::ImageGrid(std::size_t rows, std::size_t cols, double h)
    : ImageGrid(rows, cols, h, std::vector<double>(rows * cols, 0.0)) {}

ImageGrid::ImageGrid(std::size_t rows, std::size_t cols, double h, std::vector<double> values)
    : rows_(rows), cols_(cols), h_(h), values_(std::move(values)) {
  if (rows == 0 || cols == 0) {
    throw InvalidArgument("ImageGrid: rows and cols must be positive");
  }
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InvalidArgument("ImageGrid: mesh step must be positive");
  }
  if (values_.size() != rows * cols) {
    throw DimensionMismatch("ImageGrid: expected " + std::to_string(rows * cols) +
                            " values, got " + std::to_string(values_.size()));
  }
}

ImageGrid ImageGrid::zeros(std::size_t rows, std::size_t cols) {
  return ImageGrid(rows, cols, 1.0 / static_cast<double>(cols));
}

VectorField::VectorField(std::size_t rows_, std::size_t cols_, double h_)
    : rows(rows_), cols(cols_), h(h_), x(rows_ * cols_, 0.0), y(rows_ * cols_, 0.0) {}

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionMismatch(std::string(what) + ": grids differ (" + std::to_string(a.rows()) +
                            "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                            "x" + std::to_string(b.cols()) + ")");
  }
}

double inner(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "inner");
  return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
}

double inner(const VectorField& a, const VectorField& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw DimensionMismatch("inner: vector fields differ in shape");
  }
  return std::inner_product(a.x.begin(), a.x.end(), b.x.begin(), 0.0) +
         std::inner_product(a.y.begin(), a.y.end(), b.y.begin(), 0.0);
}

double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

double norm2(const ImageGrid& a) { return norm2(a.values()); }

double mse(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "mse");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

ImageGrid operator-(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "operator-");
  ImageGrid out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= b[k];
  return out;
}

ImageGrid operator+(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "operator+");
  ImageGrid out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += b[k];
  return out;
}

}  // namespace tvlearn
