#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evocr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major 2D grid. x is the column, y is the row.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw Error("negative grid dimensions");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const T& operator()(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  T at_or(int x, int y, T fallback) const {
    return contains(x, y) ? (*this)(x, y) : fallback;
  }

  std::span<T> row(int y) {
    return {data_.data() + static_cast<std::size_t>(y) * width_,
            static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_,
            static_cast<std::size_t>(width_)};
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Grayscale intensities in [0,1], 1 = white paper.
using GrayImage = Grid<float>;
/// Binary image, 1 = ink.
using BinaryImage = Grid<std::uint8_t>;

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool empty() const { return w <= 0 || h <= 0; }
  bool contains(int px, int py) const {
    return px >= x && py >= y && px < right() && py < bottom();
  }
  bool operator==(const Rect&) const = default;
};

Rect intersect(const Rect& a, const Rect& b);
Rect bounding_union(const Rect& a, const Rect& b);

std::size_t count_ink(const BinaryImage& img);

/// Bounding box of all ink pixels; empty rect if there is none.
Rect ink_bounds(const BinaryImage& img);

/// Copy of `img` restricted to `r`; pixels outside `img` take `fill`.
template <typename T>
Grid<T> crop(const Grid<T>& img, const Rect& r, T fill = T{}) {
  Grid<T> out(std::max(r.w, 0), std::max(r.h, 0), fill);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      out(x, y) = img.at_or(r.x + x, r.y + y, fill);
  return out;
}

/// Bilinear sample with constant border value.
float sample_bilinear(const GrayImage& img, double x, double y,
                      float border = 1.0f);

/// Gaussian blur with the given standard deviation (clamped borders).
GrayImage gaussian_blur(const GrayImage& img, double sigma);

GrayImage to_gray(const BinaryImage& img);

/// Box-average resize to an arbitrary target size.
GrayImage resize_area(const GrayImage& img, int width, int height);

/// 1 where value < threshold (dark = ink).
BinaryImage threshold_dark(const GrayImage& img, float threshold = 0.5f);

/// Intersection over union of the ink sets; 1 when both are blank.
double iou(const BinaryImage& a, const BinaryImage& b);

std::size_t hamming(const BinaryImage& a, const BinaryImage& b);

}  // namespace evocr
