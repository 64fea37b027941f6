#include "evocr/image.hpp"

#include <cmath>

namespace evocr {

Rect intersect(const Rect& a, const Rect& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right());
  const int y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
  return {x0, y0, x1 - x0, y1 - y0};
}

Rect bounding_union(const Rect& a, const Rect& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  const int x0 = std::min(a.x, b.x);
  const int y0 = std::min(a.y, b.y);
  return {x0, y0, std::max(a.right(), b.right()) - x0,
          std::max(a.bottom(), b.bottom()) - y0};
}

std::size_t count_ink(const BinaryImage& img) {
  std::size_t n = 0;
  for (auto v : img.values()) n += v != 0;
  return n;
}

Rect ink_bounds(const BinaryImage& img) {
  int x0 = img.width(), y0 = img.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

float sample_bilinear(const GrayImage& img, double x, double y, float border) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const float ax = static_cast<float>(x - fx);
  const float ay = static_cast<float>(y - fy);
  const float v00 = img.at_or(x0, y0, border);
  if (ax == 0.0f && ay == 0.0f) return v00;
  const float v10 = img.at_or(x0 + 1, y0, border);
  const float v01 = img.at_or(x0, y0 + 1, border);
  const float v11 = img.at_or(x0 + 1, y0 + 1, border);
  const float top = v00 + ax * (v10 - v00);
  const float bot = v01 + ax * (v11 - v01);
  return top + ay * (bot - top);
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (sigma <= 0.0 || img.empty()) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * i * i / (sigma * sigma));
    kernel[i + radius] = static_cast<float>(w);
    sum += w;
  }
  for (auto& k : kernel) k = static_cast<float>(k / sum);

  const int w = img.width(), h = img.height();
  GrayImage tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * img(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * tmp(x, std::clamp(y + i, 0, h - 1));
      out(x, y) = acc;
    }
  return out;
}

GrayImage to_gray(const BinaryImage& img) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out(x, y) = img(x, y) ? 0.0f : 1.0f;
  return out;
}

GrayImage resize_area(const GrayImage& img, int width, int height) {
  if (width <= 0 || height <= 0) throw Error("resize_area: bad target size");
  GrayImage out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double y0 = y * sy, y1 = (y + 1) * sy;
    for (int x = 0; x < width; ++x) {
      const double x0 = x * sx, x1 = (x + 1) * sx;
      double acc = 0.0, area = 0.0;
      for (int iy = static_cast<int>(y0); iy < static_cast<int>(std::ceil(y1)); ++iy) {
        const double wy = std::min<double>(y1, iy + 1) - std::max<double>(y0, iy);
        if (wy <= 0) continue;
        for (int ix = static_cast<int>(x0); ix < static_cast<int>(std::ceil(x1)); ++ix) {
          const double wx = std::min<double>(x1, ix + 1) - std::max<double>(x0, ix);
          if (wx <= 0) continue;
          acc += wx * wy * img.at_or(ix, iy, 1.0f);
          area += wx * wy;
        }
      }
      out(x, y) = static_cast<float>(area > 0 ? acc / area : 1.0);
    }
  }
  return out;
}

BinaryImage threshold_dark(const GrayImage& img, float threshold) {
  BinaryImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out(x, y) = img(x, y) < threshold;
  return out;
}

double iou(const BinaryImage& a, const BinaryImage& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error("iou: size mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool pa = a.values()[i] != 0, pb = b.values()[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

std::size_t hamming(const BinaryImage& a, const BinaryImage& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error("hamming: size mismatch");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    n += (a.values()[i] != 0) != (b.values()[i] != 0);
  return n;
}

}  // namespace evocr
