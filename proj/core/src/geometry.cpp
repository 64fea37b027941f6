#include "evocr/geometry.hpp"

#include <Eigen/LU>
#include <cmath>

namespace evocr {

Vec2 apply_homography(const Mat3& h, double x, double y) {
  const Eigen::Vector3d p = h * Eigen::Vector3d(x, y, 1.0);
  if (std::abs(p.z()) < 1e-12) throw Error("homography maps point to infinity");
  return {p.x() / p.z(), p.y() / p.z()};
}

Mat3 normalize_homography(const Mat3& h) {
  if (std::abs(h(2, 2)) < 1e-15) throw Error("homography has h33 = 0");
  return h / h(2, 2);
}

namespace {

Mat3 checked_inverse(const Mat3& h) {
  if (std::abs(h.determinant()) <= 1e-9) throw Error("homography is not invertible");
  return h.inverse();
}

}  // namespace

GrayImage warp_bilinear(const GrayImage& img, const Mat3& h, int width, int height,
                        float border) {
  const Mat3 inv = checked_inverse(h);
  GrayImage out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Eigen::Vector3d p = inv * Eigen::Vector3d(x, y, 1.0);
      out(x, y) = std::abs(p.z()) < 1e-12
                      ? border
                      : sample_bilinear(img, p.x() / p.z(), p.y() / p.z(), border);
    }
  return out;
}

BinaryImage warp_nearest(const BinaryImage& img, const Mat3& h, int width, int height) {
  const Mat3 inv = checked_inverse(h);
  BinaryImage out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Eigen::Vector3d p = inv * Eigen::Vector3d(x, y, 1.0);
      if (std::abs(p.z()) < 1e-12) continue;
      const int sx = static_cast<int>(std::lround(p.x() / p.z()));
      const int sy = static_cast<int>(std::lround(p.y() / p.z()));
      out(x, y) = img.at_or(sx, sy, 0);
    }
  return out;
}

Mat3 translation(double tx, double ty) {
  Mat3 m = Mat3::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return m;
}

Mat3 rigid_about(double angle, double cx, double cy, double tx, double ty) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m = Mat3::Identity();
  m(0, 0) = c;
  m(0, 1) = -s;
  m(1, 0) = s;
  m(1, 1) = c;
  m(0, 2) = cx - c * cx + s * cy + tx;
  m(1, 2) = cy - s * cx - c * cy + ty;
  return m;
}

}  // namespace evocr
