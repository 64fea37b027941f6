#pragma once

#include <Eigen/Core>

#include "evocr/image.hpp"

namespace evocr {

using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::Vector2d;

/// Projective map of a pixel position. Throws if the point maps to infinity.
Vec2 apply_homography(const Mat3& h, double x, double y);

/// Scales `h` so h(2,2) == 1. Throws if h(2,2) is zero.
Mat3 normalize_homography(const Mat3& h);

/// out(p) = img(inverse(h) * p), bilinear, `border` outside the source.
GrayImage warp_bilinear(const GrayImage& img, const Mat3& h, int width, int height,
                        float border = 1.0f);

/// Nearest-neighbour counterpart of warp_bilinear; keeps binary images binary.
BinaryImage warp_nearest(const BinaryImage& img, const Mat3& h, int width, int height);

Mat3 translation(double tx, double ty);

/// Rotation by `angle` radians about (cx, cy) followed by translation.
Mat3 rigid_about(double angle, double cx, double cy, double tx, double ty);

}  // namespace evocr
