#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "evocr/font.hpp"
#include "evocr/geometry.hpp"
#include "evocr/image.hpp"

namespace evocr::synth {

/// Grayscale page, values in [0,1], 1 = white paper.
using PageImage = GrayImage;

struct GroundTruthPage {
  BinaryImage binary;  // 1 = ink, aligned with the page image
  std::string text;    // rendered lines joined by '\n'
  std::vector<Rect> line_boxes;  // top to bottom, one per rendered line
};

struct RenderedPage {
  PageImage page;
  GroundTruthPage truth;
};

struct PageLayout {
  int margins_px = 8;
  int line_spacing_px = 4;
  /// Word-wrap width including margins; 0 disables wrapping.
  int max_width_px = 0;
  int max_height_px = 4096;
};

/// Lays out `text` (explicit '\n' breaks, optional word wrap) with black ink
/// on white paper. Throws on empty text, unsupported characters, or a layout
/// that exceeds `layout.max_height_px` (pagination error).
RenderedPage render_text_page(const std::string& text, const BitmapFont& font,
                              const PageLayout& layout);

class PaginationError : public Error {
 public:
  using Error::Error;
};

struct AugmentParams {
  Mat3 homography = Mat3::Identity();
  double contrast_scale = 1.0;  // ink depth: out = 1 - contrast * (1 - in)
  double noise_sigma = 0.0;
  double blur_radius_px = 0.0;  // gaussian sigma
  std::uint64_t seed = 0;

  void validate() const;
};

struct AugmentedPage {
  PageImage page;
  GroundTruthPage truth;
  Mat3 applied;
};

/// Warps grayscale (bilinear) and truth (nearest) with the same homography;
/// contrast, blur and noise touch the grayscale only.
AugmentedPage augment_page(const PageImage& page, const GroundTruthPage& truth,
                           const AugmentParams& params);

/// Near-identity homography about the page centre: rotation up to
/// `magnitude` rad, shear/perspective scaled by the same factor.
Mat3 random_homography(int width, int height, double magnitude, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gaze

struct GazeSample {
  std::uint64_t t_us = 0;
  double x = 0.0;
  double y = 0.0;
  bool operator==(const GazeSample&) const = default;
};

enum class Interpolation { kStep, kLinear };

struct GazeTrace {
  std::vector<GazeSample> samples;

  /// Throws unless timestamps strictly increase and coordinates are finite.
  void validate() const;
  bool empty() const { return samples.empty(); }
  std::uint64_t start_us() const { return samples.front().t_us; }
  std::uint64_t end_us() const { return samples.back().t_us; }
  /// Gaze at `t_us`, holding the end samples outside the covered span.
  Vec2 at(std::uint64_t t_us, Interpolation mode = Interpolation::kLinear) const;

  bool operator==(const GazeTrace&) const = default;
};

std::string format_gaze(const GazeTrace& gaze);
GazeTrace parse_gaze(const std::string& text);

struct GazeParams {
  double reading_speed_wpm = 250.0;
  double fixation_jitter_px = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t sample_period_us = 1000;
};

/// Fixation/saccade reading model over the page's line boxes. Coordinates are
/// page pixels.
GazeTrace simulate_gaze(const GroundTruthPage& truth, const GazeParams& params);

// ---------------------------------------------------------------------------
// Head motion and frame rendering

/// Camera pose relative to the rest pose. Translations are in units of the
/// page distance, rotations in radians.
struct Pose {
  double tx = 0, ty = 0, tz = 0;
  double rx = 0, ry = 0, rz = 0;
  bool operator==(const Pose&) const = default;
};

struct PoseSample {
  std::uint64_t t_us = 0;
  Pose pose;
  bool operator==(const PoseSample&) const = default;
};

struct HeadMotion {
  std::vector<PoseSample> samples;  // empty = rest pose throughout

  /// Linear interpolation per axis; end samples held outside the span.
  Pose at(std::uint64_t t_us) const;
  bool operator==(const HeadMotion&) const = default;
};

std::string format_head_motion(const HeadMotion& motion);
HeadMotion parse_head_motion(const std::string& text);

struct HeadMotionParams {
  double translation_px = 3.0;  // RMS image-plane translation
  double depth_frac = 0.0;      // RMS tz
  double rotation_rad = 0.0;    // RMS per rotation axis
  double cutoff_hz = 2.0;
  std::uint64_t sample_period_us = 1000;
};

struct CameraGeometry {
  int sensor_w = 1280;
  int sensor_h = 720;
  double focal_px = 1000.0;
  /// Page point that lands on the sensor centre at rest.
  double page_cx = 0.0;
  double page_cy = 0.0;
};

/// Low-pass filtered white noise per pose axis, rescaled to the requested RMS.
/// `focal_px` converts the image-plane translation into pose units.
HeadMotion simulate_head_motion(std::uint64_t duration_us, const HeadMotionParams& params,
                                double focal_px, std::uint64_t seed);

/// Page-to-sensor homography of a planar page under `pose`.
Mat3 page_to_sensor(const CameraGeometry& camera, const Pose& pose);

/// Time-ordered frames with uniform spacing. Frames are produced on demand so
/// long high-rate sequences never need to be resident at once.
class FrameSequence {
 public:
  using Renderer = std::function<GrayImage(std::size_t index)>;

  FrameSequence(int width, int height, double fps, std::uint64_t t0_us, std::size_t count,
                Renderer render);

  /// Wraps pre-rendered frames. All frames must share dimensions.
  static FrameSequence from_frames(std::vector<GrayImage> frames, double fps,
                                   std::uint64_t t0_us = 0);

  std::size_t size() const { return count_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double fps() const { return fps_; }
  std::uint64_t period_us() const { return period_us_; }
  std::uint64_t timestamp(std::size_t index) const { return t0_us_ + index * period_us_; }
  GrayImage frame(std::size_t index) const;

 private:
  int width_;
  int height_;
  double fps_;
  std::uint64_t period_us_;
  std::uint64_t t0_us_;
  std::size_t count_;
  Renderer render_;
};

/// Smallest sensor the foveation window fits in.
inline constexpr int kMinSensorWidth = 200;
inline constexpr int kMinSensorHeight = 100;

/// Frames of `page` seen by a camera following `head`, for the span covered by
/// `gaze`: floor(duration * fps) frames starting at the first gaze sample.
FrameSequence render_sequence(std::shared_ptr<const PageImage> page, const GazeTrace& gaze,
                              const HeadMotion& head, const CameraGeometry& camera, double fps);

/// Maps a page-coordinate gaze trace onto the sensor through the head pose.
GazeTrace project_gaze(const GazeTrace& page_gaze, const HeadMotion& head,
                       const CameraGeometry& camera);

}  // namespace evocr::synth
