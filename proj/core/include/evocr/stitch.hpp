#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evocr/geometry.hpp"
#include "evocr/image.hpp"
#include "evocr/recon.hpp"
#include "evocr/scene.hpp"

namespace evocr::stitch {

// ---------------------------------------------------------------------------
// Line segmentation

struct LineSegment {
  std::uint64_t start_us = 0;
  std::uint64_t end_us = 0;
  std::size_t first_frame = 0;  // [first_frame, end_frame) after assign_frames
  std::size_t end_frame = 0;
  bool operator==(const LineSegment&) const = default;
};

struct SaccadeParams {
  double min_drop_frac = 0.5;
  double max_dur_ms = 100.0;
  /// Absolute floor on the drop so fixation jitter never splits a line.
  double min_drop_px = 20.0;
};

/// Splits the trace at return sweeps: x falling by at least
/// min_drop_frac * (segment x range) within max_dur_ms.
std::vector<LineSegment> detect_saccades(const synth::GazeTrace& gaze,
                                         const SaccadeParams& params = {});

/// Fills frame ranges from frame timestamps (sorted). Frames outside every
/// segment belong to none.
void assign_frames(std::vector<LineSegment>& segments, const std::vector<std::uint64_t>& frame_t_us);

// ---------------------------------------------------------------------------
// Canvas

inline constexpr float kUntouched = -1.0f;

/// Binary canvas in its own coordinate system. Pixel (i, j) of the grids sits
/// at canvas coordinate (x0 + i, y0 + j).
struct StitchCanvas {
  BinaryImage image;
  Grid<float> mask;   // M_saved, -1 where nothing better is known
  Grid<float> alpha;  // accumulation weight, 0 = never written
  Grid<float> soft;   // alpha-weighted average of written frame values
  int x0 = 0;
  int y0 = 0;

  bool empty() const { return image.empty(); }
  Rect bounds() const { return {x0, y0, image.width(), image.height()}; }
  bool touched(int cx, int cy) const;
  /// Grows the grids to cover `r` (canvas coordinates).
  void ensure(const Rect& r);
  /// Written pixels as a binary image over `r`; unwritten pixels are 0.
  BinaryImage render(const Rect& r) const;
};

struct StitchParams {
  int search_radius_px = 20;
  double min_overlap = 0.25;
  double min_zncc = 0.2;
  int local_window = 11;
  double tie_band = 0.05;
};

struct FramePlacement {
  BinaryImage frame;
  int dx = 0;  // canvas coordinate of the frame's top-left pixel
  int dy = 0;
  double zncc = 0.0;
  double overlap = 0.0;
  bool accepted = false;
  Grid<float> confidence;  // M_new, frame-sized
};

/// Exhaustive ZNCC search around `prior`. The first frame on an empty canvas
/// is accepted at `prior` with confidence -1 everywhere.
FramePlacement place_frame(const StitchCanvas& canvas, const BinaryImage& frame, int prior_dx,
                           int prior_dy, const StitchParams& params = {});

/// Per-pixel local ZNCC of `frame` at (dx, dy) against the canvas; -1 where
/// the canvas is unwritten or either window has no variance.
Grid<float> local_confidence(const StitchCanvas& canvas, const BinaryImage& frame, int dx, int dy,
                             int window);

/// Improvement-mask update: a written pixel takes the frame value only where
/// M_new > M_saved. Unwritten pixels take the frame value directly. Confidence
/// differences within the tie band feed the alpha average only.
void update_canvas(StitchCanvas& canvas, const FramePlacement& placement,
                   const StitchParams& params = {});

// ---------------------------------------------------------------------------
// Line alignment and composition

/// p' = R(rotation) (p - pivot) + pivot + (tx, ty)
struct LineTransform {
  double tx = 0.0;
  double ty = 0.0;
  double rotation_rad = 0.0;
  double pivot_x = 0.0;
  double pivot_y = 0.0;

  Mat3 matrix() const;
};

inline constexpr double kMaxLineRotation = 0.35;

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, LineTransform last) : Error(what), last_(last) {}
  const LineTransform& last_estimate() const { return last_; }

 private:
  LineTransform last_;
};

struct LkParams {
  double blur_sigma = 2.0;
  int max_iterations = 50;
  double convergence_px = 0.01;
};

/// Lucas-Kanade alignment: returns T with strip_b(T(p)) ~ strip_a(p). The
/// pivot is the centre of strip_a regardless of `init`'s pivot.
LineTransform estimate_line_transform(const BinaryImage& strip_a, const BinaryImage& strip_b,
                                      const LineTransform& init = {}, const LkParams& params = {});

/// `transforms[k]` maps line k+1 canvas coordinates into line k's. Lines are
/// merged with the improvement-mask rule and the result cropped to the ink
/// bounds plus a 4 px margin (0x0 when there is no ink).
BinaryImage compose_page(const std::vector<StitchCanvas>& lines,
                         const std::vector<LineTransform>& transforms);

inline constexpr int kComposeMargin = 4;

// ---------------------------------------------------------------------------
// Homography

struct HomographyFit {
  Mat3 h;
  double rms_error = 0.0;
};

class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

/// Normalized DLT. Throws DegenerateConfiguration for fewer than 4 pairs or
/// collinear source triples.
HomographyFit estimate_homography(const std::vector<Vec2>& src, const std::vector<Vec2>& dst);

// ---------------------------------------------------------------------------
// Driver

struct PlacementRecord {
  std::size_t frame_idx = 0;
  int dx = 0;
  int dy = 0;
  double zncc = 0.0;
  bool accepted = false;
};

std::string format_placement_log(const std::vector<PlacementRecord>& log);

struct StitchResult {
  BinaryImage page;
  std::vector<StitchCanvas> lines;
  std::vector<LineTransform> transforms;
  std::vector<PlacementRecord> log;
};

/// Builds one canvas per segment with gaze-seeded priors (frame window
/// origins), aligns adjacent lines and composes the page.
StitchResult stitch_frames(const std::vector<recon::BinaryFrame>& frames,
                           const std::vector<LineSegment>& segments,
                           const StitchParams& params = {}, const LkParams& lk = {});

}  // namespace evocr::stitch
