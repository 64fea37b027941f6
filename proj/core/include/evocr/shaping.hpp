#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "evocr/events.hpp"
#include "evocr/scene.hpp"

namespace evocr::shaping {

inline constexpr int kWindowWidth = 200;
inline constexpr int kWindowHeight = 100;
inline constexpr int kVoxelBins = 4;
inline constexpr std::size_t kVoxelEvents = 1600;
inline constexpr std::size_t kDefaultStride = 400;

struct FoveationConfig {
  int window_w = kWindowWidth;
  int window_h = kWindowHeight;
  synth::Interpolation interpolation = synth::Interpolation::kLinear;
};

/// Top-left corner of the foveation window, valid from `t_us` until the next
/// entry.
struct WindowOrigin {
  std::uint64_t t_us = 0;
  int x = 0;
  int y = 0;
  bool operator==(const WindowOrigin&) const = default;
};

struct FoveatedStream {
  int window_w = kWindowWidth;
  int window_h = kWindowHeight;
  std::vector<events::Event> events;  // window-local coordinates
  std::vector<WindowOrigin> origins;  // one entry per origin change

  /// Window origin in effect at `t_us`.
  WindowOrigin origin_at(std::uint64_t t_us) const;
  /// The stream as a window-sized sensor, e.g. for .evt1 export.
  events::EventStream as_event_stream() const;
  bool operator==(const FoveatedStream&) const = default;
};

/// Window placement for a gaze point: centred, clamped to the sensor.
WindowOrigin window_for_gaze(const Vec2& gaze, int sensor_w, int sensor_h,
                             const FoveationConfig& cfg);

/// Keeps events inside the gaze-centred window at their own timestamp
/// (half-open pixel intervals), re-expressed in window coordinates.
FoveatedStream foveate(const events::EventStream& stream, const synth::GazeTrace& gaze,
                       const FoveationConfig& cfg = {});

std::string format_origin_trace(const FoveatedStream& fov);
std::vector<WindowOrigin> parse_origin_trace(const std::string& text);

struct VoxelGrid {
  int bins = kVoxelBins;
  int height = kWindowHeight;
  int width = kWindowWidth;
  std::vector<std::int32_t> raw;  // signed polarity sums, [bin][y][x]
  std::vector<float> values;      // raw / max|raw|
  std::uint64_t t_start_us = 0;
  std::uint64_t t_end_us = 0;
  std::size_t event_count = 0;

  std::size_t index(int bin, int y, int x) const {
    return (static_cast<std::size_t>(bin) * height + y) * width + x;
  }
  float at(int bin, int y, int x) const { return values[index(bin, y, x)]; }
};

/// Bins the (up to) `window_events` events preceding `end_index` into equal
/// time slices; the last slice is closed. Zero events yields an all-zero grid.
VoxelGrid build_voxel_grid(const FoveatedStream& fov, std::size_t end_index,
                           std::size_t window_events = kVoxelEvents);

/// End indices at which a reconstruction window is formed: every `stride`
/// events, plus the final event when it is not already on the grid.
std::vector<std::size_t> window_schedule(std::size_t event_count, std::size_t stride);

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const;
  bool operator==(const Ratio&) const = default;
};

class BandwidthLedger {
 public:
  static constexpr std::uint64_t kDefaultReferenceBytes = 7'900'000;

  explicit BandwidthLedger(std::uint64_t reference_rgb_bytes = kDefaultReferenceBytes)
      : reference_(reference_rgb_bytes) {}

  /// Adds or replaces a stage, keeping first-insertion order.
  BandwidthLedger& record(const std::string& stage, std::uint64_t bytes);

  std::uint64_t reference_bytes() const { return reference_; }
  const std::vector<std::pair<std::string, std::uint64_t>>& stages() const { return stages_; }
  std::uint64_t bytes(const std::string& stage) const;
  /// reference / stage bytes, kept as an exact ratio.
  Ratio reduction(const std::string& stage) const;

  /// `stage,bytes,reduction_factor` with a header row.
  std::string to_csv() const;
  static BandwidthLedger from_csv(const std::string& text,
                                  std::uint64_t reference_rgb_bytes = kDefaultReferenceBytes);

 private:
  std::uint64_t reference_;
  std::vector<std::pair<std::string, std::uint64_t>> stages_;
};

}  // namespace evocr::shaping
