#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evocr/image.hpp"
#include "evocr/io.hpp"
#include "evocr/scene.hpp"

namespace evocr::events {

struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint64_t t_us = 0;
  std::int8_t polarity = 1;  // +1 brighter, -1 darker

  bool operator==(const Event&) const = default;
};

/// Canonical stream order: time, then row, column, polarity.
inline bool event_before(const Event& a, const Event& b) {
  if (a.t_us != b.t_us) return a.t_us < b.t_us;
  if (a.y != b.y) return a.y < b.y;
  if (a.x != b.x) return a.x < b.x;
  return a.polarity < b.polarity;
}

struct EventStream {
  int sensor_w = 0;
  int sensor_h = 0;
  std::vector<Event> events;

  /// Throws unless every event is in bounds with polarity +-1 and the stream
  /// is in canonical order.
  void validate() const;
  bool operator==(const EventStream&) const = default;
};

struct SimParams {
  double contrast_threshold = 0.2;  // C, log-intensity units
  double threshold_sigma = 0.02;    // per-pixel spread of C
  std::uint64_t refractory_us = 100;
  double log_eps = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Log intensity ln(I + eps) as used by the simulator.
Grid<double> log_image(const GrayImage& img, double log_eps);

/// Per-pixel contrast-threshold simulation with linear interpolation of log
/// intensity between frames.
EventStream frames_to_events(const synth::FrameSequence& frames, const SimParams& params);

/// initial_log + C * (signed event count) per pixel.
Grid<double> integrate_events(const EventStream& stream, const Grid<double>& initial_log,
                              double contrast_threshold);

// .evt1: "EVT1", u16 w, u16 h, u64 count, then 16-byte records
// (u16 x, u16 y, u64 t_us, i8 polarity, 3 pad bytes). Little-endian.
inline constexpr std::size_t kEvt1HeaderBytes = 16;
inline constexpr std::size_t kEvt1RecordBytes = 16;
inline constexpr std::size_t evt1_size(std::size_t event_count) {
  return kEvt1HeaderBytes + kEvt1RecordBytes * event_count;
}

io::Bytes encode_evt1(const EventStream& stream);
EventStream decode_evt1(std::span<const std::uint8_t> bytes);

}  // namespace evocr::events
