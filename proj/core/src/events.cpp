#include "evocr/events.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

namespace evocr::events {

void EventStream::validate() const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.x >= sensor_w || e.y >= sensor_h)
      throw Error("event " + std::to_string(i) + " lies outside the sensor");
    if (e.polarity != 1 && e.polarity != -1)
      throw Error("event " + std::to_string(i) + " has polarity other than +-1");
    if (i && event_before(e, events[i - 1]))
      throw Error("event " + std::to_string(i) + " breaks stream order");
  }
}

void SimParams::validate() const {
  if (!(contrast_threshold > 0.0)) throw Error("sim: contrast threshold must be > 0");
  if (!(threshold_sigma >= 0.0)) throw Error("sim: threshold sigma must be >= 0");
  if (!(contrast_threshold > 3.0 * threshold_sigma))
    throw Error("sim: contrast threshold must exceed 3 sigma");
  if (!(log_eps > 0.0)) throw Error("sim: log_eps must be > 0");
}

Grid<double> log_image(const GrayImage& img, double log_eps) {
  Grid<double> out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i)
    out.values()[i] = std::log(static_cast<double>(img.values()[i]) + log_eps);
  return out;
}

EventStream frames_to_events(const synth::FrameSequence& frames, const SimParams& params) {
  params.validate();
  if (frames.size() < 2) throw Error("frames_to_events: need at least two frames");
  const int w = frames.width(), h = frames.height();
  if (w > 0xffff || h > 0xffff) throw Error("frames_to_events: sensor exceeds 16-bit coordinates");

  // Crossings closer than this to the end value still fire, so a step of
  // exactly k*C yields k events despite rounding.
  constexpr double kTolerance = 1e-6;
  constexpr double kMinThreshold = 0.01;

  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> threshold(n, params.contrast_threshold);
  if (params.threshold_sigma > 0.0) {
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> spread(0.0, params.threshold_sigma);
    for (auto& c : threshold) c = std::max(kMinThreshold, c + spread(rng));
  }

  Grid<double> prev = log_image(frames.frame(0), params.log_eps);
  std::vector<double> ref(prev.values().begin(), prev.values().end());
  std::vector<std::uint64_t> last_event(n, 0);
  std::vector<std::uint8_t> has_fired(n, 0);

  EventStream out{w, h, {}};
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const GrayImage img = frames.frame(k);
    if (img.width() != w || img.height() != h)
      throw Error("frames_to_events: frame dimension mismatch at frame " + std::to_string(k));
    Grid<double> cur = log_image(img, params.log_eps);
    const std::uint64_t t0 = frames.timestamp(k - 1);
    const double dt = static_cast<double>(frames.timestamp(k) - t0);

    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double l0 = prev.values()[i];
        const double l1 = cur.values()[i];
        if (l0 == l1) continue;
        const double pol = l1 > l0 ? 1.0 : -1.0;
        const double c = threshold[i];
        for (;;) {
          const double cross = ref[i] + pol * c;
          if (pol * (l1 - cross) < -kTolerance) break;
          ref[i] = cross;
          const double frac = std::clamp((cross - l0) / (l1 - l0), 0.0, 1.0);
          const std::uint64_t t = t0 + static_cast<std::uint64_t>(frac * dt);
          if (has_fired[i] && t - last_event[i] < params.refractory_us) continue;
          has_fired[i] = 1;
          last_event[i] = t;
          out.events.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t,
                                static_cast<std::int8_t>(pol)});
        }
      }
    prev = std::move(cur);
  }
  std::sort(out.events.begin(), out.events.end(), event_before);
  return out;
}

Grid<double> integrate_events(const EventStream& stream, const Grid<double>& initial_log,
                              double contrast_threshold) {
  if (initial_log.width() != stream.sensor_w || initial_log.height() != stream.sensor_h)
    throw Error("integrate_events: initial image does not match the sensor");
  Grid<std::int64_t> count(stream.sensor_w, stream.sensor_h, 0);
  for (const Event& e : stream.events) count(e.x, e.y) += e.polarity;
  Grid<double> out = initial_log;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values()[i] += contrast_threshold * static_cast<double>(count.values()[i]);
  return out;
}

io::Bytes encode_evt1(const EventStream& stream) {
  if (stream.sensor_w > 0xffff || stream.sensor_h > 0xffff)
    throw Error("evt1: sensor exceeds 16-bit dimensions");
  io::Bytes out;
  out.reserve(evt1_size(stream.events.size()));
  for (char c : {'E', 'V', 'T', '1'}) io::put_u8(out, static_cast<std::uint8_t>(c));
  io::put_u16(out, static_cast<std::uint16_t>(stream.sensor_w));
  io::put_u16(out, static_cast<std::uint16_t>(stream.sensor_h));
  io::put_u64(out, stream.events.size());
  for (const Event& e : stream.events) {
    io::put_u16(out, e.x);
    io::put_u16(out, e.y);
    io::put_u64(out, e.t_us);
    io::put_u8(out, static_cast<std::uint8_t>(e.polarity));
    for (int i = 0; i < 3; ++i) io::put_u8(out, 0);
  }
  return out;
}

EventStream decode_evt1(std::span<const std::uint8_t> bytes) {
  io::Reader in(bytes);
  const auto magic = in.take(4);
  if (std::memcmp(magic.data(), "EVT1", 4) != 0) throw Error("evt1: bad magic");
  EventStream s;
  s.sensor_w = in.u16();
  s.sensor_h = in.u16();
  const std::uint64_t count = in.u64();
  if (count > in.remaining() / kEvt1RecordBytes)
    throw io::TruncatedInput("evt1: header announces more events than the file holds");
  s.events.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Event e;
    e.x = in.u16();
    e.y = in.u16();
    e.t_us = in.u64();
    e.polarity = static_cast<std::int8_t>(in.u8());
    in.take(3);
    s.events.push_back(e);
  }
  s.validate();
  return s;
}

}  // namespace evocr::events
