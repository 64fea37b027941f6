#include "evocr/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "evocr/text_util.hpp"

namespace evocr::shaping {

WindowOrigin FoveatedStream::origin_at(std::uint64_t t_us) const {
  if (origins.empty()) return {};
  auto it = std::upper_bound(origins.begin(), origins.end(), t_us,
                             [](std::uint64_t t, const WindowOrigin& o) { return t < o.t_us; });
  return it == origins.begin() ? origins.front() : *(it - 1);
}

events::EventStream FoveatedStream::as_event_stream() const {
  return {window_w, window_h, events};
}

WindowOrigin window_for_gaze(const Vec2& gaze, int sensor_w, int sensor_h,
                             const FoveationConfig& cfg) {
  if (cfg.window_w > sensor_w || cfg.window_h > sensor_h)
    throw Error("foveation window does not fit the sensor");
  const int ox = static_cast<int>(std::lround(gaze.x() - cfg.window_w / 2.0));
  const int oy = static_cast<int>(std::lround(gaze.y() - cfg.window_h / 2.0));
  return {0, std::clamp(ox, 0, sensor_w - cfg.window_w), std::clamp(oy, 0, sensor_h - cfg.window_h)};
}

FoveatedStream foveate(const events::EventStream& stream, const synth::GazeTrace& gaze,
                       const FoveationConfig& cfg) {
  if (gaze.empty()) throw Error("foveate: empty gaze trace");
  if (cfg.window_w <= 0 || cfg.window_h <= 0) throw Error("foveate: empty window");
  FoveatedStream out;
  out.window_w = cfg.window_w;
  out.window_h = cfg.window_h;

  std::uint64_t cached_t = std::numeric_limits<std::uint64_t>::max();
  WindowOrigin win;
  for (const auto& e : stream.events) {
    if (e.t_us != cached_t) {
      cached_t = e.t_us;
      win = window_for_gaze(gaze.at(e.t_us, cfg.interpolation), stream.sensor_w,
                            stream.sensor_h, cfg);
      win.t_us = e.t_us;
      if (out.origins.empty() || out.origins.back().x != win.x || out.origins.back().y != win.y)
        out.origins.push_back(win);
    }
    const int lx = e.x - win.x, ly = e.y - win.y;
    if (lx < 0 || ly < 0 || lx >= cfg.window_w || ly >= cfg.window_h) continue;
    out.events.push_back({static_cast<std::uint16_t>(lx), static_cast<std::uint16_t>(ly), e.t_us,
                          e.polarity});
  }
  return out;
}

std::string format_origin_trace(const FoveatedStream& fov) {
  std::string out;
  for (const auto& o : fov.origins)
    out += std::to_string(o.t_us) + ',' + std::to_string(o.x) + ',' + std::to_string(o.y) + '\n';
  return out;
}

std::vector<WindowOrigin> parse_origin_trace(const std::string& text) {
  std::vector<WindowOrigin> out;
  std::size_t lineno = 0;
  for (const auto& raw : split_lines(text)) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw Error("origin trace line " + std::to_string(lineno) + ": expected t_us,ox,oy");
    WindowOrigin o{parse_u64(f[0]), static_cast<int>(parse_i64(f[1])),
                   static_cast<int>(parse_i64(f[2]))};
    if (!out.empty() && o.t_us < out.back().t_us)
      throw Error("origin trace: timestamps go backwards");
    out.push_back(o);
  }
  return out;
}

VoxelGrid build_voxel_grid(const FoveatedStream& fov, std::size_t end_index,
                           std::size_t window_events) {
  if (end_index > fov.events.size()) throw Error("build_voxel_grid: end index past the stream");
  VoxelGrid g;
  g.height = fov.window_h;
  g.width = fov.window_w;
  const std::size_t cells = static_cast<std::size_t>(g.bins) * g.height * g.width;
  g.raw.assign(cells, 0);
  g.values.assign(cells, 0.0f);
  const std::size_t begin = end_index > window_events ? end_index - window_events : 0;
  g.event_count = end_index - begin;
  if (g.event_count == 0) return g;

  g.t_start_us = fov.events[begin].t_us;
  g.t_end_us = fov.events[end_index - 1].t_us;
  const std::uint64_t span = g.t_end_us - g.t_start_us;
  for (std::size_t i = begin; i < end_index; ++i) {
    const auto& e = fov.events[i];
    int bin = 0;
    if (span > 0)
      bin = static_cast<int>(std::min<std::uint64_t>(
          (e.t_us - g.t_start_us) * static_cast<std::uint64_t>(g.bins) / span, g.bins - 1));
    g.raw[g.index(bin, e.y, e.x)] += e.polarity;
  }
  std::int32_t peak = 0;
  for (auto v : g.raw) peak = std::max(peak, std::abs(v));
  if (peak > 0)
    for (std::size_t i = 0; i < cells; ++i)
      g.values[i] = static_cast<float>(g.raw[i]) / static_cast<float>(peak);
  return g;
}

std::vector<std::size_t> window_schedule(std::size_t event_count, std::size_t stride) {
  if (stride == 0) throw Error("window stride must be > 0");
  std::vector<std::size_t> ends;
  for (std::size_t e = stride; e <= event_count; e += stride) ends.push_back(e);
  if (event_count > 0 && (ends.empty() || ends.back() != event_count)) ends.push_back(event_count);
  return ends;
}

double Ratio::value() const {
  if (den == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(num) / static_cast<double>(den);
}

BandwidthLedger& BandwidthLedger::record(const std::string& stage, std::uint64_t bytes) {
  for (auto& [name, b] : stages_)
    if (name == stage) {
      b = bytes;
      return *this;
    }
  stages_.emplace_back(stage, bytes);
  return *this;
}

std::uint64_t BandwidthLedger::bytes(const std::string& stage) const {
  for (const auto& [name, b] : stages_)
    if (name == stage) return b;
  throw Error("ledger has no stage '" + stage + "'");
}

Ratio BandwidthLedger::reduction(const std::string& stage) const {
  return {reference_, bytes(stage)};
}

std::string BandwidthLedger::to_csv() const {
  std::string out = "stage,bytes,reduction_factor\n";
  out += "rgb_reference," + std::to_string(reference_) + ",1\n";
  for (const auto& [name, b] : stages_) {
    const double f = reduction(name).value();
    out += name + ',' + std::to_string(b) + ',' + (std::isinf(f) ? "inf" : format_double(f)) + '\n';
  }
  return out;
}

BandwidthLedger BandwidthLedger::from_csv(const std::string& text,
                                          std::uint64_t reference_rgb_bytes) {
  BandwidthLedger ledger(reference_rgb_bytes);
  const auto lines = split_lines(text);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto f = split(lines[i], ',');
    if (f.size() != 3) throw Error("ledger csv: malformed line " + std::to_string(i + 1));
    if (f[0] == "rgb_reference") {
      ledger.reference_ = parse_u64(f[1]);
      continue;
    }
    ledger.record(f[0], parse_u64(f[1]));
  }
  return ledger;
}

}  // namespace evocr::shaping
