#include "evocr/scene.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>

#include "evocr/text_util.hpp"

namespace evocr::synth {
namespace {

std::vector<std::string> layout_lines(const std::string& text, int max_chars) {
  std::vector<std::string> out;
  for (const auto& raw : split_lines(text)) {
    if (max_chars <= 0 || static_cast<int>(raw.size()) <= max_chars) {
      if (!trim(raw).empty()) out.push_back(std::string(trim_right(raw)));
      continue;
    }
    std::string line;
    for (const auto& word : split_words(raw)) {
      std::string w = word;
      while (static_cast<int>(w.size()) > max_chars) {
        if (!line.empty()) out.push_back(std::exchange(line, {}));
        out.push_back(w.substr(0, max_chars));
        w.erase(0, max_chars);
      }
      if (w.empty()) continue;
      if (line.empty()) {
        line = w;
      } else if (static_cast<int>(line.size() + 1 + w.size()) <= max_chars) {
        line += ' ';
        line += w;
      } else {
        out.push_back(std::exchange(line, w));
      }
    }
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

RenderedPage render_text_page(const std::string& text, const BitmapFont& font,
                              const PageLayout& layout) {
  if (text.empty()) throw Error("render_text_page: empty text");
  for (char c : text)
    if (c != '\n' && c != '\r') font.glyph(c);  // throws naming the character

  const int margin = std::max(0, layout.margins_px);
  int max_chars = 0;
  if (layout.max_width_px > 0) {
    max_chars = (layout.max_width_px - 2 * margin + font.scale()) / font.advance_px();
    if (max_chars < 1) throw PaginationError("page too narrow for a single character");
  }
  const auto lines = layout_lines(text, max_chars);
  if (lines.empty()) throw Error("render_text_page: text has no printable content");

  const int gh = font.glyph_height_px();
  const int pitch = gh + std::max(0, layout.line_spacing_px);
  std::size_t longest = 0;
  for (const auto& l : lines) longest = std::max(longest, l.size());
  const int text_w = static_cast<int>(longest) * font.advance_px() - font.scale();
  const int width = text_w + 2 * margin;
  const int height = static_cast<int>(lines.size()) * pitch - (pitch - gh) + 2 * margin;
  if (height > layout.max_height_px)
    throw PaginationError("text needs " + std::to_string(height) + " px but the page holds " +
                          std::to_string(layout.max_height_px));

  RenderedPage out;
  out.truth.binary = BinaryImage(width, height);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const int top = margin + static_cast<int>(k) * pitch;
    const auto& line = lines[k];
    for (std::size_t i = 0; i < line.size(); ++i) {
      const BinaryImage& g = font.glyph(line[i]);
      const int left = margin + static_cast<int>(i) * font.advance_px();
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
          if (g(x, y)) out.truth.binary(left + x, top + y) = 1;
    }
    out.truth.line_boxes.push_back(
        {margin, top, static_cast<int>(line.size()) * font.advance_px() - font.scale(), gh});
    if (k) out.truth.text += '\n';
    out.truth.text += line;
  }
  out.page = to_gray(out.truth.binary);
  return out;
}

void AugmentParams::validate() const {
  if (!homography.allFinite() || std::abs(homography.determinant()) <= 1e-9)
    throw Error("augment: homography is not invertible");
  if (!(contrast_scale > 0.0 && contrast_scale <= 2.0))
    throw Error("augment: contrast_scale must lie in (0, 2]");
  if (!(noise_sigma >= 0.0)) throw Error("augment: noise_sigma must be >= 0");
  if (!(blur_radius_px >= 0.0)) throw Error("augment: blur_radius_px must be >= 0");
}

AugmentedPage augment_page(const PageImage& page, const GroundTruthPage& truth,
                           const AugmentParams& params) {
  params.validate();
  const Mat3 h = normalize_homography(params.homography);
  AugmentedPage out;
  out.applied = h;
  out.page = h.isIdentity(0.0) ? page : warp_bilinear(page, h, page.width(), page.height());
  out.truth.text = truth.text;
  out.truth.line_boxes = truth.line_boxes;
  out.truth.binary = h.isIdentity(0.0)
                         ? truth.binary
                         : warp_nearest(truth.binary, h, truth.binary.width(),
                                        truth.binary.height());
  if (!h.isIdentity(0.0)) {
    // Boxes follow the warp as the bounding box of their transformed corners.
    for (auto& box : out.truth.line_boxes) {
      double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
      for (auto [cx, cy] : {std::pair{box.x, box.y}, {box.right(), box.y},
                            {box.x, box.bottom()}, {box.right(), box.bottom()}}) {
        const Vec2 p = apply_homography(h, cx, cy);
        x0 = std::min(x0, p.x());
        y0 = std::min(y0, p.y());
        x1 = std::max(x1, p.x());
        y1 = std::max(y1, p.y());
      }
      box = {static_cast<int>(std::floor(x0)), static_cast<int>(std::floor(y0)),
             static_cast<int>(std::ceil(x1) - std::floor(x0)),
             static_cast<int>(std::ceil(y1) - std::floor(y0))};
    }
  }

  if (params.contrast_scale != 1.0) {
    const auto c = static_cast<float>(params.contrast_scale);
    for (auto& v : out.page.values()) v = std::clamp(1.0f - c * (1.0f - v), 0.0f, 1.0f);
  }
  if (params.blur_radius_px > 0.0) out.page = gaussian_blur(out.page, params.blur_radius_px);
  if (params.noise_sigma > 0.0) {
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<float> noise(0.0f, static_cast<float>(params.noise_sigma));
    for (auto& v : out.page.values()) v = std::clamp(v + noise(rng), 0.0f, 1.0f);
  }
  return out;
}

Mat3 random_homography(int width, int height, double magnitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double cx = width / 2.0, cy = height / 2.0;
  const double scale = std::max(width, height);
  Mat3 m = rigid_about(magnitude * u(rng), cx, cy, 0.0, 0.0);
  Mat3 shear = Mat3::Identity();
  shear(0, 1) = 0.5 * magnitude * u(rng);
  shear(2, 0) = 0.2 * magnitude * u(rng) / scale;
  shear(2, 1) = 0.2 * magnitude * u(rng) / scale;
  const Mat3 centred = translation(cx, cy) * shear * translation(-cx, -cy);
  return normalize_homography(centred * m);
}

// ---------------------------------------------------------------------------

void GazeTrace::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].x) || !std::isfinite(samples[i].y))
      throw Error("gaze: non-finite coordinate at sample " + std::to_string(i));
    if (i && samples[i].t_us <= samples[i - 1].t_us)
      throw Error("gaze: timestamps must strictly increase (sample " + std::to_string(i) + ")");
  }
}

Vec2 GazeTrace::at(std::uint64_t t_us, Interpolation mode) const {
  if (samples.empty()) throw Error("gaze: empty trace");
  if (t_us <= samples.front().t_us) return {samples.front().x, samples.front().y};
  if (t_us >= samples.back().t_us) return {samples.back().x, samples.back().y};
  auto it = std::upper_bound(samples.begin(), samples.end(), t_us,
                             [](std::uint64_t t, const GazeSample& s) { return t < s.t_us; });
  const GazeSample& b = *it;
  const GazeSample& a = *(it - 1);
  if (mode == Interpolation::kStep) return {a.x, a.y};
  const double f = static_cast<double>(t_us - a.t_us) / static_cast<double>(b.t_us - a.t_us);
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

std::string format_gaze(const GazeTrace& gaze) {
  std::string out = "# gaze v1\n";
  for (const auto& s : gaze.samples)
    out += std::to_string(s.t_us) + ',' + format_double(s.x) + ',' + format_double(s.y) + '\n';
  return out;
}

GazeTrace parse_gaze(const std::string& text) {
  auto lines = split_lines(text);
  if (lines.empty() || trim(lines.front()) != "# gaze v1")
    throw Error("gaze: missing '# gaze v1' header");
  GazeTrace g;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw Error("gaze: line " + std::to_string(i + 1) + ": expected t_us,x,y");
    g.samples.push_back({parse_u64(f[0]), parse_double(f[1]), parse_double(f[2])});
  }
  g.validate();
  return g;
}

GazeTrace simulate_gaze(const GroundTruthPage& truth, const GazeParams& params) {
  if (truth.line_boxes.empty()) throw Error("simulate_gaze: page has no lines");
  if (!(params.reading_speed_wpm > 0.0)) throw Error("simulate_gaze: reading speed must be > 0");
  if (params.sample_period_us == 0) throw Error("simulate_gaze: sample period must be > 0");
  const auto texts = split_lines(truth.text);

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> fix_ms(150.0, 300.0);
  std::uniform_int_distribution<int> jump_chars(7, 9);
  std::normal_distribution<double> jitter(0.0, 1.0);
  const double duration_scale = 250.0 / params.reading_speed_wpm;
  constexpr double kForwardSaccadeMs = 30.0;
  constexpr double kReturnSweepMs = 60.0;

  // Piecewise-linear keyframes (time in ms), then uniform resampling.
  struct Key {
    double t_ms, x, y;
  };
  std::vector<Key> keys;
  double t = 0.0;
  for (std::size_t k = 0; k < truth.line_boxes.size(); ++k) {
    const Rect& box = truth.line_boxes[k];
    const std::size_t n = k < texts.size() ? std::max<std::size_t>(texts[k].size(), 1) : 1;
    const double pitch = static_cast<double>(box.w) / static_cast<double>(n);
    const double inset = std::min(3.5 * pitch, 0.2 * box.w);
    const double y_line = box.y + box.h / 2.0;

    std::vector<double> fixations{box.x + inset};
    for (;;) {
      const double next = fixations.back() + jump_chars(rng) * pitch;
      if (next >= box.right() - inset) break;
      fixations.push_back(next);
    }
    const double last = box.right() - inset;
    if (last > fixations.back() + pitch) fixations.push_back(last);

    for (std::size_t i = 0; i < fixations.size(); ++i) {
      const double jx = params.fixation_jitter_px * jitter(rng);
      const double jy = params.fixation_jitter_px * jitter(rng);
      const double x = fixations[i] + jx, y = y_line + jy;
      if (!keys.empty()) t += (i == 0) ? kReturnSweepMs : kForwardSaccadeMs;
      keys.push_back({t, x, y});
      t += fix_ms(rng) * duration_scale;
      keys.push_back({t, x, y});
    }
  }

  GazeTrace trace;
  const double period_ms = params.sample_period_us / 1000.0;
  std::size_t seg = 0;
  for (std::uint64_t i = 0;; ++i) {
    const double ts = i * period_ms;
    if (ts > keys.back().t_ms) break;
    while (seg + 1 < keys.size() && keys[seg + 1].t_ms < ts) ++seg;
    const Key& a = keys[seg];
    const Key& b = keys[std::min(seg + 1, keys.size() - 1)];
    const double span = b.t_ms - a.t_ms;
    const double f = span > 0 ? std::clamp((ts - a.t_ms) / span, 0.0, 1.0) : 0.0;
    trace.samples.push_back(
        {i * params.sample_period_us, a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
  }
  return trace;
}

// ---------------------------------------------------------------------------

Pose HeadMotion::at(std::uint64_t t_us) const {
  if (samples.empty()) return {};
  if (t_us <= samples.front().t_us) return samples.front().pose;
  if (t_us >= samples.back().t_us) return samples.back().pose;
  auto it = std::upper_bound(samples.begin(), samples.end(), t_us,
                             [](std::uint64_t t, const PoseSample& s) { return t < s.t_us; });
  const Pose& a = (it - 1)->pose;
  const Pose& b = it->pose;
  const double f = static_cast<double>(t_us - (it - 1)->t_us) /
                   static_cast<double>(it->t_us - (it - 1)->t_us);
  auto lerp = [f](double u, double v) { return u + f * (v - u); };
  return {lerp(a.tx, b.tx), lerp(a.ty, b.ty), lerp(a.tz, b.tz),
          lerp(a.rx, b.rx), lerp(a.ry, b.ry), lerp(a.rz, b.rz)};
}

std::string format_head_motion(const HeadMotion& motion) {
  std::string out = "# pose v1\n";
  for (const auto& s : motion.samples) {
    const Pose& p = s.pose;
    out += std::to_string(s.t_us);
    for (double v : {p.tx, p.ty, p.tz, p.rx, p.ry, p.rz}) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

HeadMotion parse_head_motion(const std::string& text) {
  auto lines = split_lines(text);
  if (lines.empty() || trim(lines.front()) != "# pose v1")
    throw Error("pose: missing '# pose v1' header");
  HeadMotion m;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw Error("pose: line " + std::to_string(i + 1) + ": expected 7 fields");
    PoseSample s;
    s.t_us = parse_u64(f[0]);
    s.pose = {parse_double(f[1]), parse_double(f[2]), parse_double(f[3]),
              parse_double(f[4]), parse_double(f[5]), parse_double(f[6])};
    if (!m.samples.empty() && s.t_us <= m.samples.back().t_us)
      throw Error("pose: timestamps must strictly increase");
    m.samples.push_back(s);
  }
  return m;
}

HeadMotion simulate_head_motion(std::uint64_t duration_us, const HeadMotionParams& params,
                                double focal_px, std::uint64_t seed) {
  if (params.sample_period_us == 0) throw Error("head motion: sample period must be > 0");
  if (!(focal_px > 0.0)) throw Error("head motion: focal length must be > 0");
  const std::size_t n = duration_us / params.sample_period_us + 1;
  const double dt = params.sample_period_us * 1e-6;
  const double alpha = 1.0 - std::exp(-2.0 * std::numbers::pi * params.cutoff_hz * dt);
  const auto burn_in = static_cast<std::size_t>(5.0 / std::max(params.cutoff_hz, 1e-3) / dt);
  const double rms[6] = {params.translation_px / focal_px, params.translation_px / focal_px,
                         params.depth_frac, params.rotation_rad, params.rotation_rad,
                         params.rotation_rad};

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> white(0.0, 1.0);
  std::vector<std::array<double, 6>> axes(n);
  for (int a = 0; a < 6; ++a) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < burn_in + n; ++i) {
      s1 += alpha * (white(rng) - s1);
      s2 += alpha * (s1 - s2);
      if (i >= burn_in) axes[i - burn_in][a] = s2;
    }
    double mean = 0.0;
    for (const auto& v : axes) mean += v[a];
    mean /= static_cast<double>(n);
    double energy = 0.0;
    for (const auto& v : axes) energy += (v[a] - mean) * (v[a] - mean);
    const double cur = std::sqrt(energy / static_cast<double>(n));
    const double gain = cur > 0.0 ? rms[a] / cur : 0.0;
    for (auto& v : axes) v[a] = (v[a] - mean) * gain;
  }

  HeadMotion m;
  m.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = axes[i];
    m.samples.push_back({i * params.sample_period_us, {v[0], v[1], v[2], v[3], v[4], v[5]}});
  }
  return m;
}

Mat3 page_to_sensor(const CameraGeometry& camera, const Pose& pose) {
  const double f = camera.focal_px;
  Mat3 k = Mat3::Identity();
  k(0, 0) = f;
  k(1, 1) = f;
  k(0, 2) = camera.sensor_w / 2.0;
  k(1, 2) = camera.sensor_h / 2.0;
  Mat3 a = Mat3::Identity();
  a(0, 0) = 1.0 / f;
  a(1, 1) = 1.0 / f;
  a(0, 2) = -camera.page_cx / f;
  a(1, 2) = -camera.page_cy / f;
  const Mat3 r = (Eigen::AngleAxisd(pose.rz, Eigen::Vector3d::UnitZ()) *
                  Eigen::AngleAxisd(pose.ry, Eigen::Vector3d::UnitY()) *
                  Eigen::AngleAxisd(pose.rx, Eigen::Vector3d::UnitX()))
                     .toRotationMatrix();
  Mat3 plane = r;
  plane.col(2) += Eigen::Vector3d(pose.tx, pose.ty, pose.tz);
  return normalize_homography(k * plane * a);
}

// ---------------------------------------------------------------------------

FrameSequence::FrameSequence(int width, int height, double fps, std::uint64_t t0_us,
                             std::size_t count, Renderer render)
    : width_(width),
      height_(height),
      fps_(fps),
      period_us_(static_cast<std::uint64_t>(std::llround(1e6 / fps))),
      t0_us_(t0_us),
      count_(count),
      render_(std::move(render)) {
  if (!(fps > 0.0)) throw Error("frame sequence: fps must be > 0");
}

FrameSequence FrameSequence::from_frames(std::vector<GrayImage> frames, double fps,
                                         std::uint64_t t0_us) {
  if (frames.empty()) throw Error("frame sequence: no frames");
  const int w = frames.front().width(), h = frames.front().height();
  for (const auto& f : frames)
    if (f.width() != w || f.height() != h)
      throw Error("frame sequence: frame dimension mismatch");
  auto shared = std::make_shared<const std::vector<GrayImage>>(std::move(frames));
  const std::size_t n = shared->size();
  return FrameSequence(w, h, fps, t0_us, n, [shared](std::size_t i) { return (*shared)[i]; });
}

GrayImage FrameSequence::frame(std::size_t index) const {
  if (index >= count_) throw Error("frame index out of range");
  return render_(index);
}

FrameSequence render_sequence(std::shared_ptr<const PageImage> page, const GazeTrace& gaze,
                              const HeadMotion& head, const CameraGeometry& camera, double fps) {
  if (!page || page->empty()) throw Error("render_sequence: empty page");
  if (!(fps >= 100.0 && fps <= 10000.0)) throw Error("render_sequence: fps must lie in [100, 10000]");
  if (camera.sensor_w < kMinSensorWidth || camera.sensor_h < kMinSensorHeight)
    throw Error("render_sequence: sensor smaller than the 200x100 foveation window");
  if (gaze.samples.size() < 2) throw Error("render_sequence: gaze must cover the sequence");
  gaze.validate();

  const std::uint64_t duration = gaze.end_us() - gaze.start_us();
  const auto count = static_cast<std::size_t>(std::floor(duration * fps / 1e6));
  const std::uint64_t t0 = gaze.start_us();
  const auto period = static_cast<std::uint64_t>(std::llround(1e6 / fps));
  return FrameSequence(camera.sensor_w, camera.sensor_h, fps, t0, count,
                       [page, head, camera, t0, period](std::size_t i) {
                         const Mat3 h = page_to_sensor(camera, head.at(t0 + i * period));
                         return warp_bilinear(*page, h, camera.sensor_w, camera.sensor_h);
                       });
}

GazeTrace project_gaze(const GazeTrace& page_gaze, const HeadMotion& head,
                       const CameraGeometry& camera) {
  GazeTrace out;
  out.samples.reserve(page_gaze.samples.size());
  for (const auto& s : page_gaze.samples) {
    const Vec2 p = apply_homography(page_to_sensor(camera, head.at(s.t_us)), s.x, s.y);
    out.samples.push_back({s.t_us, p.x(), p.y()});
  }
  return out;
}

}  // namespace evocr::synth
