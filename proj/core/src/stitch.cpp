#include "evocr/stitch.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "evocr/text_util.hpp"

namespace evocr::stitch {

// ---------------------------------------------------------------------------
// Line segmentation

std::vector<LineSegment> detect_saccades(const synth::GazeTrace& gaze, const SaccadeParams& params) {
  const auto& s = gaze.samples;
  if (s.size() < 2) throw Error("detect_saccades needs at least 2 gaze samples");
  const auto max_dur_us = static_cast<std::uint64_t>(std::llround(params.max_dur_ms * 1000.0));

  std::vector<LineSegment> out;
  std::size_t seg_start = 0;
  // Running x range of the current segment up to (and including) index k.
  std::vector<double> run_min(s.size()), run_max(s.size());
  auto reset = [&](std::size_t k) {
    seg_start = k;
    run_min[k] = run_max[k] = s[k].x;
  };
  reset(0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    run_min[i] = std::min(run_min[i - 1], s[i].x);
    run_max[i] = std::max(run_max[i - 1], s[i].x);

    // Highest point inside the duration gate, within this segment.
    std::size_t peak = i;
    for (std::size_t j = i; j-- > seg_start;) {
      if (s[i].t_us - s[j].t_us > max_dur_us) break;
      if (s[j].x > s[peak].x) peak = j;
    }
    if (peak == i) continue;
    const double drop = s[peak].x - s[i].x;
    const double range = run_max[peak] - run_min[peak];
    if (range <= 0.0 || drop < params.min_drop_frac * range || drop < params.min_drop_px) continue;

    out.push_back({s[seg_start].t_us, s[peak].t_us, 0, 0});
    // Ride the sweep to its lowest point before opening the next segment.
    while (i + 1 < s.size() && s[i + 1].x < s[i].x) ++i;
    reset(i);
  }
  out.push_back({s[seg_start].t_us, s.back().t_us, 0, 0});
  return out;
}

void assign_frames(std::vector<LineSegment>& segments, const std::vector<std::uint64_t>& frame_t_us) {
  for (auto& seg : segments) {
    seg.first_frame = static_cast<std::size_t>(
        std::lower_bound(frame_t_us.begin(), frame_t_us.end(), seg.start_us) - frame_t_us.begin());
    seg.end_frame = static_cast<std::size_t>(
        std::upper_bound(frame_t_us.begin(), frame_t_us.end(), seg.end_us) - frame_t_us.begin());
  }
}

// ---------------------------------------------------------------------------
// Canvas

bool StitchCanvas::touched(int cx, int cy) const {
  const int i = cx - x0, j = cy - y0;
  return alpha.contains(i, j) && alpha(i, j) > 0.0f;
}

void StitchCanvas::ensure(const Rect& r) {
  if (r.empty()) return;
  if (empty()) {
    image = BinaryImage(r.w, r.h, 0);
    mask = Grid<float>(r.w, r.h, kUntouched);
    alpha = Grid<float>(r.w, r.h, 0.0f);
    soft = Grid<float>(r.w, r.h, 0.0f);
    x0 = r.x;
    y0 = r.y;
    return;
  }
  const Rect cur = bounds();
  const Rect u = bounding_union(cur, r);
  if (u == cur) return;
  BinaryImage img(u.w, u.h, 0);
  Grid<float> m(u.w, u.h, kUntouched), a(u.w, u.h, 0.0f), sf(u.w, u.h, 0.0f);
  const int ox = cur.x - u.x, oy = cur.y - u.y;
  for (int j = 0; j < cur.h; ++j)
    for (int i = 0; i < cur.w; ++i) {
      img(i + ox, j + oy) = image(i, j);
      m(i + ox, j + oy) = mask(i, j);
      a(i + ox, j + oy) = alpha(i, j);
      sf(i + ox, j + oy) = soft(i, j);
    }
  image = std::move(img);
  mask = std::move(m);
  alpha = std::move(a);
  soft = std::move(sf);
  x0 = u.x;
  y0 = u.y;
}

BinaryImage StitchCanvas::render(const Rect& r) const {
  BinaryImage out(std::max(r.w, 0), std::max(r.h, 0), 0);
  for (int j = 0; j < out.height(); ++j)
    for (int i = 0; i < out.width(); ++i) {
      const int cx = r.x + i - x0, cy = r.y + j - y0;
      if (alpha.contains(cx, cy) && alpha(cx, cy) > 0.0f) out(i, j) = image(cx, cy);
    }
  return out;
}

namespace {

/// Summed-area table with a zero border row/column.
class Integral {
 public:
  Integral(int w, int h) : w_(w + 1), data_(static_cast<std::size_t>(w + 1) * (h + 1), 0) {}
  std::int64_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * w_ + x]; }
  std::int64_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * w_ + x]; }
  /// Sum over [x0,x1) x [y0,y1) in source coordinates.
  std::int64_t sum(int x0, int y0, int x1, int y1) const {
    return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
  }
  template <typename F>
  void build(int w, int h, F value) {
    for (int y = 0; y < h; ++y) {
      std::int64_t row = 0;
      for (int x = 0; x < w; ++x) {
        row += value(x, y);
        at(x + 1, y + 1) = at(x + 1, y) + row;
      }
    }
  }

 private:
  int w_;
  std::vector<std::int64_t> data_;
};

double zncc_from_sums(double n, double sf, double sc, double sfc) {
  // Binary values: sum of squares equals the plain sum.
  const double var_f = n * sf - sf * sf;
  const double var_c = n * sc - sc * sc;
  if (var_f <= 0.0 || var_c <= 0.0) return -1.0;
  return std::clamp((n * sfc - sf * sc) / std::sqrt(var_f * var_c), -1.0, 1.0);
}

}  // namespace

Grid<float> local_confidence(const StitchCanvas& canvas, const BinaryImage& frame, int dx, int dy,
                             int window) {
  const int w = frame.width(), h = frame.height();
  Grid<float> out(w, h, kUntouched);
  if (canvas.empty()) return out;
  // 0 = unwritten, 1 = written paper, 2 = written ink.
  BinaryImage state(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int cx = dx + x - canvas.x0, cy = dy + y - canvas.y0;
      if (canvas.alpha.contains(cx, cy) && canvas.alpha(cx, cy) > 0.0f)
        state(x, y) = canvas.image(cx, cy) ? 2 : 1;
    }
  Integral n(w, h), sf(w, h), sc(w, h), sfc(w, h);
  n.build(w, h, [&](int x, int y) { return state(x, y) != 0; });
  sf.build(w, h, [&](int x, int y) { return state(x, y) != 0 && frame(x, y); });
  sc.build(w, h, [&](int x, int y) { return state(x, y) == 2; });
  sfc.build(w, h, [&](int x, int y) { return state(x, y) == 2 && frame(x, y); });
  const int r = window / 2;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (state(x, y) == 0) continue;
      const int xa = std::max(0, x - r), xb = std::min(w, x + r + 1);
      const int ya = std::max(0, y - r), yb = std::min(h, y + r + 1);
      out(x, y) = static_cast<float>(
          zncc_from_sums(static_cast<double>(n.sum(xa, ya, xb, yb)),
                         static_cast<double>(sf.sum(xa, ya, xb, yb)),
                         static_cast<double>(sc.sum(xa, ya, xb, yb)),
                         static_cast<double>(sfc.sum(xa, ya, xb, yb))));
    }
  return out;
}

FramePlacement place_frame(const StitchCanvas& canvas, const BinaryImage& frame, int prior_dx,
                           int prior_dy, const StitchParams& params) {
  if (frame.empty()) throw Error("place_frame: empty frame");
  FramePlacement p;
  p.frame = frame;
  if (canvas.empty()) {
    p.dx = prior_dx;
    p.dy = prior_dy;
    p.zncc = 1.0;
    p.overlap = 1.0;
    p.accepted = true;
    p.confidence = Grid<float>(frame.width(), frame.height(), kUntouched);
    return p;
  }

  const int cw = canvas.image.width(), ch = canvas.image.height();
  Integral written(cw, ch), ink(cw, ch);
  written.build(cw, ch, [&](int x, int y) { return canvas.alpha(x, y) > 0.0f; });
  ink.build(cw, ch, [&](int x, int y) { return canvas.alpha(x, y) > 0.0f && canvas.image(x, y); });

  std::vector<std::pair<int, int>> frame_ink;
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      if (frame(x, y)) frame_ink.emplace_back(x, y);

  const double area = static_cast<double>(frame.width()) * frame.height();
  double best = -std::numeric_limits<double>::infinity();
  long best_dist = 0;
  double best_overlap = 0.0;
  int best_dx = prior_dx, best_dy = prior_dy;
  const int r = params.search_radius_px;
  for (int dy = prior_dy - r; dy <= prior_dy + r; ++dy)
    for (int dx = prior_dx - r; dx <= prior_dx + r; ++dx) {
      const int gx0 = std::clamp(dx - canvas.x0, 0, cw), gy0 = std::clamp(dy - canvas.y0, 0, ch);
      const int gx1 = std::clamp(dx - canvas.x0 + frame.width(), 0, cw);
      const int gy1 = std::clamp(dy - canvas.y0 + frame.height(), 0, ch);
      const auto n = written.sum(gx0, gy0, gx1, gy1);
      const double overlap = static_cast<double>(n) / area;
      if (overlap < params.min_overlap) continue;
      const auto sc = ink.sum(gx0, gy0, gx1, gy1);
      std::int64_t sf = 0, sfc = 0;
      for (const auto& [x, y] : frame_ink) {
        const int cx = dx + x - canvas.x0, cy = dy + y - canvas.y0;
        if (cx < 0 || cy < 0 || cx >= cw || cy >= ch || canvas.alpha(cx, cy) <= 0.0f) continue;
        ++sf;
        sfc += canvas.image(cx, cy);
      }
      const double z = zncc_from_sums(static_cast<double>(n), static_cast<double>(sf),
                                       static_cast<double>(sc), static_cast<double>(sfc));
      const long dist = static_cast<long>(dx - prior_dx) * (dx - prior_dx) +
                        static_cast<long>(dy - prior_dy) * (dy - prior_dy);
      if (z > best || (z == best && dist < best_dist)) {
        best = z;
        best_dist = dist;
        best_dx = dx;
        best_dy = dy;
        best_overlap = overlap;
      }
    }

  p.dx = best_dx;
  p.dy = best_dy;
  p.overlap = best_overlap;
  p.zncc = std::isfinite(best) ? best : -1.0;
  p.accepted = std::isfinite(best) && best >= params.min_zncc;
  if (p.accepted)
    p.confidence = local_confidence(canvas, frame, p.dx, p.dy, params.local_window);
  else
    p.confidence = Grid<float>(frame.width(), frame.height(), kUntouched);
  return p;
}

void update_canvas(StitchCanvas& canvas, const FramePlacement& placement, const StitchParams& params) {
  const auto& f = placement.frame;
  if (placement.confidence.width() != f.width() || placement.confidence.height() != f.height())
    throw Error("update_canvas: confidence shape differs from the frame");
  canvas.ensure({placement.dx, placement.dy, f.width(), f.height()});
  const float band = static_cast<float>(params.tie_band);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      const int cx = placement.dx + x - canvas.x0, cy = placement.dy + y - canvas.y0;
      const float m_new = placement.confidence(x, y);
      const float fv = f(x, y);
      float& a = canvas.alpha(cx, cy);
      float& s = canvas.soft(cx, cy);
      float& m = canvas.mask(cx, cy);
      if (a <= 0.0f) {
        canvas.image(cx, cy) = f(x, y);
        m = m_new;
        a = 1.0f;
        s = fv;
        continue;
      }
      const float diff = m_new - m;
      const bool tie = diff != 0.0f && std::fabs(diff) <= band;
      if (m_new > m) {
        canvas.image(cx, cy) = f(x, y);
        m = m_new;
        if (!tie) {
          s = fv;
          a = 1.0f;
        }
      }
      if (tie) {
        s = (s * a + fv) / (a + 1.0f);
        a += 1.0f;
      }
    }
}

// ---------------------------------------------------------------------------
// Line alignment

Mat3 LineTransform::matrix() const { return rigid_about(rotation_rad, pivot_x, pivot_y, tx, ty); }

namespace {

GrayImage ink_float(const BinaryImage& b) {
  GrayImage out(b.width(), b.height());
  auto src = b.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 1.0f : 0.0f;
  return out;
}

}  // namespace

LineTransform estimate_line_transform(const BinaryImage& strip_a, const BinaryImage& strip_b,
                                      const LineTransform& init, const LkParams& params) {
  if (strip_a.empty() || strip_b.empty()) throw Error("estimate_line_transform: empty strip");
  const GrayImage a = gaussian_blur(ink_float(strip_a), params.blur_sigma);
  const GrayImage b = gaussian_blur(ink_float(strip_b), params.blur_sigma);
  const int bw = b.width(), bh = b.height();
  GrayImage gx(bw, bh, 0.0f), gy(bw, bh, 0.0f);
  for (int y = 0; y < bh; ++y)
    for (int x = 0; x < bw; ++x) {
      gx(x, y) = 0.5f * (b.at_or(x + 1, y, b(x, y)) - b.at_or(x - 1, y, b(x, y)));
      gy(x, y) = 0.5f * (b.at_or(x, y + 1, b(x, y)) - b.at_or(x, y - 1, b(x, y)));
    }

  LineTransform t = init;
  t.pivot_x = (strip_a.width() - 1) / 2.0;
  t.pivot_y = (strip_a.height() - 1) / 2.0;
  const double radius = 0.5 * std::hypot(strip_a.width(), strip_a.height());

  double prev_norm = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    const double c = std::cos(t.rotation_rad), s = std::sin(t.rotation_rad);
    std::size_t used = 0;
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        const double px = x - t.pivot_x, py = y - t.pivot_y;
        const double qx = c * px - s * py + t.pivot_x + t.tx;
        const double qy = s * px + c * py + t.pivot_y + t.ty;
        if (qx < 0.0 || qy < 0.0 || qx > bw - 1 || qy > bh - 1) continue;
        const double gxv = sample_bilinear(gx, qx, qy, 0.0f);
        const double gyv = sample_bilinear(gy, qx, qy, 0.0f);
        const double res = a(x, y) - sample_bilinear(b, qx, qy, 0.0f);
        if (gxv == 0.0 && gyv == 0.0) continue;
        const Eigen::Vector3d j(gxv, gyv, gxv * (-s * px - c * py) + gyv * (c * px - s * py));
        hess += j * j.transpose();
        rhs += j * res;
        ++used;
      }
    if (used < 3 || std::fabs(hess.determinant()) < 1e-12)
      throw DivergenceError("line alignment has no usable gradient", t);
    const Eigen::Vector3d step = hess.ldlt().solve(rhs);
    t.tx += step(0);
    t.ty += step(1);
    t.rotation_rad += step(2);
    const double norm = std::sqrt(step(0) * step(0) + step(1) * step(1) +
                                  step(2) * radius * step(2) * radius);
    if (!std::isfinite(norm) || std::fabs(t.rotation_rad) > kMaxLineRotation)
      throw DivergenceError("line alignment left the valid range", t);
    if (norm < params.convergence_px) return t;
    growth = norm > prev_norm ? growth + 1 : 0;
    if (growth >= 5) throw DivergenceError("line alignment diverged", t);
    prev_norm = norm;
  }
  return t;
}

BinaryImage compose_page(const std::vector<StitchCanvas>& lines,
                         const std::vector<LineTransform>& transforms) {
  if (lines.empty()) throw Error("compose_page: no lines");
  if (transforms.size() + 1 != lines.size())
    throw Error("compose_page: need one transform per adjacent line pair");

  std::vector<Mat3> to_page(lines.size(), Mat3::Identity());
  for (std::size_t k = 1; k < lines.size(); ++k) to_page[k] = to_page[k - 1] * transforms[k - 1].matrix();

  std::vector<Rect> boxes(lines.size());
  Rect page;
  bool have = false;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const Rect b = lines[k].bounds();
    if (b.empty()) continue;
    double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
    for (const auto& [x, y] : {std::pair{b.x, b.y}, {b.right(), b.y}, {b.x, b.bottom()},
                               {b.right(), b.bottom()}}) {
      const Vec2 q = apply_homography(to_page[k], x, y);
      minx = std::min(minx, q.x());
      miny = std::min(miny, q.y());
      maxx = std::max(maxx, q.x());
      maxy = std::max(maxy, q.y());
    }
    boxes[k] = {static_cast<int>(std::floor(minx)) - 1, static_cast<int>(std::floor(miny)) - 1,
                static_cast<int>(std::ceil(maxx - minx)) + 3, static_cast<int>(std::ceil(maxy - miny)) + 3};
    page = have ? bounding_union(page, boxes[k]) : boxes[k];
    have = true;
  }
  if (!have) return {};

  BinaryImage img(page.w, page.h, 0);
  Grid<float> mask(page.w, page.h, kUntouched);
  BinaryImage written(page.w, page.h, 0);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto& line = lines[k];
    if (line.empty()) continue;
    const Mat3 inv = to_page[k].inverse();
    const Rect& b = boxes[k];
    for (int qy = b.y; qy < b.bottom(); ++qy)
      for (int qx = b.x; qx < b.right(); ++qx) {
        const Vec2 p = apply_homography(inv, qx, qy);
        const int cx = static_cast<int>(std::lround(p.x())) - line.x0;
        const int cy = static_cast<int>(std::lround(p.y())) - line.y0;
        if (!line.alpha.contains(cx, cy) || line.alpha(cx, cy) <= 0.0f) continue;
        const int i = qx - page.x, j = qy - page.y;
        if (!written(i, j) || line.mask(cx, cy) > mask(i, j)) {
          img(i, j) = line.image(cx, cy);
          mask(i, j) = line.mask(cx, cy);
          written(i, j) = 1;
        }
      }
  }
  const Rect ink = ink_bounds(img);
  if (ink.empty()) return {};
  return crop(img, {ink.x - kComposeMargin, ink.y - kComposeMargin, ink.w + 2 * kComposeMargin,
                    ink.h + 2 * kComposeMargin},
              std::uint8_t{0});
}

// ---------------------------------------------------------------------------
// Homography

namespace {

Mat3 normalizer(const std::vector<Vec2>& pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double dist = 0.0;
  for (const auto& p : pts) dist += (p - mean).norm();
  dist /= static_cast<double>(pts.size());
  if (dist <= 0.0) throw DegenerateConfiguration("all points coincide");
  const double s = std::sqrt(2.0) / dist;
  Mat3 t;
  t << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  return t;
}

}  // namespace

HomographyFit estimate_homography(const std::vector<Vec2>& src, const std::vector<Vec2>& dst) {
  if (src.size() != dst.size()) throw Error("estimate_homography: point count mismatch");
  if (src.size() < 4) throw DegenerateConfiguration("homography needs at least 4 point pairs");
  const std::size_t n = src.size();
  const Mat3 ts = normalizer(src), td = normalizer(dst);
  std::vector<Vec2> s(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = apply_homography(ts, src[i].x(), src[i].y());
    d[i] = apply_homography(td, dst[i].x(), dst[i].y());
  }
  if (n == 4) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
          const Vec2 u = s[j] - s[i], v = s[k] - s[i];
          if (std::fabs(u.x() * v.y() - u.y() * v.x()) < 1e-9)
            throw DegenerateConfiguration("three source points are collinear");
        }
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * n), 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = s[i].x(), y = s[i].y(), u = d[i].x(), v = d[i].y();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv.size() >= 8 && sv(7) <= 1e-10 * sv(0))
    throw DegenerateConfiguration("point configuration does not determine a homography");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Mat3 full = td.inverse() * hn * ts;
  if (std::fabs(full(2, 2)) < 1e-12) throw DegenerateConfiguration("homography has h33 = 0");
  full /= full(2, 2);

  HomographyFit fit{full, 0.0};
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) sq += (apply_homography(full, src[i].x(), src[i].y()) - dst[i]).squaredNorm();
  fit.rms_error = std::sqrt(sq / static_cast<double>(n));
  return fit;
}

// ---------------------------------------------------------------------------
// Driver

std::string format_placement_log(const std::vector<PlacementRecord>& log) {
  std::string out = "frame_idx,dx,dy,zncc,accepted\n";
  for (const auto& r : log)
    out += std::to_string(r.frame_idx) + ',' + std::to_string(r.dx) + ',' + std::to_string(r.dy) +
           ',' + format_double(r.zncc) + ',' + (r.accepted ? "1" : "0") + '\n';
  return out;
}

namespace {

constexpr double kMaxLineShiftPx = 10.0;
constexpr double kMinLineOverlap = 0.25;

LineTransform align_lines(const StitchCanvas& upper, const StitchCanvas& lower, const LkParams& lk) {
  const Rect common = intersect(upper.bounds(), lower.bounds());
  const Rect small = lower.bounds();
  if (common.empty() ||
      static_cast<double>(common.w) * common.h < kMinLineOverlap * small.w * small.h)
    return {};
  const BinaryImage a = lower.render(common);
  const BinaryImage b = upper.render(common);
  if (count_ink(a) == 0 || count_ink(b) == 0) return {};
  try {
    LineTransform t = estimate_line_transform(a, b, {}, lk);
    if (std::hypot(t.tx, t.ty) > kMaxLineShiftPx) return {};
    t.pivot_x += common.x;
    t.pivot_y += common.y;
    return t;
  } catch (const DivergenceError&) {
    return {};
  }
}

}  // namespace

StitchResult stitch_frames(const std::vector<recon::BinaryFrame>& frames,
                           const std::vector<LineSegment>& segments, const StitchParams& params,
                           const LkParams& lk) {
  StitchResult out;
  for (const auto& seg : segments) {
    StitchCanvas canvas;
    int drift_x = 0, drift_y = 0;
    for (std::size_t i = seg.first_frame; i < seg.end_frame && i < frames.size(); ++i) {
      const auto& f = frames[i];
      const auto p = place_frame(canvas, f.pixels, f.origin_x + drift_x, f.origin_y + drift_y, params);
      out.log.push_back({i, p.dx, p.dy, p.zncc, p.accepted});
      if (!p.accepted) continue;
      update_canvas(canvas, p, params);
      drift_x = p.dx - f.origin_x;
      drift_y = p.dy - f.origin_y;
    }
    if (!canvas.empty() && count_ink(canvas.image) > 0) out.lines.push_back(std::move(canvas));
  }
  if (out.lines.empty()) return out;
  for (std::size_t k = 0; k + 1 < out.lines.size(); ++k)
    out.transforms.push_back(align_lines(out.lines[k], out.lines[k + 1], lk));
  out.page = compose_page(out.lines, out.transforms);
  return out;
}

}  // namespace evocr::stitch
