#include "evocr/ocr.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <regex>

// Eigen must precede httplib: <resolv.h> defines a `_res` macro.
#include "evocr/io.hpp"
#include "evocr/scene.hpp"
#include "evocr/text_util.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

namespace evocr::ocr {

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kMock: return "mock";
    case BackendKind::kDedicatedHttp: return "dedicated-http";
    case BackendKind::kLlmHttp: return "llm-http";
  }
  return "unknown";
}

BackendKind parse_backend_kind(const std::string& s) {
  if (s == "mock") return BackendKind::kMock;
  if (s == "dedicated-http") return BackendKind::kDedicatedHttp;
  if (s == "llm-http") return BackendKind::kLlmHttp;
  throw ConfigError("unknown OCR backend '" + s + "'");
}

OcrBackend OcrBackend::mock() { return {}; }

OcrBackend OcrBackend::dedicated_http(std::string endpoint) {
  OcrBackend b;
  b.kind = BackendKind::kDedicatedHttp;
  b.endpoint = std::move(endpoint);
  b.auth_env = "OCR_API_KEY";
  return b;
}

OcrBackend OcrBackend::llm_http(std::string endpoint) {
  OcrBackend b;
  b.kind = BackendKind::kLlmHttp;
  b.endpoint = std::move(endpoint);
  b.auth_env = "LLM_API_KEY";
  return b;
}

std::string OcrBackend::label() const { return name.empty() ? to_string(kind) : name; }

void OcrBackend::validate() const {
  if (kind == BackendKind::kMock) return;
  if (endpoint.empty()) throw ConfigError(to_string(kind) + " backend needs an endpoint");
  if (auth_env.empty()) throw ConfigError(to_string(kind) + " backend needs an auth variable");
  if (timeout_ms <= 0) throw ConfigError("timeout must be positive");
}

// ---------------------------------------------------------------------------
// Mock recognizer

namespace {

constexpr int kCellW = BitmapFont::kNominalWidth + 1;
constexpr int kCellH = BitmapFont::kNominalHeight;
constexpr double kRejectDistance = 0.3;
constexpr double kBoldFit = 0.1;
constexpr double kShortlistMargin = 0.05;

constexpr int kCellPx = kCellW * kCellH;
/// Blur applied to cell and template before the rejection distance, in font
/// pixels. Absorbs sub-pixel misregistration from resampling.
constexpr double kMatchBlur = 0.6;

using CellValues = std::array<float, kCellPx>;

struct Template {
  char c;
  std::uint64_t bits;
  CellValues blurred;
};

const std::vector<Template>& templates() {
  static const std::vector<Template> t = [] {
    std::vector<Template> out;
    const auto font = BitmapFont::builtin(1);
    for (const auto& [c, g] : font.glyphs()) {
      std::uint64_t bits = 0;
      for (int y = 0; y < g.height() && y < kCellH; ++y)
        for (int x = 0; x < g.width() && x < kCellW; ++x)
          if (g(x, y)) bits |= std::uint64_t{1} << (y * kCellW + x);
      if (bits == 0) continue;
      GrayImage canvas(kCellW + 4, kCellH + 4, 0.0f);
      for (int i = 0; i < kCellPx; ++i)
        if ((bits >> i) & 1) canvas(2 + i % kCellW, 2 + i / kCellW) = 1.0f;
      canvas = gaussian_blur(canvas, kMatchBlur);
      CellValues blurred{};
      for (int i = 0; i < kCellPx; ++i) blurred[i] = canvas(2 + i % kCellW, 2 + i / kCellW);
      out.push_back({c, bits, blurred});
    }
    return out;
  }();
  return t;
}

std::uint64_t cell_bits(const BinaryImage& img, int ox, int oy) {
  std::uint64_t bits = 0;
  for (int y = 0; y < kCellH; ++y) {
    const int iy = oy + y;
    if (iy < 0 || iy >= img.height()) continue;
    for (int x = 0; x < kCellW; ++x) {
      const int ix = ox + x;
      if (ix >= 0 && ix < img.width() && img(ix, iy)) bits |= std::uint64_t{1} << (y * kCellW + x);
    }
  }
  return bits;
}

struct Match {
  char c = ' ';
  int hamming = 0;
  int uni = 0;
  double distance() const { return uni == 0 ? 0.0 : static_cast<double>(hamming) / uni; }
};

Match best_glyph(std::uint64_t bits) {
  Match m;
  m.hamming = 1 << 30;
  for (const auto& t : templates()) {
    const int h = std::popcount(bits ^ t.bits);
    if (h < m.hamming) {
      m.c = t.c;
      m.hamming = h;
      m.uni = std::popcount(bits | t.bits);
    }
  }
  return m;
}

struct Band {
  int top;     // first core row
  int bottom;  // one past the last core row
};

std::vector<Band> find_bands(const BinaryImage& img) {
  std::vector<int> counts(img.height(), 0);
  int peak = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (auto v : img.row(y)) counts[y] += v;
    peak = std::max(peak, counts[y]);
  }
  const int thr = std::max(1, static_cast<int>(std::ceil(0.01 * peak)));
  std::vector<Band> bands;
  for (int y = 0; y < img.height();) {
    if (counts[y] < thr) {
      ++y;
      continue;
    }
    int e = y, ink = 0;
    while (e < img.height() && counts[e] >= thr) ink += counts[e++];
    if (ink >= 2) bands.push_back({y, e});
    y = e;
  }
  // Thin bands close to a taller one are detached descenders or accents.
  int tallest = 0;
  for (const auto& b : bands) tallest = std::max(tallest, b.bottom - b.top);
  const int max_gap = std::max(1, tallest / 4);
  for (std::size_t i = 0; i < bands.size();) {
    const int height = bands[i].bottom - bands[i].top;
    if (2 * height >= tallest || bands.size() == 1) {
      ++i;
      continue;
    }
    const int gap_up = i > 0 ? bands[i].top - bands[i - 1].bottom : INT_MAX;
    const int gap_down = i + 1 < bands.size() ? bands[i + 1].top - bands[i].bottom : INT_MAX;
    if (std::min(gap_up, gap_down) > max_gap) {
      ++i;
      continue;
    }
    if (gap_up <= gap_down) {
      bands[i - 1].bottom = bands[i].bottom;
      bands.erase(bands.begin() + static_cast<long>(i));
    } else {
      bands[i + 1].top = bands[i].top;
      bands.erase(bands.begin() + static_cast<long>(i));
    }
  }
  return bands;
}

/// Ink coverage of `strip` resampled so one font pixel becomes one pixel,
/// starting at sub-pixel offset (fx, fy).
GrayImage normalise(const BinaryImage& strip, double scale, double fx, double fy) {
  const int nw = std::max(1, static_cast<int>((strip.width() - fx) / scale));
  const int nh = std::max(1, static_cast<int>((strip.height() - fy) / scale));
  GrayImage out(nw, nh, 0.0f);
  const double inv_area = 1.0 / (scale * scale);
  for (int y = 0; y < nh; ++y) {
    const double y0 = fy + y * scale, y1 = y0 + scale;
    for (int x = 0; x < nw; ++x) {
      const double x0 = fx + x * scale, x1 = x0 + scale;
      double acc = 0.0;
      for (int iy = static_cast<int>(y0); iy < static_cast<int>(std::ceil(y1)) && iy < strip.height(); ++iy) {
        const double wy = std::min<double>(y1, iy + 1) - std::max<double>(y0, iy);
        if (wy <= 0) continue;
        for (int ix = static_cast<int>(x0); ix < static_cast<int>(std::ceil(x1)) && ix < strip.width(); ++ix) {
          if (!strip(ix, iy)) continue;
          const double wx = std::min<double>(x1, ix + 1) - std::max<double>(x0, ix);
          if (wx > 0) acc += wx * wy;
        }
      }
      out(x, y) = static_cast<float>(std::min(1.0, acc * inv_area));
    }
  }
  return out;
}

BinaryImage binarise(const GrayImage& g) {
  BinaryImage out(g.width(), g.height(), 0);
  auto src = g.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= 0.5f;
  return out;
}

struct Fit {
  long bad = 0;    // hamming plus stray ink
  long total = 0;  // union plus stray ink
  int h = 0;
  double fx = 0.0, fy = 0.0;
  int ox = 0, oy = 0;

  double ratio() const { return total == 0 ? 2.0 : static_cast<double>(bad) / static_cast<double>(total); }
};

/// Grid fit quality at one offset: ink that falls outside the cell row counts
/// as mismatched.
void score_grid(const BinaryImage& norm, std::size_t ink_total, int ox, int oy, int right, Fit& fit) {
  long ham = 0, uni = 0, inside = 0;
  for (int cx = ox; cx <= right; cx += kCellW) {
    const auto bits = cell_bits(norm, cx, oy);
    if (bits == 0) continue;
    const Match m = best_glyph(bits);
    ham += m.hamming;
    uni += m.uni;
    inside += std::popcount(bits);
  }
  const long outside = static_cast<long>(ink_total) - inside;
  fit.bad = ham + outside;
  fit.total = uni + outside;
}

/// Soft distance between coverage values and a binary template.
double soft_distance(const CellValues& g, const CellValues& t) {
  double diff = 0.0, uni = 0.0;
  for (int i = 0; i < kCellPx; ++i) {
    diff += std::fabs(g[i] - t[i]);
    uni += std::max(g[i], t[i]);
  }
  return uni == 0.0 ? 0.0 : diff / uni;
}

/// Accumulates soft mismatch of the unshifted grid, stray ink included.
void soft_score(const BinaryImage& strip, const Fit& fit, double& diff, double& uni) {
  if (fit.total == 0) return;
  const GrayImage gray = normalise(strip, fit.h / 8.0, fit.fx, fit.fy);
  const BinaryImage norm = binarise(gray);
  const Rect ink = ink_bounds(norm);
  double mass = 0.0, inside = 0.0;
  for (float v : gray.values()) mass += v;
  CellValues cell{};
  for (int cx = fit.ox; cx < ink.right(); cx += kCellW) {
    if (cell_bits(norm, cx, fit.oy) == 0) continue;
    double cell_mass = 0.0;
    for (int y = 0; y < kCellH; ++y)
      for (int x = 0; x < kCellW; ++x) {
        cell[y * kCellW + x] = gray.at_or(cx + x, fit.oy + y, 0.0f);
        cell_mass += cell[y * kCellW + x];
      }
    double best_d = 1e300, best_u = 0.0;
    for (const auto& t : templates()) {
      double d = 0.0, u = 0.0;
      for (int i = 0; i < kCellW * kCellH; ++i) {
        const float tv = (t.bits >> i) & 1 ? 1.0f : 0.0f;
        d += std::fabs(cell[i] - tv);
        u += std::max(cell[i], tv);
      }
      if (d < best_d) {
        best_d = d;
        best_u = u;
      }
    }
    diff += best_d;
    uni += best_u;
    inside += cell_mass;
  }
  const double stray = std::max(0.0, mass - inside);
  diff += stray;
  uni += stray;
}

Fit fit_line(const BinaryImage& strip, int h) {
  std::vector<Fit> fits;
  const double s = h / 8.0;
  const int phases = h == 8 ? 1 : std::max(2, static_cast<int>(std::ceil(s)));
  for (int py = 0; py < phases; ++py)
    for (int px = 0; px < phases; ++px) {
      const double fx = px * s / phases, fy = py * s / phases;
      const BinaryImage norm = binarise(normalise(strip, s, fx, fy));
      const Rect ink = ink_bounds(norm);
      if (ink.empty()) continue;
      const std::size_t ink_total = count_ink(norm);
      for (int oy = ink.y - (kCellH - 1); oy <= ink.y; ++oy)
        for (int ox = ink.x - (kCellW - 2); ox <= ink.x; ++ox) {
          Fit f{0, 0, h, fx, fy, ox, oy};
          score_grid(norm, ink_total, ox, oy, ink.right() - 1, f);
          fits.push_back(f);
        }
    }
  if (fits.empty()) return {};
  double best_ratio = 3.0;
  for (const auto& f : fits) best_ratio = std::min(best_ratio, f.ratio());
  // Binarisation hides sub-pixel phase; among equal binary fits keep the one
  // whose coverage values match best.
  Fit best;
  double best_soft = 3.0;
  for (const auto& f : fits) {
    if (f.ratio() > best_ratio + 1e-9) continue;
    double diff = 0.0, uni = 0.0;
    soft_score(strip, f, diff, uni);
    const double soft = uni == 0.0 ? 2.0 : diff / uni;
    if (soft < best_soft) {
      best_soft = soft;
      best = f;
    }
  }
  return best;
}

/// Normalised hamming distance between the observed pixels of one cell and
/// the binary footprint template `bits` would leave at scale `s` with its
/// origin at (x0, y0): area coverage of one half or more counts as ink.
double footprint_distance(const BinaryImage& strip, std::uint64_t bits, double s, double x0, double y0) {
  const int i0 = static_cast<int>(std::floor(x0)), i1 = static_cast<int>(std::ceil(x0 + kCellW * s));
  const int j0 = static_cast<int>(std::floor(y0)), j1 = static_cast<int>(std::ceil(y0 + kCellH * s));
  auto overlap = [s](int p, double origin, int u) {
    return std::max(0.0, std::min<double>(p + 1, origin + s * (u + 1)) - std::max<double>(p, origin + s * u));
  };
  long ham = 0, uni = 0;
  for (int j = j0; j < j1; ++j) {
    const double cy = j + 0.5;
    if (cy < y0 || cy >= y0 + kCellH * s) continue;
    for (int i = i0; i < i1; ++i) {
      const double cx = i + 0.5;
      if (cx < x0 || cx >= x0 + kCellW * s) continue;
      double cov = 0.0;
      for (int v = 0; v < kCellH; ++v) {
        const double wy = overlap(j, y0, v);
        if (wy <= 0.0) continue;
        for (int u = 0; u < kCellW; ++u)
          if ((bits >> (v * kCellW + u)) & 1) cov += wy * overlap(i, x0, u);
      }
      const bool pred = cov >= 0.5 - 1e-9;
      const bool obs = strip.contains(i, j) && strip(i, j);
      ham += pred != obs;
      uni += pred || obs;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(ham) / static_cast<double>(uni);
}

constexpr int kCandidates = 10;

std::string decode_line(const BinaryImage& strip, const Fit& fit, double& dist_sum, long& cells) {
  const double s = fit.h / 8.0;
  const GrayImage gray = normalise(strip, s, fit.fx, fit.fy);
  const BinaryImage norm = binarise(gray);
  const Rect ink = ink_bounds(norm);
  const auto& tmpl = templates();
  std::string out;
  CellValues cell{};
  std::vector<std::pair<double, std::size_t>> ranked(tmpl.size());
  for (int cx = fit.ox; cx < ink.right(); cx += kCellW) {
    if (cell_bits(norm, cx, fit.oy) == 0) {
      out += ' ';
      continue;
    }
    // Shortlist by coverage similarity in font space, over +-1 px shifts.
    for (std::size_t t = 0; t < tmpl.size(); ++t) ranked[t] = {3.0, t};
    for (int sy = -1; sy <= 1; ++sy)
      for (int sx = -1; sx <= 1; ++sx) {
        if (cell_bits(norm, cx + sx, fit.oy + sy) == 0) continue;
        for (int y = 0; y < kCellH; ++y)
          for (int x = 0; x < kCellW; ++x) cell[y * kCellW + x] = gray.at_or(cx + sx + x, fit.oy + sy + y, 0.0f);
        for (std::size_t t = 0; t < tmpl.size(); ++t)
          ranked[t].first = std::min(ranked[t].first, soft_distance(cell, tmpl[t].blurred));
      }
    std::partial_sort(ranked.begin(), ranked.begin() + kCandidates, ranked.end());

    // Settle on the rendered footprint, with sub-pixel origin refinement.
    char best_c = '?';
    double best_d = 2.0;
    const double x0 = fit.fx + cx * s, y0 = fit.fy + fit.oy * s;
    for (int k = 0; k < kCandidates; ++k) {
      const auto& t = tmpl[ranked[k].second];
      // Coarse quarter-pixel grid, then a sixteenth-pixel pass around its best.
      double d_t = 2.0, bx = 0.0, by = 0.0;
      for (int qy = -4; qy <= 4; ++qy)
        for (int qx = -4; qx <= 4; ++qx) {
          const double d = footprint_distance(strip, t.bits, s, x0 + qx * s / 4.0, y0 + qy * s / 4.0);
          if (d < d_t) {
            d_t = d;
            bx = qx * s / 4.0;
            by = qy * s / 4.0;
          }
        }
      for (int qy = -3; qy <= 3 && d_t > 0.0; ++qy)
        for (int qx = -3; qx <= 3; ++qx)
          d_t = std::min(d_t, footprint_distance(strip, t.bits, s, x0 + bx + qx * s / 16.0,
                                                 y0 + by + qy * s / 16.0));
      if (d_t < best_d) {
        best_d = d_t;
        best_c = t.c;
      }
    }
    out += best_d > kRejectDistance ? '?' : best_c;
    dist_sum += std::min(best_d, 1.0);
    ++cells;
  }
  return std::string(trim_right(out));
}

struct Reading {
  std::string text;
  double fit = 2.0;  // mean glyph distance over inked cells
};

Reading read_page(const BinaryImage& image) {
  const auto bands = find_bands(image);
  if (bands.empty()) return {};

  std::vector<BinaryImage> strips;
  int h_lo = 32, h_hi = 2, tallest = 0;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const int above = i == 0 ? bands[i].top : (bands[i].top - bands[i - 1].bottom) / 2;
    const int below = i + 1 == bands.size() ? image.height() - bands[i].bottom
                                            : (bands[i + 1].top - bands[i].bottom + 1) / 2;
    const int top = bands[i].top - above, bottom = bands[i].bottom + below;
    strips.push_back(crop(image, {0, top, image.width(), bottom - top}, std::uint8_t{0}));
    const int core = bands[i].bottom - bands[i].top;
    tallest = std::max(tallest, core);
    if (core < 4) continue;
    h_lo = std::min(h_lo, std::max(2, core - 1));
    h_hi = std::max(h_hi, std::min(32, static_cast<int>(std::ceil(core * 8.0 / 5.0)) + 1));
  }
  const bool short_lines = h_lo > h_hi;
  if (short_lines) {
    h_lo = 2;
    h_hi = std::min(32, static_cast<int>(std::ceil(tallest * 8.0 / 5.0)) + 1);
  }

  // One letter height for the whole page; short lines cannot pin it alone.
  // Binary fits shortlist heights, the soft score settles near-ties.
  std::vector<std::pair<double, int>> ranked;
  std::map<int, std::vector<Fit>> fits;
  for (int h = h_lo; h <= h_hi; ++h) {
    long bad = 0, total = 0;
    for (const auto& strip : strips) {
      const Fit f = fit_line(strip, h);
      bad += f.bad;
      total += f.total;
      fits[h].push_back(f);
    }
    ranked.emplace_back(total == 0 ? 2.0 : static_cast<double>(bad) / static_cast<double>(total), h);
  }
  std::sort(ranked.begin(), ranked.end());
  // Without a line tall enough to resolve strokes, a poor fit means nothing
  // on the page is legible.
  if (short_lines && ranked.front().first > kRejectDistance) return {};
  int best_h = ranked.front().second;
  double best_soft = 3.0;
  for (const auto& [ratio, h] : ranked) {
    if (ratio > ranked.front().first + kShortlistMargin) break;
    double diff = 0.0, uni = 0.0;
    for (std::size_t i = 0; i < strips.size(); ++i) soft_score(strips[i], fits[h][i], diff, uni);
    const double soft = uni == 0.0 ? 2.0 : diff / uni;
    if (soft < best_soft) {
      best_soft = soft;
      best_h = h;
    }
  }

  struct Line {
    std::string text;
    double left_px;
  };
  std::vector<Line> lines;
  const double pitch = kCellW * best_h / 8.0;
  double dist_sum = 0.0;
  long cells = 0;
  for (std::size_t i = 0; i < strips.size(); ++i) {
    const Fit& f = fits[best_h][i];
    if (f.total == 0) continue;
    std::string text = decode_line(strips[i], f, dist_sum, cells);
    if (trim(text).empty()) continue;
    lines.push_back({std::move(text), f.fx + f.ox * best_h / 8.0});
  }
  if (lines.empty()) return {};
  double left = lines.front().left_px;
  for (const auto& l : lines) left = std::min(left, l.left_px);
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto lead = static_cast<std::size_t>(std::lround((lines[i].left_px - left) / pitch));
    if (i) out += '\n';
    out += std::string(lead, ' ') + lines[i].text;
  }
  return {std::move(out), cells == 0 ? 2.0 : dist_sum / static_cast<double>(cells)};
}

/// Keeps ink whose right and lower neighbours are also ink.
BinaryImage erode(const BinaryImage& image) {
  BinaryImage out(image.width(), image.height(), 0);
  for (int y = 0; y + 1 < image.height(); ++y)
    for (int x = 0; x + 1 < image.width(); ++x)
      out(x, y) = image(x, y) && image(x + 1, y) && image(x, y + 1);
  return out;
}

}  // namespace

std::string recognize_mock(const BinaryImage& image) {
  if (image.empty()) return "";
  Reading best = read_page(image);
  // Strokes grown by reconstruction or blur fit badly; try them thinned.
  if (best.fit > kBoldFit) {
    Reading thin = read_page(erode(image));
    if (!thin.text.empty() && thin.fit < best.fit) best = std::move(thin);
  }
  return best.text;
}

std::string correct_words(const std::string& text, const std::vector<std::string>& dictionary) {
  if (dictionary.empty()) return text;
  std::string out;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    if (line_no++) out += '\n';
    bool first = true;
    for (const auto& word : split_words(line)) {
      std::string best = word;
      if (std::find(dictionary.begin(), dictionary.end(), word) == dictionary.end()) {
        std::size_t best_d = 3;
        for (const auto& entry : dictionary) {
          const auto d = levenshtein(word, entry);
          if (d < best_d) {
            best_d = d;
            best = entry;
          }
        }
      }
      if (!first) out += ' ';
      out += best;
      first = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// HTTP backends

std::string encode_request(const BinaryImage& image, const OcrBackend& backend) {
  const auto png = io::encode_png(image);
  if (backend.kind == BackendKind::kDedicatedHttp) return {png.begin(), png.end()};
  if (backend.kind != BackendKind::kLlmHttp) throw ConfigError("mock backend sends no request");
  nlohmann::json body = {
      {"model", backend.model},
      {"temperature", 0},
      {"messages",
       nlohmann::json::array(
           {{{"role", "user"},
             {"content",
              nlohmann::json::array(
                  {{{"type", "text"}, {"text", backend.prompt}},
                   {{"type", "image_url"},
                    {"image_url", {{"url", "data:image/png;base64," + io::base64(png)}}}}})}}})}};
  return body.dump();
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("malformed endpoint '" + url + "'");
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

std::string parse_llm_reply(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    std::string text;
    for (const auto& part : content)
      if (part.value("type", "") == "text") text += part.at("text").get<std::string>();
    return text;
  } catch (const nlohmann::json::exception& e) {
    throw ResponseError(std::string("unexpected LLM reply: ") + e.what());
  }
}

OcrResult recognize_http(const BinaryImage& image, const OcrBackend& backend) {
  backend.validate();
  const char* token = std::getenv(backend.auth_env.c_str());
  if (token == nullptr || *token == '\0')
    throw ConfigError("credentials missing: set " + backend.auth_env);
  const auto ep = parse_endpoint(backend.endpoint);
  const std::string body = encode_request(image, backend);
  const std::string content_type =
      backend.kind == BackendKind::kLlmHttp ? "application/json" : "image/png";

  httplib::Client client(ep.origin);
  const auto sec = backend.timeout_ms / 1000, usec = (backend.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  const httplib::Headers headers{{"Authorization", std::string("Bearer ") + token}};

  const auto start = std::chrono::steady_clock::now();
  const auto res = client.Post(ep.path, headers, body, content_type);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  if (!res) throw BackendError("request to " + backend.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403)
    throw ConfigError("credentials rejected (HTTP " + std::to_string(res->status) + ")");
  if (res->status == 429 || res->status >= 500)
    throw BackendError("service error (HTTP " + std::to_string(res->status) + ")");
  if (res->status < 200 || res->status >= 300)
    throw ResponseError("request rejected (HTTP " + std::to_string(res->status) + ")");

  OcrResult out;
  out.backend = backend.label();
  out.request_bytes = body.size();
  out.response_latency_ms = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());
  out.text = backend.kind == BackendKind::kLlmHttp ? parse_llm_reply(res->body) : res->body;
  while (!out.text.empty() && (out.text.back() == '\n' || out.text.back() == '\r')) out.text.pop_back();
  return out;
}

}  // namespace

OcrResult recognize(const BinaryImage& image, const OcrBackend& backend) {
  if (image.empty()) throw Error("recognize: empty image");
  if (backend.kind != BackendKind::kMock) return recognize_http(image, backend);
  // The mock is local; no service latency to report.
  OcrResult out;
  out.backend = backend.label();
  out.text = correct_words(recognize_mock(image), backend.dictionary);
  out.request_bytes = io::encode_png(image).size();
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

ErrorRates edit_metrics(const std::string& reference, const std::string& hypothesis) {
  if (reference.empty()) throw Error("edit_metrics: empty reference");
  ErrorRates r;
  r.char_edits = levenshtein(reference, hypothesis);
  r.ref_chars = reference.size();
  const auto ref_words = split_words(reference);
  r.word_edits = levenshtein(ref_words, split_words(hypothesis));
  r.ref_words = ref_words.size();
  r.cer = static_cast<double>(r.char_edits) / static_cast<double>(r.ref_chars);
  r.wer = r.ref_words ? static_cast<double>(r.word_edits) / static_cast<double>(r.ref_words) : 0.0;
  return r;
}

ErrorRates pool(const std::vector<ErrorRates>& rates) {
  ErrorRates out;
  for (const auto& r : rates) {
    out.word_edits += r.word_edits;
    out.char_edits += r.char_edits;
    out.ref_words += r.ref_words;
    out.ref_chars += r.ref_chars;
  }
  if (out.ref_chars) out.cer = static_cast<double>(out.char_edits) / static_cast<double>(out.ref_chars);
  if (out.ref_words) out.wer = static_cast<double>(out.word_edits) / static_cast<double>(out.ref_words);
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

BinaryImage render_at_height(const std::string& text, int height_px) {
  if (height_px < 2) throw Error("letter height must be at least 2 px");
  const int nominal = BitmapFont::kNominalHeight;
  const int scale = std::max(1, (height_px + nominal - 1) / nominal);
  synth::PageLayout layout;
  layout.line_spacing_px = 4 * scale;
  const auto page = synth::render_text_page(text, BitmapFont::builtin(scale), layout);
  if (height_px == nominal * scale) return page.truth.binary;
  // Pad so the resample ratio is exactly height_px / (nominal * scale).
  const int src = nominal * scale;
  const int step = height_px / std::gcd(height_px, src);
  auto out_len = [&](int n) {
    const int len = (n * height_px + src - 1) / src;
    return (len + step - 1) / step * step;
  };
  const int w = out_len(page.page.width());
  const int h = out_len(page.page.height());
  GrayImage padded(w * src / height_px, h * src / height_px, 1.0f);
  for (int y = 0; y < page.page.height(); ++y)
    for (int x = 0; x < page.page.width(); ++x) padded(x, y) = page.page(x, y);
  // Half-covered pixels count as ink so thin strokes survive any phase.
  return threshold_dark(resize_area(padded, w, h), 0.5f + 1e-4f);
}

std::map<int, SweepEntry> letter_height_sweep(const std::string& text,
                                              const std::vector<int>& heights_px,
                                              const OcrBackend& backend) {
  for (int h : heights_px)
    if (h < 2) throw Error("letter heights must be >= 2 px");
  std::map<int, SweepEntry> out;
  for (int h : heights_px) {
    SweepEntry entry;
    try {
      const auto img = render_at_height(text, h);
      const auto res = recognize(img, backend);
      entry.rates = edit_metrics(text, res.text);
      entry.request_bytes = res.request_bytes;
      entry.latency_ms = res.response_latency_ms;
    } catch (const Error& e) {
      entry.error = e.what();
    }
    out[h] = std::move(entry);
  }
  return out;
}

std::map<std::string, ClassDelta> coherence_compare(
    const std::map<std::string, std::vector<CoherenceSample>>& classes,
    const std::pair<OcrBackend, OcrBackend>& backends) {
  std::map<std::string, ClassDelta> out;
  for (const auto& [name, samples] : classes) {
    std::vector<ErrorRates> a, b;
    for (const auto& s : samples) {
      const auto page = synth::render_text_page(s.page_text(), BitmapFont::builtin(1), {});
      a.push_back(edit_metrics(s.reference, recognize(page.truth.binary, backends.first).text));
      b.push_back(edit_metrics(s.reference, recognize(page.truth.binary, backends.second).text));
    }
    ClassDelta d;
    d.dedicated = pool(a);
    d.llm = pool(b);
    d.d_cer = d.dedicated.cer - d.llm.cer;
    if (name != kRandomCharsClass) d.d_wer = d.dedicated.wer - d.llm.wer;
    out[name] = d;
  }
  return out;
}

AngularResolution angular_resolution(int sensor_px, double fov_deg, double distance_m,
                                     double letter_height_m) {
  if (sensor_px <= 0 || !(fov_deg > 0) || !(distance_m > 0) || !(letter_height_m > 0))
    throw Error("angular_resolution: all inputs must be positive");
  AngularResolution r;
  r.px_per_deg = sensor_px / fov_deg;
  r.letter_angle_deg = std::atan(letter_height_m / distance_m) * 180.0 / std::numbers::pi;
  r.px_per_letter = r.px_per_deg * r.letter_angle_deg;
  return r;
}

std::string format_report(const std::vector<ReportRow>& rows) {
  std::string out = "class_or_height,backend,wer,cer,bytes,latency_ms\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows)
    out += r.key + ',' + r.backend + ',' + opt(r.wer) + ',' + opt(r.cer) + ',' +
           std::to_string(r.bytes) + ',' + std::to_string(r.latency_ms) + '\n';
  return out;
}

std::vector<ReportRow> sweep_rows(const std::map<int, SweepEntry>& sweep, const std::string& backend) {
  std::vector<ReportRow> rows;
  for (const auto& [h, e] : sweep) {
    ReportRow r{std::to_string(h), backend, std::nullopt, std::nullopt, e.request_bytes, e.latency_ms};
    if (e.rates) {
      r.wer = e.rates->wer;
      r.cer = e.rates->cer;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace evocr::ocr
