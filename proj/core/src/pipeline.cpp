#include "evocr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "evocr/font.hpp"
#include "evocr/io.hpp"
#include "evocr/text_util.hpp"

#include <json.hpp>

namespace evocr::pipeline {

namespace fs = std::filesystem;

namespace {

using Setter = std::function<void(PipelineConfig&, const std::string&, const fs::path&)>;

int to_int(const std::string& v) {
  const auto n = parse_i64(v);
  if (n < INT_MIN || n > INT_MAX) throw Error("integer out of range: " + v);
  return static_cast<int>(n);
}

fs::path resolve(const std::string& v, const fs::path& base) {
  const fs::path p(v);
  return p.is_absolute() ? p : base / p;
}

std::string unescape(const std::string& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == '\\' && i + 1 < v.size()) {
      const char n = v[++i];
      if (n == 'n') out += '\n';
      else if (n == '\\') out += '\\';
      else throw Error(std::string("unknown escape \\") + n);
    } else {
      out += v[i];
    }
  }
  return out;
}

#define EVOCR_INT(field) [](PipelineConfig& c, const std::string& v, const fs::path&) { c.field = to_int(v); }
#define EVOCR_DBL(field) [](PipelineConfig& c, const std::string& v, const fs::path&) { c.field = parse_double(v); }
#define EVOCR_U64(field) [](PipelineConfig& c, const std::string& v, const fs::path&) { c.field = parse_u64(v); }
#define EVOCR_STR(field) [](PipelineConfig& c, const std::string& v, const fs::path&) { c.field = v; }
#define EVOCR_PATH(field) \
  [](PipelineConfig& c, const std::string& v, const fs::path& b) { c.field = resolve(v, b); }

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"run.seed", EVOCR_U64(seed)},
      {"run.output_dir", EVOCR_PATH(output_dir)},
      {"scene.text", [](PipelineConfig& c, const std::string& v, const fs::path&) { c.scene.text = unescape(v); }},
      {"scene.text_file", EVOCR_PATH(scene.text_file)},
      {"scene.font_scale", EVOCR_INT(scene.font_scale)},
      {"scene.margin_px", EVOCR_INT(scene.margin_px)},
      {"scene.line_spacing_px", EVOCR_INT(scene.line_spacing_px)},
      {"scene.max_width_px", EVOCR_INT(scene.max_width_px)},
      {"scene.contrast", EVOCR_DBL(scene.contrast)},
      {"scene.noise_sigma", EVOCR_DBL(scene.noise_sigma)},
      {"scene.blur_px", EVOCR_DBL(scene.blur_px)},
      {"scene.warp", EVOCR_DBL(scene.warp)},
      {"scene.wpm", EVOCR_DBL(scene.wpm)},
      {"scene.jitter_px", EVOCR_DBL(scene.jitter_px)},
      {"scene.head_translation_px", EVOCR_DBL(scene.head_translation_px)},
      {"scene.head_rotation_rad", EVOCR_DBL(scene.head_rotation_rad)},
      {"scene.head_depth", EVOCR_DBL(scene.head_depth)},
      {"scene.head_cutoff_hz", EVOCR_DBL(scene.head_cutoff_hz)},
      {"scene.sensor_w", EVOCR_INT(scene.sensor_w)},
      {"scene.sensor_h", EVOCR_INT(scene.sensor_h)},
      {"scene.focal_px", EVOCR_DBL(scene.focal_px)},
      {"scene.fps", EVOCR_DBL(scene.fps)},
      {"sim.contrast_threshold", EVOCR_DBL(sim.contrast_threshold)},
      {"sim.threshold_sigma", EVOCR_DBL(sim.threshold_sigma)},
      {"sim.refractory_us", EVOCR_U64(sim.refractory_us)},
      {"sim.log_eps", EVOCR_DBL(sim.log_eps)},
      {"foveation.window_w", EVOCR_INT(foveation.window_w)},
      {"foveation.window_h", EVOCR_INT(foveation.window_h)},
      {"foveation.stride", EVOCR_U64(stride)},
      {"foveation.max_shift_px", EVOCR_INT(max_shift_px)},
      {"foveation.interpolation",
       [](PipelineConfig& c, const std::string& v, const fs::path&) {
         if (v == "step") c.foveation.interpolation = synth::Interpolation::kStep;
         else if (v == "linear") c.foveation.interpolation = synth::Interpolation::kLinear;
         else throw Error("expected step or linear, got '" + v + "'");
       }},
      {"recon.mode",
       [](PipelineConfig& c, const std::string& v, const fs::path&) {
         if (v == "baseline") c.recon.mode = recon::Mode::kBaseline;
         else if (v == "learned") c.recon.mode = recon::Mode::kLearned;
         else throw Error("expected baseline or learned, got '" + v + "'");
       }},
      {"recon.weights", EVOCR_PATH(weights)},
      {"recon.threshold", [](PipelineConfig& c, const std::string& v,
                             const fs::path&) { c.recon.threshold = static_cast<float>(parse_double(v)); }},
      {"recon.decay", EVOCR_DBL(recon.baseline_decay)},
      {"recon.edge_threshold", EVOCR_DBL(recon.baseline_threshold)},
      {"recon.fill_gap_px", EVOCR_INT(recon.fill_gap_px)},
      {"recon.window_events", EVOCR_U64(recon.window_events)},
      {"stitch.search_radius_px", EVOCR_INT(stitch.search_radius_px)},
      {"stitch.min_overlap", EVOCR_DBL(stitch.min_overlap)},
      {"stitch.min_zncc", EVOCR_DBL(stitch.min_zncc)},
      {"stitch.local_window", EVOCR_INT(stitch.local_window)},
      {"stitch.tie_band", EVOCR_DBL(stitch.tie_band)},
      {"stitch.saccade_drop_frac", EVOCR_DBL(saccade.min_drop_frac)},
      {"stitch.saccade_max_ms", EVOCR_DBL(saccade.max_dur_ms)},
      {"stitch.saccade_min_drop_px", EVOCR_DBL(saccade.min_drop_px)},
      {"ocr.backend",
       [](PipelineConfig& c, const std::string& v, const fs::path&) { c.ocr.kind = ocr::parse_backend_kind(v); }},
      {"ocr.endpoint", EVOCR_STR(ocr.endpoint)},
      {"ocr.auth_env", EVOCR_STR(ocr.auth_env)},
      {"ocr.model", EVOCR_STR(ocr.model)},
      {"ocr.prompt", EVOCR_STR(ocr.prompt)},
      {"ocr.timeout_ms", EVOCR_INT(ocr.timeout_ms)},
  };
  return table;
}

#undef EVOCR_INT
#undef EVOCR_DBL
#undef EVOCR_U64
#undef EVOCR_STR
#undef EVOCR_PATH

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

// Independent streams per consumer from the single run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { kSeedWarp, kSeedGaze, kSeedHead, kSeedSim };

Artifact write_artifact(const fs::path& dir, const std::string& name, const io::Bytes& bytes) {
  io::write_file(dir / name, bytes);
  return {name, bytes.size(), io::sha256_hex(bytes)};
}

Artifact write_artifact(const fs::path& dir, const std::string& name, const std::string& text) {
  return write_artifact(dir, name, io::Bytes(text.begin(), text.end()));
}

io::Bytes read_input(const fs::path& dir, const std::string& name) {
  const fs::path p = dir / name;
  if (!fs::exists(p)) throw Error("missing input artifact " + p.string() + " (run the earlier stages first)");
  return io::read_file(p);
}

std::string read_input_text(const fs::path& dir, const std::string& name) {
  const auto b = read_input(dir, name);
  return {b.begin(), b.end()};
}

synth::CameraGeometry camera_for(const PipelineConfig& cfg, int page_w, int page_h) {
  synth::CameraGeometry cam;
  cam.sensor_w = cfg.scene.sensor_w;
  cam.sensor_h = cfg.scene.sensor_h;
  cam.focal_px = cfg.scene.focal_px;
  cam.page_cx = page_w / 2.0;
  cam.page_cy = page_h / 2.0;
  return cam;
}

shaping::FoveatedStream read_foveated(const fs::path& dir, const shaping::FoveationConfig& fcfg) {
  const auto stream = events::decode_evt1(read_input(dir, files::kFoveated));
  shaping::FoveatedStream fov;
  fov.window_w = fcfg.window_w;
  fov.window_h = fcfg.window_h;
  if (stream.sensor_w != fov.window_w || stream.sensor_h != fov.window_h)
    throw Error("foveated stream size does not match the configured window");
  fov.events = stream.events;
  fov.origins = shaping::parse_origin_trace(read_input_text(dir, files::kOrigins));
  return fov;
}

/// Largest coordinate range of the window origin over [t0, t1].
int origin_shift(const shaping::FoveatedStream& fov, std::uint64_t t0, std::uint64_t t1) {
  const auto first = fov.origin_at(t0);
  int x0 = first.x, x1 = first.x, y0 = first.y, y1 = first.y;
  auto it = std::upper_bound(fov.origins.begin(), fov.origins.end(), t0,
                             [](std::uint64_t t, const shaping::WindowOrigin& o) { return t < o.t_us; });
  for (; it != fov.origins.end() && it->t_us <= t1; ++it) {
    x0 = std::min(x0, it->x);
    x1 = std::max(x1, it->x);
    y0 = std::min(y0, it->y);
    y1 = std::max(y1, it->y);
  }
  return std::max(x1 - x0, y1 - y0);
}

std::string frames_csv(const std::vector<recon::BinaryFrame>& frames) {
  std::string out = "t_us,origin_x,origin_y\n";
  for (const auto& f : frames)
    out += std::to_string(f.t_us) + "," + std::to_string(f.origin_x) + "," + std::to_string(f.origin_y) + "\n";
  return out;
}

std::vector<recon::BinaryFrame> read_frames(const fs::path& dir) {
  const auto images = io::decode_pbm_stream(io::gunzip(read_input(dir, files::kBinaryStream)));
  const auto lines = split_lines(read_input_text(dir, files::kFrames));
  if (lines.empty() || lines.front() != "t_us,origin_x,origin_y") throw Error("frames.csv: bad header");
  if (lines.size() - 1 != images.size()) throw Error("frames.csv does not match the binary stream");
  std::vector<recon::BinaryFrame> frames(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto f = split(lines[i + 1], ',');
    if (f.size() != 3) throw Error("frames.csv: bad row " + std::to_string(i + 1));
    frames[i].pixels = images[i];
    frames[i].t_us = parse_u64(f[0]);
    frames[i].origin_x = static_cast<int>(parse_i64(f[1]));
    frames[i].origin_y = static_cast<int>(parse_i64(f[2]));
  }
  return frames;
}

StageRecord stage_synth(const PipelineConfig& cfg, const fs::path& dir) {
  const auto& s = cfg.scene;
  synth::PageLayout layout;
  layout.margins_px = s.margin_px;
  layout.line_spacing_px = s.line_spacing_px;
  layout.max_width_px = s.max_width_px;
  const auto rendered = synth::render_text_page(cfg.page_text(), BitmapFont::builtin(s.font_scale), layout);
  const int w = rendered.page.width(), h = rendered.page.height();

  synth::AugmentParams aug;
  aug.homography = s.warp > 0.0 ? synth::random_homography(w, h, s.warp, derive_seed(cfg.seed, kSeedWarp))
                                : Mat3::Identity();
  aug.contrast_scale = s.contrast;
  aug.noise_sigma = s.noise_sigma;
  aug.blur_radius_px = s.blur_px;
  aug.seed = derive_seed(cfg.seed, kSeedWarp);
  const auto page = synth::augment_page(rendered.page, rendered.truth, aug);

  synth::GazeParams gp;
  gp.reading_speed_wpm = s.wpm;
  gp.fixation_jitter_px = s.jitter_px;
  gp.seed = derive_seed(cfg.seed, kSeedGaze);
  const auto gaze = synth::simulate_gaze(page.truth, gp);

  synth::HeadMotionParams hp;
  hp.translation_px = s.head_translation_px;
  hp.rotation_rad = s.head_rotation_rad;
  hp.depth_frac = s.head_depth;
  hp.cutoff_hz = s.head_cutoff_hz;
  const auto head = synth::simulate_head_motion(gaze.end_us() - gaze.start_us() + 1000, hp, s.focal_px,
                                                derive_seed(cfg.seed, kSeedHead));

  StageRecord rec{Stage::kSynth, {}, 0.0};
  rec.artifacts.push_back(write_artifact(dir, files::kConfig, cfg.source));
  rec.artifacts.push_back(write_artifact(dir, files::kPage, io::encode_pgm(page.page)));
  rec.artifacts.push_back(write_artifact(dir, files::kTruth, io::encode_pbm(page.truth.binary)));
  rec.artifacts.push_back(write_artifact(dir, files::kTruthText, page.truth.text + "\n"));
  rec.artifacts.push_back(write_artifact(dir, files::kGaze, synth::format_gaze(gaze)));
  rec.artifacts.push_back(write_artifact(dir, files::kHead, synth::format_head_motion(head)));
  return rec;
}

StageRecord stage_events(const PipelineConfig& cfg, const fs::path& dir) {
  auto page = std::make_shared<const GrayImage>(io::decode_pgm(read_input(dir, files::kPage)));
  const auto gaze = synth::parse_gaze(read_input_text(dir, files::kGaze));
  const auto head = synth::parse_head_motion(read_input_text(dir, files::kHead));
  const auto cam = camera_for(cfg, page->width(), page->height());
  const auto frames = synth::render_sequence(page, gaze, head, cam, cfg.scene.fps);
  auto sim = cfg.sim;
  sim.seed = derive_seed(cfg.seed, kSeedSim);
  const auto stream = events::frames_to_events(frames, sim);
  StageRecord rec{Stage::kEvents, {}, 0.0};
  rec.artifacts.push_back(write_artifact(dir, files::kEvents, events::encode_evt1(stream)));
  return rec;
}

StageRecord stage_foveate(const PipelineConfig& cfg, const fs::path& dir) {
  const auto stream = events::decode_evt1(read_input(dir, files::kEvents));
  const auto page = io::decode_pgm(read_input(dir, files::kPage));
  const auto gaze = synth::parse_gaze(read_input_text(dir, files::kGaze));
  const auto head = synth::parse_head_motion(read_input_text(dir, files::kHead));
  const auto sensor_gaze = synth::project_gaze(gaze, head, camera_for(cfg, page.width(), page.height()));
  const auto fov = shaping::foveate(stream, sensor_gaze, cfg.foveation);
  StageRecord rec{Stage::kFoveate, {}, 0.0};
  rec.artifacts.push_back(write_artifact(dir, files::kSensorGaze, synth::format_gaze(sensor_gaze)));
  rec.artifacts.push_back(write_artifact(dir, files::kFoveated, events::encode_evt1(fov.as_event_stream())));
  rec.artifacts.push_back(write_artifact(dir, files::kOrigins, shaping::format_origin_trace(fov)));
  return rec;
}

StageRecord stage_reconstruct(const PipelineConfig& cfg, const fs::path& dir) {
  const auto fov = read_foveated(dir, cfg.foveation);
  std::optional<recon::ModelWeights> weights;
  if (cfg.recon.mode == recon::Mode::kLearned) weights = recon::load_weights(io::read_file(cfg.weights));

  std::vector<recon::BinaryFrame> frames;
  io::Bytes stream;
  for (std::size_t end : shaping::window_schedule(fov.events.size(), cfg.stride)) {
    if (end == 0) continue;
    const std::size_t begin = end > cfg.recon.window_events ? end - cfg.recon.window_events : 0;
    // A window spanning a saccade mixes two views of the page.
    if (origin_shift(fov, fov.events[begin].t_us, fov.events[end - 1].t_us) > cfg.max_shift_px) continue;
    recon::BinaryFrame f;
    if (weights) {
      f = recon::infer_binary(*weights, shaping::build_voxel_grid(fov, end, cfg.recon.window_events), cfg.recon);
      const auto o = fov.origin_at(f.t_us);
      f.origin_x = o.x;
      f.origin_y = o.y;
    } else {
      f = recon::reconstruct_baseline(fov, end, cfg.recon);
    }
    const auto pbm = io::encode_pbm(f.pixels);
    stream.insert(stream.end(), pbm.begin(), pbm.end());
    frames.push_back(std::move(f));
  }
  if (frames.empty()) throw Error("reconstruct: no usable event windows");
  StageRecord rec{Stage::kReconstruct, {}, 0.0};
  rec.artifacts.push_back(write_artifact(dir, files::kBinaryStream, io::gzip(stream)));
  rec.artifacts.push_back(write_artifact(dir, files::kFrames, frames_csv(frames)));
  return rec;
}

StageRecord stage_stitch(const PipelineConfig& cfg, const fs::path& dir) {
  const auto frames = read_frames(dir);
  const auto gaze = synth::parse_gaze(read_input_text(dir, files::kSensorGaze));
  auto segments = stitch::detect_saccades(gaze, cfg.saccade);
  std::vector<std::uint64_t> times;
  times.reserve(frames.size());
  for (const auto& f : frames) times.push_back(f.t_us);
  stitch::assign_frames(segments, times);
  const auto result = stitch::stitch_frames(frames, segments, cfg.stitch);
  if (result.page.empty()) throw Error("stitch: no ink in any line canvas");
  StageRecord rec{Stage::kStitch, {}, 0.0};
  rec.artifacts.push_back(write_artifact(dir, files::kStitched, io::encode_png(result.page)));
  rec.artifacts.push_back(write_artifact(dir, files::kPlacements, stitch::format_placement_log(result.log)));
  return rec;
}

StageRecord stage_ocr(const PipelineConfig& cfg, const fs::path& dir) {
  const auto page = io::decode_png(read_input(dir, files::kStitched));
  const auto res = ocr::recognize(page, cfg.ocr);
  StageRecord rec{Stage::kOcr, {}, 0.0};
  rec.artifacts.push_back(write_artifact(dir, files::kOcrText, res.text + "\n"));
  rec.artifacts.push_back(write_artifact(dir, files::kOcrMeta,
                                         "backend,request_bytes,latency_ms\n" + res.backend + "," +
                                             std::to_string(res.request_bytes) + "," +
                                             std::to_string(res.response_latency_ms) + "\n"));
  return rec;
}

std::string strip_final_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

struct OcrMeta {
  std::string backend;
  std::uint64_t request_bytes = 0;
  std::uint64_t latency_ms = 0;
};

OcrMeta read_ocr_meta(const fs::path& dir) {
  const auto lines = split_lines(read_input_text(dir, files::kOcrMeta));
  if (lines.size() != 2) throw Error("ocr_meta.csv: expected one row");
  const auto f = split(lines[1], ',');
  if (f.size() != 3) throw Error("ocr_meta.csv: bad row");
  return {f[0], parse_u64(f[1]), parse_u64(f[2])};
}

ocr::ErrorRates run_rates(const fs::path& dir) {
  const auto truth = strip_final_newline(read_input_text(dir, files::kTruthText));
  const auto hyp = strip_final_newline(read_input_text(dir, files::kOcrText));
  return ocr::edit_metrics(truth, hyp);
}

StageRecord stage_report(const PipelineConfig&, const fs::path& dir) {
  const auto ledger = ledger_from_run(dir);
  const auto rates = run_rates(dir);
  const auto meta = read_ocr_meta(dir);
  ocr::ReportRow row{"page", meta.backend, rates.wer, rates.cer, meta.request_bytes, meta.latency_ms};
  StageRecord rec{Stage::kReport, {}, 0.0};
  rec.artifacts.push_back(write_artifact(dir, files::kLedger, ledger.to_csv()));
  rec.artifacts.push_back(write_artifact(dir, files::kReport, ocr::format_report({row})));
  return rec;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

std::string PipelineConfig::page_text() const {
  if (!scene.text_file.empty()) return strip_final_newline(io::read_text(scene.text_file));
  return scene.text;
}

void PipelineConfig::validate() const {
  const auto& s = scene;
  require(s.text.empty() != s.text_file.empty(), "exactly one of scene.text and scene.text_file must be set");
  if (!s.text_file.empty()) require(fs::is_regular_file(s.text_file), "scene.text_file not found: " + s.text_file.string());
  require(s.font_scale >= 1 && s.font_scale <= 8, "scene.font_scale must lie in [1, 8]");
  require(s.margin_px >= 0 && s.line_spacing_px >= 0 && s.max_width_px >= 0, "scene layout values must be >= 0");
  require(s.contrast > 0.0 && s.contrast <= 1.0, "scene.contrast must lie in (0, 1]");
  require(s.noise_sigma >= 0.0 && s.blur_px >= 0.0 && s.warp >= 0.0, "scene noise, blur and warp must be >= 0");
  require(s.wpm > 0.0, "scene.wpm must be > 0");
  require(s.jitter_px >= 0.0, "scene.jitter_px must be >= 0");
  require(s.head_translation_px >= 0.0 && s.head_rotation_rad >= 0.0 && s.head_depth >= 0.0,
          "head motion magnitudes must be >= 0");
  require(s.head_cutoff_hz > 0.0, "scene.head_cutoff_hz must be > 0");
  require(s.sensor_w >= synth::kMinSensorWidth && s.sensor_h >= synth::kMinSensorHeight,
          "sensor must be at least 200x100");
  require(s.focal_px > 0.0, "scene.focal_px must be > 0");
  require(s.fps >= 100.0 && s.fps <= 10000.0, "scene.fps must lie in [100, 10000]");
  try {
    sim.validate();
    recon.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  require(foveation.window_w >= 1 && foveation.window_h >= 1 && foveation.window_w <= s.sensor_w &&
              foveation.window_h <= s.sensor_h,
          "foveation window must fit the sensor");
  require(stride >= 1, "foveation.stride must be >= 1");
  require(max_shift_px >= 0, "foveation.max_shift_px must be >= 0");
  if (recon.mode == recon::Mode::kLearned) {
    require(!weights.empty(), "recon.weights is required in learned mode");
    require(fs::is_regular_file(weights), "recon.weights not found: " + weights.string());
    require(foveation.window_w == shaping::kWindowWidth && foveation.window_h == shaping::kWindowHeight,
            "learned reconstruction needs the 200x100 window");
  } else if (!weights.empty()) {
    require(fs::is_regular_file(weights), "recon.weights not found: " + weights.string());
  }
  require(stitch.search_radius_px >= 0, "stitch.search_radius_px must be >= 0");
  require(stitch.min_overlap > 0.0 && stitch.min_overlap <= 1.0, "stitch.min_overlap must lie in (0, 1]");
  require(stitch.local_window >= 3 && stitch.local_window % 2 == 1, "stitch.local_window must be odd and >= 3");
  require(stitch.tie_band >= 0.0, "stitch.tie_band must be >= 0");
  require(saccade.min_drop_frac > 0.0 && saccade.max_dur_ms > 0.0 && saccade.min_drop_px >= 0.0,
          "saccade parameters out of range");
  const fs::path parent = output_dir.has_parent_path() ? output_dir.parent_path() : fs::path(".");
  require(fs::is_directory(parent), "run.output_dir parent does not exist: " + parent.string());
  if (ocr.kind != ocr::BackendKind::kMock) {
    try {
      ocr.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
}

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  PipelineConfig cfg;
  cfg.source = text;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    const auto line = std::string(trim(raw));
    if (line.empty() || line.front() == '#') continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected section.key = value");
    const auto key = std::string(trim(std::string_view(line).substr(0, eq)));
    const auto value = std::string(trim(std::string_view(line).substr(eq + 1)));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "repeated key '" + key + "'");
    try {
      it->second(cfg, value, base_dir);
    } catch (const Error& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  if (cfg.ocr.kind == ocr::BackendKind::kDedicatedHttp && !seen.contains("ocr.auth_env")) cfg.ocr.auth_env = "OCR_API_KEY";
  if (cfg.ocr.kind == ocr::BackendKind::kLlmHttp && !seen.contains("ocr.auth_env")) cfg.ocr.auth_env = "LLM_API_KEY";
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config not found: " + path.string());
  const auto base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return parse_config(io::read_text(path), base);
}

// ---------------------------------------------------------------------------
// Stages

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::kSynth: return "synth";
    case Stage::kEvents: return "events";
    case Stage::kFoveate: return "foveate";
    case Stage::kReconstruct: return "reconstruct";
    case Stage::kStitch: return "stitch";
    case Stage::kOcr: return "ocr";
    case Stage::kReport: return "report";
  }
  return "?";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : kStages)
    if (to_string(s) == name) return s;
  throw Error("unknown stage '" + name + "'");
}

StageRecord run_stage(const PipelineConfig& cfg, Stage stage) {
  const fs::path& dir = cfg.output_dir;
  fs::create_directories(dir);
  const auto start = std::chrono::steady_clock::now();
  StageRecord rec;
  switch (stage) {
    case Stage::kSynth: rec = stage_synth(cfg, dir); break;
    case Stage::kEvents: rec = stage_events(cfg, dir); break;
    case Stage::kFoveate: rec = stage_foveate(cfg, dir); break;
    case Stage::kReconstruct: rec = stage_reconstruct(cfg, dir); break;
    case Stage::kStitch: rec = stage_stitch(cfg, dir); break;
    case Stage::kOcr: rec = stage_ocr(cfg, dir); break;
    case Stage::kReport: rec = stage_report(cfg, dir); break;
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

int exit_code_for(Stage stage, const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (stage == Stage::kOcr && (dynamic_cast<const ocr::BackendError*>(&e) ||
                               dynamic_cast<const ocr::ConfigError*>(&e) ||
                               dynamic_cast<const ocr::ResponseError*>(&e)))
    return kExitBackend;
  return kExitStage;
}

RunManifest run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const fs::path& dir = cfg.output_dir;
  fs::create_directories(dir);
  RunManifest m;
  m.config_sha256 = io::sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(cfg.source.data()),
                                             cfg.source.size()));
  m.seed = cfg.seed;
  for (Stage stage : kStages) {
    try {
      m.stages.push_back(run_stage(cfg, stage));
    } catch (const std::exception& e) {
      m.failed_stage = stage;
      m.error = e.what();
      m.exit_code = exit_code_for(stage, e);
      break;
    }
  }
  m.ledger = ledger_from_run(dir);
  if (!m.failed_stage) m.rates = run_rates(dir);
  io::write_text(dir / files::kManifest, m.to_json());
  return m;
}

shaping::BandwidthLedger ledger_from_run(const fs::path& dir) {
  shaping::BandwidthLedger ledger;
  const std::pair<const char*, const char*> stages[] = {{kLedgerRawEvents, files::kEvents},
                                                         {kLedgerFoveated, files::kFoveated},
                                                         {kLedgerBinary, files::kBinaryStream},
                                                         {kLedgerStitched, files::kStitched}};
  for (const auto& [name, file] : stages)
    if (fs::exists(dir / file)) ledger.record(name, fs::file_size(dir / file));
  return ledger;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["config_sha256"] = config_sha256;
  j["seed"] = seed;
  j["exit_code"] = exit_code;
  j["failed_stage"] = failed_stage ? nlohmann::ordered_json(to_string(*failed_stage)) : nullptr;
  if (!error.empty()) j["error"] = error;
  auto stages_j = nlohmann::ordered_json::array();
  for (const auto& s : stages) {
    nlohmann::ordered_json sj;
    sj["stage"] = to_string(s.stage);
    sj["wall_ms"] = s.wall_ms;
    auto arts = nlohmann::ordered_json::array();
    for (const auto& a : s.artifacts) arts.push_back({{"path", a.path}, {"bytes", a.bytes}, {"sha256", a.sha256}});
    sj["artifacts"] = arts;
    stages_j.push_back(sj);
  }
  j["stages"] = stages_j;
  auto led = nlohmann::ordered_json::array();
  for (const auto& [stage, bytes] : ledger.stages()) {
    const auto r = ledger.reduction(stage);
    led.push_back({{"stage", stage}, {"bytes", bytes}, {"reduction_factor", r.den == 0 ? -1.0 : r.value()}});
  }
  j["ledger"] = {{"reference_bytes", ledger.reference_bytes()}, {"stages", led}};
  if (rates) {
    j["wer"] = rates->wer;
    j["cer"] = rates->cer;
  } else {
    j["wer"] = nullptr;
    j["cer"] = nullptr;
  }
  return j.dump(2) + "\n";
}

}  // namespace evocr::pipeline
