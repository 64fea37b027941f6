#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evocr/events.hpp"
#include "evocr/ocr.hpp"
#include "evocr/recon.hpp"
#include "evocr/scene.hpp"
#include "evocr/shaping.hpp"
#include "evocr/stitch.hpp"

namespace evocr::pipeline {

/// Invalid or unknown config keys, bad values, missing referenced paths.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SceneConfig {
  std::string text;  // inline text; "\n" in the config value breaks lines
  std::filesystem::path text_file;
  int font_scale = 2;
  int margin_px = 8;
  int line_spacing_px = 8;
  int max_width_px = 0;
  double contrast = 1.0;
  double noise_sigma = 0.0;
  double blur_px = 0.0;
  double warp = 0.0;  // random_homography magnitude
  double wpm = 250.0;
  double jitter_px = 1.0;
  double head_translation_px = 1.0;
  double head_rotation_rad = 0.0;
  double head_depth = 0.0;
  double head_cutoff_hz = 2.0;
  int sensor_w = 1280;
  int sensor_h = 720;
  double focal_px = 1000.0;
  double fps = 1000.0;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";
  SceneConfig scene;
  events::SimParams sim;
  shaping::FoveationConfig foveation;
  std::size_t stride = shaping::kDefaultStride;
  /// Frames whose window origin moved further than this during their event
  /// window are dropped.
  int max_shift_px = 4;
  recon::ReconConfig recon;
  std::filesystem::path weights;
  stitch::StitchParams stitch;
  stitch::SaccadeParams saccade;
  ocr::OcrBackend ocr;
  /// Exact bytes the config was parsed from.
  std::string source;

  /// Throws ConfigError on out-of-range values or missing files.
  void validate() const;
  /// Scene text with the file source resolved.
  std::string page_text() const;
};

/// Parses `section.key = value` lines; lines starting with '#' are comments. Relative paths
/// resolve against `base_dir`. Throws ConfigError on unknown or repeated keys
/// and validates the result.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
PipelineConfig load_config(const std::filesystem::path& path);

/// Every recognised key, as `section.key`.
const std::vector<std::string>& config_keys();

enum class Stage { kSynth, kEvents, kFoveate, kReconstruct, kStitch, kOcr, kReport };
inline constexpr std::array<Stage, 7> kStages{Stage::kSynth,       Stage::kEvents, Stage::kFoveate,
                                              Stage::kReconstruct, Stage::kStitch, Stage::kOcr,
                                              Stage::kReport};
std::string to_string(Stage stage);
Stage parse_stage(const std::string& name);

/// Output file names inside the run directory.
namespace files {
inline constexpr const char* kConfig = "config.txt";
inline constexpr const char* kPage = "page.pgm";
inline constexpr const char* kTruth = "truth.pbm";
inline constexpr const char* kTruthText = "truth.txt";
inline constexpr const char* kGaze = "gaze.csv";
inline constexpr const char* kHead = "head.csv";
inline constexpr const char* kEvents = "events.evt1";
inline constexpr const char* kSensorGaze = "gaze_sensor.csv";
inline constexpr const char* kFoveated = "foveated.evt1";
inline constexpr const char* kOrigins = "origins.csv";
inline constexpr const char* kBinaryStream = "binary_stream.pbm.gz";
inline constexpr const char* kFrames = "frames.csv";
inline constexpr const char* kStitched = "page.png";
inline constexpr const char* kPlacements = "placements.csv";
inline constexpr const char* kOcrText = "ocr.txt";
inline constexpr const char* kOcrMeta = "ocr_meta.csv";
inline constexpr const char* kLedger = "ledger.csv";
inline constexpr const char* kReport = "report.csv";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace files

/// Ledger stage names.
inline constexpr const char* kLedgerRawEvents = "raw_events";
inline constexpr const char* kLedgerFoveated = "foveated_events";
inline constexpr const char* kLedgerBinary = "binary_stream";
inline constexpr const char* kLedgerStitched = "stitched_page";

struct Artifact {
  std::string path;  // relative to the run directory
  std::uint64_t bytes = 0;
  std::string sha256;
};

struct StageRecord {
  Stage stage = Stage::kSynth;
  std::vector<Artifact> artifacts;
  double wall_ms = 0.0;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitStage = 3;
inline constexpr int kExitBackend = 4;

struct RunManifest {
  std::string config_sha256;
  std::uint64_t seed = 0;
  std::vector<StageRecord> stages;
  std::optional<Stage> failed_stage;
  std::string error;
  int exit_code = kExitOk;
  std::optional<ocr::ErrorRates> rates;
  shaping::BandwidthLedger ledger;

  std::string to_json() const;
};

/// Runs one stage against the run directory: reads the artifacts of earlier
/// stages from disk and writes its own. Throws on failure.
StageRecord run_stage(const PipelineConfig& cfg, Stage stage);

/// All stages in order, then manifest.json. Failures are caught and recorded;
/// the manifest's exit code is 0 only if every stage succeeded.
RunManifest run_pipeline(const PipelineConfig& cfg);

/// Exit code for an exception raised by `stage`.
int exit_code_for(Stage stage, const std::exception& e);

/// Ledger from the artifacts present in `run_dir`; stages without a file are
/// left out.
shaping::BandwidthLedger ledger_from_run(const std::filesystem::path& run_dir);

}  // namespace evocr::pipeline
