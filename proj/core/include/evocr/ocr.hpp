#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evocr/font.hpp"
#include "evocr/image.hpp"

namespace evocr::ocr {

enum class BackendKind { kMock, kDedicatedHttp, kLlmHttp };

std::string to_string(BackendKind kind);
BackendKind parse_backend_kind(const std::string& s);

inline constexpr const char* kDefaultLlmPrompt =
    "Transcribe all text in this image exactly. Output only the text.";

struct OcrBackend {
  BackendKind kind = BackendKind::kMock;
  std::string name;      // report label; defaults to the kind
  std::string endpoint;  // http(s)://host[:port]/path
  std::string auth_env;  // variable holding the bearer token
  std::string prompt = kDefaultLlmPrompt;
  std::string model = "gpt-4o";
  int timeout_ms = 30000;
  /// Mock only. Non-empty enables word-list post-correction.
  std::vector<std::string> dictionary;

  static OcrBackend mock();
  static OcrBackend dedicated_http(std::string endpoint);
  static OcrBackend llm_http(std::string endpoint);

  std::string label() const;
  void validate() const;
};

struct OcrResult {
  std::string text;
  std::string backend;
  std::uint64_t request_bytes = 0;
  std::uint64_t response_latency_ms = 0;
};

/// Missing endpoint, credentials or similar; not worth retrying.
class ConfigError : public Error {
 public:
  using Error::Error;
};
/// Network failure, timeout or server-side error; retryable.
class BackendError : public Error {
 public:
  using Error::Error;
};
/// The service answered but the reply was unusable.
class ResponseError : public Error {
 public:
  using Error::Error;
};

OcrResult recognize(const BinaryImage& image, const OcrBackend& backend);

/// Template-matching recognizer over the built-in font's nominal glyphs.
/// Handles any letter height from 2 to 32 px by normalising each text line.
std::string recognize_mock(const BinaryImage& image);

/// Replaces each word missing from `dictionary` by its nearest entry within
/// edit distance 2 (first entry wins ties).
std::string correct_words(const std::string& text, const std::vector<std::string>& dictionary);

/// Request body the HTTP backends send for `image`.
std::string encode_request(const BinaryImage& image, const OcrBackend& backend);

// ---------------------------------------------------------------------------
// Metrics

struct ErrorRates {
  double wer = 0.0;
  double cer = 0.0;
  std::size_t word_edits = 0;
  std::size_t char_edits = 0;
  std::size_t ref_words = 0;
  std::size_t ref_chars = 0;
};

template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Case-sensitive character and whitespace-token edit rates. Throws on an
/// empty reference.
ErrorRates edit_metrics(const std::string& reference, const std::string& hypothesis);

/// Pooled rates: total edits over total reference length.
ErrorRates pool(const std::vector<ErrorRates>& rates);

// ---------------------------------------------------------------------------
// Experiments

struct SweepEntry {
  std::optional<ErrorRates> rates;
  std::string error;  // set when the backend failed for this height
  std::uint64_t request_bytes = 0;
  std::uint64_t latency_ms = 0;
};

/// Renders `text` with its glyph cells `height` px tall (integer font scale,
/// area-downsampled when the height is not a multiple of the nominal 8 px).
BinaryImage render_at_height(const std::string& text, int height_px);

std::map<int, SweepEntry> letter_height_sweep(const std::string& text,
                                              const std::vector<int>& heights_px,
                                              const OcrBackend& backend);

struct CoherenceSample {
  std::string reference;
  std::string rendered;  // text drawn on the page; defaults to the reference

  const std::string& page_text() const { return rendered.empty() ? reference : rendered; }
};

inline constexpr const char* kRandomCharsClass = "random_chars";

struct ClassDelta {
  std::optional<double> d_wer;  // absent for random_chars
  double d_cer = 0.0;
  ErrorRates dedicated;
  ErrorRates llm;
};

/// Delta = dedicated - llm per text class; positive favours the llm side.
std::map<std::string, ClassDelta> coherence_compare(
    const std::map<std::string, std::vector<CoherenceSample>>& classes,
    const std::pair<OcrBackend, OcrBackend>& backends);

struct AngularResolution {
  double px_per_deg = 0.0;
  double letter_angle_deg = 0.0;
  double px_per_letter = 0.0;
};

AngularResolution angular_resolution(int sensor_px, double fov_deg, double distance_m,
                                     double letter_height_m);

struct ReportRow {
  std::string key;  // class name or letter height
  std::string backend;
  std::optional<double> wer;
  std::optional<double> cer;
  std::uint64_t bytes = 0;
  std::uint64_t latency_ms = 0;
};

/// `class_or_height,backend,wer,cer,bytes,latency_ms`; absent rates are empty.
std::string format_report(const std::vector<ReportRow>& rows);
std::vector<ReportRow> sweep_rows(const std::map<int, SweepEntry>& sweep, const std::string& backend);

}  // namespace evocr::ocr
