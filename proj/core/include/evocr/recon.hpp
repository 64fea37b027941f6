#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evocr/image.hpp"
#include "evocr/io.hpp"
#include "evocr/shaping.hpp"

namespace evocr::recon {

struct BinaryFrame {
  BinaryImage pixels;  // window-sized, 1 = ink
  std::uint64_t t_us = 0;
  int origin_x = 0;  // sensor position of the window at t_us
  int origin_y = 0;
  bool operator==(const BinaryFrame&) const = default;
};

enum class Mode { kBaseline, kLearned };

struct ReconConfig {
  Mode mode = Mode::kBaseline;
  float threshold = 0.5f;          // learned output, pixel >= threshold -> ink
  double baseline_decay = 0.999;   // per event
  double baseline_threshold = 0.3; // in events, applied to the dark-going sum
  int fill_gap_px = 2;             // row gaps closed between edge runs
  std::size_t window_events = shaping::kVoxelEvents;

  void validate() const;
};

/// Leaky integration of the trailing window followed by dark-edge
/// extraction, 1 px dilation and short row fills. Deterministic.
BinaryFrame reconstruct_baseline(const shaping::FoveatedStream& fov, std::size_t end_index,
                                 const ReconConfig& cfg = {});

// ---------------------------------------------------------------------------
// Learned model

class WeightsError : public Error {
 public:
  using Error::Error;
};
class BadMagic : public WeightsError {
 public:
  using WeightsError::WeightsError;
};
class TruncatedWeights : public WeightsError {
 public:
  using WeightsError::WeightsError;
};
class ChecksumMismatch : public WeightsError {
 public:
  using WeightsError::WeightsError;
};
class ShapeMismatch : public WeightsError {
 public:
  using WeightsError::WeightsError;
};

struct Layer {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
  bool operator==(const Layer&) const = default;
};

struct LayerSpec {
  std::string name;
  std::vector<std::uint32_t> dims;
};

inline constexpr int kInputChannels = shaping::kVoxelBins;
inline constexpr int kInputHeight = shaping::kWindowHeight;
inline constexpr int kInputWidth = shaping::kWindowWidth;
inline constexpr std::uint32_t kWeightsVersion = 1;

/// Layer names and shapes of the fixed U-Net, in file order. Conv weights are
/// [out, in, kh, kw]; biases [out].
const std::vector<LayerSpec>& unet_layers();

struct ModelWeights {
  std::vector<Layer> layers;

  /// Throws ShapeMismatch unless the layers match unet_layers() exactly, or
  /// WeightsError on a non-finite value.
  void validate() const;
  const Layer& layer(const std::string& name) const;

  static ModelWeights zeros();
  /// He-style uniform init, for tests and benchmarks.
  static ModelWeights random(std::uint64_t seed, double gain = 1.0);
  bool operator==(const ModelWeights&) const = default;
};

io::Bytes save_weights(const ModelWeights& weights);
ModelWeights load_weights(const io::Bytes& bytes);

/// Sigmoid output of the network before thresholding.
GrayImage infer_probabilities(const ModelWeights& weights, const shaping::VoxelGrid& grid);

BinaryFrame infer_binary(const ModelWeights& weights, const shaping::VoxelGrid& grid,
                         const ReconConfig& cfg = {});

/// pixel >= threshold -> 1.
BinaryImage threshold_map(const GrayImage& probabilities, float threshold);

}  // namespace evocr::recon
