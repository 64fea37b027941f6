#include "evocr/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace evocr::recon {

void ReconConfig::validate() const {
  if (!(threshold > 0.0f && threshold < 1.0f)) throw Error("recon threshold must be in (0,1)");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0))
    throw Error("baseline decay must be in [0,1)");
  if (!(baseline_threshold > 0.0)) throw Error("baseline threshold must be > 0");
  if (fill_gap_px < 0) throw Error("fill gap must be >= 0");
  if (window_events == 0) throw Error("window must hold at least one event");
}

namespace {

BinaryFrame blank_frame(const shaping::FoveatedStream& fov, std::uint64_t t_us) {
  BinaryFrame f;
  f.pixels = BinaryImage(fov.window_w, fov.window_h, 0);
  f.t_us = t_us;
  const auto o = fov.origin_at(t_us);
  f.origin_x = o.x;
  f.origin_y = o.y;
  return f;
}

}  // namespace

BinaryFrame reconstruct_baseline(const shaping::FoveatedStream& fov, std::size_t end_index,
                                 const ReconConfig& cfg) {
  cfg.validate();
  if (end_index > fov.events.size()) throw Error("reconstruct: end index past the stream");
  const std::size_t begin = end_index > cfg.window_events ? end_index - cfg.window_events : 0;
  const std::uint64_t t = end_index > 0 ? fov.events[end_index - 1].t_us : 0;
  BinaryFrame frame = blank_frame(fov, t);
  if (begin == end_index) return frame;

  const int w = fov.window_w, h = fov.window_h;
  Grid<double> acc(w, h, 0.0);
  // Walk backwards so each event's weight is decay^(age).
  double weight = 1.0;
  for (std::size_t i = end_index; i-- > begin;) {
    const auto& e = fov.events[i];
    acc(e.x, e.y) += weight * e.polarity;
    weight *= cfg.baseline_decay;
  }

  BinaryImage edges(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) edges(x, y) = acc(x, y) < -cfg.baseline_threshold;

  BinaryImage& out = frame.pixels;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!edges(x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (out.contains(x + dx, y + dy)) out(x + dx, y + dy) = 1;
    }

  if (cfg.fill_gap_px > 0) {
    for (int y = 0; y < h; ++y) {
      auto row = out.row(y);
      int last_ink = -1;
      for (int x = 0; x < w; ++x) {
        if (!row[x]) continue;
        if (last_ink >= 0 && x - last_ink - 1 <= cfg.fill_gap_px)
          std::fill(row.begin() + last_ink + 1, row.begin() + x, std::uint8_t{1});
        last_ink = x;
      }
    }
  }
  return frame;
}

// ---------------------------------------------------------------------------
// Weights

std::size_t Layer::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

const std::vector<LayerSpec>& unet_layers() {
  static const std::vector<LayerSpec> layers = [] {
    std::vector<LayerSpec> out;
    auto conv = [&out](const std::string& name, std::uint32_t co, std::uint32_t ci,
                       std::uint32_t k) {
      out.push_back({name + ".weight", {co, ci, k, k}});
      out.push_back({name + ".bias", {co}});
    };
    conv("enc1.conv1", 16, kInputChannels, 3);
    conv("enc1.conv2", 16, 16, 3);
    conv("enc2.conv1", 32, 16, 3);
    conv("enc2.conv2", 32, 32, 3);
    conv("enc3.conv1", 64, 32, 3);
    conv("enc3.conv2", 64, 64, 3);
    conv("bottleneck.conv1", 128, 64, 3);
    conv("bottleneck.conv2", 128, 128, 3);
    conv("dec3.conv1", 64, 128 + 64, 3);
    conv("dec3.conv2", 64, 64, 3);
    conv("dec2.conv1", 32, 64 + 32, 3);
    conv("dec2.conv2", 32, 32, 3);
    conv("dec1.conv1", 16, 32 + 16, 3);
    conv("dec1.conv2", 16, 16, 3);
    conv("head", 1, 16, 1);
    return out;
  }();
  return layers;
}

void ModelWeights::validate() const {
  const auto& spec = unet_layers();
  if (layers.size() != spec.size())
    throw ShapeMismatch("expected " + std::to_string(spec.size()) + " layers, got " +
                        std::to_string(layers.size()));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& l = layers[i];
    if (l.name != spec[i].name)
      throw ShapeMismatch("layer " + std::to_string(i) + ": expected '" + spec[i].name +
                          "', got '" + l.name + "'");
    if (l.dims != spec[i].dims) throw ShapeMismatch("layer '" + l.name + "': wrong shape");
    if (l.data.size() != l.element_count())
      throw ShapeMismatch("layer '" + l.name + "': data size does not match shape");
    for (float v : l.data)
      if (!std::isfinite(v)) throw WeightsError("layer '" + l.name + "' has a non-finite value");
  }
}

const Layer& ModelWeights::layer(const std::string& name) const {
  for (const auto& l : layers)
    if (l.name == name) return l;
  throw ShapeMismatch("missing layer '" + name + "'");
}

ModelWeights ModelWeights::zeros() {
  ModelWeights w;
  for (const auto& s : unet_layers()) {
    Layer l{s.name, s.dims, {}};
    l.data.assign(l.element_count(), 0.0f);
    w.layers.push_back(std::move(l));
  }
  return w;
}

ModelWeights ModelWeights::random(std::uint64_t seed, double gain) {
  ModelWeights w = zeros();
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < w.layers.size(); i += 2) {
    auto& weight = w.layers[i];
    const double fan_in = static_cast<double>(weight.dims[1]) * weight.dims[2] * weight.dims[3];
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double bound = gain * std::sqrt(6.0 / fan_in);
    for (auto& v : weight.data) v = static_cast<float>(bound * u(rng));
    for (auto& v : w.layers[i + 1].data) v = static_cast<float>(0.01 * u(rng));
  }
  return w;
}

io::Bytes save_weights(const ModelWeights& weights) {
  io::Bytes out{'B', 'R', 'W', '1'};
  io::put_u32(out, kWeightsVersion);
  io::put_u32(out, static_cast<std::uint32_t>(weights.layers.size()));
  for (const auto& l : weights.layers) {
    if (l.name.size() > 0xFFFF) throw WeightsError("layer name too long");
    if (l.dims.size() > 0xFF) throw WeightsError("too many dimensions");
    if (l.data.size() != l.element_count())
      throw ShapeMismatch("layer '" + l.name + "': data size does not match shape");
    io::put_u16(out, static_cast<std::uint16_t>(l.name.size()));
    out.insert(out.end(), l.name.begin(), l.name.end());
    io::put_u8(out, static_cast<std::uint8_t>(l.dims.size()));
    for (auto d : l.dims) io::put_u32(out, d);
    for (float v : l.data) io::put_f32(out, v);
  }
  io::put_u32(out, io::crc32(out));
  return out;
}

ModelWeights load_weights(const io::Bytes& bytes) {
  if (bytes.size() < 4) throw TruncatedWeights("weights file shorter than its magic");
  if (!(bytes[0] == 'B' && bytes[1] == 'R' && bytes[2] == 'W' && bytes[3] == '1'))
    throw BadMagic("not a BRW1 weights file");

  ModelWeights w;
  std::size_t payload_end = 0;
  try {
    io::Reader r(bytes);
    r.take(4);
    const auto version = r.u32();
    if (version != kWeightsVersion)
      throw WeightsError("unsupported weights version " + std::to_string(version));
    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      Layer l;
      const auto name_len = r.u16();
      const auto name = r.take(name_len);
      l.name.assign(name.begin(), name.end());
      const auto ndim = r.u8();
      for (std::uint8_t d = 0; d < ndim; ++d) l.dims.push_back(r.u32());
      const std::size_t n = l.element_count();
      if (n > r.remaining() / 4) throw io::TruncatedInput("layer data runs past the end");
      l.data.resize(n);
      for (auto& v : l.data) v = r.f32();
      w.layers.push_back(std::move(l));
    }
    payload_end = r.offset();
    r.u32();
    if (r.remaining() != 0) throw WeightsError("trailing bytes after checksum");
  } catch (const io::TruncatedInput& e) {
    throw TruncatedWeights(std::string("truncated weights file: ") + e.what());
  }

  const std::uint32_t stored = static_cast<std::uint32_t>(bytes[payload_end]) |
                               static_cast<std::uint32_t>(bytes[payload_end + 1]) << 8 |
                               static_cast<std::uint32_t>(bytes[payload_end + 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[payload_end + 3]) << 24;
  const auto actual = io::crc32(std::span<const std::uint8_t>(bytes.data(), payload_end));
  if (stored != actual) throw ChecksumMismatch("weights checksum mismatch");
  w.validate();
  return w;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace {

struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<float> d;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), d(static_cast<std::size_t>(c_) * h_ * w_) {}
  float* plane(int ch) { return d.data() + static_cast<std::size_t>(ch) * h * w; }
  const float* plane(int ch) const { return d.data() + static_cast<std::size_t>(ch) * h * w; }
};

Tensor conv(const Tensor& in, const Layer& weight, const Layer& bias, bool relu) {
  const int co_n = static_cast<int>(weight.dims[0]);
  const int k = static_cast<int>(weight.dims[2]);
  const int pad = k / 2;
  if (static_cast<int>(weight.dims[1]) != in.c) throw ShapeMismatch("conv input channel mismatch");
  Tensor out(co_n, in.h, in.w);
  const int H = in.h, W = in.w;
  for (int co = 0; co < co_n; ++co) {
    float* o = out.plane(co);
    std::fill(o, o + static_cast<std::size_t>(H) * W, bias.data[co]);
    for (int ci = 0; ci < in.c; ++ci) {
      const float* src = in.plane(ci);
      const float* wk = weight.data.data() + (static_cast<std::size_t>(co) * in.c + ci) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        const int y0 = std::max(0, pad - ky), y1 = std::min(H, H + pad - ky);
        for (int kx = 0; kx < k; ++kx) {
          const float wv = wk[ky * k + kx];
          if (wv == 0.0f) continue;
          const int x0 = std::max(0, pad - kx), x1 = std::min(W, W + pad - kx);
          const int sx = kx - pad, sy = ky - pad;
          for (int y = y0; y < y1; ++y) {
            float* orow = o + static_cast<std::size_t>(y) * W;
            const float* irow = src + static_cast<std::size_t>(y + sy) * W + sx;
            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
    if (relu)
      for (std::size_t i = 0; i < static_cast<std::size_t>(H) * W; ++i) o[i] = std::max(o[i], 0.0f);
  }
  return out;
}

Tensor max_pool(const Tensor& in) {
  Tensor out(in.c, (in.h + 1) / 2, (in.w + 1) / 2);
  for (int c = 0; c < in.c; ++c) {
    const float* src = in.plane(c);
    float* dst = out.plane(c);
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) {
        float m = -std::numeric_limits<float>::infinity();
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int sy = 2 * y + dy, sx = 2 * x + dx;
            if (sy < in.h && sx < in.w) m = std::max(m, src[static_cast<std::size_t>(sy) * in.w + sx]);
          }
        dst[static_cast<std::size_t>(y) * out.w + x] = m;
      }
  }
  return out;
}

/// Nearest 2x upsample cropped to the skip tensor, then channel concat.
Tensor up_concat(const Tensor& low, const Tensor& skip) {
  if (2 * low.h < skip.h || 2 * low.w < skip.w) throw ShapeMismatch("skip larger than upsample");
  Tensor out(low.c + skip.c, skip.h, skip.w);
  for (int c = 0; c < low.c; ++c) {
    const float* src = low.plane(c);
    float* dst = out.plane(c);
    for (int y = 0; y < skip.h; ++y)
      for (int x = 0; x < skip.w; ++x)
        dst[static_cast<std::size_t>(y) * skip.w + x] = src[static_cast<std::size_t>(y / 2) * low.w + x / 2];
  }
  std::copy(skip.d.begin(), skip.d.end(), out.plane(low.c));
  return out;
}

Tensor block(const ModelWeights& m, const std::string& name, const Tensor& in) {
  Tensor t = conv(in, m.layer(name + ".conv1.weight"), m.layer(name + ".conv1.bias"), true);
  return conv(t, m.layer(name + ".conv2.weight"), m.layer(name + ".conv2.bias"), true);
}

}  // namespace

GrayImage infer_probabilities(const ModelWeights& weights, const shaping::VoxelGrid& grid) {
  if (grid.bins != kInputChannels || grid.height != kInputHeight || grid.width != kInputWidth)
    throw ShapeMismatch("voxel grid must be 4x100x200");
  if (grid.values.size() != static_cast<std::size_t>(grid.bins) * grid.height * grid.width)
    throw ShapeMismatch("voxel grid data size does not match its shape");
  if (weights.layers.size() != unet_layers().size()) weights.validate();

  Tensor x(grid.bins, grid.height, grid.width);
  x.d.assign(grid.values.begin(), grid.values.end());

  const Tensor e1 = block(weights, "enc1", x);
  const Tensor e2 = block(weights, "enc2", max_pool(e1));
  const Tensor e3 = block(weights, "enc3", max_pool(e2));
  const Tensor b = block(weights, "bottleneck", max_pool(e3));
  const Tensor d3 = block(weights, "dec3", up_concat(b, e3));
  const Tensor d2 = block(weights, "dec2", up_concat(d3, e2));
  const Tensor d1 = block(weights, "dec1", up_concat(d2, e1));
  const Tensor logits = conv(d1, weights.layer("head.weight"), weights.layer("head.bias"), false);

  GrayImage out(grid.width, grid.height);
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0f / (1.0f + std::exp(-logits.d[i]));
  return out;
}

BinaryImage threshold_map(const GrayImage& probabilities, float threshold) {
  BinaryImage out(probabilities.width(), probabilities.height(), 0);
  auto src = probabilities.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= threshold;
  return out;
}

BinaryFrame infer_binary(const ModelWeights& weights, const shaping::VoxelGrid& grid,
                         const ReconConfig& cfg) {
  cfg.validate();
  BinaryFrame f;
  f.pixels = threshold_map(infer_probabilities(weights, grid), cfg.threshold);
  f.t_us = grid.t_end_us;
  return f;
}

}  // namespace evocr::recon
