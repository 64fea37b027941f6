#include <gtest/gtest.h>

#include <memory>

#include "evocr/events.hpp"
#include "evocr/recon.hpp"
#include "evocr/scene.hpp"

using namespace evocr;
using namespace evocr::recon;
using shaping::FoveatedStream;

namespace {

FoveatedStream window_stream(std::vector<events::Event> evs) {
  FoveatedStream fov;
  fov.events = std::move(evs);
  fov.origins = {{0, 0, 0}};
  return fov;
}

const ModelWeights& shared_random() {
  static const ModelWeights w = ModelWeights::random(7);
  return w;
}

shaping::VoxelGrid random_grid(std::uint32_t seed) {
  FoveatedStream fov;
  fov.origins = {{0, 0, 0}};
  std::uint32_t s = seed;
  for (std::uint64_t t = 0; t < 1600; ++t) {
    s = s * 1664525u + 1013904223u;
    fov.events.push_back({static_cast<std::uint16_t>((s >> 8) % 200), static_cast<std::uint16_t>((s >> 20) % 100), t,
                          static_cast<std::int8_t>(s & 1 ? 1 : -1)});
  }
  return shaping::build_voxel_grid(fov, fov.events.size());
}

}  // namespace

TEST(Baseline, EmptyWindowIsBlank) {
  const auto f = reconstruct_baseline(window_stream({}), 0);
  EXPECT_EQ(f.pixels.width(), 200);
  EXPECT_EQ(f.pixels.height(), 100);
  EXPECT_EQ(count_ink(f.pixels), 0u);
}

TEST(Baseline, BrighteningOnlyIsBlank) {
  std::vector<events::Event> evs;
  for (std::uint64_t t = 0; t < 3000; ++t)
    evs.push_back({static_cast<std::uint16_t>(t % 200), static_cast<std::uint16_t>((t / 7) % 100), t, 1});
  const auto fov = window_stream(evs);
  EXPECT_EQ(count_ink(reconstruct_baseline(fov, fov.events.size()).pixels), 0u);
}

TEST(Baseline, DarkEdgesDilatedAndRowFilled) {
  std::vector<events::Event> evs;
  // Two dark-going edges on one row, two pixels apart.
  for (std::uint64_t t = 0; t < 3; ++t) {
    evs.push_back({50, 40, 2 * t, -1});
    evs.push_back({55, 40, 2 * t + 1, -1});
  }
  const auto f = reconstruct_baseline(window_stream(evs), evs.size());
  for (int x = 49; x <= 56; ++x) EXPECT_EQ(f.pixels(x, 40), 1) << x;
  EXPECT_EQ(f.pixels(50, 39), 1);
  EXPECT_EQ(f.pixels(50, 42), 0);
  EXPECT_EQ(f.pixels(48, 40), 0);
}

TEST(Baseline, OnlyTrailingWindowCounts) {
  std::vector<events::Event> evs;
  for (std::uint64_t t = 0; t < 5; ++t) evs.push_back({10, 10, t, -1});
  for (std::uint64_t t = 5; t < 2000; ++t) evs.push_back({150, 90, t, 1});
  const auto fov = window_stream(evs);
  EXPECT_EQ(count_ink(reconstruct_baseline(fov, 5).pixels), 9u);
  EXPECT_EQ(count_ink(reconstruct_baseline(fov, fov.events.size()).pixels), 0u);
}

TEST(Baseline, SweptBarMatchesGroundTruth) {
  // A dark bar on white paper swept 20 px down across a 200x100 sensor.
  auto page = std::make_shared<synth::PageImage>(400, 300, 1.0f);
  BinaryImage truth(400, 300, 0);
  for (int y = 140; y < 144; ++y)
    for (int x = 120; x < 280; ++x) {
      (*page)(x, y) = 0.75f;
      truth(x, y) = 1;
    }
  synth::CameraGeometry cam;
  cam.sensor_w = 200;
  cam.sensor_h = 100;
  cam.page_cx = 200;
  cam.page_cy = 150;
  const std::uint64_t end_us = 20'000;
  synth::HeadMotion head;
  head.samples = {{0, {0, -10.0 / cam.focal_px, 0, 0, 0, 0}}, {end_us, {0, 10.0 / cam.focal_px, 0, 0, 0, 0}}};
  const synth::GazeTrace gaze{{{0, 200, 150}, {end_us, 200, 150}}};
  events::SimParams sim;
  sim.threshold_sigma = 0.0;
  sim.refractory_us = 0;
  const auto stream = events::frames_to_events(synth::render_sequence(page, gaze, head, cam, 1000.0), sim);
  const auto fov = shaping::foveate(stream, gaze);
  ASSERT_GT(fov.events.size(), 1600u);

  const auto f = reconstruct_baseline(fov, fov.events.size());
  const auto gt = warp_nearest(truth, synth::page_to_sensor(cam, head.at(end_us)), 200, 100);
  EXPECT_GE(iou(f.pixels, gt), 0.6);
}

TEST(Baseline, EndIndexPastStreamRejected) {
  EXPECT_THROW(reconstruct_baseline(window_stream({{1, 1, 0, -1}}), 2), Error);
}

TEST(Baseline, ConfigValidated) {
  ReconConfig cfg;
  cfg.baseline_decay = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.threshold = 0.0f;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Weights, LayoutIsTheFixedUNet) {
  const auto& specs = unet_layers();
  ASSERT_FALSE(specs.empty());
  EXPECT_EQ(specs.front().dims[1], static_cast<std::uint32_t>(kInputChannels));
  EXPECT_EQ(specs.back().dims.size(), 1u);
  EXPECT_NO_THROW(ModelWeights::zeros().validate());
  EXPECT_NO_THROW(shared_random().validate());
}

TEST(Weights, RoundTripIsExact) {
  const auto bytes = save_weights(shared_random());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BRW1");
  EXPECT_EQ(load_weights(bytes), shared_random());
  EXPECT_EQ(save_weights(load_weights(bytes)), bytes);
}

TEST(Weights, TruncatedFileRejected) {
  auto bytes = save_weights(ModelWeights::zeros());
  bytes.pop_back();
  EXPECT_THROW(load_weights(bytes), TruncatedWeights);
  bytes.resize(40);
  EXPECT_THROW(load_weights(bytes), TruncatedWeights);
}

TEST(Weights, CorruptPayloadRejected) {
  auto bytes = save_weights(shared_random());
  bytes[bytes.size() / 2] ^= 0x40;
  EXPECT_THROW(load_weights(bytes), ChecksumMismatch);
}

TEST(Weights, BadMagicRejected) {
  auto bytes = save_weights(ModelWeights::zeros());
  bytes[3] = '2';
  EXPECT_THROW(load_weights(bytes), BadMagic);
}

TEST(Weights, WrongShapeRejected) {
  auto w = ModelWeights::zeros();
  w.layers.back().dims[0] += 1;
  w.layers.back().data.push_back(0.0f);
  EXPECT_THROW(w.validate(), ShapeMismatch);
  EXPECT_THROW(load_weights(save_weights(w)), ShapeMismatch);
  auto missing = ModelWeights::zeros();
  missing.layers.pop_back();
  EXPECT_THROW(load_weights(save_weights(missing)), ShapeMismatch);
}

TEST(Inference, ZeroWeightsGiveHalfEverywhere) {
  FoveatedStream empty;
  empty.origins = {{0, 0, 0}};
  const auto grid = shaping::build_voxel_grid(empty, 0);
  const auto p = infer_probabilities(ModelWeights::zeros(), grid);
  ASSERT_EQ(p.width(), 200);
  ASSERT_EQ(p.height(), 100);
  for (float v : p.values()) EXPECT_FLOAT_EQ(v, 0.5f);
  const auto f = infer_binary(ModelWeights::zeros(), grid);
  EXPECT_EQ(count_ink(f.pixels), 20000u);
}

TEST(Inference, DeterministicAndBounded) {
  const auto grid = random_grid(3);
  const auto a = infer_probabilities(shared_random(), grid);
  EXPECT_EQ(infer_probabilities(shared_random(), grid), a);
  for (float v : a.values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Inference, ThresholdIsMonotone) {
  const auto p = infer_probabilities(shared_random(), random_grid(4));
  std::size_t prev = count_ink(threshold_map(p, 0.05f));
  for (float thr : {0.2f, 0.4f, 0.5f, 0.6f, 0.8f, 0.95f}) {
    const auto n = count_ink(threshold_map(p, thr));
    EXPECT_LE(n, prev) << thr;
    prev = n;
  }
  GrayImage edge(2, 1, 0.5f);
  edge(1, 0) = 0.4999f;
  const auto b = threshold_map(edge, 0.5f);
  EXPECT_EQ(b(0, 0), 1);
  EXPECT_EQ(b(1, 0), 0);
}
