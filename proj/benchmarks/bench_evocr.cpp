#include <benchmark/benchmark.h>

#include <random>

#include "evocr/events.hpp"
#include "evocr/ocr.hpp"
#include "evocr/recon.hpp"
#include "evocr/scene.hpp"
#include "evocr/shaping.hpp"
#include "evocr/stitch.hpp"

using namespace evocr;

namespace {

const char* kText = "The quick brown fox jumps over the lazy dog\nSphinx of black quartz, judge my vow";

events::EventStream uniform_events(std::size_t n) {
  std::mt19937_64 rng(1);
  events::EventStream s{1280, 720, {}};
  s.events.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    s.events.push_back({static_cast<std::uint16_t>(rng() % 1280), static_cast<std::uint16_t>(rng() % 720), i,
                        static_cast<std::int8_t>(rng() % 2 ? 1 : -1)});
  return s;
}

shaping::FoveatedStream window_events(std::size_t n) {
  std::mt19937 rng(2);
  shaping::FoveatedStream fov;
  fov.origins = {{0, 0, 0}};
  for (std::size_t i = 0; i < n; ++i)
    fov.events.push_back({static_cast<std::uint16_t>(rng() % 200), static_cast<std::uint16_t>(rng() % 100), i,
                          static_cast<std::int8_t>(rng() % 2 ? 1 : -1)});
  return fov;
}

const BinaryImage& page() {
  static const auto p = synth::render_text_page(kText, BitmapFont::builtin(2), {}).truth.binary;
  return p;
}

}  // namespace

static void BM_Foveate(benchmark::State& state) {
  const auto s = uniform_events(static_cast<std::size_t>(state.range(0)));
  const synth::GazeTrace gaze{{{0, 300, 200}, {s.events.back().t_us, 900, 500}}};
  for (auto _ : state) benchmark::DoNotOptimize(shaping::foveate(s, gaze));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Foveate)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

static void BM_FramesToEvents(benchmark::State& state) {
  std::vector<GrayImage> frames;
  for (int k = 0; k < 8; ++k) {
    GrayImage f(200, 100, 1.0f);
    for (int y = 0; y < 100; ++y)
      for (int x = 0; x < 200; ++x)
        if (page().at_or(x + 2 * k, y, 0)) f(x, y) = 0.2f;
    frames.push_back(std::move(f));
  }
  const auto seq = synth::FrameSequence::from_frames(frames, 1000.0);
  events::SimParams p;
  for (auto _ : state) benchmark::DoNotOptimize(events::frames_to_events(seq, p));
}
BENCHMARK(BM_FramesToEvents)->Unit(benchmark::kMillisecond);

static void BM_VoxelGrid(benchmark::State& state) {
  const auto fov = window_events(1600);
  for (auto _ : state) benchmark::DoNotOptimize(shaping::build_voxel_grid(fov, fov.events.size()));
}
BENCHMARK(BM_VoxelGrid)->Unit(benchmark::kMicrosecond);

static void BM_ReconstructBaseline(benchmark::State& state) {
  const auto fov = window_events(1600);
  for (auto _ : state) benchmark::DoNotOptimize(recon::reconstruct_baseline(fov, fov.events.size()));
}
BENCHMARK(BM_ReconstructBaseline)->Unit(benchmark::kMicrosecond);

static void BM_InferUNet(benchmark::State& state) {
  const auto weights = recon::ModelWeights::random(3);
  const auto fov = window_events(1600);
  const auto grid = shaping::build_voxel_grid(fov, fov.events.size());
  for (auto _ : state) benchmark::DoNotOptimize(recon::infer_probabilities(weights, grid));
}
BENCHMARK(BM_InferUNet)->Unit(benchmark::kMillisecond);

static void BM_PlaceFrame(benchmark::State& state) {
  stitch::StitchCanvas canvas;
  const auto first = crop(page(), {0, 0, 200, 100}, std::uint8_t{0});
  stitch::update_canvas(canvas, stitch::place_frame(canvas, first, 0, 0));
  const auto next = crop(page(), {30, 2, 200, 100}, std::uint8_t{0});
  stitch::StitchParams params;
  params.search_radius_px = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(stitch::place_frame(canvas, next, 27, 0, params));
}
BENCHMARK(BM_PlaceFrame)->Arg(8)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_RecognizeMock(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(ocr::recognize_mock(page()));
}
BENCHMARK(BM_RecognizeMock)->Unit(benchmark::kMillisecond);

static void BM_EditMetrics(benchmark::State& state) {
  const std::string ref = kText, hyp = "The qu1ck brown fox jumps ovr the lazy dog\nSphinx of black quartz judge my vow";
  for (auto _ : state) benchmark::DoNotOptimize(ocr::edit_metrics(ref, hyp));
}
BENCHMARK(BM_EditMetrics);

BENCHMARK_MAIN();
