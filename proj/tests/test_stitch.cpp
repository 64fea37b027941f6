#include <gtest/gtest.h>

#include <Eigen/LU>
#include <cmath>
#include <random>

#include "evocr/scene.hpp"
#include "evocr/stitch.hpp"

using namespace evocr;
using namespace evocr::stitch;

namespace {

const synth::RenderedPage& pangram() {
  static const auto page = synth::render_text_page(
      "The quick brown fox\njumps over the lazy\ndog and runs away", BitmapFont::builtin(2), {});
  return page;
}

BinaryImage window_at(const BinaryImage& page, int x, int y, int w = 200, int h = 100) {
  return crop(page, {x, y, w, h}, std::uint8_t{0});
}

synth::GazeTrace trace(std::initializer_list<std::pair<std::uint64_t, double>> tx) {
  synth::GazeTrace g;
  for (const auto& [t, x] : tx) g.samples.push_back({t, x, 50.0});
  return g;
}

StitchCanvas seeded_canvas(const BinaryImage& frame) {
  StitchCanvas c;
  update_canvas(c, place_frame(c, frame, 0, 0));
  return c;
}

}  // namespace

TEST(Saccades, MonotoneTraceIsOneLine) {
  synth::GazeTrace g;
  for (std::uint64_t t = 0; t <= 2'000'000; t += 1000) g.samples.push_back({t, t / 5000.0, 40.0});
  EXPECT_EQ(detect_saccades(g).size(), 1u);
}

TEST(Saccades, ReturnSweepsSplitLines) {
  const auto g = trace({{0, 10}, {400'000, 300}, {430'000, 20}, {800'000, 310}, {820'000, 15}, {1'000'000, 200}});
  const auto segs = detect_saccades(g);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].start_us, 0u);
  EXPECT_EQ(segs[0].end_us, 400'000u);
  EXPECT_EQ(segs[1].start_us, 430'000u);
  EXPECT_EQ(segs[2].end_us, 1'000'000u);
}

TEST(Saccades, SlowDriftBackIsNotASweep) {
  const auto g = trace({{0, 10}, {400'000, 300}, {3'000'000, 20}});
  EXPECT_EQ(detect_saccades(g).size(), 1u);
}

TEST(Saccades, SimulatedReadingOfFourLines) {
  const auto page = synth::render_text_page(
      "Pack my box with five\ndozen liquor jugs and\nthe quick brown fox\njumps over a lazy dog", BitmapFont::builtin(2),
      {});
  synth::GazeParams gp;
  gp.seed = 9;
  EXPECT_EQ(detect_saccades(synth::simulate_gaze(page.truth, gp)).size(), 4u);
}

TEST(Saccades, TooShortTraceRejected) { EXPECT_THROW(detect_saccades(trace({{0, 1}})), Error); }

TEST(Saccades, FramesAssignedByTime) {
  std::vector<LineSegment> segs{{100, 200, 0, 0}, {300, 400, 0, 0}};
  assign_frames(segs, {50, 100, 150, 250, 300, 400, 450});
  EXPECT_EQ(segs[0].first_frame, 1u);
  EXPECT_EQ(segs[0].end_frame, 3u);
  EXPECT_EQ(segs[1].first_frame, 4u);
  EXPECT_EQ(segs[1].end_frame, 6u);
}

TEST(Placement, FirstFrameAtPrior) {
  StitchCanvas c;
  const auto frame = window_at(pangram().truth.binary, 0, 0);
  const auto p = place_frame(c, frame, 12, -3);
  EXPECT_TRUE(p.accepted);
  EXPECT_EQ(p.dx, 12);
  EXPECT_EQ(p.dy, -3);
  for (float v : p.confidence.values()) EXPECT_EQ(v, kUntouched);
}

TEST(Placement, IdenticalRegionRecoveredExactly) {
  const auto& page = pangram().truth.binary;
  const auto c = seeded_canvas(window_at(page, 0, 0));
  const auto p = place_frame(c, window_at(page, 30, 0), 30, 0);
  ASSERT_TRUE(p.accepted);
  EXPECT_EQ(p.dx, 30);
  EXPECT_EQ(p.dy, 0);
  EXPECT_NEAR(p.zncc, 1.0, 1e-9);
}

TEST(Placement, PlantedShiftRecovered) {
  const auto& page = pangram().truth.binary;
  const auto c = seeded_canvas(window_at(page, 0, 0));
  const auto p = place_frame(c, window_at(page, 44, 1), 40, 0);
  ASSERT_TRUE(p.accepted);
  EXPECT_EQ(p.dx, 44);
  EXPECT_EQ(p.dy, 1);
}

TEST(Placement, BlankFrameRejected) {
  const auto c = seeded_canvas(window_at(pangram().truth.binary, 0, 0));
  const auto p = place_frame(c, BinaryImage(200, 100, 0), 10, 0);
  EXPECT_FALSE(p.accepted);
}

TEST(Placement, InsufficientOverlapRejected) {
  const auto& page = pangram().truth.binary;
  const auto c = seeded_canvas(window_at(page, 0, 0));
  StitchParams params;
  params.search_radius_px = 5;
  EXPECT_FALSE(place_frame(c, window_at(page, 170, 0), 170, 0, params).accepted);
}

TEST(Confidence, UnwrittenCanvasIsUndefined) {
  const auto& page = pangram().truth.binary;
  const auto c = seeded_canvas(window_at(page, 0, 0));
  const auto m = local_confidence(c, window_at(page, 100, 0), 100, 0, 11);
  EXPECT_EQ(m(150, 20), kUntouched);
  for (float v : m.values()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Update, LowerConfidenceLeavesCanvas) {
  StitchCanvas c = seeded_canvas(BinaryImage(8, 8, 0));
  for (auto& v : c.mask.values()) v = 0.5f;
  FramePlacement p;
  p.frame = BinaryImage(8, 8, 1);
  p.confidence = Grid<float>(8, 8, 0.2f);
  update_canvas(c, p);
  EXPECT_EQ(count_ink(c.image), 0u);
  for (float v : c.mask.values()) EXPECT_EQ(v, 0.5f);
}

TEST(Update, HigherConfidenceTakesFrame) {
  StitchCanvas c = seeded_canvas(BinaryImage(8, 8, 0));
  FramePlacement p;
  p.frame = BinaryImage(8, 8, 0);
  p.frame(3, 4) = p.frame(7, 7) = 1;
  p.confidence = Grid<float>(8, 8, 0.9f);
  update_canvas(c, p);
  EXPECT_EQ(c.image, p.frame);
  for (float v : c.mask.values()) EXPECT_EQ(v, 0.9f);
}

TEST(Update, ReapplyingIsNoOp) {
  const auto& page = pangram().truth.binary;
  StitchCanvas c = seeded_canvas(window_at(page, 0, 0));
  const auto p = place_frame(c, window_at(page, 25, 0), 25, 0);
  ASSERT_TRUE(p.accepted);
  update_canvas(c, p);
  const auto image = c.image;
  const auto mask = c.mask;
  update_canvas(c, p);
  EXPECT_EQ(c.image, image);
  EXPECT_EQ(c.mask, mask);
}

TEST(Update, CanvasGrowsAndNewPixelsTakeFrame) {
  StitchCanvas c = seeded_canvas(BinaryImage(4, 4, 0));
  FramePlacement p;
  p.frame = BinaryImage(4, 4, 1);
  p.dx = 2;
  p.dy = -3;
  p.confidence = Grid<float>(4, 4, -0.5f);
  update_canvas(c, p);
  EXPECT_EQ(c.bounds(), (Rect{0, -3, 6, 7}));
  EXPECT_EQ(c.image(5 - c.x0, -3 - c.y0), 1);
  EXPECT_EQ(c.mask(5 - c.x0, -3 - c.y0), -0.5f);
  // The first write left -1 behind, so overlapped pixels take the frame.
  EXPECT_EQ(c.image(2 - c.x0, 0 - c.y0), 1);
  EXPECT_FALSE(c.touched(0, -3));
  EXPECT_TRUE(c.touched(0, 0));
}

TEST(Update, NearTiesFeedTheAverage) {
  StitchCanvas c = seeded_canvas(BinaryImage(2, 1, 0));
  for (auto& v : c.mask.values()) v = 0.5f;
  FramePlacement p;
  p.frame = BinaryImage(2, 1, 1);
  p.confidence = Grid<float>(2, 1, 0.52f);
  p.confidence(1, 0) = 0.9f;
  update_canvas(c, p);
  EXPECT_FLOAT_EQ(c.alpha(0, 0), 2.0f);
  EXPECT_FLOAT_EQ(c.soft(0, 0), 0.5f);
  EXPECT_FLOAT_EQ(c.alpha(1, 0), 1.0f);
  EXPECT_FLOAT_EQ(c.soft(1, 0), 1.0f);
}

TEST(Update, ShapeMismatchRejected) {
  StitchCanvas c;
  FramePlacement p;
  p.frame = BinaryImage(4, 4, 0);
  p.confidence = Grid<float>(3, 4, 0.0f);
  EXPECT_THROW(update_canvas(c, p), Error);
}

TEST(LineTransform, IdenticalStripsGiveIdentity) {
  const auto strip = window_at(pangram().truth.binary, 0, 0, 160, 30);
  const auto t = estimate_line_transform(strip, strip);
  EXPECT_NEAR(t.tx, 0.0, 1e-3);
  EXPECT_NEAR(t.ty, 0.0, 1e-3);
  EXPECT_NEAR(t.rotation_rad, 0.0, 1e-4);
}

TEST(LineTransform, PlantedTranslationRecovered) {
  const auto a = window_at(pangram().truth.binary, 0, 0, 160, 40);
  // strip_b(p + (2, -1)) = strip_a(p)
  const auto b = warp_nearest(a, translation(2.0, -1.0), 160, 40);
  const auto t = estimate_line_transform(a, b);
  EXPECT_NEAR(t.tx, 2.0, 0.25);
  EXPECT_NEAR(t.ty, -1.0, 0.25);
}

TEST(LineTransform, PlantedRotationRecovered) {
  const auto a = window_at(pangram().truth.binary, 0, 0, 160, 60);
  const Mat3 r = rigid_about(0.05, 80.0, 30.0, 0.0, 0.0);
  const auto b = warp_nearest(a, r, 160, 60);
  const auto t = estimate_line_transform(a, b);
  EXPECT_NEAR(t.rotation_rad, 0.05, 0.01);
}

TEST(Compose, SingleLineCropped) {
  StitchCanvas c;
  BinaryImage img(50, 20, 0);
  img(10, 5) = img(20, 8) = 1;
  c = seeded_canvas(img);
  const auto page = compose_page({c}, {});
  EXPECT_EQ(page.width(), 11 + 2 * kComposeMargin);
  EXPECT_EQ(page.height(), 4 + 2 * kComposeMargin);
  EXPECT_EQ(count_ink(page), 2u);
}

TEST(Compose, DisjointLinesConcatenate) {
  const auto& truth = pangram().truth;
  const Rect l0 = truth.line_boxes[0], l1 = truth.line_boxes[1];
  StitchCanvas a, b;
  a.ensure(l0);
  b.ensure(l1);
  update_canvas(a, place_frame(a, crop(truth.binary, l0, std::uint8_t{0}), l0.x, l0.y));
  update_canvas(b, place_frame(b, crop(truth.binary, l1, std::uint8_t{0}), l1.x, l1.y));
  const auto page = compose_page({a, b}, {LineTransform{}});
  BinaryImage both(truth.binary.width(), truth.binary.height(), 0);
  for (const Rect& r : {l0, l1})
    for (int y = r.y; y < r.bottom(); ++y)
      for (int x = r.x; x < r.right(); ++x) both(x, y) = truth.binary(x, y);
  const Rect ink = ink_bounds(both);
  const auto expect = crop(both, {ink.x - kComposeMargin, ink.y - kComposeMargin, ink.w + 2 * kComposeMargin,
                                  ink.h + 2 * kComposeMargin},
                           std::uint8_t{0});
  EXPECT_EQ(page, expect);
}

TEST(Compose, EmptyInputRejected) { EXPECT_THROW(compose_page({}, {}), Error); }

TEST(Stitch, TranslationSweepReproducesPage) {
  const auto& truth = pangram().truth.binary;
  std::mt19937 rng(1);
  std::vector<recon::BinaryFrame> frames;
  for (int k = 0; k * 12 + 200 <= truth.width() + 150; ++k) {
    const int x = k * 12 - 20, y = static_cast<int>(rng() % 5) - 2;
    recon::BinaryFrame f;
    f.pixels = window_at(truth, x, y);
    // Priors are off by up to 3 px, as gaze-seeded priors would be.
    f.origin_x = x + static_cast<int>(rng() % 7) - 3;
    f.origin_y = y + static_cast<int>(rng() % 7) - 3;
    frames.push_back(f);
  }
  std::vector<LineSegment> segs{{0, 0, 0, frames.size()}};
  const auto result = stitch_frames(frames, segs);
  const Rect ink = ink_bounds(truth);
  const auto expect = crop(truth, {ink.x - kComposeMargin, ink.y - kComposeMargin, ink.w + 2 * kComposeMargin,
                                   ink.h + 2 * kComposeMargin},
                           std::uint8_t{0});
  ASSERT_EQ(result.page.width(), expect.width());
  ASSERT_EQ(result.page.height(), expect.height());
  EXPECT_LE(static_cast<double>(hamming(result.page, expect)) / static_cast<double>(expect.size()), 0.01);
  EXPECT_EQ(result.log.size(), frames.size());
  EXPECT_NE(format_placement_log(result.log).find("frame_idx,dx,dy,zncc,accepted"), std::string::npos);
}

TEST(Homography, IdentityFromFourPoints) {
  const std::vector<Vec2> pts{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  const auto fit = estimate_homography(pts, pts);
  EXPECT_LT((fit.h - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(fit.rms_error, 1e-9);
}

TEST(Homography, PlantedHomographyRecovered) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Mat3 h;
    h << 1 + 0.2 * u(rng), 0.2 * u(rng), 20 * u(rng), 0.2 * u(rng), 1 + 0.2 * u(rng), 20 * u(rng), 1e-3 * u(rng),
        1e-3 * u(rng), 1.0;
    std::vector<Vec2> src, dst;
    for (int i = 0; i < 12; ++i) {
      const Vec2 p{100 * u(rng) + 100, 100 * u(rng) + 100};
      src.push_back(p);
      dst.push_back(apply_homography(h, p.x(), p.y()));
    }
    const auto fit = estimate_homography(src, dst);
    EXPECT_LT((fit.h - h).cwiseAbs().maxCoeff() / h.cwiseAbs().maxCoeff(), 1e-6) << trial;
    EXPECT_DOUBLE_EQ(fit.h(2, 2), 1.0);
  }
}

TEST(Homography, DegenerateInputsRejected) {
  const std::vector<Vec2> three{{0, 0}, {1, 0}, {0, 1}};
  EXPECT_THROW(estimate_homography(three, three), DegenerateConfiguration);
  const std::vector<Vec2> collinear{{0, 0}, {1, 1}, {2, 2}, {0, 5}};
  EXPECT_THROW(estimate_homography(collinear, collinear), DegenerateConfiguration);
}
