#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evocr/events.hpp"

using namespace evocr;
using namespace evocr::events;

namespace {

SimParams exact(double c = 0.2) {
  SimParams p;
  p.contrast_threshold = c;
  p.threshold_sigma = 0.0;
  p.refractory_us = 0;
  return p;
}

synth::FrameSequence two_frames(const GrayImage& a, const GrayImage& b) {
  return synth::FrameSequence::from_frames({a, b}, 1000.0);
}

long signed_count(const EventStream& s, int x, int y) {
  long n = 0;
  for (const auto& e : s.events)
    if (e.x == x && e.y == y) n += e.polarity;
  return n;
}

}  // namespace

TEST(Simulator, StaticSequenceIsSilent) {
  const GrayImage f(16, 8, 0.4f);
  const auto seq = synth::FrameSequence::from_frames({f, f, f, f}, 1000.0);
  EXPECT_TRUE(frames_to_events(seq, {}).events.empty());
}

TEST(Simulator, StepDownGivesThreeNegativeEvents) {
  const double c = 0.2;
  GrayImage a(4, 4, 1.0f), b = a;
  // Three thresholds down in log space, measured through the eps floor.
  const double eps = exact().log_eps;
  b(2, 1) = static_cast<float>(std::exp(std::log(1.0 + eps) - 3.0 * c - 1e-6) - eps);
  const auto s = frames_to_events(two_frames(a, b), exact(c));
  ASSERT_EQ(s.events.size(), 3u);
  for (const auto& e : s.events) {
    EXPECT_EQ(e.x, 2);
    EXPECT_EQ(e.y, 1);
    EXPECT_EQ(e.polarity, -1);
  }
  const auto up = frames_to_events(two_frames(b, a), exact(c));
  ASSERT_EQ(up.events.size(), 3u);
  for (const auto& e : up.events) EXPECT_EQ(e.polarity, 1);
}

TEST(Simulator, CrossingTimesInterpolated) {
  GrayImage a(1, 1, 1.0f), b = a;
  const double eps = exact().log_eps;
  b(0, 0) = static_cast<float>(std::exp(std::log(1.0 + eps) - 1.0 - 1e-7) - eps);
  const auto s = frames_to_events(two_frames(a, b), exact(0.25));
  ASSERT_EQ(s.events.size(), 4u);
  // Crossings at 1/4, 2/4, 3/4 and 4/4 of the 1000 us interval.
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(static_cast<double>(s.events[i].t_us), 250.0 * (i + 1), 1.0);
}

TEST(Simulator, DimensionMismatchRejected) {
  EXPECT_THROW(synth::FrameSequence::from_frames({GrayImage(4, 4, 1.0f), GrayImage(5, 4, 1.0f)}, 1000.0), Error);
}

TEST(Simulator, StreamOrderedAndDeterministic) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<GrayImage> frames;
  for (int k = 0; k < 6; ++k) {
    GrayImage f(24, 12);
    for (auto& v : f.values()) v = u(rng);
    frames.push_back(f);
  }
  SimParams p;
  p.seed = 3;
  const auto seq = synth::FrameSequence::from_frames(frames, 1000.0);
  const auto a = frames_to_events(seq, p), b = frames_to_events(seq, p);
  EXPECT_EQ(a, b);
  EXPECT_NO_THROW(a.validate());
  EXPECT_TRUE(std::is_sorted(a.events.begin(), a.events.end(), event_before));
}

TEST(Simulator, RefractoryThinsBursts) {
  GrayImage a(1, 1, 1.0f), b(1, 1, 0.001f);
  SimParams p = exact();
  const auto free = frames_to_events(two_frames(a, b), p);
  p.refractory_us = 300;
  const auto gated = frames_to_events(two_frames(a, b), p);
  EXPECT_LT(gated.events.size(), free.events.size());
  for (std::size_t i = 1; i < gated.events.size(); ++i)
    EXPECT_GE(gated.events[i].t_us - gated.events[i - 1].t_us, 300u);
}

TEST(Simulator, InvalidParamsRejected) {
  SimParams p;
  p.contrast_threshold = 0.05;
  p.threshold_sigma = 0.02;
  EXPECT_THROW(p.validate(), Error);
  p = SimParams{};
  p.log_eps = 0.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Integrate, EmptyAndSingleEvent) {
  const Grid<double> init(3, 2, 0.5);
  EventStream s{3, 2, {}};
  EXPECT_EQ(integrate_events(s, init, 0.2), init);
  s.events.push_back({1, 1, 10, 1});
  const auto out = integrate_events(s, init, 0.2);
  EXPECT_DOUBLE_EQ(out(1, 1), 0.7);
  EXPECT_DOUBLE_EQ(out(0, 0), 0.5);
}

TEST(Integrate, RoundTripWithinThreshold) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<GrayImage> frames;
    for (int k = 0; k < 5; ++k) {
      GrayImage f(20, 10);
      for (auto& v : f.values()) v = u(rng);
      frames.push_back(f);
    }
    const auto p = exact(0.15);
    const auto s = frames_to_events(synth::FrameSequence::from_frames(frames, 500.0), p);
    const auto out = integrate_events(s, log_image(frames.front(), p.log_eps), p.contrast_threshold);
    const auto last = log_image(frames.back(), p.log_eps);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 20; ++x) EXPECT_LE(std::fabs(out(x, y) - last(x, y)), p.contrast_threshold + 1e-9);
  }
}

TEST(Integrate, EventCountDependsOnPathNotSpeed) {
  // The same ramp traversed in 2 or in 8 frame intervals.
  auto ramp = [](int steps) {
    std::vector<GrayImage> frames;
    for (int k = 0; k <= steps; ++k) {
      GrayImage f(8, 1);
      for (int x = 0; x < 8; ++x) f(x, 0) = 1.0f - 0.9f * static_cast<float>(k) / steps * (x + 1) / 8.0f;
      frames.push_back(f);
    }
    return synth::FrameSequence::from_frames(frames, 1000.0);
  };
  const auto slow = frames_to_events(ramp(8), exact()), fast = frames_to_events(ramp(2), exact());
  for (int x = 0; x < 8; ++x) EXPECT_LE(std::labs(signed_count(slow, x, 0) - signed_count(fast, x, 0)), 1) << x;
}

TEST(Evt1, RoundTripAndSize) {
  EventStream s{1280, 720, {{0, 0, 1, 1}, {1279, 719, 2, -1}, {5, 6, 1ull << 40, 1}}};
  const auto bytes = encode_evt1(s);
  EXPECT_EQ(bytes.size(), evt1_size(3));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "EVT1");
  EXPECT_EQ(decode_evt1(bytes), s);
}

TEST(Evt1, CorruptInputRejected) {
  EventStream s{10, 10, {{1, 1, 1, 1}}};
  auto bytes = encode_evt1(s);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_evt1(bad_magic), Error);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_evt1(truncated), Error);
  auto out_of_bounds = bytes;
  out_of_bounds[kEvt1HeaderBytes] = 50;
  EXPECT_THROW(decode_evt1(out_of_bounds), Error);
}

TEST(Stream, ValidateCatchesDisorder) {
  EventStream s{4, 4, {{1, 1, 5, 1}, {0, 0, 4, 1}}};
  EXPECT_THROW(s.validate(), Error);
  s.events = {{1, 1, 5, 2}};
  EXPECT_THROW(s.validate(), Error);
}
