#include <gtest/gtest.h>

#include <random>

#include "evocr/geometry.hpp"
#include "evocr/image.hpp"
#include "evocr/io.hpp"
#include "evocr/text_util.hpp"

using namespace evocr;

namespace {

BinaryImage random_binary(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  BinaryImage img(w, h, 0);
  for (auto& v : img.values()) v = rng() % 3 == 0;
  return img;
}

std::span<const std::uint8_t> bytes_of(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

TEST(Grid, NegativeDimensionsRejected) { EXPECT_THROW(BinaryImage(-1, 3), Error); }

TEST(Grid, CropPadsOutside) {
  BinaryImage img(3, 3, 1);
  const auto c = crop(img, {-1, -1, 5, 5}, std::uint8_t{0});
  EXPECT_EQ(c.width(), 5);
  EXPECT_EQ(count_ink(c), 9u);
  EXPECT_EQ(c(0, 0), 0);
  EXPECT_EQ(c(1, 1), 1);
}

TEST(Grid, InkBoundsAndMetrics) {
  BinaryImage a(10, 10, 0);
  EXPECT_TRUE(ink_bounds(a).empty());
  a(2, 3) = a(5, 7) = 1;
  EXPECT_EQ(ink_bounds(a), (Rect{2, 3, 4, 5}));
  BinaryImage b = a;
  b(5, 7) = 0;
  EXPECT_EQ(hamming(a, b), 1u);
  EXPECT_DOUBLE_EQ(iou(a, b), 0.5);
  EXPECT_DOUBLE_EQ(iou(BinaryImage(4, 4, 0), BinaryImage(4, 4, 0)), 1.0);
}

TEST(Grid, RectOps) {
  EXPECT_EQ(intersect({0, 0, 4, 4}, {2, 2, 4, 4}), (Rect{2, 2, 2, 2}));
  EXPECT_TRUE(intersect({0, 0, 2, 2}, {5, 5, 1, 1}).empty());
  EXPECT_EQ(bounding_union({0, 0, 2, 2}, {5, 5, 1, 1}), (Rect{0, 0, 6, 6}));
}

TEST(Resample, AreaResizePreservesMean) {
  GrayImage img(8, 4, 0.0f);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) img(x, y) = static_cast<float>((x + y) % 2);
  const auto small = resize_area(img, 4, 2);
  for (float v : small.values()) EXPECT_NEAR(v, 0.5f, 1e-6f);
}

TEST(Resample, BlurKeepsConstantImage) {
  const GrayImage img(9, 7, 0.25f);
  const auto blurred = gaussian_blur(img, 1.5);
  for (float v : blurred.values()) EXPECT_NEAR(v, 0.25f, 1e-6f);
}

TEST(Geometry, IdentityWarpIsExact) {
  GrayImage img(6, 5, 0.0f);
  for (int i = 0; i < 30; ++i) img.values()[i] = static_cast<float>(i) / 30.0f;
  EXPECT_EQ(warp_bilinear(img, Mat3::Identity(), 6, 5), img);
  const auto b = random_binary(6, 5, 1);
  EXPECT_EQ(warp_nearest(b, Mat3::Identity(), 6, 5), b);
}

TEST(Geometry, IntegerTranslationShifts) {
  const auto b = random_binary(12, 9, 2);
  const auto moved = warp_nearest(b, translation(3, 2), 12, 9);
  for (int y = 2; y < 9; ++y)
    for (int x = 3; x < 12; ++x) EXPECT_EQ(moved(x, y), b(x - 3, y - 2));
}

TEST(Geometry, RigidAboutFixesPivot) {
  const Mat3 h = rigid_about(0.3, 10.0, 20.0, 0.0, 0.0);
  const Vec2 p = apply_homography(h, 10.0, 20.0);
  EXPECT_NEAR(p.x(), 10.0, 1e-12);
  EXPECT_NEAR(p.y(), 20.0, 1e-12);
  Mat3 singular = Mat3::Identity();
  singular(2, 2) = 0.0;
  EXPECT_THROW(normalize_homography(singular), Error);
}

TEST(Netpbm, PbmRoundTripOddWidths) {
  for (int w : {1, 7, 8, 9, 200}) {
    const auto img = random_binary(w, 5, static_cast<std::uint32_t>(w));
    EXPECT_EQ(io::decode_pbm(io::encode_pbm(img)), img) << w;
  }
}

TEST(Netpbm, PgmRoundTripQuantises) {
  GrayImage img(3, 2, 0.0f);
  img(1, 0) = 1.0f;
  img(2, 1) = 0.5f;
  const auto back = io::decode_pgm(io::encode_pgm(img));
  EXPECT_FLOAT_EQ(back(1, 0), 1.0f);
  EXPECT_NEAR(back(2, 1), 0.5f, 1.0f / 255.0f);
}

TEST(Netpbm, StreamOfFrames) {
  io::Bytes all;
  std::vector<BinaryImage> frames;
  for (int i = 0; i < 4; ++i) {
    frames.push_back(random_binary(200, 100, 10 + i));
    const auto b = io::encode_pbm(frames.back());
    all.insert(all.end(), b.begin(), b.end());
  }
  EXPECT_EQ(io::decode_pbm_stream(all), frames);
}

TEST(Netpbm, BadInputRejected) {
  EXPECT_THROW(io::decode_pbm(bytes_of("P5\n2 2\n255\nabcd")), Error);
  EXPECT_THROW(io::decode_pbm(bytes_of("P4\n16 2\n\x01")), Error);
  EXPECT_THROW(io::decode_pgm(bytes_of("P5\n2 2\n255\n")), Error);
}

TEST(Png, RoundTripIsBitExact) {
  const auto img = random_binary(77, 31, 3);
  const auto png = io::encode_png(img);
  EXPECT_EQ(io::decode_png(png), img);
  EXPECT_EQ(io::encode_png(img), png);
  EXPECT_THROW(io::decode_png(bytes_of("not a png")), Error);
}

TEST(Gzip, RoundTripAndReproducible) {
  std::string text(5000, 'a');
  for (std::size_t i = 0; i < text.size(); i += 7) text[i] = 'b';
  const auto z = io::gzip(bytes_of(text));
  EXPECT_LT(z.size(), text.size() / 10);
  EXPECT_EQ(io::gzip(bytes_of(text)), z);
  const auto back = io::gunzip(z);
  EXPECT_EQ(std::string(back.begin(), back.end()), text);
  EXPECT_THROW(io::gunzip(bytes_of("garbage!")), Error);
}

TEST(Hashes, KnownVectors) {
  EXPECT_EQ(io::sha256_hex(bytes_of("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(io::crc32(bytes_of("123456789")), 0xCBF43926u);
  EXPECT_EQ(io::base64(bytes_of("foob")), "Zm9vYg==");
  EXPECT_EQ(io::base64(bytes_of("")), "");
}

TEST(Reader, LittleEndianAndTruncation) {
  io::Bytes b;
  io::put_u16(b, 0x1234);
  io::put_u32(b, 0xdeadbeef);
  io::put_u64(b, 0x0102030405060708ull);
  io::put_f32(b, 1.5f);
  EXPECT_EQ(b[0], 0x34);
  io::Reader r(b);
  EXPECT_EQ(r.u16(), 0x1234);
  EXPECT_EQ(r.u32(), 0xdeadbeefu);
  EXPECT_EQ(r.u64(), 0x0102030405060708ull);
  EXPECT_EQ(r.f32(), 1.5f);
  EXPECT_EQ(r.remaining(), 0u);
  EXPECT_THROW(r.u8(), io::TruncatedInput);
}

TEST(Text, SplittingAndParsing) {
  EXPECT_EQ(split_lines("a\r\nb\n"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(split_words("  a \t b  "), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(split("a,,b", ','), (std::vector<std::string>{"a", "", "b"}));
  EXPECT_EQ(trim("  x y "), "x y");
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678})
    EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(parse_u64("18446744073709551615"), 18446744073709551615ull);
  EXPECT_EQ(parse_i64("-42"), -42);
  EXPECT_THROW(parse_u64("12x"), Error);
  EXPECT_THROW(parse_double(""), Error);
}
