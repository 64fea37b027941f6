#include <gtest/gtest.h>

#include <random>

#include "evocr/ocr.hpp"
#include "evocr/scene.hpp"
#include "evocr/text_util.hpp"

using namespace evocr;
using namespace evocr::ocr;

namespace {

BinaryImage render(const std::string& text, int scale = 1) {
  return synth::render_text_page(text, BitmapFont::builtin(scale), {}).truth.binary;
}

}  // namespace

TEST(MockOcr, ReadsHelloExactly) {
  EXPECT_EQ(recognize(render("HELLO"), OcrBackend::mock()).text, "HELLO");
}

TEST(MockOcr, BlankImageGivesEmptyText) {
  EXPECT_EQ(recognize(BinaryImage(40, 20, 0), OcrBackend::mock()).text, "");
}

TEST(MockOcr, GlyphsAreDistinct) {
  const auto font = BitmapFont::builtin(1);
  std::vector<std::pair<char, const BinaryImage*>> seen;
  for (const auto& [c, g] : font.glyphs())
    for (const auto& [d, h] : seen) EXPECT_FALSE(g == *h) << c << " duplicates " << d;
}

TEST(MockOcr, EveryGlyphRoundTrips) {
  std::string all;
  for (char c = '!'; c <= '~'; ++c) all += c;
  EXPECT_EQ(recognize_mock(render(all)), all);
}

TEST(MockOcr, MultiLineWithSpacesRoundTrips) {
  const std::string text = "The quick brown fox\njumps over  the lazy dog.\n  indented (x) {y} [z]";
  EXPECT_EQ(recognize_mock(render(text)), text);
}

TEST(MockOcr, IntegerScalesRoundTrip) {
  const std::string text = "Pack my box with\nfive dozen liquor jugs";
  for (int s = 1; s <= 4; ++s) EXPECT_EQ(recognize_mock(render(text, s)), text) << "scale " << s;
}

TEST(MockOcr, RandomTextClosure) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> ch('!', '~'), len(1, 30), lines(1, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::string text;
    const int n = lines(rng);
    for (int l = 0; l < n; ++l) {
      if (l) text += '\n';
      const int m = len(rng);
      for (int i = 0; i < m; ++i) text += (i % 6 == 5) ? ' ' : static_cast<char>(ch(rng));
      while (!text.empty() && text.back() == ' ') text.pop_back();
    }
    EXPECT_EQ(recognize_mock(render(text)), text);
  }
}

TEST(MockOcr, CorruptedGlyphBecomesQuestionMark) {
  auto img = render("AB");
  // Fill most of the first cell so no template is within the rejection radius.
  for (int y = 8; y < 16; ++y)
    for (int x = 8; x < 13; ++x) img(x, y) = (x + y) % 2;
  EXPECT_EQ(recognize_mock(img), "?B");
}

TEST(MockOcr, SweepHeightsAboveNominalAreExact) {
  const std::string text = "Sphinx of black quartz, judge my vow";
  for (int h = 8; h <= 16; ++h) EXPECT_EQ(recognize_mock(render_at_height(text, h)), text) << "height " << h;
}

TEST(Dictionary, CorrectsNearbyWords) {
  EXPECT_EQ(correct_words("teh cat sat\non hte mat", {"the", "cat", "sat", "on", "mat"}),
            "the cat sat\non the mat");
  EXPECT_EQ(correct_words("xyzzy", {"the"}), "xyzzy");
}

TEST(Metrics, Examples) {
  auto r = edit_metrics("abc", "abc");
  EXPECT_EQ(r.wer, 0.0);
  EXPECT_EQ(r.cer, 0.0);
  r = edit_metrics("kitten", "sitting");
  EXPECT_EQ(r.char_edits, 3u);
  EXPECT_DOUBLE_EQ(r.cer, 0.5);
  r = edit_metrics("the quick fox", "the quik fox");
  EXPECT_EQ(r.word_edits, 1u);
  EXPECT_DOUBLE_EQ(r.wer, 1.0 / 3.0);
  EXPECT_EQ(r.char_edits, 1u);
  EXPECT_DOUBLE_EQ(r.cer, 1.0 / 13.0);
}

TEST(Metrics, Identities) {
  EXPECT_DOUBLE_EQ(edit_metrics("hello world", "").cer, 1.0);
  EXPECT_THROW(edit_metrics("", "x"), Error);
  EXPECT_GT(edit_metrics("a", "bbbb").cer, 1.0);
  const auto r = edit_metrics("a  b\tc", "a b c");
  EXPECT_EQ(r.word_edits, 0u);
  EXPECT_EQ(r.ref_words, 3u);
  EXPECT_EQ(edit_metrics("Word", "word").word_edits, 1u);
}

TEST(Metrics, TriangleInequality) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> len(0, 8), ch('a', 'c');
  auto gen = [&] {
    std::string s(len(rng), 'a');
    for (auto& c : s) c = static_cast<char>(ch(rng));
    return s;
  };
  for (int i = 0; i < 2000; ++i) {
    const auto a = gen(), b = gen(), c = gen();
    EXPECT_LE(levenshtein(a, c), levenshtein(a, b) + levenshtein(b, c));
  }
}

TEST(AngularResolution, PaperFigures) {
  EXPECT_NEAR(angular_resolution(2880, 110, 0.5, 0.00225).px_per_deg, 26.18, 0.01);
  EXPECT_NEAR(angular_resolution(1280, 50, 0.5, 0.00225).px_per_deg, 25.6, 1e-9);
  EXPECT_NEAR(angular_resolution(2880, 110, 0.5, 0.00225).px_per_letter, 6.75, 0.01);
  EXPECT_THROW(angular_resolution(0, 50, 0.5, 0.002), Error);
}

TEST(Sweep, CerShape) {
  const std::string text =
      "The quick brown fox jumps over the lazy dog\n"
      "Sphinx of black quartz, judge my vow\n"
      "Pack my box with five dozen liquor jugs";
  std::vector<int> heights;
  for (int h = 2; h <= 12; ++h) heights.push_back(h);
  const auto sweep = letter_height_sweep(text, heights, OcrBackend::mock());
  double prev = 1e9;
  for (const auto& [h, e] : sweep) {
    ASSERT_TRUE(e.rates) << e.error;
    EXPECT_LE(e.rates->cer, prev + 1e-12) << "height " << h;
    prev = e.rates->cer;
  }
  EXPECT_EQ(sweep.at(8).rates->cer, 0.0);
  for (int h = 2; h <= 4; ++h) EXPECT_GE(sweep.at(h).rates->cer, 0.5) << h;
}

TEST(Coherence, IdenticalBackendsGiveZeroDelta) {
  std::map<std::string, std::vector<CoherenceSample>> classes{
      {"pangrams", {{"The five boxing wizards jump quickly", ""}}},
      {kRandomCharsClass, {{"x#q7 !pz", ""}}}};
  const auto d = coherence_compare(classes, {OcrBackend::mock(), OcrBackend::mock()});
  EXPECT_EQ(*d.at("pangrams").d_wer, 0.0);
  EXPECT_EQ(d.at("pangrams").d_cer, 0.0);
  EXPECT_FALSE(d.at(kRandomCharsClass).d_wer.has_value());
}

TEST(Coherence, DictionaryCorrectionWinsOnPlantedTypos) {
  const std::string article = "the committee approved the budget for the new library";
  const std::string typos = "the comittee approvd the budget for the new libary";
  auto corrector = OcrBackend::mock();
  corrector.name = "mock+dict";
  corrector.dictionary = split_words(article);
  const auto d = coherence_compare({{"article", {{article, typos}}}}, {OcrBackend::mock(), corrector});
  EXPECT_GT(*d.at("article").d_wer, 0.0);
}

TEST(Report, CsvLayout) {
  const auto csv = format_report({{"8", "mock", 0.0, 0.0, 120, 1}, {"random_chars", "mock", std::nullopt, 0.5, 9, 2}});
  EXPECT_EQ(csv,
            "class_or_height,backend,wer,cer,bytes,latency_ms\n8,mock,0,0,120,1\nrandom_chars,mock,,0.5,9,2\n");
}
