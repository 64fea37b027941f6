#pragma once

#include <map>
#include <string_view>

#include "evocr/image.hpp"

namespace evocr {

/// Fixed-pitch bitmap font covering printable ASCII (0x20..0x7e).
///
/// The built-in face is 5x8 at scale 1: capitals occupy rows 0-6 and
/// descenders reach row 7. Integer scaling replicates each cell.
class BitmapFont {
 public:
  static constexpr int kNominalHeight = 8;
  static constexpr int kNominalWidth = 5;

  /// Built-in face replicated `scale` times in both axes.
  static BitmapFont builtin(int scale = 1);

  int scale() const { return scale_; }
  int glyph_height_px() const { return kNominalHeight * scale_; }
  int glyph_width_px(char c) const;
  /// Horizontal distance between consecutive character origins.
  int advance_px() const { return (kNominalWidth + 1) * scale_; }
  /// Last row (inclusive) of non-descender ink.
  int baseline_px() const { return 7 * scale_ - 1; }

  bool has_glyph(char c) const { return glyphs_.contains(c); }
  /// Throws Error naming the character if it is not covered.
  const BinaryImage& glyph(char c) const;
  const std::map<char, BinaryImage>& glyphs() const { return glyphs_; }

 private:
  int scale_ = 1;
  std::map<char, BinaryImage> glyphs_;
};

}  // namespace evocr
