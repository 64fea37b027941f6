#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evocr/image.hpp"

namespace evocr::io {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Netpbm. Grayscale is P5 with maxval 255 (value 1.0 -> 255); binary is P4
// where a set bit is ink, matching BinaryImage.
Bytes encode_pgm(const GrayImage& img);
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
Bytes encode_pbm(const BinaryImage& img);
BinaryImage decode_pbm(std::span<const std::uint8_t> bytes);

/// Decodes a concatenation of P4 images.
std::vector<BinaryImage> decode_pbm_stream(std::span<const std::uint8_t> bytes);

/// 1-bit grayscale PNG, ink black.
Bytes encode_png(const BinaryImage& img);
BinaryImage decode_png(std::span<const std::uint8_t> bytes);

/// gzip container with a fixed header so output is reproducible.
Bytes gzip(std::span<const std::uint8_t> bytes);
Bytes gunzip(std::span<const std::uint8_t> bytes);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string base64(std::span<const std::uint8_t> bytes);

// Little-endian helpers for the binary formats.
void put_u8(Bytes& out, std::uint8_t v);
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
void put_f32(Bytes& out, float v);

/// Bounds-checked little-endian reader. Throws TruncatedInput past the end.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  std::span<const std::uint8_t> take(std::size_t n);

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class TruncatedInput : public Error {
 public:
  using Error::Error;
};

}  // namespace evocr::io
