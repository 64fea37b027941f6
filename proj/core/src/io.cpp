#include "evocr/io.hpp"

#include <openssl/evp.h>
#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace evocr::io {

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string read_text(const std::filesystem::path& path) {
  auto b = read_file(path);
  return {b.begin(), b.end()};
}

namespace {

void append(Bytes& out, const std::string& s) { out.insert(out.end(), s.begin(), s.end()); }

// Parses the whitespace/comment separated header fields of a netpbm image.
class PnmHeader {
 public:
  explicit PnmHeader(std::span<const std::uint8_t> bytes, std::size_t pos = 0)
      : bytes_(bytes), pos_(pos) {}

  std::string magic() {
    if (pos_ + 2 > bytes_.size()) throw TruncatedInput("pnm: missing magic");
    std::string m{static_cast<char>(bytes_[pos_]), static_cast<char>(bytes_[pos_ + 1])};
    pos_ += 2;
    return m;
  }

  int number() {
    skip_space();
    int v = 0;
    bool any = false;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      any = true;
    }
    if (!any) throw Error("pnm: malformed header");
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size()) throw TruncatedInput("pnm: missing raster");
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

BinaryImage decode_pbm_at(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  PnmHeader hdr(bytes, pos);
  if (hdr.magic() != "P4") throw Error("pbm: expected P4");
  const int w = hdr.number();
  const int h = hdr.number();
  std::size_t start = hdr.raster_start();
  const std::size_t stride = (static_cast<std::size_t>(w) + 7) / 8;
  if (start + stride * h > bytes.size()) throw TruncatedInput("pbm: truncated raster");
  BinaryImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img(x, y) = (bytes[start + y * stride + x / 8] >> (7 - x % 8)) & 1;
  pos = start + stride * h;
  return img;
}

}  // namespace

Bytes encode_pgm(const GrayImage& img) {
  Bytes out;
  append(out, "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                  "\n255\n");
  out.reserve(out.size() + img.size());
  for (float v : img.values())
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  return out;
}

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  PnmHeader hdr(bytes);
  if (hdr.magic() != "P5") throw Error("pgm: expected P5");
  const int w = hdr.number();
  const int h = hdr.number();
  const int maxval = hdr.number();
  if (maxval <= 0 || maxval > 255) throw Error("pgm: only 8-bit maxval supported");
  const std::size_t start = hdr.raster_start();
  if (start + static_cast<std::size_t>(w) * h > bytes.size())
    throw TruncatedInput("pgm: truncated raster");
  GrayImage img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i)
    img.values()[i] = static_cast<float>(bytes[start + i]) / maxval;
  return img;
}

Bytes encode_pbm(const BinaryImage& img) {
  Bytes out;
  append(out, "P4\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n");
  const std::size_t stride = (static_cast<std::size_t>(img.width()) + 7) / 8;
  const std::size_t base = out.size();
  out.resize(base + stride * img.height(), 0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img(x, y)) out[base + y * stride + x / 8] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
  return out;
}

BinaryImage decode_pbm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  return decode_pbm_at(bytes, pos);
}

std::vector<BinaryImage> decode_pbm_stream(std::span<const std::uint8_t> bytes) {
  std::vector<BinaryImage> frames;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos >= bytes.size()) break;
    frames.push_back(decode_pbm_at(bytes, pos));
  }
  return frames;
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

struct PngSource {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void png_read_from_span(png_structp png, png_bytep data, png_size_t len) {
  auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
  if (src->pos + len > src->bytes.size()) png_error(png, "truncated");
  std::memcpy(data, src->bytes.data() + src->pos, len);
  src->pos += len;
}

}  // namespace

// libpng reports errors through longjmp; every buffer is allocated before
// setjmp so nothing with a destructor lives in the unwound region.
Bytes encode_png(const BinaryImage& img) {
  if (img.empty()) throw Error("png: empty image");
  Bytes out;
  const std::size_t stride = (static_cast<std::size_t>(img.width()) + 7) / 8;
  std::vector<std::uint8_t> raster(stride * img.height(), 0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      // Gray 1 is white, so set bits mark paper.
      if (!img(x, y)) raster[y * stride + x / 8] |= static_cast<std::uint8_t>(0x80 >> (x % 8));

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, img.width(), img.height(), 1, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 9);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) png_write_row(png, raster.data() + y * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

BinaryImage decode_png(std::span<const std::uint8_t> bytes) {
  PngSource src{bytes};
  std::vector<std::uint8_t> raster;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png: cannot create reader");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("png: decoding failed");
  }
  png_set_read_fn(png, &src, png_read_from_span);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  raster.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raster.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  BinaryImage img(static_cast<int>(w), static_cast<int>(h));
  for (png_uint_32 y = 0; y < h; ++y)
    for (png_uint_32 x = 0; x < w; ++x) img(x, y) = raster[y * rowbytes + x] < 128;
  return img;
}

Bytes gzip(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (deflateInit2(&zs, 9, Z_DEFLATED, 15 + 16, 9, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error("gzip: deflateInit2 failed");
  Bytes out(deflateBound(&zs, bytes.size()) + 32);
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error("gzip: deflate failed");
  out.resize(zs.total_out);
  return out;
}

Bytes gunzip(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw Error("gunzip: inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  Bytes out;
  std::uint8_t buf[1 << 15];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error("gunzip: corrupt stream");
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw TruncatedInput("gunzip: truncated stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s.push_back(hex[digest[i] >> 4]);
    s.push_back(hex[digest[i] & 15]);
  }
  return s;
}

std::string base64(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }
void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back(v >> 8);
}
void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_f32(Bytes& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::span<const std::uint8_t> Reader::take(std::size_t n) {
  if (n > remaining())
    throw TruncatedInput("unexpected end of input at offset " + std::to_string(pos_));
  auto s = bytes_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint8_t Reader::u8() { return take(1)[0]; }
std::uint16_t Reader::u16() {
  auto s = take(2);
  return static_cast<std::uint16_t>(s[0] | (s[1] << 8));
}
std::uint32_t Reader::u32() {
  auto s = take(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | s[i];
  return v;
}
std::uint64_t Reader::u64() {
  auto s = take(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | s[i];
  return v;
}
float Reader::f32() { return std::bit_cast<float>(u32()); }

}  // namespace evocr::io
