#include "filmetric/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "filmetric/error.hpp"

namespace filmetric {

namespace {

void on_png_error(png_structp, png_const_charp msg) { throw IoError(std::string("png: ") + msg); }
void on_png_warning(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}
void flush_nothing(png_structp) {}

struct ReadCursor {
  std::span<const std::uint8_t> data;
  std::size_t offset = 0;
};

void read_bytes(png_structp png, png_bytep out, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->data.size()) png_error(png, "truncated stream");
  std::memcpy(out, cur->data.data() + cur->offset, length);
  cur->offset += length;
}

// Owns a libpng write struct; rows are supplied pre-formatted (big-endian for 16 bit).
Bytes encode(int width, int height, int bit_depth, int color_type, int bytes_per_row,
             const std::uint8_t* rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error,
                                            on_png_warning);
  if (!png) throw IoError("png: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  Bytes out;
  try {
    if (!info) throw IoError("png: cannot create info struct");
    png_set_write_fn(png, &out, append_bytes, flush_nothing);
    png_set_compression_level(png, 3);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < height; ++r)
      png_write_row(png, const_cast<png_bytep>(rows + static_cast<std::size_t>(r) * bytes_per_row));
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

struct Decoded {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::uint8_t> raw;  // big-endian samples for 16 bit
};

Decoded decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw IoError("png: not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error,
                                           on_png_warning);
  if (!png) throw IoError("png: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  Decoded d;
  ReadCursor cursor{bytes, 0};
  try {
    if (!info) throw IoError("png: cannot create info struct");
    png_set_read_fn(png, &cursor, read_bytes);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
      png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    d.width = static_cast<int>(png_get_image_width(png, info));
    d.height = static_cast<int>(png_get_image_height(png, info));
    d.channels = png_get_channels(png, info);
    d.bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    d.raw.resize(row_bytes * static_cast<std::size_t>(d.height));
    for (int r = 0; r < d.height; ++r)
      png_read_row(png, d.raw.data() + static_cast<std::size_t>(r) * row_bytes, nullptr);
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

}  // namespace

Bytes encode_png_rgb8(const Interferogram& img) {
  return encode(img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB, 3 * img.width(),
                img.data().data());
}

Bytes encode_png_gray16(int width, int height, std::span<const std::uint16_t> values) {
  std::vector<std::uint8_t> be(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    be[2 * i] = static_cast<std::uint8_t>(values[i] >> 8);
    be[2 * i + 1] = static_cast<std::uint8_t>(values[i] & 0xff);
  }
  return encode(width, height, 16, PNG_COLOR_TYPE_GRAY, 2 * width, be.data());
}

Interferogram decode_png_rgb8(std::span<const std::uint8_t> png) {
  const Decoded d = decode(png);
  if (d.bit_depth != 8) throw IoError("png: expected an 8-bit image");
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(d.width) * d.height * 3);
  for (std::size_t i = 0; i < static_cast<std::size_t>(d.width) * d.height; ++i) {
    const std::uint8_t* px = d.raw.data() + i * d.channels;
    if (d.channels >= 3) {
      rgb[3 * i] = px[0];
      rgb[3 * i + 1] = px[1];
      rgb[3 * i + 2] = px[2];
    } else {
      rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = px[0];
    }
  }
  return Interferogram(d.width, d.height, std::move(rgb));
}

std::vector<std::uint16_t> decode_png_gray16(std::span<const std::uint8_t> png, int& width,
                                             int& height) {
  const Decoded d = decode(png);
  if (d.channels != 1) throw IoError("png: expected a single-channel image");
  width = d.width;
  height = d.height;
  std::vector<std::uint16_t> out(static_cast<std::size_t>(d.width) * d.height);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = d.bit_depth == 16
                 ? static_cast<std::uint16_t>((d.raw[2 * i] << 8) | d.raw[2 * i + 1])
                 : d.raw[i];
  return out;
}

Bytes encode_field_png(const ThicknessField& field) {
  std::vector<std::uint16_t> q(field.size());
  const auto v = field.values();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!std::isfinite(v[i])) throw NumericalError("cannot encode a non-finite thickness");
    q[i] = static_cast<std::uint16_t>(std::clamp(std::lround(v[i]), 0L, 65535L));
  }
  return encode_png_gray16(field.width(), field.height(), q);
}

ThicknessField decode_field_png(std::span<const std::uint8_t> png) {
  int w = 0, h = 0;
  const auto q = decode_png_gray16(png, w, h);
  std::vector<double> values(q.begin(), q.end());
  return ThicknessField(w, h, std::move(values));
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace filmetric
