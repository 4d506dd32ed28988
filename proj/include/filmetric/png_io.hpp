#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "filmetric/image.hpp"

namespace filmetric {

using Bytes = std::vector<std::uint8_t>;

/// 8-bit RGB PNG.
Bytes encode_png_rgb8(const Interferogram& img);
/// 16-bit grayscale PNG.
Bytes encode_png_gray16(int width, int height, std::span<const std::uint16_t> values);

/// Accepts 8-bit gray/RGB/RGBA (alpha dropped, gray replicated).
Interferogram decode_png_rgb8(std::span<const std::uint8_t> png);
/// Accepts 8- or 16-bit single-channel PNG.
std::vector<std::uint16_t> decode_png_gray16(std::span<const std::uint8_t> png, int& width,
                                             int& height);

/// Field pixel value = round(nm), clamped to [0, 65535].
Bytes encode_field_png(const ThicknessField& field);
/// Raw PNG values as nm.
ThicknessField decode_field_png(std::span<const std::uint8_t> png);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

inline Interferogram read_interferogram(const std::filesystem::path& path) {
  return decode_png_rgb8(read_file(path));
}
inline void write_interferogram(const std::filesystem::path& path, const Interferogram& img) {
  write_file(path, encode_png_rgb8(img));
}
inline ThicknessField read_field_png(const std::filesystem::path& path) {
  return decode_field_png(read_file(path));
}
inline void write_field_png(const std::filesystem::path& path, const ThicknessField& field) {
  write_file(path, encode_field_png(field));
}

}  // namespace filmetric
