#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vfocus {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit interleaved RGB raster, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t width, std::size_t height, Rgb fill = {});
  RgbImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return pixel_count() == 0; }

  Rgb at(std::size_t index) const noexcept {
    const auto* p = data_.data() + 3 * index;
    return {p[0], p[1], p[2]};
  }
  Rgb at(std::size_t x, std::size_t y) const noexcept { return at(y * width_ + x); }

  void set(std::size_t index, Rgb c) noexcept {
    auto* p = data_.data() + 3 * index;
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  void set(std::size_t x, std::size_t y, Rgb c) noexcept { set(y * width_ + x, c); }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel raster as decoded from a grayscale PNG.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> values;
};

/// Reads any PNG and converts it to 8-bit RGB (palette expanded, alpha dropped, 16-bit reduced).
RgbImage read_rgb_png(const std::filesystem::path& path);

/// Reads a single-channel PNG. Throws IoError for colour images.
GrayImage read_gray_png(const std::filesystem::path& path);

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);
std::vector<std::uint8_t> encode_rgb_png(const RgbImage& image);
RgbImage decode_rgb_png(std::span<const std::uint8_t> png);

/// Writes an 8- or 16-bit grayscale PNG.
void write_gray_png(const std::filesystem::path& path, const GrayImage& image);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace vfocus
