#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bookvis {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  auto operator<=>(const Rgb&) const = default;
};

/// 8-bit interleaved RGB raster, row-major, top row first.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, Rgb fill = {});  // throws validation on non-positive dims

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const noexcept {
    const auto* p = &data_[(static_cast<std::size_t>(y) * width_ + x) * 3];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) noexcept {
    auto* p = &data_[(static_cast<std::size_t>(y) * width_ + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  bool operator==(const RasterImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

inline constexpr int kMaxDecodeDimension = 8192;

/// PNG or JPEG bytes to RGB. Grayscale is expanded, alpha is composited on white.
/// Throws Error{decode} for unknown/corrupt data, Error{too_large} above 8192 px per side.
RasterImage decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const RasterImage& image);
std::vector<std::uint8_t> encode_jpeg(const RasterImage& image, int quality = 92);

/// Box-filter (area-averaging) resize; exact when the factors are integral.
RasterImage resize_area(const RasterImage& image, int width, int height);

/// Grayscale in [0,1] using Rec.601 luma weights.
std::vector<float> to_gray(const RasterImage& image);

}  // namespace bookvis
