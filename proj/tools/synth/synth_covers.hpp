#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bookvis/image.hpp"

namespace bookvis::synth {

inline constexpr int kCoverWidth = 320;
inline constexpr int kCoverHeight = 480;

/// Procedural cover: gradient ground, textured photo patch, geometric shapes
/// and block-letter title/author text. Same arguments, same pixels.
RasterImage make_cover(std::uint64_t seed, std::string_view title, std::string_view author);

/// Draws upper-case text with a 5x7 bitmap font; `scale` pixels per font dot.
void draw_text(RasterImage& img, int x, int y, std::string_view text, int scale, Rgb color);

inline constexpr Rgb kDeskColor{118, 112, 104};

// Query-side transforms. Rotation and perspective grow the canvas and fill the
// exposed corners with the desk color.
RasterImage rotate(const RasterImage& img, double degrees, Rgb fill = kDeskColor);
RasterImage scale(const RasterImage& img, double factor);
RasterImage adjust_brightness(const RasterImage& img, double factor);
RasterImage perspective(const RasterImage& img, double degrees, Rgb fill = kDeskColor);

struct TransformedQuery {
  std::string name;
  RasterImage image;
};

/// rot+15, rot-15, scale 0.7, scale 1.4, brightness +20%, brightness -20%, perspective 10.
std::vector<TransformedQuery> standard_transforms(const RasterImage& cover);

}  // namespace bookvis::synth
