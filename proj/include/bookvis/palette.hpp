#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bookvis/image.hpp"

namespace bookvis {

struct Swatch {
  Rgb rgb;
  double mass = 0;  // fraction of (downsampled) pixels in the cluster
  bool operator==(const Swatch&) const = default;
};

/// Dominant cover colors, heaviest first, 1..4 entries, masses summing to 1.
struct Palette {
  std::vector<Swatch> colors;
  std::optional<std::string> source_book;
  bool operator==(const Palette&) const = default;
};

struct Theme {
  Rgb primary, secondary, accent, background, text_on_primary;
  bool operator==(const Theme&) const = default;
};

inline constexpr int kDefaultPaletteSize = 4;
inline constexpr int kPaletteSampleSide = 128;

Palette dominant_colors(const RasterImage& image, int k = kDefaultPaletteSize, std::uint64_t seed = 0);
Theme theme_from_palette(const Palette& palette);

/// Throws Error{contract} unless the palette satisfies its invariants.
void validate_palette(const Palette& palette);

std::string to_hex(Rgb c);
double relative_luminance(Rgb c);
double contrast_ratio(Rgb a, Rgb b);

nlohmann::json palette_to_json(const Palette& p);  // {"colors":[{"rgb":[r,g,b],"mass":m,"hex":"#rrggbb"}]}
Palette palette_from_json(const nlohmann::json& j);
nlohmann::json theme_to_json(const Theme& t);
Theme theme_from_json(const nlohmann::json& j);

}  // namespace bookvis
