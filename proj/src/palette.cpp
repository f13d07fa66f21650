#include "bookvis/palette.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bookvis/error.hpp"
#include "bookvis/kmeans.hpp"

namespace bookvis {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

double linear_channel(std::uint8_t c) {
  const double s = c / 255.0;
  return s <= 0.03928 ? s / 12.92 : std::pow((s + 0.055) / 1.055, 2.4);
}

double saturation(Rgb c) {
  const int mx = std::max({c.r, c.g, c.b});
  const int mn = std::min({c.r, c.g, c.b});
  return mx == 0 ? 0.0 : static_cast<double>(mx - mn) / mx;
}

}  // namespace

double relative_luminance(Rgb c) {
  return 0.2126 * linear_channel(c.r) + 0.7152 * linear_channel(c.g) + 0.0722 * linear_channel(c.b);
}

double contrast_ratio(Rgb a, Rgb b) {
  const double la = relative_luminance(a), lb = relative_luminance(b);
  return (std::max(la, lb) + 0.05) / (std::min(la, lb) + 0.05);
}

std::string to_hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

Palette dominant_colors(const RasterImage& image, int k, std::uint64_t seed) {
  if (image.empty()) throw Error(ErrorCode::validation, "empty image");
  k = std::clamp(k, 1, kDefaultPaletteSize);
  const int w = std::min(image.width(), kPaletteSampleSide);
  const int h = std::min(image.height(), kPaletteSampleSide);
  const auto sample = resize_area(image, w, h);

  std::vector<double> points;
  points.reserve(static_cast<std::size_t>(w) * h * 3);
  for (auto b : sample.bytes()) points.push_back(b);
  const auto res = kmeans(PointMatrix<double>{points, 3}, {.k = static_cast<std::size_t>(k), .seed = seed});

  std::vector<std::size_t> sizes(res.k(), 0);
  for (auto a : res.assignments) ++sizes[a];
  const double n = static_cast<double>(res.assignments.size());

  Palette p;
  for (std::size_t c = 0; c < res.k(); ++c) {
    if (sizes[c] == 0) continue;
    const auto cen = res.centroid(c);
    p.colors.push_back({{to_byte(cen[0]), to_byte(cen[1]), to_byte(cen[2])}, sizes[c] / n});
  }
  // heaviest first; equal masses put the darker color first
  std::sort(p.colors.begin(), p.colors.end(), [](const Swatch& a, const Swatch& b) {
    if (a.mass != b.mass) return a.mass > b.mass;
    const double la = relative_luminance(a.rgb), lb = relative_luminance(b.rgb);
    if (la != lb) return la < lb;
    return a.rgb < b.rgb;
  });
  return p;
}

void validate_palette(const Palette& p) {
  if (p.colors.empty() || p.colors.size() > static_cast<std::size_t>(kDefaultPaletteSize)) {
    throw Error(ErrorCode::contract, "palette must hold 1..4 colors");
  }
  double total = 0;
  for (std::size_t i = 0; i < p.colors.size(); ++i) {
    const double m = p.colors[i].mass;
    if (!(m > 0 && m <= 1)) throw Error(ErrorCode::contract, "palette mass outside (0,1]");
    if (i > 0 && m > p.colors[i - 1].mass) throw Error(ErrorCode::contract, "palette not sorted by mass");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-6) throw Error(ErrorCode::contract, "palette masses do not sum to 1");
}

Theme theme_from_palette(const Palette& p) {
  if (p.colors.empty()) throw Error(ErrorCode::contract, "theme needs a non-empty palette");
  Theme t;
  t.primary = p.colors[0].rgb;
  if (p.colors.size() > 1) {
    t.secondary = p.colors[1].rgb;
  } else {
    const auto d = [](std::uint8_t v) { return to_byte(v * 0.7); };
    t.secondary = {d(t.primary.r), d(t.primary.g), d(t.primary.b)};
  }
  t.accent = p.colors[0].rgb;
  double best_sat = -1;
  for (const auto& s : p.colors) {
    const double sat = saturation(s.rgb);
    if (sat > best_sat) {
      best_sat = sat;
      t.accent = s.rgb;
    }
  }
  Rgb lightest = p.colors[0].rgb;
  for (const auto& s : p.colors) {
    if (relative_luminance(s.rgb) > relative_luminance(lightest)) lightest = s.rgb;
  }
  const auto lift = [](std::uint8_t v) { return to_byte(v + 0.2 * (255 - v)); };
  t.background = {lift(lightest.r), lift(lightest.g), lift(lightest.b)};
  const Rgb black{0, 0, 0}, white{255, 255, 255};
  t.text_on_primary = contrast_ratio(white, t.primary) >= contrast_ratio(black, t.primary) ? white : black;
  return t;
}

nlohmann::json palette_to_json(const Palette& p) {
  nlohmann::json colors = nlohmann::json::array();
  for (const auto& s : p.colors) {
    colors.push_back({{"rgb", {s.rgb.r, s.rgb.g, s.rgb.b}}, {"mass", s.mass}, {"hex", to_hex(s.rgb)}});
  }
  nlohmann::json j = {{"colors", colors}};
  if (p.source_book) j["source_book"] = *p.source_book;
  return j;
}

Palette palette_from_json(const nlohmann::json& j) {
  Palette p;
  for (const auto& c : j.at("colors")) {
    const auto& rgb = c.at("rgb");
    p.colors.push_back({{rgb.at(0).get<std::uint8_t>(), rgb.at(1).get<std::uint8_t>(), rgb.at(2).get<std::uint8_t>()},
                        c.at("mass").get<double>()});
  }
  if (j.contains("source_book") && j["source_book"].is_string()) p.source_book = j["source_book"].get<std::string>();
  return p;
}

namespace {
nlohmann::json rgb_json(Rgb c) { return to_hex(c); }
Rgb rgb_from_hex(const std::string& s) {
  unsigned r = 0, g = 0, b = 0;
  if (s.size() != 7 || std::sscanf(s.c_str(), "#%02x%02x%02x", &r, &g, &b) != 3) {
    throw Error(ErrorCode::format, "bad hex color: " + s);
  }
  return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}
}  // namespace

nlohmann::json theme_to_json(const Theme& t) {
  return {{"primary", rgb_json(t.primary)},
          {"secondary", rgb_json(t.secondary)},
          {"accent", rgb_json(t.accent)},
          {"background", rgb_json(t.background)},
          {"text_on_primary", rgb_json(t.text_on_primary)}};
}

Theme theme_from_json(const nlohmann::json& j) {
  return {rgb_from_hex(j.at("primary")), rgb_from_hex(j.at("secondary")), rgb_from_hex(j.at("accent")),
          rgb_from_hex(j.at("background")), rgb_from_hex(j.at("text_on_primary"))};
}

}  // namespace bookvis
