#include "synth_covers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <cctype>
#include <random>

namespace bookvis::synth {

namespace {

using Glyph = std::array<std::uint8_t, 7>;

// 5x7 dots, bit 4 is the leftmost column.
Glyph glyph(char c) {
  switch (c) {
    case 'A': return {0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001};
    case 'B': return {0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110};
    case 'C': return {0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110};
    case 'D': return {0b11110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b11110};
    case 'E': return {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111};
    case 'F': return {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000};
    case 'G': return {0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111};
    case 'H': return {0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001};
    case 'I': return {0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110};
    case 'J': return {0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100};
    case 'K': return {0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001};
    case 'L': return {0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111};
    case 'M': return {0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001};
    case 'N': return {0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001};
    case 'O': return {0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110};
    case 'P': return {0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000};
    case 'Q': return {0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101};
    case 'R': return {0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001};
    case 'S': return {0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110};
    case 'T': return {0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100};
    case 'U': return {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110};
    case 'V': return {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100};
    case 'W': return {0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010};
    case 'X': return {0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001};
    case 'Y': return {0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100, 0b00100};
    case 'Z': return {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111};
    case '0': return {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110};
    case '1': return {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110};
    case '2': return {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111};
    case '3': return {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110};
    case '4': return {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010};
    case '5': return {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110};
    case '6': return {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110};
    case '7': return {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000};
    case '8': return {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110};
    case '9': return {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100};
    case '.': return {0, 0, 0, 0, 0, 0b01100, 0b01100};
    case '-': return {0, 0, 0, 0b11111, 0, 0, 0};
    case '\'': return {0b00100, 0b00100, 0b01000, 0, 0, 0, 0};
    default: return {};
  }
}

Rgb lerp(Rgb a, Rgb b, double t) {
  auto ch = [t](int x, int y) { return static_cast<std::uint8_t>(std::lround(x + (y - x) * t)); };
  return {ch(a.r, b.r), ch(a.g, b.g), ch(a.b, b.b)};
}

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  Rgb color() { return {static_cast<std::uint8_t>(integer(0, 255)), static_cast<std::uint8_t>(integer(0, 255)),
                        static_cast<std::uint8_t>(integer(0, 255))}; }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

double luma(Rgb c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

Rgb contrasting(Rng& rng, Rgb against) {
  for (int i = 0; i < 32; ++i) {
    const auto c = rng.color();
    if (std::abs(luma(c) - luma(against)) > 90) return c;
  }
  return luma(against) > 128 ? Rgb{20, 20, 20} : Rgb{240, 240, 240};
}

// Smooth lattice noise in [0,1].
class ValueNoise {
 public:
  ValueNoise(Rng& rng, int cells) : n_(cells + 2), v_(static_cast<std::size_t>(n_ * n_)) {
    for (auto& x : v_) x = rng.uniform(0, 1);
  }
  double at(double u, double v) const {  // u, v in [0, cells]
    const int i = static_cast<int>(u), j = static_cast<int>(v);
    const double fu = smooth(u - i), fv = smooth(v - j);
    const double a = get(i, j), b = get(i + 1, j), c = get(i, j + 1), d = get(i + 1, j + 1);
    return (a * (1 - fu) + b * fu) * (1 - fv) + (c * (1 - fu) + d * fu) * fv;
  }

 private:
  static double smooth(double t) { return t * t * (3 - 2 * t); }
  double get(int i, int j) const { return v_[static_cast<std::size_t>(std::min(j, n_ - 1) * n_ + std::min(i, n_ - 1))]; }
  int n_;
  std::vector<double> v_;
};

void fill_rect(RasterImage& img, int x0, int y0, int x1, int y1, Rgb c) {
  x0 = std::max(0, x0);
  y0 = std::max(0, y0);
  x1 = std::min(img.width(), x1);
  y1 = std::min(img.height(), y1);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) img.set(x, y, c);
}

void fill_circle(RasterImage& img, double cx, double cy, double r, Rgb c, double inner = 0) {
  const int x0 = std::max(0, static_cast<int>(cx - r)), x1 = std::min(img.width() - 1, static_cast<int>(cx + r) + 1);
  const int y0 = std::max(0, static_cast<int>(cy - r)), y1 = std::min(img.height() - 1, static_cast<int>(cy + r) + 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
      if (d <= r && d >= inner) img.set(x, y, c);
    }
  }
}

void fill_triangle(RasterImage& img, double ax, double ay, double bx, double by, double cx, double cy, Rgb c) {
  const int x0 = std::max(0, static_cast<int>(std::min({ax, bx, cx})));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::max({ax, bx, cx})) + 1);
  const int y0 = std::max(0, static_cast<int>(std::min({ay, by, cy})));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::max({ay, by, cy})) + 1);
  auto edge = [](double px, double py, double qx, double qy, double x, double y) {
    return (qx - px) * (y - py) - (qy - py) * (x - px);
  };
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double e0 = edge(ax, ay, bx, by, px, py), e1 = edge(bx, by, cx, cy, px, py), e2 = edge(cx, cy, ax, ay, px, py);
      if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0)) img.set(x, y, c);
    }
  }
}

std::vector<std::string> wrap(std::string_view text, std::size_t width) {
  std::vector<std::string> lines;
  std::string line;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (i == j) break;
    std::string word(text.substr(i, j - i));
    if (!line.empty() && line.size() + 1 + word.size() > width) {
      lines.push_back(line);
      line.clear();
    }
    line += (line.empty() ? "" : " ") + word;
    i = j;
  }
  if (!line.empty()) lines.push_back(line);
  return lines;
}

Rgb sample_bilinear(const RasterImage& img, double x, double y, Rgb fill) {
  // pixel centres sit at integer + 0.5
  x -= 0.5;
  y -= 0.5;
  if (x < -0.5 || y < -0.5 || x > img.width() - 0.5 || y > img.height() - 0.5) return fill;
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  auto px = [&](int xi, int yi) {
    return img.at(std::clamp(xi, 0, img.width() - 1), std::clamp(yi, 0, img.height() - 1));
  };
  const Rgb a = px(x0, y0), b = px(x0 + 1, y0), c = px(x0, y0 + 1), d = px(x0 + 1, y0 + 1);
  auto ch = [&](std::uint8_t p, std::uint8_t q, std::uint8_t r, std::uint8_t s) {
    return clamp_byte((p * (1 - fx) + q * fx) * (1 - fy) + (r * (1 - fx) + s * fx) * fy);
  };
  return {ch(a.r, b.r, c.r, d.r), ch(a.g, b.g, c.g, d.g), ch(a.b, b.b, c.b, d.b)};
}

// 3x3 homography, row-major, mapping (x, y, 1).
using Homography = std::array<double, 9>;

// Solves for H with H * src_i ~ dst_i for four correspondences.
Homography homography(const std::array<std::array<double, 2>, 4>& src, const std::array<std::array<double, 2>, 4>& dst) {
  double a[8][9] = {};
  for (int i = 0; i < 4; ++i) {
    const double x = src[i][0], y = src[i][1], u = dst[i][0], v = dst[i][1];
    double r0[9] = {x, y, 1, 0, 0, 0, -u * x, -u * y, u};
    double r1[9] = {0, 0, 0, x, y, 1, -v * x, -v * y, v};
    std::copy(r0, r0 + 9, a[2 * i]);
    std::copy(r1, r1 + 9, a[2 * i + 1]);
  }
  for (int c = 0; c < 8; ++c) {
    int piv = c;
    for (int r = c + 1; r < 8; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (int r = 0; r < 8; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 9; ++k) a[r][k] -= f * a[c][k];
    }
  }
  Homography h{};
  for (int i = 0; i < 8; ++i) h[i] = a[i][8] / a[i][i];
  h[8] = 1;
  return h;
}

RasterImage warp(const RasterImage& src, int out_w, int out_h, const Homography& out_to_src, Rgb fill) {
  RasterImage out(out_w, out_h, fill);
  const auto& h = out_to_src;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double X = x + 0.5, Y = y + 0.5;
      const double w = h[6] * X + h[7] * Y + h[8];
      const double sx = (h[0] * X + h[1] * Y + h[2]) / w;
      const double sy = (h[3] * X + h[4] * Y + h[5]) / w;
      out.set(x, y, sample_bilinear(src, sx, sy, fill));
    }
  }
  return out;
}

}  // namespace

void draw_text(RasterImage& img, int x, int y, std::string_view text, int scale, Rgb color) {
  int cx = x;
  for (char raw : text) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
    const auto g = glyph(c);
    for (int row = 0; row < 7; ++row) {
      for (int col = 0; col < 5; ++col) {
        if (g[row] & (1 << (4 - col))) fill_rect(img, cx + col * scale, y + row * scale, cx + (col + 1) * scale, y + (row + 1) * scale, color);
      }
    }
    cx += 6 * scale;
  }
}

RasterImage make_cover(std::uint64_t seed, std::string_view title, std::string_view author) {
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  const int W = kCoverWidth, H = kCoverHeight;
  RasterImage img(W, H);

  // gradient ground
  const Rgb g0 = rng.color(), g1 = rng.color();
  const double angle = rng.uniform(0, std::numbers::pi);
  const double dx = std::cos(angle), dy = std::sin(angle);
  const double span = std::abs(dx) * W + std::abs(dy) * H;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double t = ((x - W / 2.0) * dx + (y - H / 2.0) * dy) / span + 0.5;
      img.set(x, y, lerp(g0, g1, std::clamp(t, 0.0, 1.0)));
    }
  }

  // textured "photo" patch
  const int pw = rng.integer(W * 5 / 10, W * 8 / 10), ph = rng.integer(H * 3 / 10, H * 45 / 100);
  const int px = rng.integer(10, W - pw - 10), py = rng.integer(H / 3, H - ph - 20);
  {
    ValueNoise coarse(rng, 6), mid(rng, 14), fine(rng, 30);
    const Rgb c0 = rng.color(), c1 = rng.color(), c2 = rng.color();
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        const double u = static_cast<double>(x) / pw, v = static_cast<double>(y) / ph;
        const double n = 0.55 * coarse.at(u * 6, v * 6) + 0.3 * mid.at(u * 14, v * 14) + 0.15 * fine.at(u * 30, v * 30);
        const Rgb c = n < 0.5 ? lerp(c0, c1, n * 2) : lerp(c1, c2, (n - 0.5) * 2);
        img.set(px + x, py + y, c);
      }
    }
    const int blobs = rng.integer(3, 7);
    for (int b = 0; b < blobs; ++b) {
      fill_circle(img, px + rng.uniform(0.1, 0.9) * pw, py + rng.uniform(0.1, 0.9) * ph, rng.uniform(6, 22), rng.color());
    }
  }

  // geometric shapes, kept off the photo patch's centre
  const int shapes = rng.integer(5, 9);
  for (int s = 0; s < shapes; ++s) {
    const Rgb c = rng.color();
    const double cx = rng.uniform(0, W), cy = rng.uniform(0, H);
    switch (rng.integer(0, 4)) {
      case 0: fill_circle(img, cx, cy, rng.uniform(10, 45), c); break;
      case 1: {
        const int w = rng.integer(15, 90), h = rng.integer(10, 60);
        fill_rect(img, static_cast<int>(cx) - w / 2, static_cast<int>(cy) - h / 2, static_cast<int>(cx) + w / 2,
                  static_cast<int>(cy) + h / 2, c);
        break;
      }
      case 2: {
        const double r = rng.uniform(15, 50);
        fill_triangle(img, cx, cy - r, cx - r, cy + r * 0.8, cx + r * rng.uniform(0.4, 1.2), cy + r * 0.6, c);
        break;
      }
      case 3: {
        const double r = rng.uniform(18, 45);
        fill_circle(img, cx, cy, r, c, r * rng.uniform(0.45, 0.75));
        break;
      }
      default: {
        const int n = rng.integer(3, 6), thick = rng.integer(3, 8), gap = rng.integer(5, 12);
        const int len = rng.integer(40, 120);
        for (int k = 0; k < n; ++k) {
          const int y0 = static_cast<int>(cy) + k * (thick + gap);
          fill_rect(img, static_cast<int>(cx) - len / 2, y0, static_cast<int>(cx) + len / 2, y0 + thick, c);
        }
      }
    }
  }

  // title block on a band, author line near the bottom
  const auto lines = wrap(title, 9);
  const int ts = rng.integer(4, 5);
  const int band_top = rng.integer(16, 40);
  const int band_h = static_cast<int>(lines.size()) * 9 * ts + 2 * ts;
  const Rgb band = rng.color();
  fill_rect(img, 0, band_top, W, band_top + band_h, band);
  const Rgb ink = contrasting(rng, band);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int width = static_cast<int>(lines[i].size()) * 6 * ts - ts;
    draw_text(img, std::max(4, (W - width) / 2), band_top + ts + static_cast<int>(i) * 9 * ts, lines[i], ts, ink);
  }
  const Rgb foot = img.at(W / 2, H - 20);
  const int as = 2;
  const int aw = static_cast<int>(author.size()) * 6 * as;
  draw_text(img, std::max(4, (W - aw) / 2), H - 30, author, as, contrasting(rng, foot));
  return img;
}

RasterImage rotate(const RasterImage& img, double degrees, Rgb fill) {
  const double a = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  const double w = img.width(), h = img.height();
  const int out_w = static_cast<int>(std::ceil(std::abs(w * c) + std::abs(h * s)));
  const int out_h = static_cast<int>(std::ceil(std::abs(w * s) + std::abs(h * c)));
  RasterImage out(out_w, out_h, fill);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double ox = x + 0.5 - out_w / 2.0, oy = y + 0.5 - out_h / 2.0;
      // inverse rotation back into the source frame
      const double sx = c * ox + s * oy + w / 2.0;
      const double sy = -s * ox + c * oy + h / 2.0;
      out.set(x, y, sample_bilinear(img, sx, sy, fill));
    }
  }
  return out;
}

RasterImage scale(const RasterImage& img, double factor) {
  const int w = std::max(1, static_cast<int>(std::lround(img.width() * factor)));
  const int h = std::max(1, static_cast<int>(std::lround(img.height() * factor)));
  if (factor <= 1.0) return resize_area(img, w, h);
  RasterImage out(w, h);
  const double fx = static_cast<double>(img.width()) / w, fy = static_cast<double>(img.height()) / h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.set(x, y, sample_bilinear(img, (x + 0.5) * fx, (y + 0.5) * fy, {}));
  return out;
}

RasterImage adjust_brightness(const RasterImage& img, double factor) {
  RasterImage out = img;
  for (auto& b : out.bytes()) b = clamp_byte(b * factor);
  return out;
}

RasterImage perspective(const RasterImage& img, double degrees, Rgb fill) {
  // pinhole view of the cover turned `degrees` about its vertical axis
  const double a = degrees * std::numbers::pi / 180.0;
  const double w = img.width(), h = img.height();
  const double f = 1.5 * std::max(w, h);
  auto project = [&](double x, double y) -> std::array<double, 2> {
    const double X = (x - w / 2) * std::cos(a), Z = (x - w / 2) * std::sin(a), Y = y - h / 2;
    return {f * X / (f + Z), f * Y / (f + Z)};
  };
  std::array<std::array<double, 2>, 4> src = {{{0, 0}, {w, 0}, {w, h}, {0, h}}};
  std::array<std::array<double, 2>, 4> dst{};
  double minx = 1e18, miny = 1e18, maxx = -1e18, maxy = -1e18;
  for (int i = 0; i < 4; ++i) {
    dst[i] = project(src[i][0], src[i][1]);
    minx = std::min(minx, dst[i][0]);
    maxx = std::max(maxx, dst[i][0]);
    miny = std::min(miny, dst[i][1]);
    maxy = std::max(maxy, dst[i][1]);
  }
  const double margin = 8;
  for (auto& p : dst) {
    p[0] += margin - minx;
    p[1] += margin - miny;
  }
  const int out_w = static_cast<int>(std::ceil(maxx - minx + 2 * margin));
  const int out_h = static_cast<int>(std::ceil(maxy - miny + 2 * margin));
  return warp(img, out_w, out_h, homography(dst, src), fill);
}

std::vector<TransformedQuery> standard_transforms(const RasterImage& cover) {
  std::vector<TransformedQuery> out;
  out.push_back({"rotate+15", rotate(cover, 15)});
  out.push_back({"rotate-15", rotate(cover, -15)});
  out.push_back({"scale0.7", scale(cover, 0.7)});
  out.push_back({"scale1.4", scale(cover, 1.4)});
  out.push_back({"brightness+20", adjust_brightness(cover, 1.2)});
  out.push_back({"brightness-20", adjust_brightness(cover, 0.8)});
  out.push_back({"perspective10", perspective(cover, 10)});
  return out;
}

}  // namespace bookvis::synth
