#include "bookvis/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace bookvis {

void to_json(nlohmann::json& j, const FeatureParams& p) {
  j = {
      {"octaves", p.octaves},
      {"scales_per_octave", p.scales_per_octave},
      {"base_sigma", p.base_sigma},
      {"assumed_blur", p.assumed_blur},
      {"contrast_threshold", p.contrast_threshold},
      {"edge_ratio", p.edge_ratio},
      {"orientation_bins", p.orientation_bins},
      {"orientation_peak_ratio", p.orientation_peak_ratio},
      {"descriptor_clip", p.descriptor_clip},
      {"max_dimension", p.max_dimension},
  };
}

void from_json(const nlohmann::json& j, FeatureParams& p) {
  FeatureParams d;
  p.octaves = j.value("octaves", d.octaves);
  p.scales_per_octave = j.value("scales_per_octave", d.scales_per_octave);
  p.base_sigma = j.value("base_sigma", d.base_sigma);
  p.assumed_blur = j.value("assumed_blur", d.assumed_blur);
  p.contrast_threshold = j.value("contrast_threshold", d.contrast_threshold);
  p.edge_ratio = j.value("edge_ratio", d.edge_ratio);
  p.orientation_bins = j.value("orientation_bins", d.orientation_bins);
  p.orientation_peak_ratio = j.value("orientation_peak_ratio", d.orientation_peak_ratio);
  p.descriptor_clip = j.value("descriptor_clip", d.descriptor_clip);
  p.max_dimension = j.value("max_dimension", d.max_dimension);
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kBorder = 5;
constexpr int kMaxInterpSteps = 5;
constexpr int kDescCells = 4;
constexpr int kDescBins = 8;
constexpr double kOrientSigmaFactor = 1.5;
constexpr double kOrientRadiusFactor = 3.0 * kOrientSigmaFactor;
constexpr double kDescCellWidth = 3.0;  // cell width in units of keypoint sigma

struct Plane {
  int w = 0, h = 0;
  std::vector<float> v;

  Plane() = default;
  Plane(int width, int height) : w(width), h(height), v(static_cast<std::size_t>(width) * height, 0.0f) {}
  float operator()(int x, int y) const noexcept { return v[static_cast<std::size_t>(y) * w + x]; }
  float& operator()(int x, int y) noexcept { return v[static_cast<std::size_t>(y) * w + x]; }
};

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<float> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (auto& x : k) x = static_cast<float>(x / sum);
  return k;
}

// Separable blur with replicated borders.
Plane blur(const Plane& src, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  Plane tmp(src.w, src.h), out(src.w, src.h);
  std::vector<float> row(src.w + 2 * r);
  for (int y = 0; y < src.h; ++y) {
    for (int x = -r; x < src.w + r; ++x) row[x + r] = src(std::clamp(x, 0, src.w - 1), y);
    for (int x = 0; x < src.w; ++x) {
      float acc = 0;
      for (int i = 0; i <= 2 * r; ++i) acc += k[i] * row[x + i];
      tmp(x, y) = acc;
    }
  }
  std::vector<float> col(src.h + 2 * r);
  for (int x = 0; x < src.w; ++x) {
    for (int y = -r; y < src.h + r; ++y) col[y + r] = tmp(x, std::clamp(y, 0, src.h - 1));
    for (int y = 0; y < src.h; ++y) {
      float acc = 0;
      for (int i = 0; i <= 2 * r; ++i) acc += k[i] * col[y + i];
      out(x, y) = acc;
    }
  }
  return out;
}

Plane halve(const Plane& src) {
  Plane out(src.w / 2, src.h / 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) out(x, y) = src(2 * x, 2 * y);
  return out;
}

Plane subtract(const Plane& a, const Plane& b) {
  Plane out(a.w, a.h);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] - b.v[i];
  return out;
}

struct Octave {
  std::vector<Plane> gauss;  // S + 3 levels
  std::vector<Plane> dog;    // S + 2 levels
};

struct Candidate {
  int octave;
  int layer;
  double x, y;        // octave pixels, refined
  double sigma;       // octave-relative sigma
};

class DogDetector {
 public:
  DogDetector(const std::vector<Octave>& pyramid, const FeatureParams& p) : pyr_(pyramid), p_(p) {}

  std::vector<Candidate> detect() const {
    std::vector<Candidate> out;
    const int S = p_.scales_per_octave;
    const float prefilter = static_cast<float>(0.5 * p_.contrast_threshold);
    for (int o = 0; o < static_cast<int>(pyr_.size()); ++o) {
      const auto& dog = pyr_[o].dog;
      for (int s = 1; s <= S; ++s) {
        const auto& cur = dog[s];
        for (int y = kBorder; y < cur.h - kBorder; ++y) {
          for (int x = kBorder; x < cur.w - kBorder; ++x) {
            const float v = cur(x, y);
            if (std::abs(v) <= prefilter) continue;
            if (!is_extremum(dog, s, x, y, v)) continue;
            if (auto c = refine(o, s, x, y)) out.push_back(*c);
          }
        }
      }
    }
    return out;
  }

 private:
  static bool is_extremum(const std::vector<Plane>& dog, int s, int x, int y, float v) {
    const bool is_max = v > 0;
    for (int ds = -1; ds <= 1; ++ds) {
      const auto& pl = dog[s + ds];
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (ds == 0 && dy == 0 && dx == 0) continue;
          const float n = pl(x + dx, y + dy);
          if (is_max ? n > v : n < v) return false;
        }
      }
    }
    return true;
  }

  std::optional<Candidate> refine(int o, int s, int x, int y) const {
    const auto& dog = pyr_[o].dog;
    const int S = p_.scales_per_octave;
    double off[3] = {0, 0, 0};
    double grad[3] = {0, 0, 0};
    int step = 0;
    for (; step < kMaxInterpSteps; ++step) {
      const auto& prev = dog[s - 1];
      const auto& cur = dog[s];
      const auto& next = dog[s + 1];
      const double c2 = 2.0 * cur(x, y);
      grad[0] = 0.5 * (cur(x + 1, y) - cur(x - 1, y));
      grad[1] = 0.5 * (cur(x, y + 1) - cur(x, y - 1));
      grad[2] = 0.5 * (next(x, y) - prev(x, y));
      const double dxx = cur(x + 1, y) + cur(x - 1, y) - c2;
      const double dyy = cur(x, y + 1) + cur(x, y - 1) - c2;
      const double dss = next(x, y) + prev(x, y) - c2;
      const double dxy = 0.25 * (cur(x + 1, y + 1) - cur(x - 1, y + 1) - cur(x + 1, y - 1) + cur(x - 1, y - 1));
      const double dxs = 0.25 * (next(x + 1, y) - next(x - 1, y) - prev(x + 1, y) + prev(x - 1, y));
      const double dys = 0.25 * (next(x, y + 1) - next(x, y - 1) - prev(x, y + 1) + prev(x, y - 1));
      const double H[3][3] = {{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}};
      if (!solve3(H, grad, off)) return std::nullopt;
      if (std::abs(off[0]) < 0.5 && std::abs(off[1]) < 0.5 && std::abs(off[2]) < 0.5) break;
      if (std::abs(off[0]) > 1e6 || std::abs(off[1]) > 1e6 || std::abs(off[2]) > 1e6) return std::nullopt;
      x += static_cast<int>(std::lround(off[0]));
      y += static_cast<int>(std::lround(off[1]));
      s += static_cast<int>(std::lround(off[2]));
      if (s < 1 || s > S || x < kBorder || x >= dog[s].w - kBorder || y < kBorder || y >= dog[s].h - kBorder) {
        return std::nullopt;
      }
    }
    if (step >= kMaxInterpSteps) return std::nullopt;

    const auto& cur = dog[s];
    const double contrast = cur(x, y) + 0.5 * (grad[0] * off[0] + grad[1] * off[1] + grad[2] * off[2]);
    if (std::abs(contrast) < p_.contrast_threshold) return std::nullopt;

    const double c2 = 2.0 * cur(x, y);
    const double dxx = cur(x + 1, y) + cur(x - 1, y) - c2;
    const double dyy = cur(x, y + 1) + cur(x, y - 1) - c2;
    const double dxy = 0.25 * (cur(x + 1, y + 1) - cur(x - 1, y + 1) - cur(x + 1, y - 1) + cur(x - 1, y - 1));
    const double tr = dxx + dyy;
    const double det = dxx * dyy - dxy * dxy;
    const double r = p_.edge_ratio;
    if (det <= 0 || tr * tr * r >= (r + 1) * (r + 1) * det) return std::nullopt;

    Candidate c;
    c.octave = o;
    c.layer = s;
    c.x = x + off[0];
    c.y = y + off[1];
    c.sigma = p_.base_sigma * std::pow(2.0, (s + off[2]) / S);
    return c;
  }

  // Solves H * off = -g by Cramer's rule.
  static bool solve3(const double H[3][3], const double g[3], double off[3]) {
    const double det = H[0][0] * (H[1][1] * H[2][2] - H[1][2] * H[2][1]) -
                       H[0][1] * (H[1][0] * H[2][2] - H[1][2] * H[2][0]) +
                       H[0][2] * (H[1][0] * H[2][1] - H[1][1] * H[2][0]);
    if (std::abs(det) < 1e-12) return false;
    for (int col = 0; col < 3; ++col) {
      double M[3][3];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) M[r][c] = c == col ? -g[r] : H[r][c];
      const double d = M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
                       M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                       M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
      off[col] = d / det;
    }
    return true;
  }

  const std::vector<Octave>& pyr_;
  const FeatureParams& p_;
};

std::vector<double> dominant_orientations(const Plane& img, const Candidate& c, const FeatureParams& p) {
  const int bins = p.orientation_bins;
  std::vector<double> hist(bins, 0.0);
  const double sigma_w = kOrientSigmaFactor * c.sigma;
  const int radius = static_cast<int>(std::lround(kOrientRadiusFactor * c.sigma));
  const int cx = static_cast<int>(std::lround(c.x));
  const int cy = static_cast<int>(std::lround(c.y));
  const double denom = -1.0 / (2.0 * sigma_w * sigma_w);
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = cy + dy;
    if (y <= 0 || y >= img.h - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx;
      if (x <= 0 || x >= img.w - 1) continue;
      const double gx = img(x + 1, y) - img(x - 1, y);
      const double gy = img(x, y + 1) - img(x, y - 1);
      const double mag = std::sqrt(gx * gx + gy * gy);
      double ang = std::atan2(gy, gx);
      if (ang < 0) ang += kTwoPi;
      int bin = static_cast<int>(std::lround(ang * bins / kTwoPi));
      if (bin >= bins) bin -= bins;
      hist[bin] += std::exp((dx * dx + dy * dy) * denom) * mag;
    }
  }

  std::vector<double> smooth(bins);
  for (int i = 0; i < bins; ++i) {
    auto at = [&](int k) { return hist[(k % bins + bins) % bins]; };
    smooth[i] = (at(i - 2) + at(i + 2)) * (1.0 / 16) + (at(i - 1) + at(i + 1)) * (4.0 / 16) + at(i) * (6.0 / 16);
  }
  const double peak = *std::max_element(smooth.begin(), smooth.end());
  std::vector<double> out;
  if (peak <= 0) return out;
  for (int i = 0; i < bins; ++i) {
    const double l = smooth[(i - 1 + bins) % bins];
    const double r = smooth[(i + 1) % bins];
    const double v = smooth[i];
    if (v > l && v > r && v >= p.orientation_peak_ratio * peak) {
      const double offset = 0.5 * (l - r) / (l - 2 * v + r);
      double bin = i + offset;
      if (bin < 0) bin += bins;
      if (bin >= bins) bin -= bins;
      double ang = bin * kTwoPi / bins;
      if (ang >= kTwoPi) ang -= kTwoPi;
      if (ang < 0) ang = 0;
      out.push_back(ang);
    }
  }
  return out;
}

// Gradient histograms over a 4x4 grid rotated to the keypoint orientation,
// with trilinear vote spreading across (row, col, orientation).
bool compute_descriptor(const Plane& img, const Candidate& c, double orientation, const FeatureParams& p,
                        DescriptorVector& out) {
  constexpr int d = kDescCells;
  constexpr int n = kDescBins;
  const double hist_width = kDescCellWidth * c.sigma;
  const int radius = std::min(static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (d + 1) * 0.5)),
                              static_cast<int>(std::hypot(img.w, img.h)));
  const double cos_t = std::cos(orientation) / hist_width;
  const double sin_t = std::sin(orientation) / hist_width;
  const double bins_per_rad = n / kTwoPi;
  const double exp_scale = -1.0 / (d * d * 0.5);
  const int cx = static_cast<int>(std::lround(c.x));
  const int cy = static_cast<int>(std::lround(c.y));

  std::array<double, (d + 2) * (d + 2) * (n + 2)> hist{};
  auto idx = [](int r, int col, int o) { return (r * (d + 2) + col) * (n + 2) + o; };

  for (int i = -radius; i <= radius; ++i) {
    const int y = cy + i;
    if (y <= 0 || y >= img.h - 1) continue;
    for (int j = -radius; j <= radius; ++j) {
      const int x = cx + j;
      if (x <= 0 || x >= img.w - 1) continue;
      // sample offset expressed in the keypoint frame
      const double c_rot = j * cos_t + i * sin_t;
      const double r_rot = -j * sin_t + i * cos_t;
      const double rbin = r_rot + d / 2.0 - 0.5;
      const double cbin = c_rot + d / 2.0 - 0.5;
      if (!(rbin > -1 && rbin < d && cbin > -1 && cbin < d)) continue;

      const double gx = img(x + 1, y) - img(x - 1, y);
      const double gy = img(x, y + 1) - img(x, y - 1);
      const double mag = std::sqrt(gx * gx + gy * gy) * std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);
      double ang = std::atan2(gy, gx) - orientation;
      while (ang < 0) ang += kTwoPi;
      while (ang >= kTwoPi) ang -= kTwoPi;
      const double obin = ang * bins_per_rad;

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      int o0 = static_cast<int>(std::floor(obin));
      const double fr = rbin - r0, fc = cbin - c0, fo = obin - o0;
      if (o0 < 0) o0 += n;
      if (o0 >= n) o0 -= n;
      for (int dr = 0; dr <= 1; ++dr) {
        const double wr = dr ? fr : 1 - fr;
        for (int dc = 0; dc <= 1; ++dc) {
          const double wc = dc ? fc : 1 - fc;
          for (int dob = 0; dob <= 1; ++dob) {
            const double wo = dob ? fo : 1 - fo;
            hist[idx(r0 + 1 + dr, c0 + 1 + dc, o0 + dob)] += mag * wr * wc * wo;
          }
        }
      }
    }
  }

  std::array<double, kDescriptorSize> v{};
  for (int r = 0; r < d; ++r) {
    for (int col = 0; col < d; ++col) {
      // orientation wrap: bin n folds onto bin 0
      const double wrap = hist[idx(r + 1, col + 1, n)];
      for (int o = 0; o < n; ++o) {
        double val = hist[idx(r + 1, col + 1, o)];
        if (o == 0) val += wrap;
        v[(r * d + col) * n + o] = val;
      }
    }
  }

  auto normalize = [&v]() {
    double sq = 0;
    for (double x : v) sq += x * x;
    if (sq <= 0) return false;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
    return true;
  };
  if (!normalize()) return false;
  for (double& x : v) x = std::min(x, p.descriptor_clip);
  if (!normalize()) return false;
  for (std::size_t i = 0; i < kDescriptorSize; ++i) out[i] = static_cast<float>(v[i]);
  return true;
}

}  // namespace

DescriptorSet extract_descriptors(const RasterImage& image, const FeatureParams& params) {
  DescriptorSet result;
  result.source_width = image.width();
  result.source_height = image.height();
  if (image.empty()) return result;

  const RasterImage* working = &image;
  RasterImage resized;
  double to_input = 1.0;
  const int long_side = std::max(image.width(), image.height());
  if (params.max_dimension > 0 && long_side > params.max_dimension) {
    const double f = static_cast<double>(params.max_dimension) / long_side;
    const int w = std::max(1, static_cast<int>(std::lround(image.width() * f)));
    const int h = std::max(1, static_cast<int>(std::lround(image.height() * f)));
    resized = resize_area(image, w, h);
    working = &resized;
    to_input = static_cast<double>(image.width()) / w;
  }

  Plane base(working->width(), working->height());
  base.v = to_gray(*working);

  const int S = params.scales_per_octave;
  const double sigma = params.base_sigma;
  const double init = std::sqrt(std::max(sigma * sigma - params.assumed_blur * params.assumed_blur, 0.01));
  std::vector<double> incr(S + 3);
  for (int i = 1; i < S + 3; ++i) {
    const double prev = sigma * std::pow(2.0, (i - 1.0) / S);
    const double total = prev * std::pow(2.0, 1.0 / S);
    incr[i] = std::sqrt(total * total - prev * prev);
  }

  constexpr int kMinOctaveSide = 2 * kBorder + 6;
  std::vector<Octave> pyramid;
  for (int o = 0; o < params.octaves; ++o) {
    Plane first = o == 0 ? blur(base, init) : halve(pyramid.back().gauss[S]);
    if (first.w < kMinOctaveSide || first.h < kMinOctaveSide) break;
    Octave oct;
    oct.gauss.push_back(std::move(first));
    for (int i = 1; i < S + 3; ++i) oct.gauss.push_back(blur(oct.gauss.back(), incr[i]));
    for (int i = 0; i < S + 2; ++i) oct.dog.push_back(subtract(oct.gauss[i + 1], oct.gauss[i]));
    pyramid.push_back(std::move(oct));
  }
  if (pyramid.empty()) return result;

  const auto candidates = DogDetector(pyramid, params).detect();
  for (const auto& c : candidates) {
    const auto& img = pyramid[c.octave].gauss[c.layer];
    const double octave_scale = std::ldexp(1.0, c.octave) * to_input;
    for (double ang : dominant_orientations(img, c, params)) {
      Descriptor desc;
      if (!compute_descriptor(img, c, ang, params, desc.vector)) continue;
      desc.keypoint.x = std::clamp(c.x * octave_scale, 0.0, std::nextafter(static_cast<double>(image.width()), 0.0));
      desc.keypoint.y = std::clamp(c.y * octave_scale, 0.0, std::nextafter(static_cast<double>(image.height()), 0.0));
      desc.keypoint.scale = c.sigma * octave_scale;
      desc.keypoint.orientation = ang;
      result.descriptors.push_back(desc);
    }
  }
  return result;
}

}  // namespace bookvis
