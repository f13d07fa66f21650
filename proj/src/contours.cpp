#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "bookvis/taste.hpp"

namespace bookvis {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

// The lattice is padded with a ring of zeros sitting on the boundary
// coordinates, so every contour of a positive level closes inside the bounds.
class PaddedField {
 public:
  explicit PaddedField(const DensityGrid& g) : g_(g) {}
  static constexpr int kSide = DensityGrid::kSize + 2;

  double value(int i, int j) const {
    if (i == 0 || j == 0 || i == kSide - 1 || j == kSide - 1) return 0.0;
    return g_.at(i - 1, j - 1);
  }
  static double coord(int i) { return DensityGrid::coordinate(std::clamp(i - 1, 0, DensityGrid::kSize - 1)); }

 private:
  const DensityGrid& g_;
};

// Edge key: horizontal edges (i,j)-(i+1,j) and vertical edges (i,j)-(i,j+1).
std::uint32_t edge_key(int i, int j, bool vertical) {
  return (static_cast<std::uint32_t>(j) * PaddedField::kSide + static_cast<std::uint32_t>(i)) * 2u + (vertical ? 1u : 0u);
}

}  // namespace

std::vector<Polyline> marching_squares(const DensityGrid& grid, double level) {
  PaddedField f(grid);
  constexpr int n = PaddedField::kSide;
  std::map<std::uint32_t, Point> points;
  std::map<std::uint32_t, std::vector<std::uint32_t>> adj;

  auto crossing = [&](int i0, int j0, int i1, int j1, std::uint32_t key) {
    if (points.count(key)) return;
    const double a = f.value(i0, j0), b = f.value(i1, j1);
    const double t = b == a ? 0.5 : (level - a) / (b - a);
    const double x0 = PaddedField::coord(i0), y0 = PaddedField::coord(j0);
    const double x1 = PaddedField::coord(i1), y1 = PaddedField::coord(j1);
    points[key] = {x0 + t * (x1 - x0), y0 + t * (y1 - y0)};
  };
  auto link = [&](std::uint32_t a, std::uint32_t b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };

  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const bool in[4] = {f.value(i, j) >= level, f.value(i + 1, j) >= level, f.value(i + 1, j + 1) >= level,
                          f.value(i, j + 1) >= level};
      // edges: 0 bottom (c0-c1), 1 right (c1-c2), 2 top (c3-c2), 3 left (c0-c3)
      const std::uint32_t keys[4] = {edge_key(i, j, false), edge_key(i + 1, j, true), edge_key(i, j + 1, false),
                                     edge_key(i, j, true)};
      const bool cut[4] = {in[0] != in[1], in[1] != in[2], in[3] != in[2], in[0] != in[3]};
      if (cut[0]) crossing(i, j, i + 1, j, keys[0]);
      if (cut[1]) crossing(i + 1, j, i + 1, j + 1, keys[1]);
      if (cut[2]) crossing(i, j + 1, i + 1, j + 1, keys[2]);
      if (cut[3]) crossing(i, j, i, j + 1, keys[3]);
      const int cuts = cut[0] + cut[1] + cut[2] + cut[3];
      if (cuts == 2) {
        int e[2], k = 0;
        for (int c = 0; c < 4; ++c)
          if (cut[c]) e[k++] = c;
        link(keys[e[0]], keys[e[1]]);
      } else if (cuts == 4) {
        // saddle: cut off the corners that disagree with the cell centre
        const double centre =
            0.25 * (f.value(i, j) + f.value(i + 1, j) + f.value(i + 1, j + 1) + f.value(i, j + 1));
        const bool centre_in = centre >= level;
        static constexpr int corner_edges[4][2] = {{3, 0}, {0, 1}, {1, 2}, {2, 3}};
        for (int c = 0; c < 4; ++c) {
          if (in[c] != centre_in) link(keys[corner_edges[c][0]], keys[corner_edges[c][1]]);
        }
      }
    }
  }

  // With the zero padding every crossing has exactly two neighbours.
  std::vector<Polyline> loops;
  std::map<std::uint32_t, bool> used;
  for (const auto& [start, _] : adj) {
    if (used[start]) continue;
    Polyline loop;
    std::uint32_t prev = start, cur = start;
    while (!used[cur]) {
      used[cur] = true;
      const auto& p = points.at(cur);
      if (loop.empty() || loop.back() != p) loop.push_back(p);
      const auto& nb = adj.at(cur);
      const std::uint32_t next = (nb[0] != prev || nb.size() < 2 || cur == start) ? nb[0] : nb[1];
      prev = cur;
      cur = next;
    }
    while (loop.size() > 1 && loop.back() == loop.front()) loop.pop_back();
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  return loops;
}

bool point_in_polygon(Point p, const Polyline& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

std::vector<ContourLevel> selfie_contours(const TasteModel& model, std::span<const double> quantiles) {
  std::vector<double> positive;
  for (double v : model.density.values)
    if (v > 0) positive.push_back(v);
  std::vector<ContourLevel> out;
  if (positive.empty()) return out;
  for (double q : quantiles) {
    ContourLevel c;
    c.quantile = q;
    c.level = quantile(positive, q);
    c.loops = marching_squares(model.density, c.level);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace bookvis
