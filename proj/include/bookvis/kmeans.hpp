#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "bookvis/error.hpp"

namespace bookvis {

/// Row-major view over `count` points of dimension `dim`.
template <class T>
struct PointMatrix {
  std::span<const T> data;
  std::size_t dim = 0;

  std::size_t count() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const T> row(std::size_t i) const noexcept { return data.subspan(i * dim, dim); }
};

struct KMeansParams {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  int max_iterations = 50;
  double tolerance = 1e-4;  // relative objective improvement
};

struct KMeansResult {
  std::size_t dim = 0;
  std::vector<double> centroids;           // k x dim, row-major
  std::vector<std::uint32_t> assignments;  // per point
  std::vector<double> objective_trace;     // sum of squared distances after each assignment step

  std::size_t k() const noexcept { return dim == 0 ? 0 : centroids.size() / dim; }
  std::span<const double> centroid(std::size_t c) const noexcept {
    return std::span<const double>(centroids).subspan(c * dim, dim);
  }
};

namespace detail {

template <class T>
double squared_distance(std::span<const T> a, std::span<const double> b) noexcept {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  const std::size_t n = a.size();
  for (; i + 4 <= n; i += 4) {
    const double d0 = a[i] - b[i], d1 = a[i + 1] - b[i + 1], d2 = a[i + 2] - b[i + 2], d3 = a[i + 3] - b[i + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

// Uniform in [0,1) from the top 53 bits; independent of the standard library's distributions.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding. When the data holds fewer than k
/// distinct points, that many centroids are returned. Empty clusters are
/// re-seeded from the point farthest from its centroid, so the objective never
/// increases between iterations. Ties in assignment go to the lowest index.
template <class T>
KMeansResult kmeans(PointMatrix<T> points, const KMeansParams& params) {
  const std::size_t n = points.count();
  const std::size_t dim = points.dim;
  if (n == 0 || dim == 0) throw Error(ErrorCode::validation, "kmeans: no points");
  if (params.k == 0) throw Error(ErrorCode::validation, "kmeans: k must be >= 1");

  KMeansResult res;
  res.dim = dim;
  std::mt19937_64 rng(params.seed);

  auto push_point = [&](std::size_t i) {
    for (auto v : points.row(i)) res.centroids.push_back(static_cast<double>(v));
  };

  // k-means++ seeding
  std::vector<double> nearest(n);
  push_point(static_cast<std::size_t>(detail::unit_uniform(rng) * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) nearest[i] = detail::squared_distance(points.row(i), res.centroid(0));
  while (res.k() < params.k) {
    double total = 0;
    for (double d : nearest) total += d;
    if (total <= 0) break;  // every remaining point coincides with a centroid
    const double target = detail::unit_uniform(rng) * total;
    double cum = 0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest[i] <= 0) continue;
      cum += nearest[i];
      pick = i;
      if (cum > target) break;
    }
    push_point(pick);
    const auto c = res.centroid(res.k() - 1);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], detail::squared_distance(points.row(i), c));
  }

  const std::size_t k = res.k();
  res.assignments.assign(n, 0);
  std::vector<double> dist(n);
  auto assign = [&]() {
    double objective = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = points.row(i);
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = detail::squared_distance(p, res.centroid(c));
        if (d < best) {
          best = d;
          arg = static_cast<std::uint32_t>(c);
        }
      }
      res.assignments[i] = arg;
      dist[i] = best;
      objective += best;
    }
    res.objective_trace.push_back(objective);
  };

  assign();
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> sizes(k);
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = res.assignments[i];
      ++sizes[c];
      const auto p = points.row(i);
      for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += static_cast<double>(p[j]);
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) {
        for (std::size_t j = 0; j < dim; ++j) res.centroids[c * dim + j] = sums[c * dim + j] / static_cast<double>(sizes[c]);
        continue;
      }
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && (far == n || dist[i] > dist[far])) far = i;
      }
      if (far == n) continue;
      taken[far] = true;
      const auto p = points.row(far);
      for (std::size_t j = 0; j < dim; ++j) res.centroids[c * dim + j] = static_cast<double>(p[j]);
    }
    const double prev = res.objective_trace.back();
    assign();
    const double cur = res.objective_trace.back();
    if (prev <= 0 || (prev - cur) / prev < params.tolerance) break;
  }
  return res;
}

}  // namespace bookvis
