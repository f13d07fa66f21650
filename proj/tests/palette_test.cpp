#include <gtest/gtest.h>

#include <random>

#include "bookvis/error.hpp"
#include "bookvis/kmeans.hpp"
#include "bookvis/palette.hpp"
#include "support.hpp"
#include "synth_covers.hpp"

using namespace bookvis;

namespace {

std::vector<double> fuzz_points(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::vector<double> pts(n * dim);
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> snap(0, 3);
  for (auto& v : pts) v = snap(rng) == 0 ? std::round(u(rng)) : u(rng);  // duplicates are common
  return pts;
}

}  // namespace

TEST(KMeans, IdenticalPointsCollapseToOneCentroid) {
  const std::vector<double> pts(30, 2.5);  // ten copies of (2.5, 2.5, 2.5)
  const auto r = kmeans(PointMatrix<double>{pts, 3}, {.k = 3});
  ASSERT_EQ(r.k(), 1u);
  for (double v : r.centroid(0)) EXPECT_EQ(v, 2.5);
}

TEST(KMeans, SeparatedCloudsRecoverTheirMeans) {
  std::vector<double> pts;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  double sa[2] = {0, 0}, sb[2] = {0, 0};
  for (int i = 0; i < 50; ++i) {
    const double ax = jitter(rng), ay = jitter(rng), bx = 100 + jitter(rng), by = 50 + jitter(rng);
    pts.insert(pts.end(), {ax, ay, bx, by});
    sa[0] += ax;
    sa[1] += ay;
    sb[0] += bx;
    sb[1] += by;
  }
  const auto r = kmeans(PointMatrix<double>{pts, 2}, {.k = 2, .seed = 9});
  ASSERT_EQ(r.k(), 2u);
  std::vector<std::vector<double>> got = {{r.centroid(0)[0], r.centroid(0)[1]}, {r.centroid(1)[0], r.centroid(1)[1]}};
  std::sort(got.begin(), got.end());
  EXPECT_NEAR(got[0][0], sa[0] / 50, 1e-9);
  EXPECT_NEAR(got[0][1], sa[1] / 50, 1e-9);
  EXPECT_NEAR(got[1][0], sb[0] / 50, 1e-9);
  EXPECT_NEAR(got[1][1], sb[1] / 50, 1e-9);
}

TEST(KMeans, ObjectiveMonotoneOnFuzzInputs) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 80)(rng);
    const std::size_t dim = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
    const auto pts = fuzz_points(rng, n, dim);
    const auto r = kmeans(PointMatrix<double>{pts, dim}, {.k = std::uniform_int_distribution<std::size_t>(1, 8)(rng), .seed = rng()});
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      ASSERT_LE(r.objective_trace[i], r.objective_trace[i - 1] * (1 + 1e-12) + 1e-12) << "trial " << trial;
    ASSERT_EQ(r.assignments.size(), n);
    for (auto a : r.assignments) ASSERT_LT(a, r.k());
  }
}

TEST(KMeans, DeterministicUnderSeed) {
  std::mt19937_64 rng(5);
  const auto pts = fuzz_points(rng, 200, 3);
  const auto a = kmeans(PointMatrix<double>{pts, 3}, {.k = 4, .seed = 11});
  const auto b = kmeans(PointMatrix<double>{pts, 3}, {.k = 4, .seed = 11});
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.objective_trace, b.objective_trace);
}

TEST(KMeans, RejectsEmptyInputAndZeroK) {
  const std::vector<double> none;
  EXPECT_THROW(kmeans(PointMatrix<double>{none, 3}, {.k = 2}), Error);
  const std::vector<double> one = {1, 2};
  EXPECT_THROW(kmeans(PointMatrix<double>{one, 2}, {.k = 0}), Error);
}

TEST(Palette, MonochromeCover) {
  const auto p = dominant_colors(RasterImage(60, 90, {0, 0, 255}));
  ASSERT_EQ(p.colors.size(), 1u);
  EXPECT_EQ(p.colors[0].rgb, (Rgb{0, 0, 255}));
  EXPECT_DOUBLE_EQ(p.colors[0].mass, 1.0);
}

TEST(Palette, HalfBlackHalfWhiteExact) {
  RasterImage img(128, 64, {255, 255, 255});
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) img.set(x, y, {0, 0, 0});
  const auto p = dominant_colors(img, 2);
  ASSERT_EQ(p.colors.size(), 2u);
  EXPECT_EQ(p.colors[0].rgb, (Rgb{0, 0, 0}));
  EXPECT_DOUBLE_EQ(p.colors[0].mass, 0.5);
  EXPECT_EQ(p.colors[1].rgb, (Rgb{255, 255, 255}));
  EXPECT_DOUBLE_EQ(p.colors[1].mass, 0.5);
}

TEST(Palette, CoversYieldValidFourColorPalettes) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto p = dominant_colors(synth::make_cover(seed, "Iron Tide", "Olga Kowal"));
    EXPECT_EQ(p.colors.size(), 4u);
    EXPECT_NO_THROW(validate_palette(p));
    EXPECT_EQ(p, dominant_colors(synth::make_cover(seed, "Iron Tide", "Olga Kowal")));
  }
}

TEST(Palette, ValidateRejectsBrokenPalettes) {
  EXPECT_THROW(validate_palette(Palette{}), Error);
  EXPECT_THROW(validate_palette(Palette{{{{1, 1, 1}, 0.3}, {{2, 2, 2}, 0.7}}}), Error);  // not sorted
  EXPECT_THROW(validate_palette(Palette{{{{1, 1, 1}, 0.6}, {{2, 2, 2}, 0.3}}}), Error);  // sum 0.9
  EXPECT_NO_THROW(validate_palette(Palette{{{{1, 1, 1}, 0.6}, {{2, 2, 2}, 0.4}}}));
}

TEST(Palette, JsonRoundTrip) {
  Palette p{{{{10, 20, 30}, 0.75}, {{200, 100, 0}, 0.25}}, "b7"};
  const auto j = palette_to_json(p);
  EXPECT_EQ(j["colors"][0]["hex"], "#0a141e");
  EXPECT_EQ(palette_from_json(j), p);
}

TEST(Theme, TextContrastRule) {
  EXPECT_EQ(theme_from_palette(Palette{{{{0, 0, 0}, 1.0}}}).text_on_primary, (Rgb{255, 255, 255}));
  EXPECT_EQ(theme_from_palette(Palette{{{{255, 255, 255}, 1.0}}}).text_on_primary, (Rgb{0, 0, 0}));
}

TEST(Theme, FourColorPaletteFillsEverySlotDeterministically) {
  const Palette p{{{{20, 30, 120}, 0.4}, {{220, 20, 20}, 0.3}, {{230, 220, 200}, 0.2}, {{90, 90, 90}, 0.1}}};
  const auto t = theme_from_palette(p);
  EXPECT_EQ(t, theme_from_palette(p));
  EXPECT_EQ(t.primary, (Rgb{20, 30, 120}));
  EXPECT_EQ(t.secondary, (Rgb{220, 20, 20}));
  EXPECT_EQ(t.accent, (Rgb{220, 20, 20}));  // most saturated
  EXPECT_GT(relative_luminance(t.background), relative_luminance(Rgb{230, 220, 200}) - 1e-12);
  EXPECT_GE(contrast_ratio(t.text_on_primary, t.primary), 4.5);
  EXPECT_EQ(theme_from_json(theme_to_json(t)), t);
}

TEST(Theme, ContrastRatioExtremes) {
  EXPECT_NEAR(contrast_ratio({0, 0, 0}, {255, 255, 255}), 21.0, 1e-9);
  EXPECT_NEAR(contrast_ratio({12, 34, 56}, {12, 34, 56}), 1.0, 1e-12);
  EXPECT_EQ(to_hex({255, 0, 15}), "#ff000f");
}
