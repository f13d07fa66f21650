#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bookvis/catalog.hpp"
#include "bookvis/palette.hpp"

namespace bookvis {

struct Point {
  double x = 0;
  double y = 0;
  bool operator==(const Point&) const = default;
};

struct GenreHistogram {
  std::map<GenreLabel, int> counts;
  std::size_t total_books = 0;
  bool operator==(const GenreHistogram&) const = default;
};

enum class LayoutOrdering { alphabetical, bell };

/// Genres on the unit circle, uniformly spaced, first slot at 12 o'clock and
/// proceeding clockwise (decreasing math angle).
struct RadialLayout {
  LayoutOrdering ordering = LayoutOrdering::bell;
  std::vector<GenreLabel> clockwise;  // slot order starting at the top
  std::map<GenreLabel, double> angles;

  Point anchor(const GenreLabel& g) const;
  bool contains(const GenreLabel& g) const { return angles.count(g) > 0; }
  bool operator==(const RadialLayout&) const = default;
};

struct Dot {
  std::string book_id;
  Point position;
  bool operator==(const Dot&) const = default;
};

/// KDE samples on a 64x64 lattice spanning [-1.1, 1.1]^2 (endpoints included).
struct DensityGrid {
  static constexpr int kSize = 64;
  static constexpr double kExtent = 1.1;

  std::vector<double> values;  // row-major, index y * kSize + x
  double bandwidth = 0;

  static double coordinate(int i) noexcept { return -kExtent + 2.0 * kExtent * i / (kSize - 1); }
  static double cell() noexcept { return 2.0 * kExtent / (kSize - 1); }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * kSize + x]; }
  bool operator==(const DensityGrid&) const = default;
};

struct TasteModel {
  GenreHistogram histogram;
  RadialLayout layout;
  std::vector<Dot> dots;
  DensityGrid density;
  double density_max = 0;

  /// Exact kernel density at an arbitrary point.
  double density_at(Point p) const;
  bool empty() const noexcept { return dots.empty(); }
  bool operator==(const TasteModel&) const = default;
};

struct FitResult {
  Point position;
  double fitness = 0;
  std::vector<std::pair<GenreLabel, double>> contributing_genres;
  bool overlap = false;
  bool operator==(const FitResult&) const = default;
};

GenreHistogram build_histogram(const std::vector<BookRecord>& shelf_books);
RadialLayout radial_layout(const GenreHistogram& hist, LayoutOrdering ordering);

/// Weighted centroid of the anchors of the book's genres that appear in the
/// model's layout, weighted by the user's count for each genre.
FitResult place_book(const BookRecord& book, const TasteModel& model);

/// Bandwidth by Scott's rule for 2-D data, floored at 0.05.
double kde_bandwidth(const std::vector<Dot>& dots);
TasteModel build_taste_model(const std::vector<BookRecord>& shelf_books, LayoutOrdering ordering = LayoutOrdering::bell);

using Polyline = std::vector<Point>;  // closed: last point connects back to the first

struct ContourLevel {
  double quantile = 0;
  double level = 0;
  std::vector<Polyline> loops;
  bool operator==(const ContourLevel&) const = default;
};

inline constexpr std::array<double, 3> kContourQuantiles = {0.5, 0.75, 0.9};

/// Marching squares at density quantiles of the positive grid values.
std::vector<ContourLevel> selfie_contours(const TasteModel& model,
                                          std::span<const double> quantiles = kContourQuantiles);
std::vector<Polyline> marching_squares(const DensityGrid& grid, double level);
bool point_in_polygon(Point p, const Polyline& poly);
double quantile(std::vector<double> values, double q);

struct BookSelfieData {
  std::string book_id;
  std::string author_name;
  double avg_rating = 0;
  std::int64_t ratings_count = 0;
  double ratings_distance = 0;  // avg_rating minus the catalog-shrunk rating
  std::int64_t reviews_count = 0;
  Palette palette;
  bool operator==(const BookSelfieData&) const = default;
};

BookSelfieData book_selfie_data(const BookRecord& book, const Catalog& catalog, const Palette& palette);

struct GridBook {
  std::string book_id;
  double trust = 0;
  bool operator==(const GridBook&) const = default;
};

inline constexpr int kGridBins = 5;

struct SimilarGrid {
  std::string book_id;
  // cells[row][col]: row = rating bin (0 lowest), col = year bin (0 earliest)
  std::array<std::array<std::vector<GridBook>, kGridBins>, kGridBins> cells;
  std::array<double, kGridBins + 1> year_edges{};
  std::array<double, kGridBins + 1> rating_edges{};
  bool hidden = false;  // no similar books in the catalog

  std::size_t book_count() const;
  bool operator==(const SimilarGrid&) const = default;
};

SimilarGrid similar_grid(const BookRecord& book, const Catalog& catalog);
/// Bin index for `value` over [lo, hi]; a zero-width range maps to the middle bin.
int grid_bin(double value, double lo, double hi);

struct TimelineTile {
  std::optional<std::string> book_id;  // empty for hidden padding tiles
  std::optional<std::string> title;
  std::optional<int> year;
  std::optional<Palette> palette;
  bool is_focus = false;

  bool hidden() const noexcept { return !book_id.has_value(); }
  bool operator==(const TimelineTile&) const = default;
};

inline constexpr std::size_t kMinTimelineTiles = 5;

struct AuthorTimeline {
  std::string author;
  std::vector<TimelineTile> tiles;
  std::size_t focus_index = 0;
  bool operator==(const AuthorTimeline&) const = default;
};

AuthorTimeline author_timeline(const BookRecord& book, const Catalog& catalog,
                               const std::map<std::string, Palette>& palettes);

struct RoseSector {
  std::string book_id;
  int user_rating = 0;  // 0 = unrated
  double avg_rating = 0;
  bool operator==(const RoseSector&) const = default;
};

struct RoseData {
  std::vector<RoseSector> sectors;
  double sector_angle = 0;
  bool operator==(const RoseData&) const = default;
};

using RatedBook = std::pair<BookRecord, std::optional<int>>;

RoseData my_rose(const std::vector<RatedBook>& shelf);

}  // namespace bookvis
