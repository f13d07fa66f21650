#include "bookvis/taste.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "bookvis/error.hpp"

namespace bookvis {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBandwidthFloor = 0.05;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a = 0;
  return a;
}

std::vector<GenreLabel> unique_genres(const BookRecord& b) {
  std::vector<GenreLabel> out;
  std::set<GenreLabel> seen;
  for (const auto& g : b.genres)
    if (seen.insert(g).second) out.push_back(g);
  return out;
}
}  // namespace

Point RadialLayout::anchor(const GenreLabel& g) const {
  const double a = angles.at(g);
  return {std::cos(a), std::sin(a)};
}

GenreHistogram build_histogram(const std::vector<BookRecord>& shelf_books) {
  GenreHistogram h;
  h.total_books = shelf_books.size();
  for (const auto& b : shelf_books)
    for (const auto& g : unique_genres(b)) ++h.counts[g];
  return h;
}

RadialLayout radial_layout(const GenreHistogram& hist, LayoutOrdering ordering) {
  if (hist.counts.empty()) throw Error(ErrorCode::empty_library, "cannot lay out an empty histogram");
  const std::size_t n = hist.counts.size();
  RadialLayout layout;
  layout.ordering = ordering;
  layout.clockwise.resize(n, hist.counts.begin()->first);

  std::vector<std::pair<GenreLabel, int>> entries(hist.counts.begin(), hist.counts.end());  // label ascending
  const bool all_equal = std::all_of(entries.begin(), entries.end(),
                                     [&](const auto& e) { return e.second == entries.front().second; });
  if (ordering == LayoutOrdering::alphabetical || all_equal) {
    for (std::size_t i = 0; i < n; ++i) layout.clockwise[i] = entries[i].first;
  } else {
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    // middle-out: ranks go to slots 0, +1, -1, +2, -2, ... around the top
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t step = (r + 1) / 2;
      const std::size_t slot = r % 2 == 1 ? step : (n - step) % n;
      layout.clockwise[slot] = entries[r].first;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    layout.angles[layout.clockwise[i]] = wrap_angle(std::numbers::pi / 2 - kTwoPi * static_cast<double>(i) / n);
  }
  return layout;
}

double TasteModel::density_at(Point p) const {
  if (dots.empty() || density.bandwidth <= 0) return 0.0;
  const double h = density.bandwidth;
  const double inv = -1.0 / (2.0 * h * h);
  double s = 0;
  for (const auto& d : dots) {
    const double dx = p.x - d.position.x, dy = p.y - d.position.y;
    s += std::exp((dx * dx + dy * dy) * inv);
  }
  return s / (static_cast<double>(dots.size()) * 2.0 * std::numbers::pi * h * h);
}

namespace {

FitResult place_on(const BookRecord& book, const GenreHistogram& hist, const RadialLayout& layout) {
  FitResult r;
  double wsum = 0, x = 0, y = 0;
  for (const auto& g : unique_genres(book)) {
    auto it = hist.counts.find(g);
    if (it == hist.counts.end() || !layout.contains(g)) continue;
    const double w = it->second;
    const auto a = layout.anchor(g);
    x += w * a.x;
    y += w * a.y;
    wsum += w;
    r.contributing_genres.emplace_back(g, w);
  }
  if (wsum <= 0) return r;
  r.overlap = true;
  r.position = {x / wsum, y / wsum};
  // guard against rounding just past the rim
  const double norm = std::hypot(r.position.x, r.position.y);
  if (norm > 1.0) r.position = {r.position.x / norm, r.position.y / norm};
  return r;
}

}  // namespace

FitResult place_book(const BookRecord& book, const TasteModel& model) {
  auto r = place_on(book, model.histogram, model.layout);
  if (!r.overlap) return r;
  if (model.density_max > 0) r.fitness = std::clamp(model.density_at(r.position) / model.density_max, 0.0, 1.0);
  return r;
}

double kde_bandwidth(const std::vector<Dot>& dots) {
  const std::size_t n = dots.size();
  if (n < 2) return kBandwidthFloor;
  double mx = 0, my = 0;
  for (const auto& d : dots) {
    mx += d.position.x;
    my += d.position.y;
  }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0;
  for (const auto& d : dots) {
    vx += (d.position.x - mx) * (d.position.x - mx);
    vy += (d.position.y - my) * (d.position.y - my);
  }
  const double sigma = 0.5 * (std::sqrt(vx / (n - 1)) + std::sqrt(vy / (n - 1)));
  return std::max(kBandwidthFloor, std::pow(static_cast<double>(n), -1.0 / 6.0) * sigma);
}

TasteModel build_taste_model(const std::vector<BookRecord>& shelf_books, LayoutOrdering ordering) {
  TasteModel m;
  m.histogram = build_histogram(shelf_books);
  m.density.values.assign(DensityGrid::kSize * DensityGrid::kSize, 0.0);
  if (m.histogram.counts.empty()) {
    m.layout.ordering = ordering;
    return m;
  }
  m.layout = radial_layout(m.histogram, ordering);
  for (const auto& b : shelf_books) {
    auto r = place_on(b, m.histogram, m.layout);
    if (r.overlap) m.dots.push_back({b.book_id, r.position});
  }
  m.density.bandwidth = kde_bandwidth(m.dots);
  for (int y = 0; y < DensityGrid::kSize; ++y) {
    for (int x = 0; x < DensityGrid::kSize; ++x) {
      const double v = m.density_at({DensityGrid::coordinate(x), DensityGrid::coordinate(y)});
      m.density.values[static_cast<std::size_t>(y) * DensityGrid::kSize + x] = v;
      m.density_max = std::max(m.density_max, v);
    }
  }
  return m;
}

BookSelfieData book_selfie_data(const BookRecord& book, const Catalog& catalog, const Palette& palette) {
  BookSelfieData d;
  d.book_id = book.book_id;
  d.author_name = book.primary_author();
  d.avg_rating = book.avg_rating;
  d.ratings_count = book.ratings_count;
  d.reviews_count = book.reviews_count;
  d.palette = palette;
  const double v = static_cast<double>(book.ratings_count);
  const double m = static_cast<double>(catalog.stats().median_ratings_count);
  const double c = catalog.stats().catalog_mean_rating;
  const double shrunk = v + m > 0 ? (v * book.avg_rating + m * c) / (v + m) : c;
  d.ratings_distance = book.avg_rating - shrunk;
  return d;
}

int grid_bin(double value, double lo, double hi) {
  const double range = hi - lo;
  if (!(range > 0)) return kGridBins / 2;
  constexpr double kEps = 1e-9;
  const int bin = static_cast<int>(std::floor(kGridBins * (value - lo) / (range + kEps)));
  return std::clamp(bin, 0, kGridBins - 1);
}

std::size_t SimilarGrid::book_count() const {
  std::size_t n = 0;
  for (const auto& row : cells)
    for (const auto& cell : row) n += cell.size();
  return n;
}

SimilarGrid similar_grid(const BookRecord& book, const Catalog& catalog) {
  SimilarGrid g;
  g.book_id = book.book_id;
  std::vector<BookRecord> similar;
  for (const auto& id : book.similar_ids)
    if (const auto* b = catalog.find(id)) similar.push_back(*b);
  if (similar.empty()) {
    g.hidden = true;
    return g;
  }
  double y0 = similar[0].publication_year, y1 = y0, r0 = similar[0].avg_rating, r1 = r0;
  std::int64_t max_count = 0;
  for (const auto& b : similar) {
    y0 = std::min<double>(y0, b.publication_year);
    y1 = std::max<double>(y1, b.publication_year);
    r0 = std::min(r0, b.avg_rating);
    r1 = std::max(r1, b.avg_rating);
    max_count = std::max(max_count, b.ratings_count);
  }
  for (int i = 0; i <= kGridBins; ++i) {
    g.year_edges[i] = y0 + (y1 - y0) * i / kGridBins;
    g.rating_edges[i] = r0 + (r1 - r0) * i / kGridBins;
  }
  const double denom = std::log1p(static_cast<double>(max_count));
  for (const auto& b : similar) {
    const int col = grid_bin(b.publication_year, y0, y1);
    const int row = grid_bin(b.avg_rating, r0, r1);
    const double trust = denom > 0 ? std::clamp(std::log1p(static_cast<double>(b.ratings_count)) / denom, 0.0, 1.0) : 0.0;
    g.cells[row][col].push_back({b.book_id, trust});
  }
  return g;
}

AuthorTimeline author_timeline(const BookRecord& book, const Catalog& catalog,
                               const std::map<std::string, Palette>& palettes) {
  AuthorTimeline t;
  t.author = book.primary_author();
  auto books = books_by_author(catalog, t.author);
  if (std::none_of(books.begin(), books.end(), [&](const BookRecord& b) { return b.book_id == book.book_id; })) {
    books.push_back(book);
    std::sort(books.begin(), books.end(), [](const BookRecord& a, const BookRecord& b) {
      if (a.publication_year != b.publication_year) return a.publication_year < b.publication_year;
      if (a.title != b.title) return a.title < b.title;
      return a.book_id < b.book_id;
    });
  }
  for (const auto& b : books) {
    TimelineTile tile;
    tile.book_id = b.book_id;
    tile.title = b.title;
    tile.year = b.publication_year;
    if (auto it = palettes.find(b.book_id); it != palettes.end()) tile.palette = it->second;
    tile.is_focus = b.book_id == book.book_id;
    t.tiles.push_back(std::move(tile));
  }
  // pad alternately right, then left
  bool right = true;
  while (t.tiles.size() < kMinTimelineTiles) {
    if (right) {
      t.tiles.emplace_back();
    } else {
      t.tiles.insert(t.tiles.begin(), TimelineTile{});
    }
    right = !right;
  }
  for (std::size_t i = 0; i < t.tiles.size(); ++i)
    if (t.tiles[i].is_focus) t.focus_index = i;
  return t;
}

RoseData my_rose(const std::vector<RatedBook>& shelf) {
  if (shelf.empty()) throw Error(ErrorCode::empty_library, "rose diagram needs at least one book");
  RoseData r;
  r.sector_angle = kTwoPi / static_cast<double>(shelf.size());
  for (const auto& [book, rating] : shelf) {
    const int ur = rating.value_or(0);
    if (ur < 0 || ur > 5) throw Error(ErrorCode::validation, "user rating outside 0..5");
    r.sectors.push_back({book.book_id, ur, book.avg_rating});
  }
  return r;
}

}  // namespace bookvis
