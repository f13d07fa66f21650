#pragma once

#include <random>
#include <string>
#include <vector>

#include "bookvis/catalog.hpp"
#include "bookvis/taste.hpp"
#include "support.hpp"

namespace fixtures {

using bookvis::BookRecord;
using testing_support::book;
using testing_support::genres;

inline void add_books(std::vector<BookRecord>& out, int n, std::vector<bookvis::GenreLabel> gs) {
  for (int i = 0; i < n; ++i) out.push_back(book("s" + std::to_string(out.size()), gs));
}

// A reader who lives in fantasy and science fiction. The rare genres only ever
// appear alongside the dominant ones, so no dot sits near their anchors.
inline std::vector<BookRecord> concentrated_shelf() {
  std::vector<BookRecord> s;
  add_books(s, 24, genres({"fantasy", "science fiction"}));
  add_books(s, 6, genres({"fantasy"}));
  add_books(s, 4, genres({"science fiction", "horror"}));
  add_books(s, 3, genres({"fantasy", "mystery"}));
  add_books(s, 1, genres({"fantasy", "poetry"}));
  add_books(s, 1, genres({"science fiction", "cooking"}));
  return s;
}

// Twin of the shelf above with a couple of books swapped for similar ones.
inline std::vector<BookRecord> concentrated_twin() {
  auto s = concentrated_shelf();
  s[25].genres = genres({"fantasy", "science fiction"});
  s[31].genres = genres({"science fiction"});
  s[35].genres = genres({"fantasy", "horror"});
  return s;
}

// Shares only the two rarest genres with the shelf; they sit at the bottom of the bell.
inline BookRecord alien_book() { return book("alien", genres({"poetry", "cooking"})); }
inline BookRecord on_taste_book() { return book("ontaste", genres({"fantasy", "science fiction"})); }

struct PlacementFixture {
  bookvis::TasteModel model;  // histogram and layout only
  BookRecord book;
};

// Random histogram over up to 12 genres and a book tagged with a random subset
// of them (plus an occasional genre the user has never shelved).
inline PlacementFixture placement_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = std::uniform_int_distribution<int>(1, 12)(rng);
  PlacementFixture f;
  for (int i = 0; i < n; ++i) {
    const auto g = bookvis::GenreLabel::canonicalize("genre " + std::string(1, static_cast<char>('a' + i)));
    f.model.histogram.counts[g] = std::uniform_int_distribution<int>(1, 40)(rng);
  }
  f.model.histogram.total_books = 100;
  const auto ordering = rng() % 2 ? bookvis::LayoutOrdering::bell : bookvis::LayoutOrdering::alphabetical;
  f.model.layout = bookvis::radial_layout(f.model.histogram, ordering);
  f.book = book("probe");
  const int k = std::uniform_int_distribution<int>(1, n)(rng);
  std::vector<bookvis::GenreLabel> all;
  for (const auto& [g, c] : f.model.histogram.counts) all.push_back(g);
  std::shuffle(all.begin(), all.end(), rng);
  for (int i = 0; i < k; ++i) f.book.genres.push_back(all[static_cast<std::size_t>(i)]);
  if (rng() % 3 == 0) f.book.genres.push_back(bookvis::GenreLabel::canonicalize("unshelved genre"));
  return f;
}

}  // namespace fixtures
