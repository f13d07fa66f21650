#include "desk_corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "bookvis/util.hpp"
#include "synth_covers.hpp"

namespace bookvis::synth {

namespace {

constexpr const char* kAdjectives[] = {"silent", "hidden", "broken", "golden", "last",   "northern", "crimson",
                                       "quiet",  "distant", "burning", "frozen", "lost",  "secret",  "wild",
                                       "hollow", "bright", "iron",   "paper",  "glass",  "velvet"};
constexpr const char* kNouns[] = {"river",  "garden", "kingdom", "harbor", "orchard", "lantern", "machine",
                                  "winter", "mirror", "empire",  "forest", "station", "island",  "cathedral",
                                  "atlas",  "signal", "tide",    "tower",  "meadow",  "archive"};
constexpr const char* kFirst[] = {"ada",   "ben",   "clara", "dmitri", "elena", "farid", "grace", "hugo",
                                  "imani", "jonas", "keiko", "liam",   "maya",  "nils",  "olga",  "pavel"};
constexpr const char* kLast[] = {"abbott", "barros", "chen",   "dalton", "eriksen", "fontaine", "garcia",
                                 "haddad", "ivanova", "jensen", "kowal", "laurent", "moreau",  "nakamura"};

template <class T, std::size_t N>
const T& pick(std::mt19937_64& rng, const T (&arr)[N]) {
  return arr[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

std::string capitalize(std::string s) {
  bool start = true;
  for (auto& c : s) {
    if (start && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    start = c == ' ';
  }
  return s;
}

std::string make_title(std::mt19937_64& rng, std::set<std::string>& used) {
  for (;;) {
    std::string t;
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
      case 0: t = std::string("the ") + pick(rng, kAdjectives) + " " + pick(rng, kNouns); break;
      case 1: t = std::string(pick(rng, kNouns)) + " of " + pick(rng, kAdjectives) + " " + pick(rng, kNouns); break;
      default: t = std::string(pick(rng, kAdjectives)) + " " + pick(rng, kNouns); break;
    }
    t = capitalize(t);
    if (used.insert(to_lower_ascii(t)).second) return t;
  }
}

std::vector<GenreLabel> pick_genres(std::mt19937_64& rng, int cluster) {
  const auto& pool = genre_pool();
  const int n = static_cast<int>(pool.size());
  std::set<int> chosen;
  const int count = std::uniform_int_distribution<int>(2, 4)(rng);
  // genres cluster around a home slot so shelves develop recognisable profiles
  std::normal_distribution<double> offset(0.0, 1.6);
  while (static_cast<int>(chosen.size()) < count) {
    const int g = ((cluster + static_cast<int>(std::lround(offset(rng)))) % n + n) % n;
    chosen.insert(g);
  }
  std::vector<GenreLabel> out;
  for (int g : chosen) out.push_back(GenreLabel::canonicalize(pool[static_cast<std::size_t>(g)]));
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const std::vector<std::string>& genre_pool() {
  static const std::vector<std::string> pool = {
      "fantasy",  "science fiction", "mystery", "thriller",  "horror",     "historical fiction",
      "romance",  "classics",        "poetry",  "biography", "philosophy", "history",
      "travel",   "cooking",         "art",     "young adult"};
  return pool;
}

DeskCorpus make_desk_corpus(std::uint64_t seed, std::size_t covers) {
  std::mt19937_64 rng(seed);
  DeskCorpus corpus;
  std::set<std::string> titles;

  std::vector<std::string> authors;
  for (int i = 0; i < 24; ++i) {
    authors.push_back(capitalize(std::string(pick(rng, kFirst)) + " " + pick(rng, kLast)) + " " +
                      std::string(1, static_cast<char>('A' + i)) + ".");
  }
  const int n_genres = static_cast<int>(genre_pool().size());

  for (std::size_t i = 0; i < covers; ++i) {
    BookRecord b;
    char id[24];
    std::snprintf(id, sizeof id, "b%03zu", i + 1);
    b.book_id = id;
    b.title = make_title(rng, titles);
    // two prolific authors give the timeline something to scroll
    std::size_t a = i < 8 ? 0 : i < 15 ? 1 : std::uniform_int_distribution<std::size_t>(2, authors.size() - 1)(rng);
    b.authors = {authors[a]};
    if (i % 17 == 5) b.authors.push_back(authors[(a + 3) % authors.size()]);
    b.publication_year = std::uniform_int_distribution<int>(1950, 2023)(rng);
    b.avg_rating = std::round(std::uniform_real_distribution<double>(3.3, 4.7)(rng) * 100) / 100;
    b.ratings_count = static_cast<std::int64_t>(std::exp(std::uniform_real_distribution<double>(2, 13)(rng)));
    b.reviews_count = b.ratings_count / std::uniform_int_distribution<int>(5, 40)(rng);
    b.genres = pick_genres(rng, static_cast<int>(a) % n_genres);
    b.cover_ref = "covers/" + std::string(id) + ".png";
    b.language = "en";
    corpus.books.push_back(std::move(b));
  }
  for (std::size_t i = 0; i < covers; ++i) {
    const int k = std::min(std::uniform_int_distribution<int>(3, 6)(rng), static_cast<int>(covers) - 1);
    std::set<std::size_t> sims;
    while (static_cast<int>(sims.size()) < k && covers > 1) {
      const auto j = std::uniform_int_distribution<std::size_t>(0, covers - 1)(rng);
      if (j != i) sims.insert(j);
    }
    for (auto j : sims) corpus.books[i].similar_ids.push_back(corpus.books[j].book_id);
  }
  for (std::size_t i = 0; i < covers; ++i) {
    const auto& b = corpus.books[i];
    corpus.covers.emplace(b.cover_ref, make_cover(seed * 1000 + i, b.title, b.primary_author()));
  }

  if (covers >= 1) {
    auto& first = corpus.books[std::min<std::size_t>(41, covers - 1)];
    first.edition_label = "1st edition";
    BookRecord second = first;
    char id[24];
    std::snprintf(id, sizeof id, "b%03zu", covers + 1);
    second.book_id = id;
    second.edition_label = "2nd edition";
    second.publication_year = first.publication_year + 7;
    second.ratings_count = first.ratings_count / 3 + 1;
    second.similar_ids = {first.book_id};
    corpus.first_edition_id = first.book_id;
    corpus.second_edition_id = second.book_id;
    corpus.books.push_back(std::move(second));
  }
  return corpus;
}

void write_desk_corpus(const DeskCorpus& corpus, const std::filesystem::path& dir) {
  for (const auto& [ref, img] : corpus.covers) {
    const auto path = dir / ref;
    std::filesystem::create_directories(path.parent_path());
    const auto png = encode_png(img);
    write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
  }
  save_catalog(Catalog(corpus.books), dir / "catalog.jsonl");
}

std::vector<BookRecord> make_library_books(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  std::vector<BookRecord> out;
  const int n_genres = static_cast<int>(genre_pool().size());
  for (std::size_t i = 0; i < count; ++i) {
    BookRecord b;
    char id[24];
    std::snprintf(id, sizeof id, "L%05zu", i + 1);
    b.book_id = id;
    b.title = capitalize(std::string(pick(rng, kAdjectives)) + " " + pick(rng, kNouns)) + " " + std::to_string(i + 1);
    if (i % 9 == 0) b.title = capitalize(std::string(pick(rng, kNouns))) + ", " + b.title;
    b.authors = {capitalize(std::string(pick(rng, kFirst)) + " " + pick(rng, kLast))};
    b.publication_year = std::uniform_int_distribution<int>(1900, 2023)(rng);
    b.avg_rating = std::round(std::uniform_real_distribution<double>(3.0, 4.8)(rng) * 100) / 100;
    b.ratings_count = static_cast<std::int64_t>(std::exp(std::uniform_real_distribution<double>(1, 14)(rng)));
    b.reviews_count = b.ratings_count / 12;
    b.genres = pick_genres(rng, std::uniform_int_distribution<int>(0, n_genres - 1)(rng));
    b.cover_ref = b.book_id + ".png";
    out.push_back(std::move(b));
  }
  return out;
}

std::string make_shelf_csv(const std::vector<BookRecord>& books, std::size_t rows, std::uint64_t seed,
                           std::size_t unmatched_every, std::size_t by_title_every) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(books.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  std::string out =
      "Book Id,Title,Author,Author l-f,My Rating,Average Rating,Publisher,Year Published,Date Added,Bookshelves,"
      "Exclusive Shelf\n";
  constexpr const char* kShelves[] = {"read", "to-read", "favorites", "currently-reading", "classics-club"};
  for (std::size_t r = 0; r < rows; ++r) {
    const bool unmatched = unmatched_every > 0 && r % unmatched_every == unmatched_every - 1;
    const auto& b = books[order[r % order.size()]];
    std::string id = b.book_id, title = b.title, author = b.primary_author();
    if (unmatched) {
      id = "X" + std::to_string(900000 + r);
      title = "Unlisted Volume " + std::to_string(r);
    } else if (by_title_every > 0 && r % by_title_every == by_title_every - 1) {
      id.clear();
      title = to_lower_ascii(title);
    }
    const int rating = std::uniform_int_distribution<int>(0, 5)(rng);
    std::string shelves = pick(rng, kShelves);
    if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) shelves += std::string(", ") + pick(rng, kShelves);
    char date[16];
    std::snprintf(date, sizeof date, "%04d/%02d/%02d", std::uniform_int_distribution<int>(2010, 2023)(rng),
                  std::uniform_int_distribution<int>(1, 12)(rng), std::uniform_int_distribution<int>(1, 28)(rng));
    out += csv_field(id) + "," + csv_field(title) + "," + csv_field(author) + "," + csv_field(author) + "," +
           std::to_string(rating) + "," + format_fixed(b.avg_rating, 2) + ",Synthetic Press," +
           std::to_string(b.publication_year) + "," + date + "," + csv_field(shelves) + ",read\n";
  }
  return out;
}

}  // namespace bookvis::synth
