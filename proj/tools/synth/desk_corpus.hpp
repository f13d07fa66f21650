#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bookvis/catalog.hpp"
#include "bookvis/image.hpp"

namespace bookvis::synth {

/// A desk-scale catalog with rendered covers. One extra record is a second
/// edition that reuses an existing cover, so there are `covers + 1` books.
struct DeskCorpus {
  std::vector<BookRecord> books;
  std::map<std::string, RasterImage> covers;  // keyed by cover_ref, relative to the catalog directory
  std::string first_edition_id;
  std::string second_edition_id;
};

DeskCorpus make_desk_corpus(std::uint64_t seed = 7, std::size_t covers = 100);

/// Writes <dir>/catalog.jsonl and <dir>/covers/*.png.
void write_desk_corpus(const DeskCorpus& corpus, const std::filesystem::path& dir);

const std::vector<std::string>& genre_pool();

/// Metadata-only catalog for shelf-import scale runs.
std::vector<BookRecord> make_library_books(std::uint64_t seed, std::size_t count);

/// Goodreads-style export: the required columns plus a few extras, quoted where
/// needed. Every `unmatched_every`-th row names a book absent from `books`,
/// and every `by_title_every`-th row leaves Book Id empty.
std::string make_shelf_csv(const std::vector<BookRecord>& books, std::size_t rows, std::uint64_t seed,
                           std::size_t unmatched_every = 0, std::size_t by_title_every = 0);

}  // namespace bookvis::synth
