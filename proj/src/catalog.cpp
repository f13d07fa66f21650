#include "bookvis/catalog.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "bookvis/error.hpp"
#include "bookvis/util.hpp"

namespace bookvis {

using nlohmann::json;

GenreLabel GenreLabel::canonicalize(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (char c : raw) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  if (out.empty()) throw Error(ErrorCode::invalid_genre, "genre label is empty after canonicalization");
  return GenreLabel(std::move(out));
}

namespace {

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::format, std::string("missing key: ") + key);
  return *it;
}

std::string require_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw Error(ErrorCode::format, std::string("expected string: ") + key);
  return v.get<std::string>();
}

std::int64_t require_count(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw Error(ErrorCode::format, std::string("expected non-negative integer: ") + key);
  }
  return v.get<std::int64_t>();
}

std::vector<std::string> require_strings(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_array()) throw Error(ErrorCode::format, std::string("expected array: ") + key);
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw Error(ErrorCode::format, std::string("expected strings in: ") + key);
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorCode::format, std::string("expected string: ") + key);
  return it->get<std::string>();
}

}  // namespace

BookRecord book_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::format, "record is not an object");
  BookRecord b;
  b.book_id = require_string(j, "book_id");
  if (b.book_id.empty()) throw Error(ErrorCode::format, "empty book_id");
  b.title = require_string(j, "title");
  b.authors = require_strings(j, "authors");
  if (b.authors.empty()) throw Error(ErrorCode::format, "authors must be non-empty");
  const auto& year = require(j, "publication_year");
  if (!year.is_number_integer()) throw Error(ErrorCode::format, "publication_year must be an integer");
  b.publication_year = year.get<int>();
  const auto& rating = require(j, "avg_rating");
  if (!rating.is_number()) throw Error(ErrorCode::format, "avg_rating must be a number");
  b.avg_rating = rating.get<double>();
  if (!(b.avg_rating >= 0.0 && b.avg_rating <= 5.0)) throw Error(ErrorCode::format, "avg_rating outside [0,5]");
  b.ratings_count = require_count(j, "ratings_count");
  b.reviews_count = require_count(j, "reviews_count");

  std::set<std::string> seen;
  for (const auto& raw : require_strings(j, "genres")) {
    try {
      auto g = GenreLabel::canonicalize(raw);
      if (seen.insert(g.str()).second) b.genres.push_back(std::move(g));
    } catch (const Error&) {
      // blank shelf names are dropped; an all-blank list leaves the book ungenred
    }
  }
  for (auto& id : require_strings(j, "similar_ids")) {
    if (id != b.book_id) b.similar_ids.push_back(std::move(id));
  }
  b.cover_ref = require_string(j, "cover_ref");
  b.edition_label = optional_string(j, "edition_label");
  b.language = optional_string(j, "language");
  return b;
}

json book_to_json(const BookRecord& b) {
  json genres = json::array();
  for (const auto& g : b.genres) genres.push_back(g.str());
  json j = {
      {"book_id", b.book_id},
      {"title", b.title},
      {"authors", b.authors},
      {"publication_year", b.publication_year},
      {"avg_rating", b.avg_rating},
      {"ratings_count", b.ratings_count},
      {"reviews_count", b.reviews_count},
      {"genres", genres},
      {"similar_ids", b.similar_ids},
      {"cover_ref", b.cover_ref},
  };
  if (b.edition_label) j["edition_label"] = *b.edition_label;
  if (b.language) j["language"] = *b.language;
  return j;
}

Catalog::Catalog(std::vector<BookRecord> books, std::size_t skipped_lines) : skipped_(skipped_lines) {
  for (auto& b : books) {
    auto id = b.book_id;
    if (!books_.emplace(id, std::move(b)).second) {
      throw Error(ErrorCode::conflict, "duplicate book_id: " + id);
    }
  }
  std::vector<std::int64_t> counts;
  double rating_sum = 0.0;
  for (const auto& [id, b] : books_) {
    authors_[b.primary_author()].push_back(id);
    rating_sum += b.avg_rating;
    counts.push_back(b.ratings_count);
  }
  if (!counts.empty()) {
    stats_.catalog_mean_rating = rating_sum / static_cast<double>(counts.size());
    std::sort(counts.begin(), counts.end());
    const auto n = counts.size();
    stats_.median_ratings_count = n % 2 == 1 ? counts[n / 2] : (counts[n / 2 - 1] + counts[n / 2]) / 2;
  }
}

const BookRecord* Catalog::find(std::string_view book_id) const {
  auto it = books_.find(book_id);
  return it == books_.end() ? nullptr : &it->second;
}

const BookRecord& Catalog::at(std::string_view book_id) const {
  if (const auto* b = find(book_id)) return *b;
  throw Error(ErrorCode::not_found, "unknown book: " + std::string(book_id));
}

std::string Catalog::to_jsonl() const {
  std::string out;
  for (const auto& [id, b] : books_) {
    out += book_to_json(b).dump();
    out.push_back('\n');
  }
  return out;
}

Catalog parse_catalog(std::string_view jsonl) {
  std::vector<BookRecord> books;
  std::set<std::string, std::less<>> ids;
  std::size_t skipped = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    if (trim(line).empty()) continue;
    try {
      auto record = book_from_json(json::parse(line));
      if (!ids.insert(record.book_id).second) {
        ++skipped;
        continue;
      }
      books.push_back(std::move(record));
    } catch (const json::exception&) {
      ++skipped;
    } catch (const Error&) {
      ++skipped;
    }
  }
  if (books.empty()) throw Error(ErrorCode::empty_catalog, "catalog contains no valid records");
  return Catalog(std::move(books), skipped);
}

Catalog load_catalog(const std::filesystem::path& path) { return parse_catalog(read_file_text(path)); }

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
  write_file_atomic(path, catalog.to_jsonl());
}

std::vector<BookRecord> books_by_author(const Catalog& catalog, std::string_view author) {
  std::vector<BookRecord> out;
  auto it = catalog.authors().find(author);
  if (it == catalog.authors().end()) return out;
  for (const auto& id : it->second) out.push_back(catalog.at(id));
  std::sort(out.begin(), out.end(), [](const BookRecord& a, const BookRecord& b) {
    if (a.publication_year != b.publication_year) return a.publication_year < b.publication_year;
    if (a.title != b.title) return a.title < b.title;
    return a.book_id < b.book_id;
  });
  return out;
}

std::vector<BookRecord> similar_books(const Catalog& catalog, std::string_view book_id) {
  const auto& book = catalog.at(book_id);
  std::vector<BookRecord> out;
  for (const auto& id : book.similar_ids) {
    if (const auto* b = catalog.find(id)) out.push_back(*b);
  }
  return out;
}

std::optional<BookRecord> LocalCatalogClient::fetch(std::string_view book_id) const {
  if (const auto* b = catalog_->find(book_id)) return *b;
  return std::nullopt;
}

BookRecord resolve_book(const MetadataClient& client, std::string_view book_id) {
  auto record = client.fetch(book_id);
  if (!record) throw Error(ErrorCode::not_found, "unresolvable book: " + std::string(book_id));
  return *std::move(record);
}

}  // namespace bookvis
