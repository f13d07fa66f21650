#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace bookvis {

/// Canonical genre label: lowercase, trimmed, internal whitespace collapsed.
class GenreLabel {
 public:
  /// Throws Error{invalid_genre} when the canonical form is empty.
  static GenreLabel canonicalize(std::string_view raw);

  const std::string& str() const noexcept { return canonical_; }

  auto operator<=>(const GenreLabel&) const = default;

 private:
  explicit GenreLabel(std::string canonical) : canonical_(std::move(canonical)) {}
  std::string canonical_;
};

inline GenreLabel canonicalize_genre(std::string_view raw) { return GenreLabel::canonicalize(raw); }

struct BookRecord {
  std::string book_id;
  std::string title;
  std::vector<std::string> authors;
  int publication_year = 0;
  double avg_rating = 0.0;
  std::int64_t ratings_count = 0;
  std::int64_t reviews_count = 0;
  std::vector<GenreLabel> genres;
  std::vector<std::string> similar_ids;
  std::string cover_ref;
  std::optional<std::string> edition_label;
  std::optional<std::string> language;

  // Multi-author books keep the full list; everything downstream keys on the first.
  const std::string& primary_author() const { return authors.front(); }
  bool ungenred() const noexcept { return genres.empty(); }

  bool operator==(const BookRecord&) const = default;
};

/// Parses one catalog JSON object. Throws Error{format} on missing or mistyped
/// fields; self-references in similar_ids and unusable genres are dropped.
BookRecord book_from_json(const nlohmann::json& j);
nlohmann::json book_to_json(const BookRecord& book);

struct CatalogStats {
  double catalog_mean_rating = 0.0;
  std::int64_t median_ratings_count = 0;
};

/// Immutable after construction. The author index maps primary_author to ids.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<BookRecord> books, std::size_t skipped_lines = 0);

  const BookRecord* find(std::string_view book_id) const;
  const BookRecord& at(std::string_view book_id) const;  // throws not_found

  const std::map<std::string, BookRecord, std::less<>>& books() const noexcept { return books_; }
  const std::map<std::string, std::vector<std::string>, std::less<>>& authors() const noexcept { return authors_; }
  const CatalogStats& stats() const noexcept { return stats_; }
  std::size_t size() const noexcept { return books_.size(); }
  std::size_t skipped_lines() const noexcept { return skipped_; }

  /// JSON Lines, one record per line, ordered by book_id.
  std::string to_jsonl() const;

 private:
  std::map<std::string, BookRecord, std::less<>> books_;
  std::map<std::string, std::vector<std::string>, std::less<>> authors_;
  CatalogStats stats_;
  std::size_t skipped_ = 0;
};

Catalog parse_catalog(std::string_view jsonl);
Catalog load_catalog(const std::filesystem::path& path);
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);

std::vector<BookRecord> books_by_author(const Catalog& catalog, std::string_view author);
std::vector<BookRecord> similar_books(const Catalog& catalog, std::string_view book_id);

/// Resolves a book id to the freshest record available. The local client
/// reads the catalog; remote implementations may refresh counts on the fly.
class MetadataClient {
 public:
  virtual ~MetadataClient() = default;
  virtual std::optional<BookRecord> fetch(std::string_view book_id) const = 0;
};

class LocalCatalogClient final : public MetadataClient {
 public:
  explicit LocalCatalogClient(std::shared_ptr<const Catalog> catalog) : catalog_(std::move(catalog)) {}
  std::optional<BookRecord> fetch(std::string_view book_id) const override;

 private:
  std::shared_ptr<const Catalog> catalog_;
};

BookRecord resolve_book(const MetadataClient& client, std::string_view book_id);

}  // namespace bookvis
