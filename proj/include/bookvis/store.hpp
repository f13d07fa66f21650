#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bookvis/catalog.hpp"
#include "bookvis/taste.hpp"
#include "bookvis/util.hpp"

namespace bookvis {

inline constexpr std::string_view kDefaultShelf = "saved";

struct ShelfEntry {
  std::string book_id;
  std::optional<int> user_rating;  // 1..5 when present
  Timestamp added_at;
  bool operator==(const ShelfEntry&) const = default;
};

struct UserProfile {
  std::string user_id;
  std::string display_name;
  std::map<std::string, std::vector<ShelfEntry>> shelves;  // entries in insertion order
  Timestamp created_at;
  Timestamp updated_at;
  bool operator==(const UserProfile&) const = default;
};

nlohmann::json profile_to_json(const UserProfile& p);
UserProfile profile_from_json(const nlohmann::json& j);

struct ImportIssue {
  std::size_t line = 0;  // 1-based physical line of the record start
  std::string book_id;
  std::string title;
  std::string reason;
};

struct ImportReport {
  std::size_t rows = 0;
  std::size_t imported = 0;
  std::vector<ImportIssue> unmatched;
  std::vector<ImportIssue> invalid;
};

nlohmann::json import_report_to_json(const ImportReport& r);

struct ShelfListing {
  std::vector<RatedBook> books;
  std::size_t skipped = 0;  // entries whose book_id is no longer in the catalog
};

/// RFC 4180 CSV: quoted fields, doubled quotes, CRLF or LF line ends.
/// Each returned row carries the 1-based line where it starts.
std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(std::string_view text);

/// One JSON document per user at <data_dir>/users/<user_id>.json, replaced
/// atomically on every mutation. Mutations of one user are serialized.
class UserStore {
 public:
  explicit UserStore(std::filesystem::path data_dir);

  UserProfile create_user(std::string display_name);
  UserProfile load(std::string_view user_id) const;  // Error{not_found}
  bool exists(std::string_view user_id) const;

  /// Upsert; a changed rating overwrites, an identical call is a no-op.
  void add_to_shelf(std::string_view user_id, std::string_view shelf, std::string_view book_id,
                    std::optional<int> rating);
  ImportReport import_shelves(std::string_view user_id, std::string_view csv, const Catalog& catalog);

  ShelfListing list_shelf_books(std::string_view user_id, std::string_view shelf, const Catalog& catalog) const;
  /// Union of every shelf, one entry per book; the most recently added rating wins.
  ShelfListing library_books(std::string_view user_id, const Catalog& catalog) const;

  std::filesystem::path user_path(std::string_view user_id) const;
  const std::filesystem::path& data_dir() const noexcept { return dir_; }

 private:
  std::mutex& lock_for(const std::string& user_id);
  void save(const UserProfile& p) const;

  std::filesystem::path dir_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

bool valid_user_id(std::string_view id) noexcept;

}  // namespace bookvis
