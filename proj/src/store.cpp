#include "bookvis/store.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <random>

#include "bookvis/error.hpp"

namespace bookvis {

using nlohmann::json;

namespace {

Timestamp now_seconds() {
  return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

void check_rating(std::optional<int> r) {
  if (r && (*r < 1 || *r > 5)) throw Error(ErrorCode::validation, "rating must be between 1 and 5");
}

void check_shelf_name(std::string_view shelf) {
  if (trim(shelf).empty() || shelf.size() > 128) throw Error(ErrorCode::validation, "shelf name must be 1..128 characters");
}

// Returns true when the profile changed.
bool upsert(UserProfile& p, const std::string& shelf, const std::string& book_id, std::optional<int> rating,
            Timestamp added_at) {
  auto& entries = p.shelves[shelf];
  auto it = std::find_if(entries.begin(), entries.end(), [&](const ShelfEntry& e) { return e.book_id == book_id; });
  if (it == entries.end()) {
    entries.push_back({book_id, rating, added_at});
    return true;
  }
  if (it->user_rating == rating) return false;
  it->user_rating = rating;
  return true;
}

std::string random_id() {
  std::random_device rd;
  const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
                          static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
  char buf[20];
  std::snprintf(buf, sizeof buf, "u%016llx", static_cast<unsigned long long>(mix_seed(v, 0)));
  return buf;
}

// Goodreads exports use YYYY/MM/DD; RFC 3339 and YYYY-MM-DD are accepted too.
std::optional<Timestamp> parse_date_added(std::string_view raw) {
  const auto s = trim(raw);
  if (s.empty()) return std::nullopt;
  int y = 0, m = 0, d = 0;
  char sep1 = 0, sep2 = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c%d", &y, &sep1, &m, &sep2, &d) != 5 || sep1 != sep2 ||
      (sep1 != '/' && sep1 != '-') || m < 1 || m > 12 || d < 1 || d > 31) {
    return std::nullopt;
  }
  if (s.find('T') != std::string::npos) {
    try {
      return parse_rfc3339(s);
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT00:00:00Z", y, m, d);
  return parse_rfc3339(buf);
}

std::optional<int> parse_int(std::string_view raw) {
  const auto s = trim(raw);
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string match_key(std::string_view title, std::string_view author) {
  return to_lower_ascii(trim(title)) + '\x1f' + to_lower_ascii(trim(author));
}

}  // namespace

bool valid_user_id(std::string_view id) noexcept {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
  });
}

json profile_to_json(const UserProfile& p) {
  json shelves = json::object();
  for (const auto& [name, entries] : p.shelves) {
    json arr = json::array();
    for (const auto& e : entries) {
      arr.push_back({{"book_id", e.book_id},
                     {"user_rating", e.user_rating ? json(*e.user_rating) : json(nullptr)},
                     {"added_at", format_rfc3339(e.added_at)}});
    }
    shelves[name] = std::move(arr);
  }
  return {{"schema", "bookvis/1"},
          {"user_id", p.user_id},
          {"display_name", p.display_name},
          {"created_at", format_rfc3339(p.created_at)},
          {"updated_at", format_rfc3339(p.updated_at)},
          {"shelves", std::move(shelves)}};
}

UserProfile profile_from_json(const json& j) {
  try {
    UserProfile p;
    p.user_id = j.at("user_id").get<std::string>();
    p.display_name = j.at("display_name").get<std::string>();
    p.created_at = parse_rfc3339(j.at("created_at").get<std::string>());
    p.updated_at = parse_rfc3339(j.at("updated_at").get<std::string>());
    for (const auto& [name, arr] : j.at("shelves").items()) {
      auto& entries = p.shelves[name];
      for (const auto& e : arr) {
        ShelfEntry se;
        se.book_id = e.at("book_id").get<std::string>();
        if (!e.at("user_rating").is_null()) se.user_rating = e["user_rating"].get<int>();
        se.added_at = parse_rfc3339(e.at("added_at").get<std::string>());
        entries.push_back(std::move(se));
      }
    }
    p.shelves.try_emplace(std::string(kDefaultShelf));
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, std::string("malformed user document: ") + e.what());
  }
}

json import_report_to_json(const ImportReport& r) {
  auto issues = [](const std::vector<ImportIssue>& v) {
    json arr = json::array();
    for (const auto& i : v) {
      arr.push_back({{"line", i.line}, {"book_id", i.book_id}, {"title", i.title}, {"reason", i.reason}});
    }
    return arr;
  };
  return {{"schema", "bookvis/1"},
          {"rows", r.rows},
          {"imported", r.imported},
          {"unmatched", issues(r.unmatched)},
          {"invalid", issues(r.invalid)}};
}

std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(std::string_view text) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1, row_line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.emplace_back(row_line, std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
      ++line;
      row_line = line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::format, "unterminated quoted CSV field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

UserStore::UserStore(std::filesystem::path data_dir) : dir_(std::move(data_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_ / "users", ec);
  if (ec) throw Error(ErrorCode::io, "cannot create data directory " + (dir_ / "users").string() + ": " + ec.message());
}

std::filesystem::path UserStore::user_path(std::string_view user_id) const {
  return dir_ / "users" / (std::string(user_id) + ".json");
}

bool UserStore::exists(std::string_view user_id) const {
  return valid_user_id(user_id) && std::filesystem::exists(user_path(user_id));
}

std::mutex& UserStore::lock_for(const std::string& user_id) {
  std::lock_guard g(locks_mutex_);
  auto& slot = locks_[user_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

void UserStore::save(const UserProfile& p) const { write_file_atomic(user_path(p.user_id), profile_to_json(p).dump(2) + "\n"); }

UserProfile UserStore::create_user(std::string display_name) {
  UserProfile p;
  do {
    p.user_id = random_id();
  } while (std::filesystem::exists(user_path(p.user_id)));
  p.display_name = std::move(display_name);
  p.created_at = p.updated_at = now_seconds();
  p.shelves[std::string(kDefaultShelf)];
  std::lock_guard g(lock_for(p.user_id));
  save(p);
  return p;
}

UserProfile UserStore::load(std::string_view user_id) const {
  if (!exists(user_id)) throw Error(ErrorCode::not_found, "unknown user: " + std::string(user_id));
  try {
    return profile_from_json(json::parse(read_file_text(user_path(user_id))));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, std::string("corrupt user document: ") + e.what());
  }
}

void UserStore::add_to_shelf(std::string_view user_id, std::string_view shelf, std::string_view book_id,
                             std::optional<int> rating) {
  check_rating(rating);
  check_shelf_name(shelf);
  if (book_id.empty()) throw Error(ErrorCode::validation, "book_id is required");
  std::lock_guard g(lock_for(std::string(user_id)));
  auto p = load(user_id);
  if (!upsert(p, std::string(shelf), std::string(book_id), rating, now_seconds())) return;
  p.updated_at = now_seconds();
  save(p);
}

ImportReport UserStore::import_shelves(std::string_view user_id, std::string_view csv, const Catalog& catalog) {
  static constexpr std::string_view kRequired[] = {"Book Id",        "Title",       "Author",    "My Rating",
                                                   "Average Rating", "Bookshelves", "Date Added"};
  const auto rows = parse_csv(csv);
  if (rows.empty()) throw Error(ErrorCode::format, "CSV has no header row");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].second.size(); ++i) col.emplace(trim(rows[0].second[i]), i);
  for (auto name : kRequired) {
    if (!col.count(std::string(name))) throw Error(ErrorCode::format, "CSV is missing column \"" + std::string(name) + "\"");
  }

  std::map<std::string, std::string> by_title;
  for (const auto& [id, b] : catalog.books()) {
    if (!b.authors.empty()) by_title.emplace(match_key(b.title, b.primary_author()), id);
  }

  std::lock_guard g(lock_for(std::string(user_id)));
  auto p = load(user_id);
  ImportReport report;
  const auto now = now_seconds();
  bool changed = false;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, fields] = rows[r];
    auto get = [&](std::string_view name) -> std::string {
      const auto i = col.at(std::string(name));
      return i < fields.size() ? trim(fields[i]) : std::string();
    };
    ++report.rows;
    ImportIssue issue{line, get("Book Id"), get("Title"), ""};

    const auto rating = parse_int(get("My Rating"));
    if (!rating || *rating < 0 || *rating > 5) {
      issue.reason = "My Rating must be an integer 0..5";
      report.invalid.push_back(std::move(issue));
      continue;
    }
    const BookRecord* book = issue.book_id.empty() ? nullptr : catalog.find(issue.book_id);
    if (!book) {
      auto it = by_title.find(match_key(issue.title, get("Author")));
      if (it != by_title.end()) book = catalog.find(it->second);
    }
    if (!book) {
      issue.reason = "no catalog match";
      report.unmatched.push_back(std::move(issue));
      continue;
    }

    std::vector<std::string> shelves;
    const auto raw = get("Bookshelves");
    std::size_t start = 0;
    while (start <= raw.size()) {
      const auto comma = raw.find(',', start);
      auto name = trim(std::string_view(raw).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (!name.empty() && std::find(shelves.begin(), shelves.end(), name) == shelves.end()) shelves.push_back(name);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (shelves.empty()) shelves.emplace_back(kDefaultShelf);

    const auto added = parse_date_added(get("Date Added")).value_or(now);
    const std::optional<int> user_rating = *rating == 0 ? std::nullopt : std::optional<int>(*rating);
    for (const auto& s : shelves) changed |= upsert(p, s, book->book_id, user_rating, added);
    ++report.imported;
  }
  if (changed) {
    p.updated_at = now;
    save(p);
  }
  return report;
}

ShelfListing UserStore::list_shelf_books(std::string_view user_id, std::string_view shelf,
                                         const Catalog& catalog) const {
  const auto p = load(user_id);
  auto it = p.shelves.find(std::string(shelf));
  if (it == p.shelves.end()) throw Error(ErrorCode::not_found, "unknown shelf: " + std::string(shelf));
  ShelfListing out;
  for (const auto& e : it->second) {
    if (const auto* b = catalog.find(e.book_id)) {
      out.books.emplace_back(*b, e.user_rating);
    } else {
      ++out.skipped;
    }
  }
  return out;
}

ShelfListing UserStore::library_books(std::string_view user_id, const Catalog& catalog) const {
  const auto p = load(user_id);
  struct Merged {
    const ShelfEntry* first = nullptr;   // earliest add, fixes the order
    const ShelfEntry* rating = nullptr;  // latest add carrying a rating
    std::size_t seq = 0;
  };
  std::map<std::string, Merged> merged;
  std::size_t seq = 0;
  for (const auto& [name, entries] : p.shelves) {
    for (const auto& e : entries) {
      auto& m = merged[e.book_id];
      if (!m.first || e.added_at < m.first->added_at) {
        m.first = &e;
        m.seq = seq;
      }
      if (e.user_rating && (!m.rating || e.added_at >= m.rating->added_at)) m.rating = &e;
      ++seq;
    }
  }
  std::vector<const Merged*> order;
  for (const auto& [id, m] : merged) order.push_back(&m);
  std::sort(order.begin(), order.end(), [](const Merged* a, const Merged* b) {
    if (a->first->added_at != b->first->added_at) return a->first->added_at < b->first->added_at;
    return a->seq < b->seq;
  });
  ShelfListing out;
  for (const auto* m : order) {
    if (const auto* b = catalog.find(m->first->book_id)) {
      out.books.emplace_back(*b, m->rating ? m->rating->user_rating : std::nullopt);
    } else {
      ++out.skipped;
    }
  }
  return out;
}

}  // namespace bookvis
