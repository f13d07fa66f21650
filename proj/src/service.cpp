#include "bookvis/service.hpp"

#include <cstdlib>
#include <fstream>
#include <mutex>

#include <httplib.h>

#include "bookvis/app.hpp"
#include "bookvis/catalog.hpp"
#include "bookvis/store.hpp"
#include "bookvis/util.hpp"
#include "bookvis/vocab_index.hpp"

namespace bookvis {

using nlohmann::json;

ServiceConfig config_from_env(ServiceConfig base) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("BOOKVIS_DATA_DIR")) base.data_dir = *v;
  if (auto v = env("BOOKVIS_INDEX"); v && !base.index_path) base.index_path = *v;
  if (auto v = env("BOOKVIS_CATALOG"); v && base.catalog_path.empty()) base.catalog_path = *v;
  if (auto v = env("BOOKVIS_PORT")) {
    try {
      base.port = std::stoi(*v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::validation, "BOOKVIS_PORT is not a number: " + *v);
    }
  }
  return base;
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::validation:
    case ErrorCode::invalid_genre: return 422;
    case ErrorCode::conflict:
    case ErrorCode::empty_library: return 409;
    case ErrorCode::decode:
    case ErrorCode::format: return 400;
    case ErrorCode::too_large: return 413;
    default: return 500;
  }
}

json api_error(int status, std::string_view code, std::string_view message) {
  return {{"status", status}, {"code", code}, {"message", message}};
}

namespace {

struct Route {
  const char* method;
  const char* path;
  const char* summary;
  const char* content;  // success media type
  int status;
};

constexpr Route kRoutes[] = {
    {"get", "/api/health", "Liveness and loaded corpus sizes", "application/json", 200},
    {"get", "/api/spec", "This document", "application/json", 200},
    {"post", "/api/recognize", "Recognize a cover photo (multipart field \"image\"; query hints, top)",
     "application/json", 200},
    {"get", "/api/books/{id}", "Catalog record", "application/json", 200},
    {"get", "/api/books/{id}/palette", "Dominant cover colors and derived theme", "application/json", 200},
    {"get", "/api/books/{id}/selfie.svg", "bookSelfie", "image/svg+xml", 200},
    {"get", "/api/books/{id}/selfie.json", "bookSelfie payload", "application/json", 200},
    {"get", "/api/books/{id}/similar-grid.svg", "Similar-books grid", "image/svg+xml", 200},
    {"get", "/api/books/{id}/similar-grid.json", "Similar-books grid payload", "application/json", 200},
    {"get", "/api/books/{id}/author-timeline.svg", "Author timeline", "image/svg+xml", 200},
    {"get", "/api/books/{id}/author-timeline.json", "Author timeline payload", "application/json", 200},
    {"post", "/api/users", "Create a user ({display_name})", "application/json", 201},
    {"get", "/api/users/{id}", "User profile and shelves", "application/json", 200},
    {"post", "/api/users/{id}/import", "Import a Goodreads-style CSV export", "application/json", 200},
    {"post", "/api/users/{id}/shelves/{shelf}/books", "Save a book ({book_id, rating?})", "application/json", 201},
    {"get", "/api/users/{id}/data-selfie.svg", "dataSelfie (query book= picks the theme)", "image/svg+xml", 200},
    {"get", "/api/users/{id}/data-selfie.json", "dataSelfie payload", "application/json", 200},
    {"get", "/api/users/{id}/rose.svg", "myRose", "image/svg+xml", 200},
    {"get", "/api/users/{id}/rose.json", "myRose payload", "application/json", 200},
    {"get", "/api/users/{id}/fit/{book_id}", "How-it-fits result", "application/json", 200},
    {"get", "/api/users/{id}/fit/{book_id}.svg", "How-it-fits visualization", "image/svg+xml", 200},
    {"post", "/api/admin/reload", "Reload catalog and index", "application/json", 200},
};

struct State {
  std::shared_ptr<const Catalog> catalog;
  std::shared_ptr<const Engine> engine;  // null when no index is configured
  std::shared_ptr<PaletteCache> palettes;
  std::uint64_t generation = 0;
};

struct TasteEntry {
  std::string version;
  std::shared_ptr<const TasteModel> model;
};

std::vector<std::string> split_hints(const std::string& raw) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= raw.size()) {
    const auto comma = raw.find(',', start);
    auto t = trim(std::string_view(raw).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!t.empty()) out.push_back(std::move(t));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, status, api_error(status, code, message));
}

}  // namespace

json openapi_document() {
  json paths = json::object();
  for (const auto& r : kRoutes) {
    json op = {{"summary", r.summary},
               {"responses",
                {{std::to_string(r.status), {{"description", "success"}, {"content", {{r.content, json::object()}}}}},
                 {"default",
                  {{"description", "ApiError"},
                   {"content", {{"application/json", {{"schema", {{"$ref", "#/components/schemas/ApiError"}}}}}}}}}}}};
    paths[r.path][r.method] = std::move(op);
  }
  return {{"openapi", "3.0.3"},
          {"info", {{"title", "BookVIS API"}, {"version", "1"}}},
          {"paths", std::move(paths)},
          {"components",
           {{"schemas",
             {{"ApiError",
               {{"type", "object"},
                {"required", {"status", "code", "message"}},
                {"properties",
                 {{"status", {{"type", "integer"}}},
                  {"code", {{"type", "string"}}},
                  {"message", {{"type", "string"}}}}}}}}}}}};
}

struct Service::Impl {
  ServiceConfig cfg;
  UserStore store;
  httplib::Server server;
  int bound_port = -1;

  std::mutex state_mu;
  std::shared_ptr<const State> state;

  std::mutex taste_mu;
  std::map<std::string, TasteEntry> taste_cache;

  std::mutex log_mu;

  explicit Impl(ServiceConfig c) : cfg(std::move(c)), store(cfg.data_dir) {
    state = load_state(0);
    routes();
  }

  std::shared_ptr<const State> load_state(std::uint64_t generation) const {
    if (cfg.catalog_path.empty()) throw Error(ErrorCode::validation, "no catalog configured (BOOKVIS_CATALOG)");
    auto s = std::make_shared<State>();
    s->catalog = std::make_shared<const Catalog>(load_catalog(cfg.catalog_path));
    if (cfg.index_path) s->engine = load_engine(*cfg.index_path, s->catalog);
    s->palettes = std::make_shared<PaletteCache>(cfg.covers_dir.value_or(cfg.catalog_path.parent_path()));
    s->generation = generation;
    return s;
  }

  std::shared_ptr<const State> snapshot() {
    std::lock_guard g(state_mu);
    return state;
  }

  void reload() {
    std::uint64_t next;
    {
      std::lock_guard g(state_mu);
      next = state->generation + 1;
    }
    auto fresh = load_state(next);
    std::lock_guard g(state_mu);
    state = std::move(fresh);
  }

  // --- helpers ------------------------------------------------------------

  const BookRecord& book_or_404(const State& s, const std::string& id) { return s.catalog->at(id); }

  UserProfile user_or_404(const std::string& id) { return store.load(id); }

  ShelfListing library(const UserProfile& p, const Catalog& catalog) {
    return store.library_books(p.user_id, catalog);
  }

  std::shared_ptr<const TasteModel> taste(const State& s, const UserProfile& p, const ShelfListing& lib) {
    const auto version = std::to_string(s.generation) + ":" + sha256_hex(profile_to_json(p).dump());
    {
      std::lock_guard g(taste_mu);
      if (auto it = taste_cache.find(p.user_id); it != taste_cache.end() && it->second.version == version) {
        return it->second.model;
      }
    }
    auto model = std::make_shared<const TasteModel>(library_taste(lib));
    std::lock_guard g(taste_mu);
    taste_cache[p.user_id] = {version, model};
    return model;
  }

  void invalidate(const std::string& user_id) {
    std::lock_guard g(taste_mu);
    taste_cache.erase(user_id);
  }

  Theme theme_for(const State& s, const httplib::Request& req, const ShelfListing& lib) {
    if (req.has_param("book")) {
      if (const auto* b = s.catalog->find(req.get_param_value("book"))) return theme_from_palette(s.palettes->get(*b));
    }
    return library_theme(lib, *s.palettes);
  }

  static void send_svg(const httplib::Request& req, httplib::Response& res, const std::string& svg) {
    const auto hash = sha256_hex(svg);
    const auto etag = "\"" + hash + "\"";
    res.set_header("ETag", etag);
    res.set_header("X-Content-SHA256", hash);
    res.set_header("Cache-Control", "no-cache");
    if (req.get_header_value("If-None-Match") == etag) {
      res.status = 304;
      return;
    }
    res.status = 200;
    res.set_content(svg, "image/svg+xml");
  }

  static void send_doc(const httplib::Request& req, httplib::Response& res, const VizDocument& doc, bool svg) {
    if (svg) {
      send_svg(req, res, doc.svg);
    } else {
      send_json(res, 200, doc.payload);
    }
  }

  void log_recognition(const std::vector<std::string>& hints, const RankedMatches& m) {
    json line = {{"at", format_rfc3339(std::chrono::system_clock::now())},
                 {"hints", hints},
                 {"query_descriptors", m.query_descriptor_count},
                 {"top", m.entries.empty() ? json(nullptr) : json(m.entries.front().book_id)}};
    std::lock_guard g(log_mu);
    std::ofstream out(cfg.data_dir / "recognitions.jsonl", std::ios::app);
    out << line.dump() << '\n';
  }

  using Fn = std::function<void(const httplib::Request&, httplib::Response&)>;

  static Fn guarded(Fn fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        const auto code = e.code() == ErrorCode::decode ? std::string_view("bad_image") : to_string(e.code());
        send_error(res, http_status(e.code()), code, e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, "bad_request", std::string("malformed JSON: ") + e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal_error", e.what());
      }
    };
  }

  json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::validation, "request body must be a JSON object");
    return j;
  }

  // --- routes -------------------------------------------------------------

  void routes() {
    auto& sv = server;
    sv.set_payload_max_length(cfg.max_upload_bytes);
    sv.set_default_headers({{"Access-Control-Allow-Origin", cfg.cors_origin},
                            {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                            {"Access-Control-Allow-Headers", "Content-Type, If-None-Match"},
                            {"Access-Control-Expose-Headers", "ETag, X-Content-SHA256"}});
    sv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      std::string code = "http_error";
      std::string message = httplib::status_message(res.status);
      if (res.status == 404) code = "not_found";
      if (res.status == 413) code = "too_large";
      if (res.status == 400) code = "bad_request";
      if (res.status == 405) code = "method_not_allowed";
      send_error(res, res.status, code, message);
      return httplib::Server::HandlerResponse::Handled;
    });
    sv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
      send_error(res, 500, "internal_error", "unhandled exception");
    });
    sv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    sv.Get("/api/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      const auto s = snapshot();
      send_json(res, 200,
                {{"schema", kSchemaTag},
                 {"status", "ok"},
                 {"books", s->catalog->size()},
                 {"indexed_documents", s->engine ? s->engine->index.doc_count() : 0},
                 {"generation", s->generation}});
    }));
    sv.Get("/api/spec", guarded([](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, openapi_document());
    }));

    sv.Post("/api/recognize", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = snapshot();
      if (!s->engine) {
        send_error(res, 503, "index_unavailable", "no index loaded; set BOOKVIS_INDEX");
        return;
      }
      std::string bytes;
      if (req.has_file("image")) {
        bytes = req.get_file_value("image").content;
      } else if (req.get_header_value("Content-Type").rfind("image/", 0) == 0) {
        bytes = req.body;
      } else {
        send_error(res, 400, "bad_request", "expected multipart field \"image\"");
        return;
      }
      if (bytes.size() > cfg.max_upload_bytes) throw Error(ErrorCode::too_large, "image exceeds upload limit");
      const auto hints = req.has_param("hints") ? split_hints(req.get_param_value("hints")) : std::vector<std::string>{};
      std::size_t top = 5;
      if (req.has_param("top")) {
        try {
          top = static_cast<std::size_t>(std::clamp(std::stoi(req.get_param_value("top")), 1, 100));
        } catch (const std::exception&) {
          throw Error(ErrorCode::validation, "top must be an integer");
        }
      }
      const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data());
      const auto matches = recognize(*s->engine, std::span(p, bytes.size()), hints, top);
      log_recognition(hints, matches);
      send_json(res, 200, matches_to_json(matches, s->catalog.get()));
    }));

    // book side
    sv.Get(R"(/api/books/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = snapshot();
      send_json(res, 200, {{"schema", kSchemaTag}, {"book", book_to_json(book_or_404(*s, req.matches[1]))}});
    }));
    sv.Get(R"(/api/books/([^/]+)/palette)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = snapshot();
      const auto palette = s->palettes->get(book_or_404(*s, req.matches[1]));
      auto body = palette_to_json(palette);
      body["schema"] = kSchemaTag;
      body["theme"] = theme_to_json(theme_from_palette(palette));
      send_json(res, 200, body);
    }));
    sv.Get(R"(/api/books/([^/]+)/selfie\.(svg|json))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = snapshot();
      const auto doc = book_selfie_doc(book_or_404(*s, req.matches[1]), *s->catalog, *s->palettes);
      send_doc(req, res, doc, req.matches[2] == "svg");
    }));
    sv.Get(R"(/api/books/([^/]+)/similar-grid(\.svg|\.json)?)",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
             const auto s = snapshot();
             const auto doc = similar_grid_doc(book_or_404(*s, req.matches[1]), *s->catalog, *s->palettes);
             send_doc(req, res, doc, req.matches[2] == ".svg");
           }));
    sv.Get(R"(/api/books/([^/]+)/author-timeline(\.svg|\.json)?)",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
             const auto s = snapshot();
             const auto doc = author_timeline_doc(book_or_404(*s, req.matches[1]), *s->catalog, *s->palettes);
             send_doc(req, res, doc, req.matches[2] == ".svg");
           }));

    // user side
    sv.Post("/api/users", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      std::string name = "reader";
      if (body.contains("display_name")) {
        if (!body["display_name"].is_string()) throw Error(ErrorCode::validation, "display_name must be a string");
        name = body["display_name"].get<std::string>();
      }
      send_json(res, 201, profile_to_json(store.create_user(name)));
    }));
    sv.Get(R"(/api/users/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, profile_to_json(user_or_404(req.matches[1])));
    }));
    sv.Post(R"(/api/users/([^/]+)/import)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const auto s = snapshot();
      const std::string csv = req.has_file("csv") ? req.get_file_value("csv").content : req.body;
      const auto report = store.import_shelves(id, csv, *s->catalog);
      invalidate(id);
      send_json(res, 200, import_report_to_json(report));
    }));
    sv.Post(R"(/api/users/([^/]+)/shelves/([^/]+)/books)",
            guarded([this](const httplib::Request& req, httplib::Response& res) {
              const std::string id = req.matches[1], shelf = req.matches[2];
              const auto s = snapshot();
              const auto body = parse_body(req);
              if (!body.contains("book_id") || !body["book_id"].is_string()) {
                throw Error(ErrorCode::validation, "book_id must be a string");
              }
              std::optional<int> rating;
              if (body.contains("rating") && !body["rating"].is_null()) {
                if (!body["rating"].is_number_integer()) throw Error(ErrorCode::validation, "rating must be an integer");
                rating = body["rating"].get<int>();
              }
              const auto book_id = body["book_id"].get<std::string>();
              user_or_404(id);
              book_or_404(*s, book_id);
              store.add_to_shelf(id, shelf, book_id, rating);
              invalidate(id);
              send_json(res, 201,
                        {{"schema", kSchemaTag},
                         {"user_id", id},
                         {"shelf", shelf},
                         {"book_id", book_id},
                         {"rating", rating ? json(*rating) : json(nullptr)}});
            }));
    sv.Get(R"(/api/users/([^/]+)/data-selfie\.(svg|json))",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
             const auto s = snapshot();
             const auto p = user_or_404(req.matches[1]);
             const auto lib = library(p, *s->catalog);
             const auto model = taste(*s, p, lib);
             send_doc(req, res, data_selfie_doc(*model, theme_for(*s, req, lib)), req.matches[2] == "svg");
           }));
    sv.Get(R"(/api/users/([^/]+)/rose\.(svg|json))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = snapshot();
      const auto p = user_or_404(req.matches[1]);
      const auto lib = library(p, *s->catalog);
      send_doc(req, res, my_rose_doc(lib, theme_for(*s, req, lib)), req.matches[2] == "svg");
    }));
    sv.Get(R"(/api/users/([^/]+)/fit/([^/]+)\.svg)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = snapshot();
      const auto p = user_or_404(req.matches[1]);
      const auto& book = book_or_404(*s, req.matches[2]);
      const auto lib = library(p, *s->catalog);
      const auto model = taste(*s, p, lib);
      send_svg(req, res, how_it_fits_doc(*model, book, theme_from_palette(s->palettes->get(book))).svg);
    }));
    sv.Get(R"(/api/users/([^/]+)/fit/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = snapshot();
      const std::string uid = req.matches[1];
      const auto p = user_or_404(uid);
      const auto& book = book_or_404(*s, req.matches[2]);
      const auto lib = library(p, *s->catalog);
      const auto model = taste(*s, p, lib);
      auto body = fit_response(uid, book, place_book(book, *model));
      body["svg"] = "/api/users/" + uid + "/fit/" + book.book_id + ".svg";
      send_json(res, 200, body);
    }));

    sv.Post("/api/admin/reload", guarded([this](const httplib::Request&, httplib::Response& res) {
      reload();
      const auto s = snapshot();
      send_json(res, 200, {{"schema", kSchemaTag}, {"status", "reloaded"}, {"generation", s->generation}});
    }));
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Service::~Service() = default;

int Service::bind() {
  auto& im = *impl_;
  if (im.cfg.port == 0) {
    im.bound_port = im.server.bind_to_any_port(im.cfg.host);
  } else if (im.server.bind_to_port(im.cfg.host, im.cfg.port)) {
    im.bound_port = im.cfg.port;
  }
  if (im.bound_port <= 0) {
    throw Error(ErrorCode::io, "cannot bind " + im.cfg.host + ":" + std::to_string(im.cfg.port));
  }
  return im.bound_port;
}

void Service::run() { impl_->server.listen_after_bind(); }
void Service::stop() { impl_->server.stop(); }
void Service::reload() { impl_->reload(); }
const ServiceConfig& Service::config() const noexcept { return impl_->cfg; }

}  // namespace bookvis
