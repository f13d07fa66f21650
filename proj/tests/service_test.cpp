#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "bookvis/image.hpp"
#include "bookvis/service.hpp"
#include "bookvis/taste.hpp"
#include "bookvis/util.hpp"
#include "desk_corpus.hpp"
#include "proc.hpp"
#include "support.hpp"
#include "svg_check.hpp"

using namespace bookvis;
using nlohmann::json;

namespace {

constexpr std::size_t kCovers = 12;

struct Running {
  std::unique_ptr<Service> service;
  std::thread thread;
  int port = 0;

  explicit Running(ServiceConfig cfg) : service(std::make_unique<Service>(std::move(cfg))) {
    port = service->bind();
    thread = std::thread([this] { service->run(); });
  }
  ~Running() {
    service->stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    return c;
  }
};

struct World {
  testing_support::TempDir dir;
  std::unique_ptr<Running> full;
  std::unique_ptr<Running> no_index;
  Catalog catalog;
  synth::DeskCorpus corpus;
  std::string outsider;
};

struct WorldSetup : World {
  WorldSetup() {
    proc::build_desk(dir.path(), kCovers);
    outsider = proc::add_outsider(dir.path());
    catalog = load_catalog(dir / "catalog.jsonl");
    corpus = synth::make_desk_corpus(7, kCovers);
    ServiceConfig cfg;
    cfg.catalog_path = dir / "catalog.jsonl";
    cfg.data_dir = dir / "data";
    cfg.index_path = dir / "desk.bvix";
    cfg.port = 0;
    full = std::make_unique<Running>(cfg);
    cfg.index_path.reset();
    cfg.data_dir = dir / "data2";
    no_index = std::make_unique<Running>(cfg);
  }
  ~WorldSetup() {
    no_index.reset();
    full.reset();
  }
};

World& world() {
  static WorldSetup w;
  return w;
}

httplib::Client api() { return world().full->client(); }

void expect_api_error(const httplib::Result& r, int status, const std::string& code) {
  ASSERT_TRUE(r) << "no response";
  EXPECT_EQ(r->status, status);
  const auto j = json::parse(r->body);
  EXPECT_EQ(j.at("status"), status);
  EXPECT_EQ(j.at("code"), code);
  EXPECT_TRUE(j.at("message").is_string());
  EXPECT_EQ(r->get_header_value("Content-Type"), "application/json");
}

httplib::Result upload(httplib::Client& c, const std::string& bytes, const std::string& query = "") {
  httplib::MultipartFormDataItems items = {{"image", bytes, "cover.png", "image/png"}};
  return c.Post(("/api/recognize" + query).c_str(), items);
}

std::string cover_bytes(const std::string& id) {
  const auto b = read_file_bytes(world().dir / world().catalog.at(id).cover_ref);
  return {b.begin(), b.end()};
}

std::string create_user(httplib::Client& c) {
  const auto r = c.Post("/api/users", R"({"display_name":"http reader"})", "application/json");
  EXPECT_EQ(r->status, 201);
  return json::parse(r->body).at("user_id");
}

httplib::Result shelve(httplib::Client& c, const std::string& user, const std::string& book, const json& rating = nullptr,
                       const std::string& shelf = "read") {
  json body = {{"book_id", book}};
  if (!rating.is_null()) body["rating"] = rating;
  return c.Post(("/api/users/" + user + "/shelves/" + shelf + "/books").c_str(), body.dump(), "application/json");
}

std::set<std::string> genre_set(const BookRecord& b) {
  std::set<std::string> out;
  for (const auto& g : b.genres) out.insert(g.str());
  return out;
}

std::size_t shared_genres(const std::set<std::string>& a, const BookRecord& b) {
  std::size_t n = 0;
  for (const auto& g : b.genres) n += a.count(g.str());
  return n;
}

}  // namespace

TEST(Http, HealthAndSpec) {
  auto c = api();
  auto r = c.Get("/api/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["indexed_documents"], kCovers + 1);
  r = c.Get("/api/spec");
  ASSERT_EQ(r->status, 200);
  const auto spec = json::parse(r->body);
  EXPECT_EQ(spec["openapi"], "3.0.3");
  EXPECT_TRUE(spec["paths"].contains("/api/recognize"));
  EXPECT_TRUE(spec["components"]["schemas"].contains("ApiError"));
}

TEST(Http, RecognizeExactCover) {
  auto c = api();
  const auto r = upload(c, cover_bytes("b005"), "?top=3");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  const auto j = json::parse(r->body);
  ASSERT_EQ(j["matches"].size(), 3u);
  EXPECT_EQ(j["matches"][0]["book_id"], "b005");
  EXPECT_GT(j["matches"][0]["confidence"].get<double>(), 0.0);
  EXPECT_EQ(j["matches"][1]["confidence"], 0.0);
}

TEST(Http, RecognizeRawBodyAndHints) {
  auto c = api();
  const auto& w = world();
  const auto bytes = cover_bytes(w.corpus.first_edition_id);
  auto r = c.Post("/api/recognize", bytes, "image/png");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["matches"][0]["book_id"], w.corpus.first_edition_id);
  r = c.Post("/api/recognize?hints=2nd,edition", bytes, "image/png");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["matches"][0]["book_id"], w.corpus.second_edition_id);
}

TEST(Http, RecognizeRejectsGarbage) {
  auto c = api();
  expect_api_error(upload(c, std::string(20, '\x07')), 400, "bad_image");
  expect_api_error(c.Post("/api/recognize", "{}", "application/json"), 400, "bad_request");
  expect_api_error(c.Post("/api/recognize?top=many", cover_bytes("b001"), "image/png"), 422, "validation_error");
}

TEST(Http, BlankImageHasNoMatches) {
  auto c = api();
  const auto png = encode_png(RasterImage(200, 300, {255, 255, 255}));
  const auto r = upload(c, std::string(png.begin(), png.end()));
  ASSERT_EQ(r->status, 200);
  const auto j = json::parse(r->body);
  EXPECT_TRUE(j["matches"].empty());
  EXPECT_EQ(j["query_descriptors"], 0);
}

TEST(Http, OversizedUploadIs413) {
  auto c = api();
  const auto r = c.Post("/api/recognize", std::string((10u << 20) + 1024, 'x'), "image/png");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 413);
  EXPECT_EQ(json::parse(r->body)["code"], "too_large");
}

TEST(Http, NoIndexIs503) {
  auto c = world().no_index->client();
  expect_api_error(upload(c, cover_bytes("b001")), 503, "index_unavailable");
  EXPECT_EQ(c.Get("/api/books/b001/selfie.svg")->status, 200);
}

TEST(Http, BookEndpoints) {
  auto c = api();
  auto r = c.Get("/api/books/b002");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["book"]["book_id"], "b002");
  r = c.Get("/api/books/b002/palette");
  ASSERT_EQ(r->status, 200);
  EXPECT_FALSE(json::parse(r->body)["colors"].empty());
  for (const char* path : {"/api/books/b002/selfie.svg", "/api/books/b002/similar-grid.svg", "/api/books/b002/author-timeline.svg"}) {
    const auto a = c.Get(path);
    ASSERT_EQ(a->status, 200) << path;
    EXPECT_EQ(a->get_header_value("Content-Type"), "image/svg+xml");
    EXPECT_EQ(a->get_header_value("X-Content-SHA256"), sha256_hex(a->body));
    EXPECT_TRUE(svg_check::well_formed(a->body)) << path;
    const auto b = c.Get(path);
    EXPECT_EQ(a->body, b->body);
    const auto cached = c.Get(path, {{"If-None-Match", a->get_header_value("ETag")}});
    EXPECT_EQ(cached->status, 304);
    EXPECT_TRUE(cached->body.empty());
  }
  for (const char* path : {"/api/books/b002/selfie.json", "/api/books/b002/similar-grid.json", "/api/books/b002/author-timeline.json",
                           "/api/books/b002/similar-grid"}) {
    const auto a = c.Get(path);
    ASSERT_EQ(a->status, 200) << path;
    EXPECT_EQ(json::parse(a->body)["schema"], "bookvis/1");
  }
  EXPECT_EQ(json::parse(c.Get("/api/books/b002/similar-grid.json")->body)["cells"].size(), 25u);
  expect_api_error(c.Get("/api/books/zzz"), 404, "not_found");
  expect_api_error(c.Get("/api/books/zzz/selfie.svg"), 404, "not_found");
}

TEST(Http, ShelfPostContract) {
  auto c = api();
  const auto user = create_user(c);
  auto r = shelve(c, user, "b003", 4);
  ASSERT_EQ(r->status, 201);
  EXPECT_EQ(json::parse(r->body)["rating"], 4);
  EXPECT_EQ(shelve(c, user, "b003", 4)->status, 201);
  const auto profile = json::parse(c.Get(("/api/users/" + user).c_str())->body);
  EXPECT_EQ(profile["shelves"]["read"].size(), 1u);
  expect_api_error(shelve(c, user, "b003", 7), 422, "validation_error");
  expect_api_error(shelve(c, user, "b003", "five"), 422, "validation_error");
  expect_api_error(shelve(c, user, "nope"), 404, "not_found");
  expect_api_error(shelve(c, "ghost", "b003"), 404, "not_found");
  expect_api_error(c.Post(("/api/users/" + user + "/shelves/read/books").c_str(), "{oops", "application/json"), 400,
                   "bad_request");
  expect_api_error(c.Get("/api/users/ghost"), 404, "not_found");
}

TEST(Http, EmptyLibraryIs409) {
  auto c = api();
  const auto user = create_user(c);
  expect_api_error(c.Get(("/api/users/" + user + "/data-selfie.svg").c_str()), 409, "empty_library");
  expect_api_error(c.Get(("/api/users/" + user + "/fit/b001").c_str()), 409, "empty_library");
  expect_api_error(c.Get(("/api/users/" + user + "/rose.svg").c_str()), 409, "empty_library");
}

TEST(Http, DataSelfieTracksShelfChanges) {
  auto c = api();
  const auto user = create_user(c);
  const auto& cat = world().catalog;
  ASSERT_EQ(shelve(c, user, "b001", 5)->status, 201);
  const auto path = "/api/users/" + user + "/data-selfie.json";
  auto before = json::parse(c.Get(path.c_str())->body);
  EXPECT_EQ(before["model"]["histogram"]["total_books"], 1);
  ASSERT_EQ(shelve(c, user, "b004", 3)->status, 201);
  auto after = json::parse(c.Get(path.c_str())->body);
  EXPECT_EQ(after["model"]["histogram"]["total_books"], 2);
  for (const auto& g : cat.at("b004").genres) EXPECT_TRUE(after["model"]["histogram"]["counts"].contains(g.str()));
  const auto svg = c.Get(("/api/users/" + user + "/data-selfie.svg?book=b004").c_str());
  ASSERT_EQ(svg->status, 200);
  EXPECT_TRUE(svg_check::well_formed(svg->body));
  const auto rose = c.Get(("/api/users/" + user + "/rose.svg").c_str());
  ASSERT_EQ(rose->status, 200);
  EXPECT_EQ(svg_check::with_class(rose->body, "rose-user").size(), 2u);
}

TEST(Http, FitBookSharingOneGenreSitsOnItsAnchor) {
  auto c = api();
  const auto& cat = world().catalog;
  // shelf one book, then probe with a book that shares exactly one of its genres
  for (const auto& [shelf_id, shelved] : cat.books()) {
    const auto mine = genre_set(shelved);
    for (const auto& [probe_id, probe] : cat.books()) {
      if (shared_genres(mine, probe) != 1 || mine.size() < 2) continue;
      std::string genre;
      for (const auto& g : probe.genres)
        if (mine.count(g.str())) genre = g.str();
      const auto user = create_user(c);
      ASSERT_EQ(shelve(c, user, shelf_id, 4)->status, 201);
      const auto model = json::parse(c.Get(("/api/users/" + user + "/data-selfie.json").c_str())->body)["model"];
      const double angle = model["layout"]["angles"][genre];
      const auto r = c.Get(("/api/users/" + user + "/fit/" + probe_id).c_str());
      ASSERT_EQ(r->status, 200);
      const auto fit = json::parse(r->body);
      EXPECT_EQ(fit["kind"], "fit");
      EXPECT_TRUE(fit["fit"]["overlap"].get<bool>());
      EXPECT_NEAR(fit["fit"]["position"]["x"].get<double>(), std::cos(angle), 1e-12);
      EXPECT_NEAR(fit["fit"]["position"]["y"].get<double>(), std::sin(angle), 1e-12);
      const auto svg = c.Get(fit["svg"].get<std::string>().c_str());
      ASSERT_EQ(svg->status, 200);
      EXPECT_EQ(svg_check::with_class(svg->body, "fit-dot").size(), 1u);
      return;
    }
  }
  FAIL() << "desk has no pair of books sharing exactly one genre";
}

TEST(Http, FitWithoutOverlap) {
  auto c = api();
  const auto& probe = world().outsider;
  const auto user = create_user(c);
  ASSERT_EQ(shelve(c, user, "b001", 4)->status, 201);
  const auto r = c.Get(("/api/users/" + user + "/fit/" + probe).c_str());
  ASSERT_EQ(r->status, 200);
  const auto fit = json::parse(r->body)["fit"];
  EXPECT_FALSE(fit["overlap"].get<bool>());
  EXPECT_EQ(fit["fitness"], 0.0);
  const auto svg = c.Get(("/api/users/" + user + "/fit/" + probe + ".svg").c_str());
  ASSERT_EQ(svg->status, 200);
  EXPECT_TRUE(svg_check::with_class(svg->body, "fit-dot").empty());
  expect_api_error(c.Get(("/api/users/" + user + "/fit/zzz").c_str()), 404, "not_found");
}

TEST(Http, ImportEndpoint) {
  auto c = api();
  const auto user = create_user(c);
  const std::string csv =
      "Book Id,Title,Author,My Rating,Average Rating,Bookshelves,Date Added\n"
      "b001,x,y,5,4.0,read,2024/02/02\n"
      "zzz,Missing,Nobody,3,3.0,read,\n";
  const auto r = c.Post(("/api/users/" + user + "/import").c_str(), csv, "text/csv");
  ASSERT_EQ(r->status, 200);
  const auto j = json::parse(r->body);
  EXPECT_EQ(j["imported"], 1);
  EXPECT_EQ(j["unmatched"].size(), 1u);
  expect_api_error(c.Post(("/api/users/" + user + "/import").c_str(), "Nope\n1\n", "text/csv"), 400, "format_error");
}

TEST(Http, UnknownRouteCorsAndPreflight) {
  auto c = api();
  const auto r = c.Get("/api/nothing/here");
  expect_api_error(r, 404, "not_found");
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
  const auto pre = c.Options("/api/users");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  EXPECT_NE(pre->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

TEST(Http, ReloadBumpsGeneration) {
  auto c = api();
  const auto before = json::parse(c.Get("/api/health")->body)["generation"].get<int>();
  const auto r = c.Post("/api/admin/reload");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["generation"], before + 1);
  EXPECT_EQ(upload(c, cover_bytes("b002"))->status, 200);
}

TEST(Http, ConcurrentShelfPostsAreAllKept) {
  const auto user = [] {
    auto c = api();
    return create_user(c);
  }();
  std::vector<std::thread> threads;
  std::atomic<int> created{0};
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      auto c = api();
      for (int i = 1 + t; i <= kCovers; i += 4) {
        char id[8];
        std::snprintf(id, sizeof id, "b%03d", i);
        if (shelve(c, user, id, 1 + i % 5)->status == 201) ++created;
      }
    });
  for (auto& th : threads) th.join();
  EXPECT_EQ(created, static_cast<int>(kCovers));
  auto c = api();
  EXPECT_EQ(json::parse(c.Get(("/api/users/" + user).c_str())->body)["shelves"]["read"].size(), kCovers);
}
