#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "bookvis/store.hpp"
#include "bookvis/util.hpp"
#include "bookvis/vocab_index.hpp"
#include "desk_corpus.hpp"
#include "proc.hpp"
#include "support.hpp"
#include "svg_check.hpp"

using nlohmann::json;
using proc::quote;

namespace {

constexpr std::size_t kCovers = 16;

struct Desk {
  testing_support::TempDir dir;
  std::filesystem::path catalog, index, data;
  std::string first_edition, second_edition, outsider;
};

struct DeskSetup : Desk {
  DeskSetup() {
    proc::build_desk(dir.path(), kCovers);
    outsider = proc::add_outsider(dir.path());
    catalog = dir / "catalog.jsonl";
    index = dir / "desk.bvix";
    data = dir / "data";
    const auto corpus = bookvis::synth::make_desk_corpus(7, kCovers);
    first_edition = corpus.first_edition_id;
    second_edition = corpus.second_edition_id;
  }
};

Desk& desk() {
  static DeskSetup d;
  return d;
}

proc::Result cli(const std::string& args) { return proc::run(quote(BOOKVIS_CLI_BIN) + " " + args); }

std::string catalog_arg() { return " --catalog " + quote(desk().catalog.string()); }
std::string data_arg() { return " --data-dir " + quote(desk().data.string()); }

std::string new_user() {
  const auto r = cli("user create --name tester" + data_arg());
  EXPECT_EQ(r.exit_code, 0);
  return json::parse(r.out).at("user_id");
}

// A shelf CSV over the desk catalog: every book carrying `genre`.
std::string shelf_csv(const std::string& genre) {
  std::string csv = "Book Id,Title,Author,My Rating,Average Rating,Bookshelves,Date Added\n";
  const auto cat = bookvis::load_catalog(desk().catalog);
  for (const auto& b : cat.books()) {
    bool has = false;
    for (const auto& g : b.second.genres) has |= g.str() == genre;
    if (has) csv += b.first + ",\"" + b.second.title + "\",\"" + b.second.primary_author() + "\",4,4.0,read,2024/01/01\n";
  }
  return csv;
}

std::string write_csv(const std::string& name, const std::string& body) {
  const auto p = desk().dir / name;
  std::ofstream(p) << body;
  return p.string();
}

std::string most_common_genre() {
  std::map<std::string, int> n;
  const auto cat = bookvis::load_catalog(desk().catalog);
  for (const auto& b : cat.books())
    for (const auto& g : b.second.genres) ++n[g.str()];
  return std::max_element(n.begin(), n.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
}

}  // namespace

TEST(CliIndex, WritesIndexAndManifest) {
  const auto bytes = bookvis::read_file_bytes(desk().index);
  ASSERT_GE(bytes.size(), 4u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BVIX");
  const auto manifest = json::parse(bookvis::read_file_text(bookvis::manifest_path(desk().index)));
  EXPECT_EQ(manifest["kind"], "index_manifest");
  EXPECT_EQ(manifest["documents"], kCovers + 1);
  EXPECT_EQ(manifest["index_sha256"], bookvis::sha256_hex(bytes));
  EXPECT_TRUE(manifest["skipped"].empty());
}

TEST(CliIndex, RebuildIsByteIdentical) {
  const auto again = desk().dir / "again.bvix";
  ASSERT_EQ(cli("index build" + catalog_arg() + " --out " + quote(again.string())).exit_code, 0);
  EXPECT_EQ(bookvis::read_file_bytes(again), bookvis::read_file_bytes(desk().index));
}

TEST(CliQuery, ExactCoverRanksFirst) {
  const auto cover = desk().dir / "covers" / "b003.png";
  const auto r = cli("query " + quote(cover.string()) + " --index " + quote(desk().index.string()) + catalog_arg());
  ASSERT_EQ(r.exit_code, 0);
  const auto j = json::parse(r.out);
  ASSERT_FALSE(j["matches"].empty());
  EXPECT_EQ(j["matches"][0]["book_id"], "b003");
}

TEST(CliQuery, EditionHintPromotesSecondEdition) {
  const auto& d = desk();
  const auto cover = bookvis::load_catalog(d.catalog).at(d.first_edition).cover_ref;
  const auto base = "query " + quote((d.dir / cover).string()) + " --index " + quote(d.index.string()) + catalog_arg();
  EXPECT_EQ(json::parse(cli(base).out)["matches"][0]["book_id"], d.first_edition);
  EXPECT_EQ(json::parse(cli(base + " --hints 2nd,edition").out)["matches"][0]["book_id"], d.second_edition);
}

TEST(CliQuery, UndecodableImageIsDomainError) {
  const auto junk = write_csv("junk.png", "definitely not an image");
  EXPECT_EQ(cli("query " + quote(junk) + " --index " + quote(desk().index.string()) + catalog_arg()).exit_code, 3);
}

TEST(CliPalette, PrintsSwatchesAndTheme) {
  const auto r = cli("palette " + quote((desk().dir / "covers" / "b001.png").string()) + " -k 3");
  ASSERT_EQ(r.exit_code, 0);
  const auto j = json::parse(r.out);
  EXPECT_LE(j["colors"].size(), 3u);
  EXPECT_TRUE(j.contains("theme"));
}

TEST(CliUser, ImportSelfieAndFit) {
  const auto user = new_user();
  const auto genre = most_common_genre();
  const auto csv = write_csv("shelf.csv", shelf_csv(genre));
  auto r = cli("import --user " + user + " --csv " + quote(csv) + data_arg() + catalog_arg());
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_GT(json::parse(r.out)["imported"].get<int>(), 0);

  const auto svg = desk().dir / (user + ".svg");
  r = cli("selfie --user " + user + data_arg() + catalog_arg() + " --out " + quote(svg.string()));
  ASSERT_EQ(r.exit_code, 0);
  const auto text = bookvis::read_file_text(svg);
  EXPECT_TRUE(svg_check::well_formed(text));
  EXPECT_EQ(json::parse(r.out)["sha256"], bookvis::sha256_hex(text));

  const auto stdout_svg = cli("selfie --user " + user + data_arg() + catalog_arg() + " --out -");
  EXPECT_EQ(stdout_svg.out, text);

  // a book sharing no genre with the shelf still exits cleanly
  const auto fit_svg = desk().dir / "outsider.svg";
  r = cli("fit --user " + user + " --book " + desk().outsider + data_arg() + catalog_arg() + " --out " +
          quote(fit_svg.string()));
  ASSERT_EQ(r.exit_code, 0);
  const auto fit = json::parse(r.out)["fit"];
  EXPECT_FALSE(fit["overlap"].get<bool>());
  EXPECT_EQ(fit["fitness"], 0.0);
  EXPECT_TRUE(svg_check::with_class(bookvis::read_file_text(fit_svg), "fit-dot").empty());
}

TEST(CliRender, EveryKindAndFormat) {
  const auto user = new_user();
  const auto csv = write_csv("render.csv", shelf_csv(most_common_genre()));
  ASSERT_EQ(cli("import --user " + user + " --csv " + quote(csv) + data_arg() + catalog_arg()).exit_code, 0);
  for (const char* kind : {"book_selfie", "author_timeline", "similar_grid", "data_selfie", "how_it_fits", "my_rose"}) {
    const auto args = std::string("render ") + kind + " --user " + user + " --book b002" + data_arg() + catalog_arg();
    const auto svg = cli(args);
    ASSERT_EQ(svg.exit_code, 0) << kind;
    EXPECT_TRUE(svg_check::well_formed(svg.out)) << kind;
    EXPECT_EQ(cli(args).out, svg.out) << kind;
    const auto payload = json::parse(cli(args + " --format json").out);
    EXPECT_EQ(payload["kind"], kind);
  }
}

TEST(CliExitCodes, UsageIoAndDomain) {
  EXPECT_EQ(cli("").exit_code, 1);
  EXPECT_EQ(cli("frobnicate").exit_code, 1);
  EXPECT_EQ(cli("query").exit_code, 1);
  EXPECT_EQ(cli("--help").exit_code, 0);
  EXPECT_EQ(cli("palette /no/such/file.png").exit_code, 2);
  EXPECT_EQ(cli("index build --catalog /no/such/catalog.jsonl --out x.bvix").exit_code, 2);
  EXPECT_EQ(cli("fit --user nobody --book b001" + data_arg() + catalog_arg()).exit_code, 3);
  EXPECT_EQ(cli("render book_selfie --book nope" + catalog_arg()).exit_code, 3);
  EXPECT_EQ(cli("render data_selfie" + catalog_arg()).exit_code, 1);
  const auto empty = new_user();
  EXPECT_EQ(cli("selfie --user " + empty + data_arg() + catalog_arg() + " --out -").exit_code, 3);
}

TEST(CliEnv, CatalogFromEnvironment) {
  const auto r = proc::run("BOOKVIS_CATALOG=" + quote(desk().catalog.string()) + " " + quote(BOOKVIS_CLI_BIN) +
                           " render book_selfie --book b001");
  EXPECT_EQ(r.exit_code, 0);
}

TEST(SynthTool, LibraryFixture) {
  testing_support::TempDir dir;
  const auto r = proc::run(quote(BOOKVIS_SYNTH_BIN) + " library --out " + quote(dir.path().string()) +
                           " --books 300 --rows 200");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(bookvis::load_catalog(dir / "library.jsonl").size(), 300u);
  EXPECT_EQ(bookvis::parse_csv(bookvis::read_file_text(dir / "shelves.csv")).size(), 201u);
}
