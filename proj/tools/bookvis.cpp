#include <csignal>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <pthread.h>

#include "bookvis/app.hpp"
#include "bookvis/catalog.hpp"
#include "bookvis/error.hpp"
#include "bookvis/features.hpp"
#include "bookvis/image.hpp"
#include "bookvis/palette.hpp"
#include "bookvis/service.hpp"
#include "bookvis/store.hpp"
#include "bookvis/util.hpp"
#include "bookvis/vizgen.hpp"
#include "bookvis/vocab_index.hpp"

using namespace bookvis;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitDomain = 3;

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

std::vector<std::string> split_commas(const std::string& raw) {
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

std::filesystem::path covers_or_default(const std::string& covers, const std::string& catalog) {
  return covers.empty() ? std::filesystem::path(catalog).parent_path() : std::filesystem::path(covers);
}

void write_output(const std::string& out, std::string_view content) {
  if (out.empty() || out == "-") {
    std::cout << content;
  } else {
    write_file_atomic(out, content);
  }
}

struct Common {
  std::string catalog;
  std::string data_dir = "data";
  std::string index;
  std::string covers;
};

void add_catalog(CLI::App* cmd, Common& c) {
  cmd->add_option("--catalog", c.catalog, "Catalog JSONL")->envname("BOOKVIS_CATALOG")->required();
}
void add_data_dir(CLI::App* cmd, Common& c) {
  cmd->add_option("--data-dir", c.data_dir, "User store root")->envname("BOOKVIS_DATA_DIR")->capture_default_str();
}
void add_covers(CLI::App* cmd, Common& c) {
  cmd->add_option("--covers", c.covers, "Cover image directory (default: the catalog's directory)");
}

int index_build(const Common& c, const TreeParams& params, const std::string& norm_name, const std::string& out) {
  const auto catalog = load_catalog(c.catalog);
  const auto covers = covers_or_default(c.covers, c.catalog);
  FeatureParams features;
  std::vector<IndexedDocument> docs;
  std::size_t descriptors = 0;
  std::vector<std::string> failed;
  std::string corpus_digest;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& [id, book] : catalog.books()) {
    try {
      const auto bytes = read_file_bytes(resolve_cover_path(book, covers));
      auto set = extract_descriptors(decode_image(bytes), features);
      descriptors += set.size();
      corpus_digest += id + ":" + sha256_hex(bytes) + "\n";
      docs.push_back({id, std::move(set)});
    } catch (const Error& e) {
      std::cerr << "skipping " << id << ": " << e.what() << '\n';
      failed.push_back(id);
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  const auto norm = norm_name == "l2" ? ScoringNorm::l2 : ScoringNorm::l1;
  const auto file = build_index(docs, params, norm);
  save_index(out, file);
  const auto t2 = std::chrono::steady_clock::now();

  json manifest = {{"schema", kSchemaTag},
                   {"kind", "index_manifest"},
                   {"index", std::filesystem::path(out).filename().string()},
                   {"format_version", kIndexFormatVersion},
                   {"branch_factor", params.branch_factor},
                   {"depth", params.max_depth},
                   {"seed", params.seed},
                   {"norm", norm_name},
                   {"documents", file.index.doc_count()},
                   {"nodes", file.tree.node_count()},
                   {"leaves", file.tree.leaf_count()},
                   {"descriptors", descriptors},
                   {"skipped", failed},
                   {"features", features},
                   {"corpus_sha256", sha256_hex(corpus_digest)},
                   {"index_sha256", sha256_hex(read_file_bytes(out))}};
  write_file_atomic(manifest_path(out), manifest.dump(2) + "\n");
  std::cerr << "extracted " << descriptors << " descriptors from " << docs.size() << " covers in "
            << std::chrono::duration<double>(t1 - t0).count() << " s; trained and indexed in "
            << std::chrono::duration<double>(t2 - t1).count() << " s\n";
  emit(manifest);
  return 0;
}

sigset_t serve_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGHUP);
  return set;
}

int serve(const Common& c, const std::string& host, int port) {
  // block before the server spawns workers so only the waiter sees signals
  const auto set = serve_signals();
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  ServiceConfig cfg;
  cfg.catalog_path = c.catalog;
  cfg.data_dir = c.data_dir;
  if (!c.index.empty()) cfg.index_path = c.index;
  if (!c.covers.empty()) cfg.covers_dir = c.covers;
  cfg.host = host;
  cfg.port = port;
  Service service(cfg);
  const int bound = service.bind();
  std::cerr << "bookvis listening on http://" << host << ":" << bound << '\n';
  std::thread waiter([&] {
    for (;;) {
      int sig = 0;
      sigwait(&set, &sig);
      if (sig == SIGHUP) {
        try {
          service.reload();
          std::cerr << "reloaded catalog and index\n";
        } catch (const std::exception& e) {
          std::cerr << "reload failed: " << e.what() << '\n';
        }
        continue;
      }
      service.stop();
      return;
    }
  });
  service.run();
  // run() can also return on its own; wake the waiter so it can exit
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BookVIS: book-cover recognition and reading-taste visualizations"};
  app.require_subcommand(1);
  Common c;

  auto* index_cmd = app.add_subcommand("index", "Vocabulary-tree index tools");
  index_cmd->require_subcommand(1);
  auto* build = index_cmd->add_subcommand("build", "Train a vocabulary tree over the catalog covers and index them");
  TreeParams tree_params;
  std::string norm = "l1", out;
  add_catalog(build, c);
  add_covers(build, c);
  build->add_option("--branch-factor", tree_params.branch_factor, "k")->capture_default_str();
  build->add_option("--depth", tree_params.max_depth, "L")->capture_default_str();
  build->add_option("--seed", tree_params.seed)->capture_default_str();
  build->add_option("--norm", norm)->check(CLI::IsMember({"l1", "l2"}))->capture_default_str();
  build->add_option("--out", out, "Index file")->required();

  auto* query = app.add_subcommand("query", "Recognize a cover image");
  std::string image, hints;
  std::size_t top = 5;
  query->add_option("image", image)->required();
  query->add_option("--index", c.index)->envname("BOOKVIS_INDEX")->required();
  add_catalog(query, c);
  query->add_option("--hints", hints, "Comma-separated text tokens read off the cover");
  query->add_option("--top", top)->capture_default_str();

  auto* palette_cmd = app.add_subcommand("palette", "Dominant colors of an image");
  int k = kDefaultPaletteSize;
  std::uint64_t seed = 0;
  palette_cmd->add_option("image", image)->required();
  palette_cmd->add_option("-k", k)->check(CLI::Range(1, kDefaultPaletteSize))->capture_default_str();
  palette_cmd->add_option("--seed", seed)->capture_default_str();

  std::string user, book;
  auto* selfie = app.add_subcommand("selfie", "Render a user's dataSelfie");
  selfie->add_option("--user", user)->required();
  add_data_dir(selfie, c);
  add_catalog(selfie, c);
  add_covers(selfie, c);
  selfie->add_option("--book", book, "Theme the chart with this book's cover");
  selfie->add_option("--out", out, "SVG path ('-' for stdout)")->required();

  auto* fit = app.add_subcommand("fit", "Place a book inside a user's dataSelfie");
  fit->add_option("--user", user)->required();
  fit->add_option("--book", book)->required();
  add_data_dir(fit, c);
  add_catalog(fit, c);
  add_covers(fit, c);
  fit->add_option("--out", out, "Also write the how-it-fits SVG here");

  auto* render_cmd = app.add_subcommand("render", "Render any visualization as SVG or JSON payload");
  std::string kind, format = "svg";
  render_cmd->add_option("kind", kind)
      ->check(CLI::IsMember({"book_selfie", "author_timeline", "similar_grid", "data_selfie", "how_it_fits", "my_rose"}))
      ->required();
  render_cmd->add_option("--user", user);
  render_cmd->add_option("--book", book);
  add_data_dir(render_cmd, c);
  add_catalog(render_cmd, c);
  add_covers(render_cmd, c);
  render_cmd->add_option("--format", format)->check(CLI::IsMember({"svg", "json"}))->capture_default_str();
  render_cmd->add_option("--out", out, "Output path ('-' for stdout)");

  auto* import_cmd = app.add_subcommand("import", "Import a Goodreads-style shelf export");
  std::string csv;
  import_cmd->add_option("--user", user)->required();
  import_cmd->add_option("--csv", csv)->required();
  add_data_dir(import_cmd, c);
  add_catalog(import_cmd, c);

  auto* user_cmd = app.add_subcommand("user", "User store tools");
  user_cmd->require_subcommand(1);
  auto* create = user_cmd->add_subcommand("create", "Create a user");
  std::string name = "reader";
  create->add_option("--name", name)->capture_default_str();
  add_data_dir(create, c);

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  add_catalog(serve_cmd, c);
  add_data_dir(serve_cmd, c);
  add_covers(serve_cmd, c);
  serve_cmd->add_option("--index", c.index)->envname("BOOKVIS_INDEX");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->envname("BOOKVIS_PORT")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*build) return index_build(c, tree_params, norm, out);

    if (*query) {
      auto catalog = std::make_shared<const Catalog>(load_catalog(c.catalog));
      const auto engine = load_engine(c.index, catalog);
      const auto bytes = read_file_bytes(image);
      const auto matches = recognize(*engine, bytes, split_commas(hints), top);
      emit(matches_to_json(matches, catalog.get()));
      return 0;
    }

    if (*palette_cmd) {
      const auto p = dominant_colors(decode_image(read_file_bytes(image)), k, seed);
      auto j = palette_to_json(p);
      j["schema"] = kSchemaTag;
      j["theme"] = theme_to_json(theme_from_palette(p));
      emit(j);
      return 0;
    }

    if (*create) {
      UserStore store(c.data_dir);
      emit(profile_to_json(store.create_user(name)));
      return 0;
    }

    if (*serve_cmd) return serve(c, host, port);

    const auto catalog = load_catalog(c.catalog);
    UserStore store(c.data_dir);
    PaletteCache palettes(covers_or_default(c.covers, c.catalog));

    if (*import_cmd) {
      emit(import_report_to_json(store.import_shelves(user, read_file_text(csv), catalog)));
      return 0;
    }

    auto user_theme = [&](const ShelfListing& lib) {
      if (!book.empty()) return theme_from_palette(palettes.get(catalog.at(book)));
      return library_theme(lib, palettes);
    };

    if (*selfie) {
      const auto lib = store.library_books(user, catalog);
      const auto doc = data_selfie_doc(library_taste(lib), user_theme(lib));
      write_output(out, doc.svg);
      if (out != "-") {
        emit({{"schema", kSchemaTag}, {"kind", "data_selfie"}, {"out", out}, {"sha256", sha256_hex(doc.svg)}});
      }
      return 0;
    }

    if (*fit) {
      const auto& b = catalog.at(book);
      const auto lib = store.library_books(user, catalog);
      auto model = library_taste(lib);
      const auto result = place_book(b, model);
      if (!out.empty()) write_file_atomic(out, how_it_fits_doc(std::move(model), b, theme_from_palette(palettes.get(b))).svg);
      emit(fit_response(user, b, result));
      return 0;
    }

    if (*render_cmd) {
      const auto viz = viz_kind_from_string(kind);
      const bool user_side = viz == VizKind::data_selfie || viz == VizKind::how_it_fits || viz == VizKind::my_rose;
      if (user_side && user.empty()) throw CLI::RequiredError("--user");
      if ((!user_side || viz == VizKind::how_it_fits) && book.empty()) throw CLI::RequiredError("--book");
      VizDocument doc;
      switch (viz) {
        case VizKind::book_selfie: doc = book_selfie_doc(catalog.at(book), catalog, palettes); break;
        case VizKind::similar_grid: doc = similar_grid_doc(catalog.at(book), catalog, palettes); break;
        case VizKind::author_timeline: doc = author_timeline_doc(catalog.at(book), catalog, palettes); break;
        case VizKind::data_selfie: {
          const auto lib = store.library_books(user, catalog);
          doc = data_selfie_doc(library_taste(lib), user_theme(lib));
          break;
        }
        case VizKind::how_it_fits: {
          const auto& b = catalog.at(book);
          const auto lib = store.library_books(user, catalog);
          doc = how_it_fits_doc(library_taste(lib), b, theme_from_palette(palettes.get(b)));
          break;
        }
        case VizKind::my_rose: {
          const auto lib = store.library_books(user, catalog);
          doc = my_rose_doc(lib, user_theme(lib));
          break;
        }
      }
      write_output(out, format == "svg" ? doc.svg : doc.payload.dump(2) + "\n");
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return e.code() == ErrorCode::io ? kExitIo : kExitDomain;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}
