#include <iostream>

#include <CLI11.hpp>

#include "bookvis/catalog.hpp"
#include "bookvis/error.hpp"
#include "bookvis/util.hpp"
#include "desk_corpus.hpp"

using namespace bookvis;

int main(int argc, char** argv) {
  CLI::App app{"Generate synthetic BookVIS fixtures"};
  app.require_subcommand(1);
  std::string out;
  std::uint64_t seed = 7;

  auto* desk = app.add_subcommand("desk", "Catalog plus rendered covers for recognition runs");
  std::size_t covers = 100;
  desk->add_option("--out", out)->required();
  desk->add_option("--seed", seed)->capture_default_str();
  desk->add_option("--covers", covers)->check(CLI::Range(1, 9999))->capture_default_str();

  auto* library = app.add_subcommand("library", "Metadata-only catalog plus a Goodreads-style shelf CSV");
  std::size_t books = 1500, rows = 1200, unmatched_every = 40, by_title_every = 25;
  library->add_option("--out", out)->required();
  library->add_option("--seed", seed)->capture_default_str();
  library->add_option("--books", books)->check(CLI::Range(1, 1000000))->capture_default_str();
  library->add_option("--rows", rows)->capture_default_str();
  library->add_option("--unmatched-every", unmatched_every)->capture_default_str();
  library->add_option("--by-title-every", by_title_every)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out);
    if (*desk) {
      const auto corpus = synth::make_desk_corpus(seed, covers);
      synth::write_desk_corpus(corpus, out);
      std::cout << "wrote " << corpus.books.size() << " records and " << corpus.covers.size() << " covers to "
                << out << '\n';
    } else {
      const auto lib = synth::make_library_books(seed, books);
      save_catalog(Catalog(lib), std::filesystem::path(out) / "library.jsonl");
      write_file_atomic(std::filesystem::path(out) / "shelves.csv",
                        synth::make_shelf_csv(lib, rows, seed + 1, unmatched_every, by_title_every));
      std::cout << "wrote " << lib.size() << " records and " << rows << " shelf rows to " << out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
