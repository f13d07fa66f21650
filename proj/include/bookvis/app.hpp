#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "bookvis/catalog.hpp"
#include "bookvis/palette.hpp"
#include "bookvis/store.hpp"
#include "bookvis/taste.hpp"
#include "bookvis/vizgen.hpp"

namespace bookvis {

/// Relative cover refs resolve against `covers_dir`; absolute refs are kept.
std::filesystem::path resolve_cover_path(const BookRecord& book, const std::filesystem::path& covers_dir);

/// Single mid-grey swatch, used when a cover is missing or undecodable.
Palette fallback_palette();

/// Cover palettes computed on first use; safe to share between threads.
class PaletteCache {
 public:
  explicit PaletteCache(std::filesystem::path covers_dir) : covers_dir_(std::move(covers_dir)) {}

  Palette get(const BookRecord& book);
  std::map<std::string, Palette> for_books(const std::vector<BookRecord>& books);
  const std::filesystem::path& covers_dir() const noexcept { return covers_dir_; }

 private:
  std::filesystem::path covers_dir_;
  std::mutex mu_;
  std::map<std::string, Palette> cache_;
};

std::vector<BookRecord> records_of(const ShelfListing& listing);

/// Throws Error{empty_library} when no shelved book carries a genre.
TasteModel library_taste(const ShelfListing& library, LayoutOrdering ordering = LayoutOrdering::bell);

/// Palette of the most recently shelved book, or the fallback.
Theme library_theme(const ShelfListing& library, PaletteCache& palettes);

VizDocument book_selfie_doc(const BookRecord& book, const Catalog& catalog, PaletteCache& palettes);
VizDocument similar_grid_doc(const BookRecord& book, const Catalog& catalog, PaletteCache& palettes);
VizDocument author_timeline_doc(const BookRecord& book, const Catalog& catalog, PaletteCache& palettes);
VizDocument data_selfie_doc(TasteModel model, const Theme& theme);
VizDocument how_it_fits_doc(TasteModel model, const BookRecord& book, const Theme& theme);
VizDocument my_rose_doc(const ShelfListing& library, const Theme& theme);

/// {"schema","kind":"fit","user_id","book_id","fit":{...}}
nlohmann::json fit_response(std::string_view user_id, const BookRecord& book, const FitResult& fit);

}  // namespace bookvis
