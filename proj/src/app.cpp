#include "bookvis/app.hpp"

#include "bookvis/error.hpp"
#include "bookvis/image.hpp"
#include "bookvis/util.hpp"

namespace bookvis {

std::filesystem::path resolve_cover_path(const BookRecord& book, const std::filesystem::path& covers_dir) {
  const std::filesystem::path ref(book.cover_ref);
  return ref.is_absolute() ? ref : covers_dir / ref;
}

Palette fallback_palette() {
  Palette p;
  p.colors.push_back({{128, 128, 128}, 1.0});
  return p;
}

Palette PaletteCache::get(const BookRecord& book) {
  {
    std::lock_guard g(mu_);
    if (auto it = cache_.find(book.book_id); it != cache_.end()) return it->second;
  }
  Palette p;
  try {
    const auto bytes = read_file_bytes(resolve_cover_path(book, covers_dir_));
    p = dominant_colors(decode_image(bytes));
  } catch (const Error&) {
    p = fallback_palette();
  }
  p.source_book = book.book_id;
  std::lock_guard g(mu_);
  return cache_.try_emplace(book.book_id, std::move(p)).first->second;
}

std::map<std::string, Palette> PaletteCache::for_books(const std::vector<BookRecord>& books) {
  std::map<std::string, Palette> out;
  for (const auto& b : books) out.emplace(b.book_id, get(b));
  return out;
}

std::vector<BookRecord> records_of(const ShelfListing& listing) {
  std::vector<BookRecord> out;
  out.reserve(listing.books.size());
  for (const auto& [b, r] : listing.books) out.push_back(b);
  return out;
}

TasteModel library_taste(const ShelfListing& library, LayoutOrdering ordering) {
  auto model = build_taste_model(records_of(library), ordering);
  if (model.empty()) throw Error(ErrorCode::empty_library, "library has no genred books");
  return model;
}

Theme library_theme(const ShelfListing& library, PaletteCache& palettes) {
  if (library.books.empty()) return theme_from_palette(fallback_palette());
  return theme_from_palette(palettes.get(library.books.back().first));
}

VizDocument book_selfie_doc(const BookRecord& book, const Catalog& catalog, PaletteCache& palettes) {
  const auto palette = palettes.get(book);
  return render(book_selfie_data(book, catalog, palette), theme_from_palette(palette));
}

VizDocument similar_grid_doc(const BookRecord& book, const Catalog& catalog, PaletteCache& palettes) {
  return render(similar_grid(book, catalog), theme_from_palette(palettes.get(book)));
}

VizDocument author_timeline_doc(const BookRecord& book, const Catalog& catalog, PaletteCache& palettes) {
  const auto palettes_by_id = palettes.for_books(books_by_author(catalog, book.primary_author()));
  return render(author_timeline(book, catalog, palettes_by_id), theme_from_palette(palettes.get(book)));
}

VizDocument data_selfie_doc(TasteModel model, const Theme& theme) {
  if (model.empty()) throw Error(ErrorCode::empty_library, "library has no genred books");
  return render(data_selfie_data(std::move(model)), theme);
}

VizDocument how_it_fits_doc(TasteModel model, const BookRecord& book, const Theme& theme) {
  if (model.empty()) throw Error(ErrorCode::empty_library, "library has no genred books");
  return render(how_it_fits_data(std::move(model), book), theme);
}

VizDocument my_rose_doc(const ShelfListing& library, const Theme& theme) {
  return render(my_rose(library.books), theme);
}

nlohmann::json fit_response(std::string_view user_id, const BookRecord& book, const FitResult& fit) {
  return {{"schema", kSchemaTag},
          {"kind", "fit"},
          {"user_id", user_id},
          {"book_id", book.book_id},
          {"title", book.title},
          {"fit", fit_to_json(fit)}};
}

}  // namespace bookvis
