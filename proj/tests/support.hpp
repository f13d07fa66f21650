#pragma once

#include <atomic>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "bookvis/catalog.hpp"
#include "bookvis/image.hpp"

namespace testing_support {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("bookvis-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<bookvis::GenreLabel> genres(std::initializer_list<const char*> names) {
  std::vector<bookvis::GenreLabel> out;
  for (const auto* n : names) out.push_back(bookvis::GenreLabel::canonicalize(n));
  return out;
}

inline bookvis::BookRecord book(std::string id, std::vector<bookvis::GenreLabel> gs = {}, std::string author = "A. Writer",
                                int year = 2000, double rating = 4.0, std::int64_t count = 100) {
  bookvis::BookRecord b;
  b.book_id = id;
  b.title = "Title " + id;
  b.authors = {std::move(author)};
  b.publication_year = year;
  b.avg_rating = rating;
  b.ratings_count = count;
  b.reviews_count = count / 10;
  b.genres = std::move(gs);
  b.cover_ref = id + ".png";
  return b;
}

// Pixel noise with a few bright squares; enough structure for keypoints.
inline bookvis::RasterImage textured_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  bookvis::RasterImage img(w, h, {90, 90, 90});
  std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1), sz(6, 30), col(0, 255);
  for (int s = 0; s < 40; ++s) {
    const int x0 = px(rng), y0 = py(rng), side = sz(rng);
    const bookvis::Rgb c{static_cast<std::uint8_t>(col(rng)), static_cast<std::uint8_t>(col(rng)),
                         static_cast<std::uint8_t>(col(rng))};
    for (int y = y0; y < std::min(h, y0 + side); ++y)
      for (int x = x0; x < std::min(w, x0 + side); ++x) img.set(x, y, c);
  }
  return img;
}

}  // namespace testing_support
