#include <cmath>

#include "bookvis/error.hpp"
#include "bookvis/vizgen.hpp"

namespace bookvis {

using nlohmann::json;

namespace {

json point_json(Point p) { return json::array({p.x, p.y}); }
Point point_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json optional_json(const auto& v) { return v ? json(*v) : json(nullptr); }

json selfie_json(const BookSelfieData& d) {
  return {{"book_id", d.book_id},
          {"author_name", d.author_name},
          {"avg_rating", d.avg_rating},
          {"ratings_count", d.ratings_count},
          {"ratings_distance", d.ratings_distance},
          {"reviews_count", d.reviews_count},
          {"palette", palette_to_json(d.palette)}};
}

BookSelfieData selfie_from(const json& j) {
  BookSelfieData d;
  d.book_id = j.at("book_id").get<std::string>();
  d.author_name = j.at("author_name").get<std::string>();
  d.avg_rating = j.at("avg_rating").get<double>();
  d.ratings_count = j.at("ratings_count").get<std::int64_t>();
  d.ratings_distance = j.at("ratings_distance").get<double>();
  d.reviews_count = j.at("reviews_count").get<std::int64_t>();
  d.palette = palette_from_json(j.at("palette"));
  return d;
}

json timeline_json(const AuthorTimeline& t) {
  json tiles = json::array();
  for (const auto& tile : t.tiles) {
    tiles.push_back({{"book_id", optional_json(tile.book_id)},
                     {"title", optional_json(tile.title)},
                     {"year", optional_json(tile.year)},
                     {"palette", tile.palette ? palette_to_json(*tile.palette) : json(nullptr)},
                     {"is_focus", tile.is_focus},
                     {"hidden", tile.hidden()}});
  }
  return {{"author", t.author}, {"focus_index", t.focus_index}, {"tiles", std::move(tiles)}};
}

AuthorTimeline timeline_from(const json& j) {
  AuthorTimeline t;
  t.author = j.at("author").get<std::string>();
  t.focus_index = j.at("focus_index").get<std::size_t>();
  for (const auto& x : j.at("tiles")) {
    TimelineTile tile;
    if (!x.at("book_id").is_null()) tile.book_id = x["book_id"].get<std::string>();
    if (!x.at("title").is_null()) tile.title = x["title"].get<std::string>();
    if (!x.at("year").is_null()) tile.year = x["year"].get<int>();
    if (!x.at("palette").is_null()) tile.palette = palette_from_json(x["palette"]);
    tile.is_focus = x.at("is_focus").get<bool>();
    t.tiles.push_back(std::move(tile));
  }
  return t;
}

json grid_json(const SimilarGrid& g) {
  json cells = json::array();
  for (int row = 0; row < kGridBins; ++row) {
    for (int col = 0; col < kGridBins; ++col) {
      json books = json::array();
      for (const auto& b : g.cells[row][col]) books.push_back({{"book_id", b.book_id}, {"trust", b.trust}});
      cells.push_back({{"row", row}, {"col", col}, {"books", std::move(books)}});
    }
  }
  return {{"book_id", g.book_id},
          {"hidden", g.hidden},
          {"year_edges", g.year_edges},
          {"rating_edges", g.rating_edges},
          {"cells", std::move(cells)}};
}

SimilarGrid grid_from(const json& j) {
  SimilarGrid g;
  g.book_id = j.at("book_id").get<std::string>();
  g.hidden = j.at("hidden").get<bool>();
  g.year_edges = j.at("year_edges").get<std::array<double, kGridBins + 1>>();
  g.rating_edges = j.at("rating_edges").get<std::array<double, kGridBins + 1>>();
  const auto& cells = j.at("cells");
  if (cells.size() != static_cast<std::size_t>(kGridBins * kGridBins)) {
    throw Error(ErrorCode::format, "similar grid payload must hold 25 cells");
  }
  for (const auto& c : cells) {
    const int row = c.at("row").get<int>(), col = c.at("col").get<int>();
    if (row < 0 || row >= kGridBins || col < 0 || col >= kGridBins) throw Error(ErrorCode::format, "cell out of range");
    for (const auto& b : c.at("books")) {
      g.cells[row][col].push_back({b.at("book_id").get<std::string>(), b.at("trust").get<double>()});
    }
  }
  return g;
}

json rose_json(const RoseData& r) {
  json sectors = json::array();
  for (const auto& s : r.sectors) {
    sectors.push_back({{"book_id", s.book_id}, {"user_rating", s.user_rating}, {"avg_rating", s.avg_rating}});
  }
  return {{"sector_angle", r.sector_angle}, {"sectors", std::move(sectors)}};
}

RoseData rose_from(const json& j) {
  RoseData r;
  r.sector_angle = j.at("sector_angle").get<double>();
  for (const auto& s : j.at("sectors")) {
    r.sectors.push_back(
        {s.at("book_id").get<std::string>(), s.at("user_rating").get<int>(), s.at("avg_rating").get<double>()});
  }
  return r;
}

struct Projector {
  json operator()(const BookSelfieData& d) const { return selfie_json(d); }
  json operator()(const AuthorTimeline& d) const { return timeline_json(d); }
  json operator()(const SimilarGrid& d) const { return grid_json(d); }
  json operator()(const DataSelfieData& d) const {
    return {{"model", taste_model_to_json(d.model)}, {"contours", contours_to_json(d.contours)}};
  }
  json operator()(const HowItFitsData& d) const {
    return {{"model", taste_model_to_json(d.model)},
            {"contours", contours_to_json(d.contours)},
            {"book_id", d.book_id},
            {"fit", fit_to_json(d.fit)}};
  }
  json operator()(const RoseData& d) const { return rose_json(d); }
};

}  // namespace

json taste_model_to_json(const TasteModel& m) {
  json counts = json::object();
  for (const auto& [g, n] : m.histogram.counts) counts[g.str()] = n;
  json clockwise = json::array();
  for (const auto& g : m.layout.clockwise) clockwise.push_back(g.str());
  json angles = json::object();
  for (const auto& [g, a] : m.layout.angles) angles[g.str()] = a;
  json dots = json::array();
  for (const auto& d : m.dots) dots.push_back({{"book_id", d.book_id}, {"x", d.position.x}, {"y", d.position.y}});
  return {{"histogram", {{"counts", std::move(counts)}, {"total_books", m.histogram.total_books}}},
          {"layout",
           {{"ordering", m.layout.ordering == LayoutOrdering::bell ? "bell" : "alphabetical"},
            {"clockwise", std::move(clockwise)},
            {"angles", std::move(angles)}}},
          {"dots", std::move(dots)},
          {"density",
           {{"size", DensityGrid::kSize},
            {"extent", DensityGrid::kExtent},
            {"bandwidth", m.density.bandwidth},
            {"values", m.density.values}}},
          {"density_max", m.density_max}};
}

TasteModel taste_model_from_json(const json& j) {
  TasteModel m;
  const auto& h = j.at("histogram");
  for (const auto& [label, n] : h.at("counts").items()) m.histogram.counts[GenreLabel::canonicalize(label)] = n.get<int>();
  m.histogram.total_books = h.at("total_books").get<std::size_t>();
  const auto& l = j.at("layout");
  const auto ordering = l.at("ordering").get<std::string>();
  if (ordering != "bell" && ordering != "alphabetical") throw Error(ErrorCode::format, "unknown layout ordering");
  m.layout.ordering = ordering == "bell" ? LayoutOrdering::bell : LayoutOrdering::alphabetical;
  for (const auto& g : l.at("clockwise")) m.layout.clockwise.push_back(GenreLabel::canonicalize(g.get<std::string>()));
  for (const auto& [label, a] : l.at("angles").items()) m.layout.angles[GenreLabel::canonicalize(label)] = a.get<double>();
  for (const auto& d : j.at("dots")) {
    m.dots.push_back({d.at("book_id").get<std::string>(), {d.at("x").get<double>(), d.at("y").get<double>()}});
  }
  const auto& dens = j.at("density");
  if (dens.at("size").get<int>() != DensityGrid::kSize) throw Error(ErrorCode::format, "unexpected density grid size");
  m.density.bandwidth = dens.at("bandwidth").get<double>();
  m.density.values = dens.at("values").get<std::vector<double>>();
  if (m.density.values.size() != static_cast<std::size_t>(DensityGrid::kSize * DensityGrid::kSize)) {
    throw Error(ErrorCode::format, "density grid has the wrong number of values");
  }
  m.density_max = j.at("density_max").get<double>();
  return m;
}

json contours_to_json(const std::vector<ContourLevel>& levels) {
  json out = json::array();
  for (const auto& c : levels) {
    json loops = json::array();
    for (const auto& loop : c.loops) {
      json pts = json::array();
      for (const auto& p : loop) pts.push_back(point_json(p));
      loops.push_back(std::move(pts));
    }
    out.push_back({{"quantile", c.quantile}, {"level", c.level}, {"loops", std::move(loops)}});
  }
  return out;
}

std::vector<ContourLevel> contours_from_json(const json& j) {
  std::vector<ContourLevel> out;
  for (const auto& c : j) {
    ContourLevel level;
    level.quantile = c.at("quantile").get<double>();
    level.level = c.at("level").get<double>();
    for (const auto& loop : c.at("loops")) {
      Polyline poly;
      for (const auto& p : loop) poly.push_back(point_from(p));
      level.loops.push_back(std::move(poly));
    }
    out.push_back(std::move(level));
  }
  return out;
}

json fit_to_json(const FitResult& fit) {
  json genres = json::array();
  for (const auto& [g, w] : fit.contributing_genres) genres.push_back({{"genre", g.str()}, {"weight", w}});
  return {{"position", {{"x", fit.position.x}, {"y", fit.position.y}}},
          {"fitness", fit.fitness},
          {"overlap", fit.overlap},
          {"contributing_genres", std::move(genres)}};
}

FitResult fit_from_json(const json& j) {
  FitResult f;
  f.position = {j.at("position").at("x").get<double>(), j.at("position").at("y").get<double>()};
  f.fitness = j.at("fitness").get<double>();
  f.overlap = j.at("overlap").get<bool>();
  for (const auto& g : j.at("contributing_genres")) {
    f.contributing_genres.emplace_back(GenreLabel::canonicalize(g.at("genre").get<std::string>()),
                                       g.at("weight").get<double>());
  }
  return f;
}

json payload(const VizData& data) {
  json j = std::visit(Projector{}, data);
  j["schema"] = kSchemaTag;
  j["kind"] = to_string(kind_of(data));
  return j;
}

VizData payload_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kSchemaTag) throw Error(ErrorCode::format, "unsupported payload schema");
    switch (viz_kind_from_string(j.at("kind").get<std::string>())) {
      case VizKind::book_selfie: return selfie_from(j);
      case VizKind::author_timeline: return timeline_from(j);
      case VizKind::similar_grid: return grid_from(j);
      case VizKind::data_selfie:
        return DataSelfieData{taste_model_from_json(j.at("model")), contours_from_json(j.at("contours"))};
      case VizKind::how_it_fits:
        return HowItFitsData{taste_model_from_json(j.at("model")), contours_from_json(j.at("contours")),
                             j.at("book_id").get<std::string>(), fit_from_json(j.at("fit"))};
      case VizKind::my_rose: return rose_from(j);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, std::string("malformed payload: ") + e.what());
  }
  throw Error(ErrorCode::format, "unknown payload kind");
}

}  // namespace bookvis
