#include "bookvis/vizgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bookvis/error.hpp"
#include "bookvis/util.hpp"

namespace bookvis {

namespace {

constexpr double kCenter = kCanvasSize / 2.0;
constexpr double kUnit = 120.0;  // pixels per taste-space unit
constexpr double kPi = std::numbers::pi;

std::string num(double v) { return format_fixed(v, 2); }

struct Canvas {
  std::string out;

  Canvas(VizKind kind, const Theme& theme) {
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"360\" height=\"360\" "
           "viewBox=\"0 0 360 360\" data-kind=\"";
    out += to_string(kind);
    out += "\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"360\" height=\"360\" fill=\"" + to_hex(theme.background) + "\"/>\n";
  }

  std::string finish() {
    out += "</svg>\n";
    return std::move(out);
  }

  Canvas& raw(std::string_view s) {
    out += s;
    return *this;
  }
};

Rgb ink_on(Rgb bg) {
  const Rgb black{0, 0, 0}, white{255, 255, 255};
  return contrast_ratio(bg, black) >= contrast_ratio(bg, white) ? black : white;
}

// Screen point for a math angle (counter-clockwise, y up) at radius r.
std::string polar(double r, double a) { return num(kCenter + r * std::cos(a)) + "," + num(kCenter - r * std::sin(a)); }

std::string taste_point(Point p) { return num(kCenter + kUnit * p.x) + "," + num(kCenter - kUnit * p.y); }

// Annular sector swept clockwise from angle a0 down to a1 (a1 < a0).
std::string wedge_path(double r_in, double r_out, double a0, double a1) {
  const double span = a0 - a1;
  if (span >= 2 * kPi - 1e-9) {
    const double mid = a0 - kPi;
    std::string d = "M" + polar(r_out, a0) + " A" + num(r_out) + "," + num(r_out) + " 0 0 1 " + polar(r_out, mid) +
                    " A" + num(r_out) + "," + num(r_out) + " 0 0 1 " + polar(r_out, a0) + " Z";
    if (r_in > 0) {
      d += " M" + polar(r_in, a0) + " A" + num(r_in) + "," + num(r_in) + " 0 0 0 " + polar(r_in, mid) + " A" +
           num(r_in) + "," + num(r_in) + " 0 0 0 " + polar(r_in, a0) + " Z";
    }
    return d;
  }
  const char* large = span > kPi ? "1" : "0";
  std::string d = "M" + polar(r_out, a0) + " A" + num(r_out) + "," + num(r_out) + " 0 " + large + " 1 " +
                  polar(r_out, a1);
  if (r_in > 0) {
    d += " L" + polar(r_in, a1) + " A" + num(r_in) + "," + num(r_in) + " 0 " + large + " 0 " + polar(r_in, a0);
  } else {
    d += " L" + num(kCenter) + "," + num(kCenter);
  }
  return d + " Z";
}

std::string path(std::string_view d, std::string_view attrs) {
  std::string s = "<path d=\"";
  s += d;
  s += "\" ";
  s += attrs;
  s += "/>\n";
  return s;
}

std::string text(double x, double y, std::string_view body, Rgb fill, double size, std::string_view anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" + num(size) +
         "\" text-anchor=\"" + std::string(anchor) + "\" fill=\"" + to_hex(fill) + "\">" + xml_escape(body) +
         "</text>\n";
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::contract, what);
}

bool finite(double v) { return std::isfinite(v); }

// --- validation -----------------------------------------------------------

void check_model(const TasteModel& m, const std::vector<ContourLevel>& contours) {
  require(!m.dots.empty(), "taste model has no dots");
  require(m.density.values.size() == static_cast<std::size_t>(DensityGrid::kSize * DensityGrid::kSize),
          "density grid has the wrong size");
  require(m.layout.clockwise.size() == m.histogram.counts.size(), "layout does not match histogram");
  for (const auto& g : m.layout.clockwise) require(m.histogram.counts.count(g) == 1, "layout genre not in histogram");
  for (const auto& d : m.dots) require(finite(d.position.x) && finite(d.position.y), "dot is not finite");
  for (double v : m.density.values) require(finite(v) && v >= 0, "density is negative or not finite");
  for (std::size_t i = 1; i < contours.size(); ++i) {
    require(contours[i].level >= contours[i - 1].level, "contour levels not ascending");
  }
}

struct Validator {
  void operator()(const BookSelfieData& d) const {
    require(d.avg_rating >= 0 && d.avg_rating <= 5, "avg_rating outside [0,5]");
    require(d.ratings_count >= 0 && d.reviews_count >= 0, "negative counts");
    require(finite(d.ratings_distance), "ratings_distance not finite");
    validate_palette(d.palette);
  }
  void operator()(const AuthorTimeline& t) const {
    require(t.tiles.size() >= kMinTimelineTiles, "timeline has fewer than 5 tiles");
    const auto focus = std::count_if(t.tiles.begin(), t.tiles.end(), [](const auto& x) { return x.is_focus; });
    require(focus == 1, "timeline needs exactly one focus tile");
    require(t.focus_index < t.tiles.size() && t.tiles[t.focus_index].is_focus, "focus_index mismatch");
    for (const auto& tile : t.tiles) {
      require(!(tile.hidden() && tile.is_focus), "hidden tile marked as focus");
      if (tile.palette) validate_palette(*tile.palette);
    }
  }
  void operator()(const SimilarGrid& g) const {
    for (int i = 0; i < kGridBins; ++i) {
      require(g.year_edges[i] <= g.year_edges[i + 1] && g.rating_edges[i] <= g.rating_edges[i + 1],
              "grid edges not monotone");
    }
    for (const auto& row : g.cells) {
      for (const auto& cell : row) {
        for (const auto& b : cell) require(b.trust >= 0 && b.trust <= 1, "trust outside [0,1]");
      }
    }
    require(!g.hidden || g.book_count() == 0, "hidden grid holds books");
  }
  void operator()(const DataSelfieData& d) const { check_model(d.model, d.contours); }
  void operator()(const HowItFitsData& d) const {
    check_model(d.model, d.contours);
    require(d.fit.fitness >= 0 && d.fit.fitness <= 1, "fitness outside [0,1]");
    require(d.fit.overlap || d.fit.contributing_genres.empty(), "non-overlapping fit lists genres");
    for (const auto& [g, w] : d.fit.contributing_genres) {
      require(d.model.layout.contains(g) && w > 0, "fit genre missing from layout");
    }
  }
  void operator()(const RoseData& r) const {
    require(!r.sectors.empty(), "rose without sectors");
    require(std::abs(r.sector_angle * static_cast<double>(r.sectors.size()) - 2 * kPi) < 1e-9,
            "sector angles do not cover the circle");
    for (const auto& s : r.sectors) {
      require(s.user_rating >= 0 && s.user_rating <= 5, "user rating outside 0..5");
      require(s.avg_rating >= 0 && s.avg_rating <= 5, "avg rating outside [0,5]");
    }
  }
};

// --- renderers ------------------------------------------------------------

std::string render_book_selfie(const BookSelfieData& d, const Theme& th) {
  Canvas c(VizKind::book_selfie, th);
  const Rgb ink = ink_on(th.background);
  const double q = kPi / 2;
  auto start = [&](int i) { return kPi / 2 - q * i; };
  auto label_at = [&](int i, double r) {
    const double a = start(i) - q / 2;
    return Point{kCenter + r * std::cos(a), kCenter - r * std::sin(a)};
  };

  // clockwise from 12 o'clock: author, ratings, ratings distance, reviews
  c.raw("<g data-component=\"author\" data-order=\"0\">\n");
  c.raw(path(wedge_path(70, 150, start(0), start(1)), "fill=\"" + to_hex(th.primary) + "\""));
  auto p = label_at(0, 112);
  c.raw(text(p.x, p.y, d.author_name, th.text_on_primary, 11));
  c.raw("</g>\n");

  c.raw("<g data-component=\"ratings\" data-order=\"1\">\n");
  c.raw(path(wedge_path(70, 70 + 80 * d.avg_rating / 5.0, start(1), start(2)), "fill=\"" + to_hex(th.secondary) + "\""));
  const double count_frac = std::min(1.0, std::log10(1.0 + static_cast<double>(d.ratings_count)) / 7.0);
  c.raw(path(wedge_path(152, 158, start(1), start(1) - q * count_frac), "fill=\"" + to_hex(th.accent) + "\""));
  p = label_at(1, 112);
  c.raw(text(p.x, p.y, num(d.avg_rating), ink, 12));
  c.raw(text(p.x, p.y + 14, std::to_string(d.ratings_count) + " ratings", ink, 9));
  c.raw("</g>\n");

  c.raw("<g data-component=\"ratings_distance\" data-order=\"2\">\n");
  const double dr = 40 * std::clamp(d.ratings_distance, -1.0, 1.0);
  c.raw(path(wedge_path(std::min(110.0, 110 + dr), std::max(110.0, 110 + dr) + 0.5, start(2), start(3)),
             "fill=\"" + to_hex(th.accent) + "\""));
  c.raw(path(wedge_path(109.5, 110.5, start(2), start(3)), "fill=\"" + to_hex(ink) + "\" fill-opacity=\"0.4\""));
  p = label_at(2, 130);
  c.raw(text(p.x, p.y, (d.ratings_distance > 0 ? "+" : "") + num(d.ratings_distance), ink, 12));
  c.raw("</g>\n");

  c.raw("<g data-component=\"reviews\" data-order=\"3\">\n");
  const double rev_frac = std::min(1.0, std::log10(1.0 + static_cast<double>(d.reviews_count)) / 6.0);
  c.raw(path(wedge_path(70, 70 + 80 * rev_frac, start(3), start(4)),
             "fill=\"" + to_hex(th.primary) + "\" fill-opacity=\"0.7\""));
  p = label_at(3, 112);
  c.raw(text(p.x, p.y, std::to_string(d.reviews_count) + " reviews", ink, 9));
  c.raw("</g>\n");

  // cover palette ring, heaviest swatch first from 12 o'clock
  c.raw("<g data-component=\"palette\">\n");
  double a = kPi / 2;
  for (const auto& s : d.palette.colors) {
    const double next = a - 2 * kPi * s.mass;
    c.raw(path(wedge_path(40, 62, a, next), "fill=\"" + to_hex(s.rgb) + "\""));
    a = next;
  }
  c.raw("</g>\n");
  return c.finish();
}

std::string render_timeline(const AuthorTimeline& t, const Theme& th) {
  Canvas c(VizKind::author_timeline, th);
  const Rgb ink = ink_on(th.background);
  const auto n = static_cast<double>(t.tiles.size());
  const double slot = 340.0 / n;
  const double w = slot * 0.8;
  c.raw(text(kCenter, 30, t.author, ink, 13));
  for (std::size_t i = 0; i < t.tiles.size(); ++i) {
    const auto& tile = t.tiles[i];
    const double x = 10 + slot * static_cast<double>(i) + (slot - w) / 2;
    const double height = tile.is_focus ? 230 : 200;
    const double top = 300 - height;
    if (tile.hidden()) {
      c.raw("<rect class=\"tile hidden\" x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(w) +
            "\" height=\"" + num(height) + "\" fill=\"none\" stroke=\"" + to_hex(ink) +
            "\" stroke-opacity=\"0.3\" stroke-dasharray=\"4 4\"/>\n");
      continue;
    }
    c.raw("<g class=\"tile\" data-book=\"" + xml_escape(*tile.book_id) + "\">\n");
    double y = 300;
    if (tile.palette && !tile.palette->colors.empty()) {
      for (const auto& s : tile.palette->colors) {
        const double h = height * s.mass;
        y -= h;
        c.raw("<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
              "\" fill=\"" + to_hex(s.rgb) + "\"/>\n");
      }
    } else {
      c.raw("<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(w) + "\" height=\"" + num(height) +
            "\" fill=\"" + to_hex(th.secondary) + "\"/>\n");
    }
    if (tile.is_focus) {
      c.raw("<rect class=\"focus\" x=\"" + num(x - 2) + "\" y=\"" + num(top - 2) + "\" width=\"" + num(w + 4) +
            "\" height=\"" + num(height + 4) + "\" fill=\"none\" stroke=\"" + to_hex(th.accent) +
            "\" stroke-width=\"3\"/>\n");
    }
    if (tile.year) c.raw(text(x + w / 2, 318, std::to_string(*tile.year), ink, std::min(11.0, slot / 3)));
    c.raw("</g>\n");
  }
  return c.finish();
}

std::string render_grid(const SimilarGrid& g, const Theme& th) {
  Canvas c(VizKind::similar_grid, th);
  const Rgb ink = ink_on(th.background);
  constexpr double x0 = 40, y0 = 20, cell = 56;
  for (int i = 0; i <= kGridBins; ++i) {
    const double k = cell * i;
    c.raw("<path d=\"M" + num(x0 + k) + "," + num(y0) + " L" + num(x0 + k) + "," + num(y0 + cell * kGridBins) +
          " M" + num(x0) + "," + num(y0 + k) + " L" + num(x0 + cell * kGridBins) + "," + num(y0 + k) +
          "\" stroke=\"" + to_hex(ink) + "\" stroke-opacity=\"0.25\" fill=\"none\"/>\n");
  }
  if (g.hidden) {
    c.raw(text(kCenter, kCenter, "no similar books", ink, 13));
    return c.finish();
  }
  for (int i = 0; i <= kGridBins; i += kGridBins) {
    c.raw(text(x0 + cell * i, 318, std::to_string(static_cast<int>(std::lround(g.year_edges[i]))), ink, 9));
    c.raw(text(34, y0 + cell * (kGridBins - i) + 3, num(g.rating_edges[i]), ink, 9, "end"));
  }
  for (int row = 0; row < kGridBins; ++row) {
    for (int col = 0; col < kGridBins; ++col) {
      const auto& books = g.cells[row][col];
      if (books.empty()) continue;
      const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(books.size()))));
      const double sub = cell / side;
      const double r = std::min(10.0, sub * 0.4);
      const double cx0 = x0 + cell * col;
      const double cy0 = y0 + cell * (kGridBins - 1 - row);
      for (std::size_t k = 0; k < books.size(); ++k) {
        const double sx = cx0 + sub * (static_cast<double>(k % side) + 0.5);
        const double sy = cy0 + sub * (static_cast<double>(k / side) + 0.5);
        c.raw("<circle cx=\"" + num(sx) + "\" cy=\"" + num(sy) + "\" r=\"" + num(r) + "\" fill=\"" +
              to_hex(th.primary) + "\" fill-opacity=\"" + num(0.15 + 0.85 * books[k].trust) + "\" data-book=\"" +
              xml_escape(books[k].book_id) + "\"/>\n");
      }
    }
  }
  return c.finish();
}

std::string loop_path(const Polyline& loop) {
  std::string d;
  for (std::size_t i = 0; i < loop.size(); ++i) d += (i == 0 ? "M" : " L") + taste_point(loop[i]);
  return d + " Z";
}

void draw_selfie_base(Canvas& c, const TasteModel& m, const std::vector<ContourLevel>& contours, const Theme& th) {
  const Rgb ink = ink_on(th.background);
  int max_count = 1;
  for (const auto& [g, n] : m.histogram.counts) max_count = std::max(max_count, n);
  const double half = kPi / static_cast<double>(m.layout.clockwise.size()) * 0.8;
  c.raw("<g class=\"petals\">\n");
  for (const auto& g : m.layout.clockwise) {
    const double a = m.layout.angles.at(g);
    const double len = 45.0 * m.histogram.counts.at(g) / max_count;
    std::string attrs = "fill=\"" + to_hex(th.primary) + "\" data-genre=\"" + xml_escape(g.str()) + "\"";
    c.raw(path(wedge_path(kUnit, kUnit + len, a + half, a - half), attrs));
  }
  c.raw("</g>\n");
  c.raw("<circle cx=\"180.00\" cy=\"180.00\" r=\"" + num(kUnit) + "\" fill=\"none\" stroke=\"" + to_hex(ink) +
        "\" stroke-opacity=\"0.3\"/>\n");
  c.raw("<g class=\"contours\">\n");
  for (std::size_t i = 0; i < contours.size(); ++i) {
    for (const auto& loop : contours[i].loops) {
      c.raw(path(loop_path(loop), "class=\"contour\" data-level=\"" + std::to_string(i) + "\" fill=\"" +
                                      to_hex(th.secondary) + "\" fill-opacity=\"" + num(0.2 + 0.2 * i) +
                                      "\" stroke=\"" + to_hex(th.accent) + "\" stroke-width=\"1\""));
    }
  }
  c.raw("</g>\n<g class=\"dots\">\n");
  for (const auto& d : m.dots) {
    const auto s = taste_point(d.position);
    const auto comma = s.find(',');
    c.raw("<circle cx=\"" + s.substr(0, comma) + "\" cy=\"" + s.substr(comma + 1) + "\" r=\"2\" fill=\"" +
          to_hex(th.primary) + "\"/>\n");
  }
  c.raw("</g>\n");
}

std::string render_data_selfie(const DataSelfieData& d, const Theme& th) {
  Canvas c(VizKind::data_selfie, th);
  draw_selfie_base(c, d.model, d.contours, th);
  return c.finish();
}

std::string render_how_it_fits(const HowItFitsData& d, const Theme& th) {
  Canvas c(VizKind::how_it_fits, th);
  draw_selfie_base(c, d.model, d.contours, th);
  const Rgb ink = ink_on(th.background);
  if (!d.fit.overlap) {
    c.raw(text(kCenter, 350, "no overlap", ink, 12));
    return c.finish();
  }
  // connecting shape through the contributing anchors, in clockwise layout order
  std::vector<std::pair<double, Point>> anchors;
  for (const auto& [g, w] : d.fit.contributing_genres) {
    anchors.emplace_back(-d.model.layout.angles.at(g), d.model.layout.anchor(g));
  }
  std::sort(anchors.begin(), anchors.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (anchors.size() >= 2) {
    std::string dpath;
    for (std::size_t i = 0; i < anchors.size(); ++i) dpath += (i == 0 ? "M" : " L") + taste_point(anchors[i].second);
    if (anchors.size() > 2) dpath += " Z";
    c.raw(path(dpath, "class=\"fit-shape\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\" "
                      "stroke-dasharray=\"3 3\""));
  }
  const auto s = taste_point(d.fit.position);
  const auto comma = s.find(',');
  c.raw("<circle class=\"fit-dot\" cx=\"" + s.substr(0, comma) + "\" cy=\"" + s.substr(comma + 1) +
        "\" r=\"5\" fill=\"#000000\" stroke=\"#ffffff\" stroke-width=\"1.5\"/>\n");
  c.raw(text(kCenter, 350, "fit " + num(d.fit.fitness), ink, 12));
  return c.finish();
}

std::string render_rose(const RoseData& r, const Theme& th) {
  Canvas c(VizKind::my_rose, th);
  const Rgb ink = ink_on(th.background);
  constexpr double outer = 150;
  c.raw("<circle cx=\"180.00\" cy=\"180.00\" r=\"" + num(outer) + "\" fill=\"none\" stroke=\"" + to_hex(ink) +
        "\" stroke-opacity=\"0.25\"/>\n");
  for (std::size_t i = 0; i < r.sectors.size(); ++i) {
    const auto& s = r.sectors[i];
    const double a0 = kPi / 2 - r.sector_angle * static_cast<double>(i);
    const double a1 = a0 - r.sector_angle;
    c.raw(path(wedge_path(0, outer * s.avg_rating / 5.0, a0, a1),
               "class=\"rose-avg\" fill=\"" + to_hex(th.secondary) + "\" fill-opacity=\"0.55\" data-book=\"" +
                   xml_escape(s.book_id) + "\""));
    c.raw(path(wedge_path(0, outer * s.user_rating / 5.0, a0, a1),
               "class=\"rose-user\" fill=\"" + to_hex(th.primary) + "\" fill-opacity=\"0.55\" data-book=\"" +
                   xml_escape(s.book_id) + "\""));
  }
  return c.finish();
}

struct Renderer {
  const Theme& th;
  std::string operator()(const BookSelfieData& d) const { return render_book_selfie(d, th); }
  std::string operator()(const AuthorTimeline& d) const { return render_timeline(d, th); }
  std::string operator()(const SimilarGrid& d) const { return render_grid(d, th); }
  std::string operator()(const DataSelfieData& d) const { return render_data_selfie(d, th); }
  std::string operator()(const HowItFitsData& d) const { return render_how_it_fits(d, th); }
  std::string operator()(const RoseData& d) const { return render_rose(d, th); }
};

}  // namespace

std::string_view to_string(VizKind kind) noexcept {
  switch (kind) {
    case VizKind::book_selfie: return "book_selfie";
    case VizKind::author_timeline: return "author_timeline";
    case VizKind::similar_grid: return "similar_grid";
    case VizKind::data_selfie: return "data_selfie";
    case VizKind::how_it_fits: return "how_it_fits";
    case VizKind::my_rose: return "my_rose";
  }
  return "unknown";
}

VizKind viz_kind_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(VizKind::my_rose); ++i) {
    if (to_string(static_cast<VizKind>(i)) == name) return static_cast<VizKind>(i);
  }
  throw Error(ErrorCode::format, "unknown visualization kind: " + std::string(name));
}

VizKind kind_of(const VizData& data) noexcept { return static_cast<VizKind>(data.index()); }

DataSelfieData data_selfie_data(TasteModel model) {
  DataSelfieData d;
  d.contours = selfie_contours(model);
  d.model = std::move(model);
  return d;
}

HowItFitsData how_it_fits_data(TasteModel model, const BookRecord& book) {
  HowItFitsData d;
  d.book_id = book.book_id;
  d.fit = place_book(book, model);
  d.contours = selfie_contours(model);
  d.model = std::move(model);
  return d;
}

void validate(const VizData& data) { std::visit(Validator{}, data); }

std::string render_svg(const VizData& data, const Theme& theme) {
  validate(data);
  return std::visit(Renderer{theme}, data);
}

VizDocument render(const VizData& data, const Theme& theme) {
  VizDocument doc;
  doc.kind = kind_of(data);
  doc.svg = render_svg(data, theme);
  doc.payload = payload(data);
  doc.payload["theme"] = theme_to_json(theme);
  doc.theme = theme;
  return doc;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // XML 1.0 forbids most control characters outright
        if (static_cast<unsigned char>(ch) < 0x20 && ch != '\t' && ch != '\n' && ch != '\r') {
          out += ' ';
        } else {
          out += ch;
        }
    }
  }
  return out;
}

}  // namespace bookvis
