#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "bookvis/palette.hpp"
#include "bookvis/taste.hpp"

namespace bookvis {

enum class VizKind { book_selfie, author_timeline, similar_grid, data_selfie, how_it_fits, my_rose };

std::string_view to_string(VizKind kind) noexcept;
VizKind viz_kind_from_string(std::string_view name);

struct DataSelfieData {
  TasteModel model;
  std::vector<ContourLevel> contours;
  bool operator==(const DataSelfieData&) const = default;
};

struct HowItFitsData {
  TasteModel model;
  std::vector<ContourLevel> contours;
  std::string book_id;
  FitResult fit;
  bool operator==(const HowItFitsData&) const = default;
};

DataSelfieData data_selfie_data(TasteModel model);
HowItFitsData how_it_fits_data(TasteModel model, const BookRecord& book);

// Alternative index matches the VizKind enumerator order.
using VizData = std::variant<BookSelfieData, AuthorTimeline, SimilarGrid, DataSelfieData, HowItFitsData, RoseData>;

VizKind kind_of(const VizData& data) noexcept;

struct VizDocument {
  VizKind kind = VizKind::book_selfie;
  std::string svg;
  nlohmann::json payload;
  Theme theme;
};

inline constexpr int kCanvasSize = 360;

/// Deterministic standalone SVG plus payload. Throws Error{contract} when the
/// data violates its type invariants.
VizDocument render(const VizData& data, const Theme& theme);
std::string render_svg(const VizData& data, const Theme& theme);

/// Lossless JSON projection tagged with "schema":"bookvis/1" and "kind".
nlohmann::json payload(const VizData& data);
VizData payload_from_json(const nlohmann::json& j);

void validate(const VizData& data);

std::string xml_escape(std::string_view text);

// Per-type JSON projections, shared with the service and CLI.
nlohmann::json taste_model_to_json(const TasteModel& m);
TasteModel taste_model_from_json(const nlohmann::json& j);
nlohmann::json contours_to_json(const std::vector<ContourLevel>& levels);
std::vector<ContourLevel> contours_from_json(const nlohmann::json& j);
nlohmann::json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

inline constexpr std::string_view kSchemaTag = "bookvis/1";

}  // namespace bookvis
