#include <algorithm>
#include <set>
#include <sstream>

#include "bookvis/util.hpp"
#include "bookvis/vocab_index.hpp"

namespace bookvis {

namespace {

std::vector<std::string> tokens_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{to_lower_ascii(text)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

}  // namespace

RankedMatches promote_editions(RankedMatches matches, const Catalog& catalog, std::span<const std::string> hints) {
  if (hints.empty()) return matches;
  std::set<std::string> hint_tokens;
  for (const auto& h : hints)
    for (auto& t : tokens_of(h)) hint_tokens.insert(std::move(t));

  auto labelled = [&](const MatchEntry& e) {
    const auto* b = catalog.find(e.book_id);
    if (!b || !b->edition_label) return false;
    const auto toks = tokens_of(*b->edition_label);
    return !toks.empty() && std::all_of(toks.begin(), toks.end(), [&](const auto& t) { return hint_tokens.count(t) > 0; });
  };
  auto title_of = [&](const MatchEntry& e) {
    const auto* b = catalog.find(e.book_id);
    return b ? to_lower_ascii(b->title) : std::string{};
  };

  auto& entries = matches.entries;
  if (entries.empty()) return matches;
  const double top_confidence = entries.front().confidence;
  std::vector<char> flag(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) flag[i] = labelled(entries[i]);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!flag[i]) continue;
    const auto title = title_of(entries[i]);
    std::size_t target = i;
    for (std::size_t j = 0; j < i; ++j) {
      if (!flag[j] && title_of(entries[j]) == title) {
        target = j;
        break;
      }
    }
    if (target == i) continue;
    std::rotate(entries.begin() + static_cast<std::ptrdiff_t>(target), entries.begin() + static_cast<std::ptrdiff_t>(i),
                entries.begin() + static_cast<std::ptrdiff_t>(i + 1));
    std::rotate(flag.begin() + static_cast<std::ptrdiff_t>(target), flag.begin() + static_cast<std::ptrdiff_t>(i),
                flag.begin() + static_cast<std::ptrdiff_t>(i + 1));
  }
  // confidence belongs to whichever entry now leads
  for (auto& e : entries) e.confidence = 0;
  entries.front().confidence = top_confidence;
  return matches;
}

RankedMatches recognize(const Engine& engine, std::span<const std::uint8_t> image_bytes,
                        std::span<const std::string> hints, std::size_t top_n) {
  const auto image = decode_image(image_bytes);
  const auto descriptors = extract_descriptors(image, engine.features);
  // promotion runs over the full ranking so a label-bearing edition just past the cut can still move up
  auto ranked = engine.index.score(engine.tree, descriptors, 0);
  if (engine.catalog) ranked = promote_editions(std::move(ranked), *engine.catalog, hints);
  if (top_n > 0 && ranked.entries.size() > top_n) ranked.entries.resize(top_n);
  return ranked;
}

nlohmann::json matches_to_json(const RankedMatches& matches, const Catalog* catalog) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : matches.entries) {
    nlohmann::json m = {{"book_id", e.book_id}, {"score", e.score}, {"confidence", e.confidence}};
    const auto* b = catalog ? catalog->find(e.book_id) : nullptr;
    m["title"] = b ? b->title : "";
    arr.push_back(std::move(m));
  }
  return {{"schema", "bookvis/1"}, {"matches", arr}, {"query_descriptors", matches.query_descriptor_count}};
}

}  // namespace bookvis
