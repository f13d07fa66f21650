#include <algorithm>
#include <cmath>
#include <map>

#include "bookvis/error.hpp"
#include "bookvis/vocab_index.hpp"

namespace bookvis {

SparseVector normalize_weighted(std::vector<std::pair<NodeId, double>> weighted, ScoringNorm norm) {
  std::sort(weighted.begin(), weighted.end());
  SparseVector out;
  double total = 0;
  for (const auto& [node, v] : weighted) {
    if (v <= 0) continue;
    out.push_back({node, v});
    total += norm == ScoringNorm::l1 ? v : v * v;
  }
  if (out.empty()) return out;
  const double scale = norm == ScoringNorm::l1 ? 1.0 / total : 1.0 / std::sqrt(total);
  for (auto& e : out) e.value *= scale;
  return out;
}

InvertedIndex::InvertedIndex(std::size_t node_count, ScoringNorm norm) : norm_(norm), postings_(node_count) {}

void InvertedIndex::add_document(const VocabTree& tree, DocId doc, const DescriptorSet& descriptors,
                                 std::string book_id) {
  if (tree.node_count() != postings_.size()) throw Error(ErrorCode::contract, "tree does not match index");
  std::map<NodeId, std::uint32_t> counts;
  for (const auto& d : descriptors.descriptors) {
    for (NodeId n : tree.quantize(d.vector)) ++counts[n];
  }
  std::vector<NodeCount> node_counts;
  node_counts.reserve(counts.size());
  for (const auto& [n, c] : counts) node_counts.push_back({n, c});
  add_counts(doc, node_counts, std::move(book_id));
}

void InvertedIndex::add_counts(DocId doc, const std::vector<NodeCount>& node_counts, std::string book_id) {
  if (finalized_) throw Error(ErrorCode::contract, "index is finalized");
  auto it = std::lower_bound(doc_table_.begin(), doc_table_.end(), doc,
                             [](const auto& e, DocId d) { return e.first < d; });
  if (it != doc_table_.end() && it->first == doc) {
    throw Error(ErrorCode::conflict, "duplicate doc_id " + std::to_string(doc));
  }
  doc_table_.insert(it, {doc, std::move(book_id)});
  for (const auto& nc : node_counts) {
    if (nc.node >= postings_.size()) throw Error(ErrorCode::contract, "node id out of range");
    if (nc.count == 0) continue;
    auto& list = postings_[nc.node];
    auto pos = std::lower_bound(list.begin(), list.end(), doc, [](const Posting& p, DocId d) { return p.doc < d; });
    list.insert(pos, {doc, nc.count});
  }
}

void InvertedIndex::finalize() {
  if (finalized_) return;
  if (doc_table_.empty()) throw Error(ErrorCode::validation, "cannot finalize an index with no documents");
  const double n = static_cast<double>(doc_table_.size());
  weights_.assign(postings_.size(), 0.0);
  for (std::size_t i = 0; i < postings_.size(); ++i) {
    const auto ni = postings_[i].size();
    weights_[i] = ni == 0 ? 0.0 : std::log(n / static_cast<double>(ni));
  }
  build_vectors();
  finalized_ = true;
}

void InvertedIndex::build_vectors() {
  std::vector<std::vector<std::pair<NodeId, double>>> raw(doc_table_.size());
  for (std::size_t node = 0; node < postings_.size(); ++node) {
    if (weights_[node] <= 0) continue;
    for (const auto& p : postings_[node]) {
      raw[slot(p.doc)].push_back({static_cast<NodeId>(node), weights_[node] * p.count});
    }
  }
  doc_vectors_.clear();
  weighted_postings_.assign(postings_.size(), {});
  for (std::size_t s = 0; s < raw.size(); ++s) {
    doc_vectors_.push_back(normalize_weighted(std::move(raw[s]), norm_));
    for (const auto& e : doc_vectors_.back()) weighted_postings_[e.node].push_back({static_cast<std::uint32_t>(s), e.value});
  }
}

std::size_t InvertedIndex::slot(DocId doc) const {
  auto it = std::lower_bound(doc_table_.begin(), doc_table_.end(), doc,
                             [](const auto& e, DocId d) { return e.first < d; });
  if (it == doc_table_.end() || it->first != doc) throw Error(ErrorCode::not_found, "unknown doc " + std::to_string(doc));
  return static_cast<std::size_t>(it - doc_table_.begin());
}

void InvertedIndex::require_finalized() const {
  if (!finalized_) throw Error(ErrorCode::not_finalized, "index has not been finalized");
}

double InvertedIndex::weight(NodeId node) const {
  require_finalized();
  return weights_.at(node);
}

const std::vector<double>& InvertedIndex::weights() const {
  require_finalized();
  return weights_;
}

const SparseVector& InvertedIndex::doc_vector(DocId doc) const {
  require_finalized();
  return doc_vectors_[slot(doc)];
}

const std::string& InvertedIndex::book_id(DocId doc) const { return doc_table_[slot(doc)].second; }

SparseVector InvertedIndex::query_vector(const VocabTree& tree, const DescriptorSet& query) const {
  require_finalized();
  std::map<NodeId, std::uint32_t> counts;
  for (const auto& d : query.descriptors)
    for (NodeId n : tree.quantize(d.vector)) ++counts[n];
  std::vector<std::pair<NodeId, double>> weighted;
  for (const auto& [node, c] : counts) {
    if (node < weights_.size() && weights_[node] > 0) weighted.push_back({node, weights_[node] * c});
  }
  return normalize_weighted(std::move(weighted), norm_);
}

RankedMatches InvertedIndex::score(const VocabTree& tree, const DescriptorSet& query, std::size_t top_n) const {
  if (query.empty()) {
    require_finalized();
    return {};
  }
  return score_vector(query_vector(tree, query), query.size(), top_n);
}

RankedMatches InvertedIndex::score_vector(const SparseVector& query, std::size_t query_descriptors,
                                          std::size_t top_n) const {
  require_finalized();
  RankedMatches out;
  out.query_descriptor_count = query_descriptors;
  if (query_descriptors == 0) return out;

  const std::size_t docs = doc_table_.size();
  std::vector<double> acc(docs, 0.0);
  std::vector<double> shared_q(docs, 0.0), shared_d(docs, 0.0);  // L2 only
  std::vector<std::size_t> shared(docs, 0);
  for (const auto& q : query) {
    for (const auto& [s, d] : weighted_postings_[q.node]) {
      if (norm_ == ScoringNorm::l1) {
        acc[s] += std::min(q.value, d);
      } else {
        acc[s] += (q.value - d) * (q.value - d);
        shared_q[s] += q.value * q.value;
        shared_d[s] += d * d;
      }
      ++shared[s];
    }
  }
  const double q_mass = query.empty() ? 0.0 : 1.0;
  out.entries.reserve(docs);
  std::size_t sharing = 0;
  for (std::size_t s = 0; s < docs; ++s) {
    const double d_mass = doc_vectors_[s].empty() ? 0.0 : 1.0;
    double score = 0;
    if (norm_ == ScoringNorm::l1) {
      // ||q - d||_1 = |q| + |d| - 2 sum min(q_i, d_i) for nonnegative vectors
      score = std::max(0.0, q_mass + d_mass - 2.0 * acc[s]);
    } else {
      // shared nodes summed directly; the rest of each side is its unit mass minus the shared part,
      // skipped when nothing is left so identical supports do not lose digits to cancellation
      double sq = acc[s];
      if (shared[s] < query.size()) sq += q_mass - shared_q[s];
      if (shared[s] < doc_vectors_[s].size()) sq += d_mass - shared_d[s];
      score = std::sqrt(std::max(0.0, sq));
    }
    // snap to a 2^-40 grid so documents with equal vectors tie exactly despite summation order
    score = std::ldexp(std::round(std::ldexp(score, 40)), -40);
    sharing += shared[s] > 0 ? 1 : 0;
    out.entries.push_back({doc_table_[s].second, doc_table_[s].first, score, 0.0});
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const MatchEntry& a, const MatchEntry& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.book_id != b.book_id) return a.book_id < b.book_id;
    return a.doc_id < b.doc_id;
  });
  // Heuristic display confidence: relative gap between the two best distances.
  if (sharing >= 2 && out.entries.size() >= 2) {
    const double s1 = out.entries[0].score, s2 = out.entries[1].score;
    out.entries[0].confidence = s2 > 0 ? std::clamp((s2 - s1) / s2, 0.0, 1.0) : 0.0;
  }
  if (top_n > 0 && out.entries.size() > top_n) out.entries.resize(top_n);
  return out;
}

InvertedIndex InvertedIndex::from_parts(ScoringNorm norm, std::vector<std::vector<Posting>> postings,
                                        std::vector<double> weights,
                                        std::vector<std::pair<DocId, std::string>> doc_table) {
  if (weights.size() != postings.size()) throw Error(ErrorCode::format, "weights/postings size mismatch");
  if (doc_table.empty()) throw Error(ErrorCode::format, "index has no documents");
  InvertedIndex idx(postings.size(), norm);
  std::sort(doc_table.begin(), doc_table.end());
  for (std::size_t i = 1; i < doc_table.size(); ++i) {
    if (doc_table[i].first == doc_table[i - 1].first) throw Error(ErrorCode::format, "duplicate doc id");
  }
  for (const auto& list : postings) {
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i].doc <= list[i - 1].doc) throw Error(ErrorCode::format, "postings not strictly increasing");
    }
  }
  idx.postings_ = std::move(postings);
  idx.weights_ = std::move(weights);
  idx.doc_table_ = std::move(doc_table);
  for (const auto& list : idx.postings_)
    for (const auto& p : list) (void)idx.slot(p.doc);
  idx.build_vectors();
  idx.finalized_ = true;
  return idx;
}

}  // namespace bookvis
