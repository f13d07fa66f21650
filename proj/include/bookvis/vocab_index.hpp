#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bookvis/catalog.hpp"
#include "bookvis/features.hpp"

namespace bookvis {

using NodeId = std::uint32_t;
using DocId = std::uint32_t;

struct TreeParams {
  int branch_factor = 10;
  int max_depth = 4;
  std::uint64_t seed = 0;
  int max_iterations = 50;
  double tolerance = 1e-4;
};

/// Per-node k-means objective trace recorded while training.
struct TrainingTrace {
  struct Entry {
    NodeId node;
    std::vector<double> objective;
  };
  std::vector<Entry> entries;
};

/// Hierarchical k-means quantizer. Node 0 is the root; the children of a node
/// occupy a contiguous id range, and ids are dense in [0, node_count).
class VocabTree {
 public:
  struct Node {
    std::int32_t parent = -1;
    NodeId first_child = 0;
    std::uint32_t child_count = 0;
    std::uint32_t depth = 0;
    bool is_leaf() const noexcept { return child_count == 0; }
    bool operator==(const Node&) const = default;
  };

  VocabTree() = default;
  VocabTree(int branch_factor, int max_depth, std::vector<Node> nodes, std::vector<float> centroids);

  /// Throws Error{training} when the corpus holds fewer than k descriptors or k < 2 or L < 1.
  static VocabTree train(std::span<const DescriptorSet> corpus, const TreeParams& params,
                         TrainingTrace* trace = nullptr);

  /// Greedy root-to-leaf descent, nearest centroid per level, ties to the lowest id.
  std::vector<NodeId> quantize(std::span<const float, kDescriptorSize> descriptor) const;

  int branch_factor() const noexcept { return branch_factor_; }
  int max_depth() const noexcept { return max_depth_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const noexcept;
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::span<const float, kDescriptorSize> centroid(NodeId id) const {
    return std::span<const float, kDescriptorSize>(centroids_.data() + static_cast<std::size_t>(id) * kDescriptorSize,
                                                   kDescriptorSize);
  }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<float>& centroids() const noexcept { return centroids_; }

  bool operator==(const VocabTree&) const = default;

 private:
  int branch_factor_ = 0;
  int max_depth_ = 0;
  std::vector<Node> nodes_;
  std::vector<float> centroids_;  // node_count x 128
};

enum class ScoringNorm : std::uint8_t { l1 = 1, l2 = 2 };

struct SparseEntry {
  NodeId node;
  double value;
  bool operator==(const SparseEntry&) const = default;
};
using SparseVector = std::vector<SparseEntry>;  // sorted by node, values > 0

struct Posting {
  DocId doc;
  std::uint32_t count;
  bool operator==(const Posting&) const = default;
};

struct NodeCount {
  NodeId node;
  std::uint32_t count;
};

struct MatchEntry {
  std::string book_id;
  DocId doc_id = 0;
  double score = 0;        // distance between normalized vectors; lower is better
  double confidence = 0;   // only the top entry is nonzero
};

struct RankedMatches {
  std::vector<MatchEntry> entries;
  std::size_t query_descriptor_count = 0;
};

/// Inverted file with entropy weights w_i = ln(N / N_i). Documents are
/// added in a single-writer build phase, then `finalize` freezes the index.
class InvertedIndex {
 public:
  InvertedIndex() = default;
  InvertedIndex(std::size_t node_count, ScoringNorm norm = ScoringNorm::l1);

  void add_document(const VocabTree& tree, DocId doc, const DescriptorSet& descriptors, std::string book_id);
  /// Same as add_document, from precomputed per-node term counts.
  void add_counts(DocId doc, const std::vector<NodeCount>& node_counts, std::string book_id);
  void finalize();

  bool finalized() const noexcept { return finalized_; }
  ScoringNorm norm() const noexcept { return norm_; }
  std::size_t node_count() const noexcept { return postings_.size(); }
  std::size_t doc_count() const noexcept { return doc_table_.size(); }

  const std::vector<Posting>& postings(NodeId node) const { return postings_.at(node); }
  double weight(NodeId node) const;
  const std::vector<double>& weights() const;
  const SparseVector& doc_vector(DocId doc) const;
  const std::string& book_id(DocId doc) const;
  const std::vector<std::pair<DocId, std::string>>& doc_table() const noexcept { return doc_table_; }

  /// Weighted, normalized query vector built exactly like a document vector.
  SparseVector query_vector(const VocabTree& tree, const DescriptorSet& query) const;

  /// All documents ranked by ascending distance, truncated to `top_n` (0 = all).
  /// An empty query yields no entries.
  RankedMatches score(const VocabTree& tree, const DescriptorSet& query, std::size_t top_n) const;
  RankedMatches score_vector(const SparseVector& query, std::size_t query_descriptors, std::size_t top_n) const;

  /// Rebuilds an index from stored postings and weights (used by the file loader).
  static InvertedIndex from_parts(ScoringNorm norm, std::vector<std::vector<Posting>> postings,
                                  std::vector<double> weights, std::vector<std::pair<DocId, std::string>> doc_table);

 private:
  void require_finalized() const;
  std::size_t slot(DocId doc) const;
  void build_vectors();

  ScoringNorm norm_ = ScoringNorm::l1;
  bool finalized_ = false;
  std::vector<std::vector<Posting>> postings_;                 // per node, doc ids strictly increasing
  std::vector<std::pair<DocId, std::string>> doc_table_;       // sorted by doc id
  std::vector<double> weights_;
  std::vector<SparseVector> doc_vectors_;                      // parallel to doc_table_
  std::vector<std::vector<std::pair<std::uint32_t, double>>> weighted_postings_;  // (slot, normalized value)
};

SparseVector normalize_weighted(std::vector<std::pair<NodeId, double>> weighted, ScoringNorm norm);

/// Magic "BVIX", version 1, little-endian. See index_io.cpp for the section layout.
inline constexpr std::uint32_t kIndexFormatVersion = 1;

struct IndexFile {
  TreeParams params;
  VocabTree tree;
  InvertedIndex index;
};

void save_index(const std::filesystem::path& path, const IndexFile& file);
IndexFile load_index(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_index(const IndexFile& file);
IndexFile deserialize_index(std::span<const std::uint8_t> bytes);

struct IndexedDocument {
  std::string book_id;
  DescriptorSet descriptors;
};

/// Trains the tree on every document and indexes each one; doc ids follow the
/// document order.
IndexFile build_index(std::span<const IndexedDocument> docs, const TreeParams& params,
                      ScoringNorm norm = ScoringNorm::l1, TrainingTrace* trace = nullptr);

/// "<index>.manifest.json", written next to the index by the CLI.
std::filesystem::path manifest_path(const std::filesystem::path& index_path);

/// Tree + index + catalog, immutable once built and shared across requests.
struct Engine {
  std::shared_ptr<const Catalog> catalog;
  VocabTree tree;
  InvertedIndex index;
  FeatureParams features;
};

/// Decode, extract and score. Hint tokens come from an external text reader:
/// a candidate whose edition_label tokens all occur in the hints is moved
/// ahead of same-title candidates lacking that label; otherwise order is kept.
RankedMatches recognize(const Engine& engine, std::span<const std::uint8_t> image_bytes,
                        std::span<const std::string> hints = {}, std::size_t top_n = 0);

RankedMatches promote_editions(RankedMatches matches, const Catalog& catalog, std::span<const std::string> hints);

/// Loads the index plus the feature params recorded in its manifest (defaults
/// when no manifest is present).
std::shared_ptr<const Engine> load_engine(const std::filesystem::path& index_path,
                                          std::shared_ptr<const Catalog> catalog);

nlohmann::json matches_to_json(const RankedMatches& matches, const Catalog* catalog);

}  // namespace bookvis
