#include "bookvis/vocab_index.hpp"

#include <algorithm>
#include <limits>

#include "bookvis/error.hpp"
#include "bookvis/kmeans.hpp"
#include "bookvis/util.hpp"

namespace bookvis {

VocabTree::VocabTree(int branch_factor, int max_depth, std::vector<Node> nodes, std::vector<float> centroids)
    : branch_factor_(branch_factor), max_depth_(max_depth), nodes_(std::move(nodes)), centroids_(std::move(centroids)) {
  if (centroids_.size() != nodes_.size() * kDescriptorSize) {
    throw Error(ErrorCode::format, "centroid array does not match node count");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.child_count > 0 && (n.first_child <= i || n.first_child + n.child_count > nodes_.size())) {
      throw Error(ErrorCode::format, "corrupt tree topology");
    }
  }
}

std::size_t VocabTree::leaf_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<float>& points, const TreeParams& params, TrainingTrace* trace)
      : points_(points), params_(params), trace_(trace) {}

  void build(std::vector<VocabTree::Node>& nodes, std::vector<float>& centroids) {
    const std::size_t n = points_.size() / kDescriptorSize;
    std::vector<std::uint32_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<std::uint32_t>(i);

    nodes_.push_back({});
    centroids_.resize(kDescriptorSize);
    std::vector<double> mean(kDescriptorSize, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < kDescriptorSize; ++j) mean[j] += points_[i * kDescriptorSize + j];
    for (std::size_t j = 0; j < kDescriptorSize; ++j) centroids_[j] = static_cast<float>(mean[j] / n);

    split(0, all);
    nodes = std::move(nodes_);
    centroids = std::move(centroids_);
  }

 private:
  void split(NodeId id, const std::vector<std::uint32_t>& members) {
    const auto depth = nodes_[id].depth;
    const auto k = static_cast<std::size_t>(params_.branch_factor);
    if (depth >= static_cast<std::uint32_t>(params_.max_depth) || members.size() < k) return;

    std::vector<float> local(members.size() * kDescriptorSize);
    for (std::size_t i = 0; i < members.size(); ++i) {
      std::copy_n(points_.begin() + static_cast<std::ptrdiff_t>(members[i] * kDescriptorSize), kDescriptorSize,
                  local.begin() + static_cast<std::ptrdiff_t>(i * kDescriptorSize));
    }
    KMeansParams kp;
    kp.k = k;
    kp.seed = mix_seed(params_.seed, id);
    kp.max_iterations = params_.max_iterations;
    kp.tolerance = params_.tolerance;
    const auto res = kmeans(PointMatrix<float>{local, kDescriptorSize}, kp);
    if (trace_) trace_->entries.push_back({id, res.objective_trace});

    std::vector<std::vector<std::uint32_t>> groups(res.k());
    for (std::size_t i = 0; i < members.size(); ++i) groups[res.assignments[i]].push_back(members[i]);
    std::vector<std::size_t> live;
    for (std::size_t c = 0; c < groups.size(); ++c) {
      if (!groups[c].empty()) live.push_back(c);
    }
    if (live.size() < 2) return;  // all members coincide; keep as a leaf

    const auto first = static_cast<NodeId>(nodes_.size());
    nodes_[id].first_child = first;
    nodes_[id].child_count = static_cast<std::uint32_t>(live.size());
    for (std::size_t c : live) {
      VocabTree::Node child;
      child.parent = static_cast<std::int32_t>(id);
      child.depth = depth + 1;
      nodes_.push_back(child);
      const auto centroid = res.centroid(c);
      for (double v : centroid) centroids_.push_back(static_cast<float>(v));
    }
    for (std::size_t i = 0; i < live.size(); ++i) split(first + static_cast<NodeId>(i), groups[live[i]]);
  }

  const std::vector<float>& points_;
  const TreeParams& params_;
  TrainingTrace* trace_;
  std::vector<VocabTree::Node> nodes_;
  std::vector<float> centroids_;
};

}  // namespace

VocabTree VocabTree::train(std::span<const DescriptorSet> corpus, const TreeParams& params, TrainingTrace* trace) {
  if (params.branch_factor < 2) throw Error(ErrorCode::training, "branch factor must be >= 2");
  if (params.max_depth < 1) throw Error(ErrorCode::training, "depth must be >= 1");
  std::size_t total = 0;
  for (const auto& ds : corpus) total += ds.size();
  if (total < static_cast<std::size_t>(params.branch_factor)) {
    throw Error(ErrorCode::training, "need at least k descriptors to train (have " + std::to_string(total) + ")");
  }
  std::vector<float> points;
  points.reserve(total * kDescriptorSize);
  for (const auto& ds : corpus)
    for (const auto& d : ds.descriptors) points.insert(points.end(), d.vector.begin(), d.vector.end());

  std::vector<Node> nodes;
  std::vector<float> centroids;
  TreeBuilder(points, params, trace).build(nodes, centroids);
  return VocabTree(params.branch_factor, params.max_depth, std::move(nodes), std::move(centroids));
}

std::vector<NodeId> VocabTree::quantize(std::span<const float, kDescriptorSize> descriptor) const {
  std::vector<NodeId> path;
  if (nodes_.empty()) return path;
  NodeId cur = 0;
  path.push_back(cur);
  while (!nodes_[cur].is_leaf()) {
    const auto& n = nodes_[cur];
    NodeId best = n.first_child;
    double best_d = std::numeric_limits<double>::infinity();
    for (NodeId c = n.first_child; c < n.first_child + n.child_count; ++c) {
      const auto centre = centroid(c);
      double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      for (std::size_t j = 0; j < kDescriptorSize; j += 4) {
        const double d0 = descriptor[j] - centre[j], d1 = descriptor[j + 1] - centre[j + 1];
        const double d2 = descriptor[j + 2] - centre[j + 2], d3 = descriptor[j + 3] - centre[j + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
      }
      const double d = (s0 + s1) + (s2 + s3);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    cur = best;
    path.push_back(cur);
  }
  return path;
}

}  // namespace bookvis
