#include <bit>
#include <cstring>

#include "bookvis/error.hpp"
#include "bookvis/util.hpp"
#include "bookvis/vocab_index.hpp"

// Layout (all integers little-endian):
//   "BVIX" u32 version
//   params:    u32 k, u32 L, u64 seed, u8 norm
//   tree:      u32 node_count, node_count x (i32 parent, u32 first_child, u32 child_count, u32 depth),
//              node_count x 128 f32 centroids
//   postings:  node_count x (u32 len, len x (u32 doc, u32 count))
//   weights:   node_count x f64
//   doc_table: u32 doc_count, doc_count x (u32 doc_id, u32 len, len bytes book_id)

namespace bookvis {

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw Error(ErrorCode::format, "index file truncated");
  }
  template <class T>
  T le() {
    using U = std::make_unsigned_t<T>;
    need(sizeof(T));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const noexcept { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_index(const IndexFile& file) {
  const auto& tree = file.tree;
  const auto& index = file.index;
  if (!index.finalized()) throw Error(ErrorCode::not_finalized, "only finalized indexes can be saved");
  Writer w;
  w.bytes("BVIX", 4);
  w.le<std::uint32_t>(kIndexFormatVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(tree.branch_factor()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(tree.max_depth()));
  w.le<std::uint64_t>(file.params.seed);
  w.le<std::uint8_t>(static_cast<std::uint8_t>(index.norm()));

  const auto nodes = static_cast<std::uint32_t>(tree.node_count());
  w.le<std::uint32_t>(nodes);
  for (const auto& n : tree.nodes()) {
    w.le<std::int32_t>(n.parent);
    w.le<std::uint32_t>(n.first_child);
    w.le<std::uint32_t>(n.child_count);
    w.le<std::uint32_t>(n.depth);
  }
  for (float c : tree.centroids()) w.f32(c);
  for (std::uint32_t i = 0; i < nodes; ++i) {
    const auto& list = index.postings(i);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(list.size()));
    for (const auto& p : list) {
      w.le<std::uint32_t>(p.doc);
      w.le<std::uint32_t>(p.count);
    }
  }
  for (double v : index.weights()) w.f64(v);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(index.doc_count()));
  for (const auto& [doc, book] : index.doc_table()) {
    w.le<std::uint32_t>(doc);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(book.size()));
    w.bytes(book.data(), book.size());
  }
  return w.take();
}

IndexFile deserialize_index(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(4) != "BVIX") throw Error(ErrorCode::format, "not a BVIX index file");
  const auto version = r.le<std::uint32_t>();
  if (version != kIndexFormatVersion) throw Error(ErrorCode::format, "unsupported index version " + std::to_string(version));
  IndexFile file;
  file.params.branch_factor = static_cast<int>(r.le<std::uint32_t>());
  file.params.max_depth = static_cast<int>(r.le<std::uint32_t>());
  file.params.seed = r.le<std::uint64_t>();
  const auto norm_raw = r.le<std::uint8_t>();
  if (norm_raw != 1 && norm_raw != 2) throw Error(ErrorCode::format, "unknown scoring norm");
  const auto norm = static_cast<ScoringNorm>(norm_raw);

  const auto nodes = r.le<std::uint32_t>();
  r.need(static_cast<std::size_t>(nodes) * 16);
  std::vector<VocabTree::Node> topo(nodes);
  for (auto& n : topo) {
    n.parent = r.le<std::int32_t>();
    n.first_child = r.le<std::uint32_t>();
    n.child_count = r.le<std::uint32_t>();
    n.depth = r.le<std::uint32_t>();
  }
  r.need(static_cast<std::size_t>(nodes) * kDescriptorSize * 4);
  std::vector<float> centroids(static_cast<std::size_t>(nodes) * kDescriptorSize);
  for (auto& c : centroids) c = r.f32();
  std::vector<std::vector<Posting>> postings(nodes);
  for (auto& list : postings) {
    const auto len = r.le<std::uint32_t>();
    r.need(static_cast<std::size_t>(len) * 8);
    list.resize(len);
    for (auto& p : list) {
      p.doc = r.le<std::uint32_t>();
      p.count = r.le<std::uint32_t>();
    }
  }
  std::vector<double> weights(nodes);
  for (auto& v : weights) v = r.f64();
  const auto docs = r.le<std::uint32_t>();
  std::vector<std::pair<DocId, std::string>> table;
  for (std::uint32_t i = 0; i < docs; ++i) {
    const auto id = r.le<std::uint32_t>();
    const auto len = r.le<std::uint32_t>();
    table.emplace_back(id, r.str(len));
  }
  if (!r.done()) throw Error(ErrorCode::format, "trailing bytes in index file");

  file.tree = VocabTree(file.params.branch_factor, file.params.max_depth, std::move(topo), std::move(centroids));
  file.index = InvertedIndex::from_parts(norm, std::move(postings), std::move(weights), std::move(table));
  return file;
}

void save_index(const std::filesystem::path& path, const IndexFile& file) {
  const auto bytes = serialize_index(file);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

IndexFile load_index(const std::filesystem::path& path) { return deserialize_index(read_file_bytes(path)); }

}  // namespace bookvis
