#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "bookvis/error.hpp"
#include "bookvis/image.hpp"
#include "bookvis/util.hpp"
#include "bookvis/vocab_index.hpp"
#include "desk_corpus.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace bookvis;
using testing_support::TempDir;

namespace {

Descriptor with(std::initializer_list<std::pair<std::size_t, float>> entries) {
  Descriptor d;
  for (auto [i, v] : entries) d.vector[i] = v;
  return d;
}

DescriptorSet set_of(std::vector<Descriptor> ds) {
  DescriptorSet s;
  s.descriptors = std::move(ds);
  return s;
}

// root with two leaves; leaf 1 at e0, leaf 2 at e1
VocabTree two_leaf_tree() {
  std::vector<VocabTree::Node> nodes = {{-1, 1, 2, 0}, {0, 0, 0, 1}, {0, 0, 0, 1}};
  std::vector<float> centroids(3 * kDescriptorSize, 0.0f);
  centroids[1 * kDescriptorSize + 0] = 1.0f;
  centroids[2 * kDescriptorSize + 1] = 1.0f;
  return VocabTree(2, 1, nodes, centroids);
}

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::contract;
}

std::vector<DescriptorSet> random_corpus(std::uint64_t seed, std::size_t docs, std::size_t per_doc) {
  std::mt19937_64 rng(seed);
  std::vector<DescriptorSet> out;
  for (std::size_t i = 0; i < docs; ++i) out.push_back(oracle::random_descriptors(rng, per_doc, 8, seed + 1));
  return out;
}

}  // namespace

TEST(VocabTree, TwoSeparatedPairsGiveTwoLeavesAtPairMeans) {
  const std::vector<DescriptorSet> corpus = {
      set_of({with({{0, 1.0f}}), with({{0, 0.8f}, {1, 0.2f}})}),
      set_of({with({{5, 1.0f}}), with({{5, 0.6f}, {6, 0.4f}})})};
  TreeParams p;
  p.branch_factor = 2;
  p.max_depth = 1;
  const auto tree = VocabTree::train(corpus, p);
  ASSERT_EQ(tree.leaf_count(), 2u);
  std::vector<std::array<double, 4>> got;
  for (NodeId c = 1; c <= 2; ++c) {
    const auto m = tree.centroid(c);
    got.push_back({m[0], m[1], m[5], m[6]});
  }
  std::sort(got.begin(), got.end());
  // pair means by hand: (0.9, 0.1, 0, 0) and (0, 0, 0.8, 0.2)
  const std::array<double, 4> a{0, 0, 0.8, 0.2}, b{0.9, 0.1, 0, 0};
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(got[0][j], a[j], 1e-6);
    EXPECT_NEAR(got[1][j], b[j], 1e-6);
  }
}

TEST(VocabTree, RecursionStopsOnSmallGroups) {
  const std::vector<DescriptorSet> corpus = {
      set_of({with({{0, 1.0f}}), with({{0, 0.8f}, {1, 0.2f}}), with({{5, 1.0f}}), with({{5, 0.6f}, {6, 0.4f}})})};
  TreeParams p;
  p.branch_factor = 2;
  p.max_depth = 2;
  const auto tree = VocabTree::train(corpus, p);
  EXPECT_LE(tree.leaf_count(), 4u);
  for (const auto& n : tree.nodes()) EXPECT_LE(n.depth, 2u);
}

TEST(VocabTree, TrainingErrors) {
  const std::vector<DescriptorSet> tiny = {set_of({with({{0, 1.0f}}), with({{1, 1.0f}})})};
  TreeParams p;
  p.branch_factor = 3;
  EXPECT_EQ(code_of([&] { VocabTree::train(tiny, p); }), ErrorCode::training);
  p.branch_factor = 1;
  EXPECT_EQ(code_of([&] { VocabTree::train(tiny, p); }), ErrorCode::training);
  p.branch_factor = 2;
  p.max_depth = 0;
  EXPECT_EQ(code_of([&] { VocabTree::train(tiny, p); }), ErrorCode::training);
}

TEST(VocabTree, ObjectiveNonIncreasingAtEveryNodeOnCoverCorpus) {
  const auto corpus = synth::make_desk_corpus(3, 12);
  std::vector<DescriptorSet> sets;
  std::size_t total = 0;
  for (const auto& [ref, img] : corpus.covers) {
    sets.push_back(extract_descriptors(img));
    total += sets.back().size();
  }
  TreeParams p;  // k = 10, L = 4
  TrainingTrace trace;
  const auto tree = VocabTree::train(sets, p, &trace);
  EXPECT_LE(tree.leaf_count(), 10000u);
  EXPECT_LE(tree.leaf_count(), total);
  ASSERT_FALSE(trace.entries.empty());
  for (const auto& e : trace.entries) {
    for (std::size_t i = 1; i < e.objective.size(); ++i)
      EXPECT_LE(e.objective[i], e.objective[i - 1] * (1 + 1e-12) + 1e-12) << "node " << e.node;
  }
}

TEST(VocabTree, TrainingIsDeterministicForSeed) {
  const auto corpus = random_corpus(9, 4, 120);
  TreeParams p;
  p.branch_factor = 4;
  p.max_depth = 2;
  p.seed = 17;
  EXPECT_EQ(VocabTree::train(corpus, p), VocabTree::train(corpus, p));
}

TEST(VocabTree, QuantizeExactCentroidAndTies) {
  const auto tree = two_leaf_tree();
  const auto at_leaf2 = with({{1, 1.0f}});
  EXPECT_EQ(tree.quantize(at_leaf2.vector), (std::vector<NodeId>{0, 2}));
  // equidistant from both leaves
  const auto mid = with({{0, 0.5f}, {1, 0.5f}});
  EXPECT_EQ(tree.quantize(mid.vector), (std::vector<NodeId>{0, 1}));
}

TEST(VocabTree, QuantizePathBoundedByDepth) {
  const auto corpus = random_corpus(4, 3, 150);
  TreeParams p;
  p.branch_factor = 3;
  p.max_depth = 3;
  const auto tree = VocabTree::train(corpus, p);
  std::mt19937_64 rng(1);
  const auto probes = oracle::random_descriptors(rng, 50, 8, 5);
  for (const auto& d : probes.descriptors) {
    const auto path = tree.quantize(d.vector);
    ASSERT_FALSE(path.empty());
    EXPECT_EQ(path.front(), 0u);
    EXPECT_LE(path.size(), static_cast<std::size_t>(p.max_depth) + 1);
    EXPECT_TRUE(tree.node(path.back()).is_leaf());
    EXPECT_EQ(path, oracle::descend(tree, d.vector));
  }
}

TEST(InvertedIndex, CountsWeightsAndDegenerateDocs) {
  const auto tree = two_leaf_tree();
  InvertedIndex idx(tree.node_count());
  std::vector<Descriptor> ten(10, with({{0, 1.0f}}));
  idx.add_document(tree, 0, set_of(ten), "a");
  idx.add_document(tree, 1, DescriptorSet{}, "empty");
  idx.add_document(tree, 2, set_of({with({{0, 1.0f}})}), "c");
  idx.add_document(tree, 3, set_of({with({{1, 1.0f}})}), "d");
  EXPECT_EQ(code_of([&] { idx.score(tree, set_of(ten), 0); }), ErrorCode::not_finalized);
  EXPECT_EQ(code_of([&] { idx.add_document(tree, 2, DescriptorSet{}, "dup"); }), ErrorCode::conflict);
  idx.finalize();

  ASSERT_EQ(idx.postings(1).front().doc, 0u);
  EXPECT_EQ(idx.postings(1).front().count, 10u);
  EXPECT_EQ(idx.doc_count(), 4u);
  EXPECT_DOUBLE_EQ(idx.weight(0), std::log(4.0 / 3.0));  // root reached by the three non-empty docs
  EXPECT_DOUBLE_EQ(idx.weight(2), std::log(4.0));
  EXPECT_NEAR(idx.weight(2), 1.3863, 1e-4);
  EXPECT_TRUE(idx.doc_vector(1).empty());

  const auto ranked = idx.score(tree, set_of({with({{1, 1.0f}})}), 0);
  ASSERT_EQ(ranked.entries.size(), 4u);
  EXPECT_EQ(ranked.entries[0].book_id, "d");
  EXPECT_NEAR(ranked.entries[0].score, 0.0, 1e-9);
}

TEST(InvertedIndex, NodeInEveryDocHasZeroWeight) {
  const auto tree = two_leaf_tree();
  InvertedIndex idx(tree.node_count());
  idx.add_document(tree, 0, set_of({with({{0, 1.0f}})}), "a");
  idx.add_document(tree, 1, set_of({with({{0, 1.0f}}), with({{1, 1.0f}})}), "b");
  idx.finalize();
  EXPECT_EQ(idx.weight(0), 0.0);
  EXPECT_EQ(idx.weight(1), 0.0);
  EXPECT_DOUBLE_EQ(idx.weight(2), std::log(2.0));
}

TEST(InvertedIndex, DegenerateVocabularyTiesEveryDoc) {
  const auto tree = two_leaf_tree();
  InvertedIndex idx(tree.node_count());
  for (DocId d = 0; d < 3; ++d) idx.add_document(tree, d, set_of({with({{0, 1.0f}}), with({{0, 0.9f}})}), "b" + std::to_string(d));
  idx.finalize();
  const auto r = idx.score(tree, set_of({with({{0, 1.0f}})}), 0);
  ASSERT_EQ(r.entries.size(), 3u);
  for (const auto& e : r.entries) EXPECT_EQ(e.score, r.entries[0].score);
  EXPECT_EQ(r.entries[0].book_id, "b0");
  EXPECT_EQ(r.entries[2].book_id, "b2");
}

TEST(InvertedIndex, EmptyQueryHasNoEntries) {
  const auto tree = two_leaf_tree();
  InvertedIndex idx(tree.node_count());
  idx.add_document(tree, 0, set_of({with({{0, 1.0f}})}), "a");
  idx.finalize();
  const auto r = idx.score(tree, DescriptorSet{}, 0);
  EXPECT_TRUE(r.entries.empty());
  EXPECT_EQ(r.query_descriptor_count, 0u);
}

TEST(InvertedIndex, FinalizeWithoutDocsFails) {
  InvertedIndex idx(3);
  EXPECT_EQ(code_of([&] { idx.finalize(); }), ErrorCode::validation);
}

TEST(InvertedIndex, ThreeDocVectorsMatchDenseOracle) {
  const auto corpus = random_corpus(21, 3, 60);
  TreeParams p;
  p.branch_factor = 3;
  p.max_depth = 2;
  std::vector<IndexedDocument> docs;
  std::vector<std::string> ids = {"x", "y", "z"};
  for (std::size_t i = 0; i < 3; ++i) docs.push_back({ids[i], corpus[i]});
  const auto file = build_index(docs, p);
  const oracle::DenseTfIdf dense(file.tree, corpus, ids);
  for (std::size_t i = 0; i < file.tree.node_count(); ++i) EXPECT_NEAR(file.index.weight(static_cast<NodeId>(i)), dense.weights[i], 1e-12);
  for (DocId d = 0; d < 3; ++d) {
    std::vector<double> sparse(file.tree.node_count(), 0.0);
    for (const auto& e : file.index.doc_vector(d)) sparse[e.node] = e.value;
    for (std::size_t i = 0; i < sparse.size(); ++i) EXPECT_NEAR(sparse[i], dense.docs[d][i], 1e-9);
  }
}

TEST(InvertedIndex, FiveDocRankingMatchesDenseOracle) {
  const auto corpus = random_corpus(33, 5, 80);
  TreeParams p;
  p.branch_factor = 4;
  p.max_depth = 2;
  std::vector<IndexedDocument> docs;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < 5; ++i) {
    ids.push_back("d" + std::to_string(i));
    docs.push_back({ids.back(), corpus[i]});
  }
  const auto file = build_index(docs, p);
  const oracle::DenseTfIdf dense(file.tree, corpus, ids);
  std::mt19937_64 rng(2);
  const auto query = oracle::random_descriptors(rng, 70, 8, 34);
  const auto q = dense.query(file.tree, query);
  std::vector<std::pair<double, std::string>> expect;
  for (std::size_t d = 0; d < 5; ++d) expect.emplace_back(dense.distance(q, d), ids[d]);
  std::sort(expect.begin(), expect.end());
  const auto got = file.index.score(file.tree, query, 0);
  ASSERT_EQ(got.entries.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(got.entries[i].book_id, expect[i].second);
    EXPECT_NEAR(got.entries[i].score, expect[i].first, 1e-9);
  }
}

TEST(InvertedIndex, SparseMatchesDenseAcrossSeeds) {
  for (std::uint64_t seed = 1000; seed < 1030; ++seed) {
    for (auto norm : {ScoringNorm::l1, ScoringNorm::l2}) {
      const auto r = oracle::sparse_vs_dense(seed, norm);
      EXPECT_LE(r.max_vector_diff, 1e-9) << "seed " << seed;
      EXPECT_LE(r.max_score_diff, 1e-9) << "seed " << seed;
      EXPECT_TRUE(r.ranking_matches) << "seed " << seed;
    }
  }
}

TEST(InvertedIndex, SelfQueryRanksFirstWithZeroScore) {
  const auto corpus = random_corpus(8, 6, 100);
  std::vector<IndexedDocument> docs;
  for (std::size_t i = 0; i < corpus.size(); ++i) docs.push_back({"b" + std::to_string(i), corpus[i]});
  TreeParams p;
  p.branch_factor = 5;
  p.max_depth = 3;
  const auto file = build_index(docs, p);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto r = file.index.score(file.tree, corpus[i], 3);
    ASSERT_EQ(r.entries.size(), 3u);
    EXPECT_EQ(r.entries[0].book_id, docs[i].book_id);
    EXPECT_NEAR(r.entries[0].score, 0.0, 1e-9);
    EXPECT_GE(r.entries[0].confidence, 0.0);
    EXPECT_LE(r.entries[0].confidence, 1.0);
    for (std::size_t j = 1; j < r.entries.size(); ++j) {
      EXPECT_EQ(r.entries[j].confidence, 0.0);
      EXPECT_LE(r.entries[j - 1].score, r.entries[j].score);
    }
  }
}

TEST(IndexFile, RoundTripPreservesScores) {
  const auto corpus = random_corpus(12, 4, 90);
  std::vector<IndexedDocument> docs;
  for (std::size_t i = 0; i < corpus.size(); ++i) docs.push_back({"b" + std::to_string(i), corpus[i]});
  TreeParams p;
  p.branch_factor = 3;
  p.max_depth = 3;
  p.seed = 5;
  const auto file = build_index(docs, p, ScoringNorm::l2);
  TempDir dir;
  save_index(dir / "i.bvix", file);
  const auto bytes = read_file_bytes(dir / "i.bvix");
  ASSERT_GE(bytes.size(), 4u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BVIX");
  const auto back = load_index(dir / "i.bvix");
  EXPECT_EQ(back.tree, file.tree);
  EXPECT_EQ(back.params.branch_factor, 3);
  EXPECT_EQ(back.params.seed, 5u);
  EXPECT_EQ(back.index.norm(), ScoringNorm::l2);
  EXPECT_EQ(back.index.doc_table(), file.index.doc_table());
  EXPECT_EQ(back.index.weights(), file.index.weights());
  for (const auto& q : corpus) {
    const auto a = file.index.score(file.tree, q, 0), b = back.index.score(back.tree, q, 0);
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      EXPECT_EQ(a.entries[i].book_id, b.entries[i].book_id);
      EXPECT_EQ(a.entries[i].score, b.entries[i].score);
    }
  }
  EXPECT_EQ(serialize_index(back), bytes);
}

TEST(IndexFile, RejectsCorruptBytes) {
  const auto corpus = random_corpus(3, 2, 40);
  const auto file = build_index(std::vector<IndexedDocument>{{"a", corpus[0]}, {"b", corpus[1]}}, TreeParams{2, 2});
  auto bytes = serialize_index(file);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of([&] { deserialize_index(bad_magic); }), ErrorCode::format);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 7);
  EXPECT_EQ(code_of([&] { deserialize_index(truncated); }), ErrorCode::format);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(code_of([&] { deserialize_index(trailing); }), ErrorCode::format);
  EXPECT_EQ(code_of([&] { load_index("/nonexistent.bvix"); }), ErrorCode::io);
}

TEST(Engine, LoadsFeatureParamsFromManifest) {
  TempDir dir;
  const auto corpus = random_corpus(5, 2, 40);
  save_index(dir / "e.bvix", build_index(std::vector<IndexedDocument>{{"a", corpus[0]}, {"b", corpus[1]}}, TreeParams{2, 2}));
  auto catalog = std::make_shared<const Catalog>(std::vector<BookRecord>{testing_support::book("a"), testing_support::book("b")});
  EXPECT_EQ(load_engine(dir / "e.bvix", catalog)->features, FeatureParams{});
  FeatureParams custom;
  custom.contrast_threshold = 0.05;
  write_file_atomic(manifest_path(dir / "e.bvix"), nlohmann::json{{"features", custom}}.dump());
  EXPECT_EQ(load_engine(dir / "e.bvix", catalog)->features, custom);
  EXPECT_EQ(manifest_path("x/idx.bvix"), std::filesystem::path("x/idx.bvix.manifest.json"));
}

namespace {

Catalog edition_catalog() {
  auto first = testing_support::book("b1");
  first.title = "Same Title";
  first.edition_label = "1st edition";
  auto second = first;
  second.book_id = "b2";
  second.edition_label = "2nd edition";
  auto other = testing_support::book("b3");
  return Catalog({first, second, other});
}

RankedMatches ranked(std::vector<std::string> ids) {
  RankedMatches m;
  double s = 0.1;
  for (auto& id : ids) {
    m.entries.push_back({id, 0, s, 0});
    s += 0.1;
  }
  m.entries.front().confidence = 0.4;
  return m;
}

std::vector<std::string> ids_of(const RankedMatches& m) {
  std::vector<std::string> out;
  for (const auto& e : m.entries) out.push_back(e.book_id);
  return out;
}

}  // namespace

TEST(Recognizer, HintsPromoteMatchingEdition) {
  const auto c = edition_catalog();
  const std::vector<std::string> hints = {"2nd", "edition"};
  const auto out = promote_editions(ranked({"b1", "b3", "b2"}), c, hints);
  EXPECT_EQ(ids_of(out), (std::vector<std::string>{"b2", "b1", "b3"}));
  EXPECT_EQ(out.entries[0].confidence, 0.4);
  EXPECT_EQ(out.entries[1].confidence, 0.0);
}

TEST(Recognizer, NoHintsOrNonMatchingHintsKeepOrder) {
  const auto c = edition_catalog();
  EXPECT_EQ(ids_of(promote_editions(ranked({"b1", "b2", "b3"}), c, {})), (std::vector<std::string>{"b1", "b2", "b3"}));
  const std::vector<std::string> hints = {"3rd", "edition"};
  EXPECT_EQ(ids_of(promote_editions(ranked({"b1", "b2", "b3"}), c, hints)), (std::vector<std::string>{"b1", "b2", "b3"}));
  // hint tokens are case-insensitive and may arrive as one phrase
  const std::vector<std::string> phrase = {"2ND Edition"};
  EXPECT_EQ(ids_of(promote_editions(ranked({"b1", "b2", "b3"}), c, phrase)), (std::vector<std::string>{"b2", "b1", "b3"}));
}

TEST(Recognizer, PromotionPreservesMultiset) {
  const auto c = edition_catalog();
  const std::vector<std::string> hints = {"1st", "edition"};
  const auto out = promote_editions(ranked({"b2", "b3", "b1"}), c, hints);
  auto ids = ids_of(out);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<std::string>{"b1", "b2", "b3"}));
  EXPECT_EQ(ids_of(out).front(), "b1");
}

TEST(Recognizer, MatchesJsonCarriesTitles) {
  const auto c = edition_catalog();
  auto m = ranked({"b1", "b3"});
  m.query_descriptor_count = 12;
  const auto j = matches_to_json(m, &c);
  EXPECT_EQ(j.at("query_descriptors"), 12);
  ASSERT_EQ(j.at("matches").size(), 2u);
  EXPECT_EQ(j["matches"][0]["book_id"], "b1");
  EXPECT_EQ(j["matches"][0]["title"], "Same Title");
  EXPECT_DOUBLE_EQ(j["matches"][1]["score"].get<double>(), 0.2);
}
