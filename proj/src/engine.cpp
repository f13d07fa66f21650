#include <fstream>

#include "bookvis/error.hpp"
#include "bookvis/util.hpp"
#include "bookvis/vocab_index.hpp"

namespace bookvis {

IndexFile build_index(std::span<const IndexedDocument> docs, const TreeParams& params, ScoringNorm norm,
                      TrainingTrace* trace) {
  if (docs.empty()) throw Error(ErrorCode::training, "no documents to index");
  std::vector<DescriptorSet> corpus;
  corpus.reserve(docs.size());
  for (const auto& d : docs) corpus.push_back(d.descriptors);
  IndexFile file;
  file.params = params;
  file.tree = VocabTree::train(corpus, params, trace);
  file.index = InvertedIndex(file.tree.node_count(), norm);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    file.index.add_document(file.tree, static_cast<DocId>(i), docs[i].descriptors, docs[i].book_id);
  }
  file.index.finalize();
  return file;
}

std::filesystem::path manifest_path(const std::filesystem::path& index_path) {
  return index_path.string() + ".manifest.json";
}

std::shared_ptr<const Engine> load_engine(const std::filesystem::path& index_path,
                                          std::shared_ptr<const Catalog> catalog) {
  auto file = load_index(index_path);
  auto engine = std::make_shared<Engine>();
  engine->catalog = std::move(catalog);
  engine->tree = std::move(file.tree);
  engine->index = std::move(file.index);
  const auto manifest = manifest_path(index_path);
  if (std::filesystem::exists(manifest)) {
    try {
      const auto j = nlohmann::json::parse(read_file_text(manifest));
      if (j.contains("features")) engine->features = j["features"].get<FeatureParams>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::format, "malformed index manifest " + manifest.string() + ": " + e.what());
    }
  }
  return engine;
}

}  // namespace bookvis
