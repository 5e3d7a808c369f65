#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "intentbench/content_key.hpp"
#include "intentbench/corpus.hpp"
#include "intentbench/embed_store.hpp"
#include "intentbench/pipelines.hpp"

namespace testing {

using namespace intentbench;

struct Blobs {
  Eigen::MatrixXd points;
  std::vector<int> labels;
  Eigen::MatrixXd centers;
};

// Gaussian blobs with unit-variance noise; centres drawn in a cube and rejected until
// every pair is at least `min_separation` apart.
inline Blobs make_blobs(int n_blobs, int per_blob, int dim, double min_separation, std::uint64_t seed,
                        double noise = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-2.0 * min_separation, 2.0 * min_separation);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Blobs out;
  out.centers.resize(n_blobs, dim);
  for (int b = 0; b < n_blobs; ++b) {
    for (;;) {
      for (int j = 0; j < dim; ++j) out.centers(b, j) = box(rng);
      bool ok = true;
      for (int o = 0; o < b && ok; ++o) ok = (out.centers.row(o) - out.centers.row(b)).norm() >= min_separation;
      if (ok) break;
    }
  }
  out.points.resize(n_blobs * per_blob, dim);
  for (int b = 0; b < n_blobs; ++b) {
    for (int p = 0; p < per_blob; ++p) {
      const int row = b * per_blob + p;
      for (int j = 0; j < dim; ++j) out.points(row, j) = out.centers(b, j) + noise * gauss(rng);
      out.labels.push_back(b);
    }
  }
  return out;
}

inline std::string intent_name(int b) { return "intent_" + std::to_string(b); }

inline RowMatrixXf to_float(const Eigen::MatrixXd& m) { return m.cast<float>(); }

// Conversations with one customer turn per intentful item (tagged InformIntent) and an agent
// greeting that is neither; turn embeddings come straight from the blobs.
struct SyntheticDataset {
  Corpus corpus;
  EmbeddingStore turn_store;
  std::vector<TestUtterance> test;
  EmbeddingStore test_store;
  InducedTrainingSet gold_training;
  EmbeddingStore train_store;
};

inline SyntheticDataset make_dataset(int n_intents, int train_per_intent, int test_per_intent, int dim,
                                     std::uint64_t seed, double separation = 10.0) {
  const Blobs blobs = make_blobs(n_intents, train_per_intent + test_per_intent, dim, separation, seed);
  const int per = train_per_intent + test_per_intent;

  Corpus corpus;
  corpus.dataset_name = "synthetic";
  std::vector<std::string> turn_ids;
  RowMatrixXf turn_vectors(n_intents * train_per_intent, dim);
  std::vector<std::string> train_texts;
  InducedTrainingSet training;
  training.source_dataset = "gold";
  int row = 0;
  for (int b = 0; b < n_intents; ++b) {
    for (int i = 0; i < train_per_intent; ++i) {
      Conversation conv;
      conv.conversation_id = "c" + std::to_string(b) + "_" + std::to_string(i);
      Turn greet{"0", SpeakerRole::agent, "hello, how can I help?", {}, false, std::nullopt};
      const std::string text = "request " + std::to_string(i) + " about " + intent_name(b);
      Turn ask{"1", SpeakerRole::customer, text, {kInformIntentAct}, true, intent_name(b)};
      conv.turns = {greet, ask};
      turn_ids.push_back(conv.conversation_id + "/1");
      turn_vectors.row(row) = blobs.points.row(b * per + i).cast<float>();
      corpus.conversations.push_back(std::move(conv));
      training.items.push_back({text, intent_name(b)});
      train_texts.push_back(content_key(text));
      ++row;
    }
  }

  std::vector<TestUtterance> test;
  std::vector<std::string> test_ids;
  RowMatrixXf test_vectors(n_intents * test_per_intent, dim);
  row = 0;
  for (int b = 0; b < n_intents; ++b) {
    for (int i = 0; i < test_per_intent; ++i) {
      const std::string id = "t" + std::to_string(b) + "_" + std::to_string(i);
      test.push_back({id, "test " + std::to_string(i) + " for " + intent_name(b), intent_name(b)});
      test_ids.push_back(id);
      test_vectors.row(row++) = blobs.points.row(b * per + train_per_intent + i).cast<float>();
    }
  }

  EmbeddingStore turn_store("synthetic", dim, turn_ids, turn_vectors, false);
  EmbeddingStore train_store("synthetic", dim, train_texts, turn_vectors, false);
  EmbeddingStore test_store("synthetic", dim, test_ids, test_vectors, false);
  return {std::move(corpus), std::move(turn_store), std::move(test), std::move(test_store), std::move(training),
          std::move(train_store)};
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("intentbench_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace testing
