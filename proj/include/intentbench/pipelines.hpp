#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "intentbench/classifier.hpp"
#include "intentbench/cluster.hpp"
#include "intentbench/corpus.hpp"
#include "intentbench/embed_store.hpp"
#include "intentbench/metrics.hpp"

namespace intentbench {

struct InducedUtterance {
  std::string utterance;
  std::string intent_id;

  friend bool operator==(const InducedUtterance&, const InducedUtterance&) = default;
};

/// Task 2 submission: utterances paired with induced intent ids.
struct InducedTrainingSet {
  std::vector<InducedUtterance> items;
  std::string source_dataset;

  /// Throws DataError unless there are >= 2 distinct ids and every utterance is non-empty.
  void validate() const;
  std::size_t intent_count() const;
  friend bool operator==(const InducedTrainingSet&, const InducedTrainingSet&) = default;
};

InducedTrainingSet load_training_set(const std::filesystem::path& path);
InducedTrainingSet parse_training_set(std::istream& in, std::string source_dataset,
                                      const std::string& source = "<stream>");
void write_training_set(const InducedTrainingSet& training_set, std::ostream& out);

struct PipelineConfig {
  SearchConfig search;
  /// L2-normalize embeddings before clustering.
  bool normalize = true;
  /// Speaker filter for InformIntent turn selection; nullopt keeps every speaker.
  std::optional<SpeakerRole> inform_role = SpeakerRole::customer;
};

struct Task1Result {
  ClusterAssignment assignment;
  KSelection selection;
  std::vector<std::string> warnings;
};

/// Clusters the intentful turns with silhouette-selected k-means. Labels are cluster indices.
Task1Result run_task1_baseline(const Corpus& corpus, const EmbeddingStore& store,
                               const PipelineConfig& config = {});

struct Task2Result {
  InducedTrainingSet training_set;
  KSelection selection;
  std::vector<std::string> warnings;
};

/// Clusters InformIntent turns the same way and pairs each turn's text with its cluster id.
Task2Result run_task2_baseline(const Corpus& corpus, const EmbeddingStore& store,
                               const PipelineConfig& config = {});

struct Task2EvalConfig {
  ClassifierConfig classifier;
  bool normalize = true;
  EvalOptions eval;
};

/// Trains the logistic-regression classifier on the induced set (features looked up by
/// content_key of each utterance) and scores its test-set predictions against the gold intents.
/// Induced ids are opaque: they are never compared with gold intent names.
MetricsReport evaluate_task2(const InducedTrainingSet& training_set, const EmbeddingStore& train_store,
                             std::span<const TestUtterance> test, const EmbeddingStore& test_store,
                             const Task2EvalConfig& config = {});

ReferenceLabels task1_reference(const Corpus& corpus);
ReferenceLabels test_reference(std::span<const TestUtterance> test);

/// Loads an assignment file and scores it; noise follows `options.noise_mode`.
MetricsReport score_task1_submission(const std::filesystem::path& assignment_path, const ReferenceLabels& ref,
                                     const EvalOptions& options = {});

struct Submission {
  std::string name;
  InducedTrainingSet training_set;
};

struct EncoderStores {
  std::string name;
  EmbeddingStore train;
  EmbeddingStore test;
};

struct SubmissionSensitivity {
  std::string name;
  std::vector<double> acc;   // per encoder
  std::vector<int> rank;     // per encoder, competition ranking among submissions
  double best_acc = 0, mean_acc = 0, std_acc = 0;
  int rank_by_best = 0;
  double mean_rank = 0, std_rank = 0;
};

struct SensitivityReport {
  std::vector<std::string> encoders;
  std::vector<SubmissionSensitivity> submissions;
};

/// Task 2 ACC of every submission under every encoder, with best/mean/std ACC and rank
/// statistics. Standard deviations are population (divide by the encoder count).
SensitivityReport classifier_sensitivity(std::span<const Submission> submissions,
                                         std::span<const TestUtterance> test,
                                         std::span<const EncoderStores> encoders,
                                         const Task2EvalConfig& config = {});

nlohmann::ordered_json to_json(const SensitivityReport& report);
std::string render_markdown(const SensitivityReport& report);

struct IntentDiversity {
  std::string intent;
  std::size_t count = 0;
  double diversity = 0;
};

struct DiversityReport {
  std::vector<IntentDiversity> intents;  // sorted by intent name
  double overall = 0;
  std::size_t dropped_intents = 0;
  std::vector<std::string> warnings;
};

/// Frequency-weighted mean of per-intent diversities.
double weighted_diversity(std::span<const IntentDiversity> intents);

/// Per intent: mean cosine distance of each raw embedding to the intent centroid. Intents with
/// fewer than min_count utterances are dropped; a zero centroid scores 1 with a warning.
DiversityReport semantic_diversity(std::span<const std::pair<std::string, std::string>> labeled,
                                   const EmbeddingStore& store, int min_count = 1);

nlohmann::ordered_json to_json(const DiversityReport& report);
std::string render_markdown(const DiversityReport& report);

}  // namespace intentbench
