#include "intentbench/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "intentbench/content_key.hpp"
#include "intentbench/error.hpp"
#include "jsonl.hpp"

namespace intentbench {

void InducedTrainingSet::validate() const {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].utterance.empty()) throw DataError("training item " + std::to_string(i) + " has an empty utterance");
    if (items[i].intent_id.empty()) throw DataError("training item " + std::to_string(i) + " has an empty intent id");
  }
  if (intent_count() < 2) {
    throw DataError("induced training set needs at least two intents, found " + std::to_string(intent_count()));
  }
}

std::size_t InducedTrainingSet::intent_count() const {
  std::set<std::string> ids;
  for (const auto& item : items) ids.insert(item.intent_id);
  return ids.size();
}

InducedTrainingSet parse_training_set(std::istream& in, std::string source_dataset, const std::string& source) {
  InducedTrainingSet set;
  set.source_dataset = std::move(source_dataset);
  detail::for_each_json_line(in, source, [&](const detail::json& object, const detail::LineContext& ctx) {
    InducedUtterance item;
    item.utterance = detail::require_nonempty_string(object, "utterance", ctx);
    item.intent_id = detail::require_nonempty_string(object, "intent", ctx);
    set.items.push_back(std::move(item));
  });
  return set;
}

InducedTrainingSet load_training_set(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_training_set(in, path.stem().string(), path.string());
}

void write_training_set(const InducedTrainingSet& training_set, std::ostream& out) {
  for (const auto& item : training_set.items) {
    nlohmann::ordered_json line;
    line["utterance"] = item.utterance;
    line["intent"] = item.intent_id;
    out << line.dump() << '\n';
  }
}

namespace {

void require_coverage(const EmbeddingStore& store, std::span<const std::string> ids, const std::string& what) {
  const auto missing = missing_ids(store, ids);
  if (missing.empty()) return;
  std::string message = std::to_string(missing.size()) + " " + what + " have no embedding in \"" +
                        store.encoder_name() + "\":";
  const std::size_t shown = std::min<std::size_t>(missing.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) message += " " + missing[i];
  if (shown < missing.size()) message += " ...";
  throw DataError(message);
}

Eigen::MatrixXd features_for(const EmbeddingStore& store, std::span<const std::string> ids, bool normalize,
                             const std::string& what) {
  require_coverage(store, ids, what);
  Eigen::MatrixXd features = gather(store, ids);
  if (normalize) features = normalize_rows(std::move(features), ids);
  return features;
}

// Shared by both baselines: cluster the selected turns and label them by cluster index.
std::pair<std::vector<std::string>, KSelection> cluster_turns(std::span<const KeyedUtterance> turns,
                                                              const EmbeddingStore& store,
                                                              const PipelineConfig& config) {
  std::vector<std::string> keys;
  keys.reserve(turns.size());
  for (const auto& turn : turns) keys.push_back(turn.key);
  const Eigen::MatrixXd features = features_for(store, keys, config.normalize, "turns");
  KSelection selection = select_k(features, config.search);
  std::vector<std::string> labels;
  labels.reserve(keys.size());
  for (int label : selection.clustering.labels) labels.push_back(std::to_string(label));
  return {std::move(labels), std::move(selection)};
}

std::vector<int> competition_ranks(std::span<const double> scores) {
  std::vector<int> ranks(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    int better = 0;
    for (double other : scores) better += other > scores[i];
    ranks[i] = better + 1;
  }
  return ranks;
}

std::pair<double, double> mean_and_std(std::span<const double> values) {
  // Shifted by the first value so equal inputs give exactly zero spread.
  const double shift = values.front();
  double offset = 0.0;
  for (double v : values) offset += v - shift;
  const double mean = shift + offset / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

}  // namespace

Task1Result run_task1_baseline(const Corpus& corpus, const EmbeddingStore& store, const PipelineConfig& config) {
  const auto turns = intentful_turns(corpus);
  if (turns.empty()) throw DataError("corpus \"" + corpus.dataset_name + "\" has no intentful turns");
  auto [labels, selection] = cluster_turns(turns, store, config);
  Task1Result result;
  for (std::size_t i = 0; i < turns.size(); ++i) result.assignment.entries.emplace(turns[i].key, labels[i]);
  result.warnings = selection.warnings;
  result.selection = std::move(selection);
  return result;
}

Task2Result run_task2_baseline(const Corpus& corpus, const EmbeddingStore& store, const PipelineConfig& config) {
  const auto turns = inform_intent_turns(corpus, config.inform_role);
  if (turns.empty()) {
    throw DataError("no turns selected by the InformIntent selector (speaker filter: " +
                    (config.inform_role ? to_string(*config.inform_role) : std::string("none")) + ")");
  }
  auto [labels, selection] = cluster_turns(turns, store, config);
  Task2Result result;
  result.training_set.source_dataset = corpus.dataset_name;
  for (std::size_t i = 0; i < turns.size(); ++i) result.training_set.items.push_back({turns[i].text, labels[i]});
  result.warnings = selection.warnings;
  result.selection = std::move(selection);
  return result;
}

MetricsReport evaluate_task2(const InducedTrainingSet& training_set, const EmbeddingStore& train_store,
                             std::span<const TestUtterance> test, const EmbeddingStore& test_store,
                             const Task2EvalConfig& config) {
  training_set.validate();
  if (test.empty()) throw DataError("test set is empty");

  std::vector<std::pair<std::string, std::string>> rows;  // (content key, intent id)
  rows.reserve(training_set.items.size());
  for (const auto& item : training_set.items) rows.emplace_back(content_key(item.utterance), item.intent_id);
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> keys, labels;
  for (auto& [key, label] : rows) {
    keys.push_back(key);
    labels.push_back(label);
  }
  const Eigen::MatrixXd train_features = features_for(train_store, keys, config.normalize, "training utterances");

  const ReferenceLabels reference = test_reference(test);
  std::vector<std::string> test_ids;
  for (const auto& [id, intent] : reference.entries) test_ids.push_back(id);
  const Eigen::MatrixXd test_features = features_for(test_store, test_ids, config.normalize, "test utterances");

  const auto model = train(train_features, labels, config.classifier);
  const auto predicted = predict(model, test_features);
  ClusterAssignment assignment;
  for (std::size_t i = 0; i < test_ids.size(); ++i) assignment.entries.emplace(test_ids[i], predicted.labels[i]);
  return evaluate(assignment, reference, config.eval);
}

ReferenceLabels task1_reference(const Corpus& corpus) {
  const auto labels = intentful_gold_labels(corpus);
  if (labels.empty()) throw DataError("corpus \"" + corpus.dataset_name + "\" has no gold intents on intentful turns");
  return ReferenceLabels::from_pairs(labels);
}

ReferenceLabels test_reference(std::span<const TestUtterance> test) {
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(test.size());
  for (const auto& item : test) pairs.emplace_back(item.utterance_id, item.gold_intent);
  return ReferenceLabels::from_pairs(pairs);
}

MetricsReport score_task1_submission(const std::filesystem::path& assignment_path, const ReferenceLabels& ref,
                                     const EvalOptions& options) {
  return evaluate(load_assignment(assignment_path), ref, options);
}

SensitivityReport classifier_sensitivity(std::span<const Submission> submissions,
                                         std::span<const TestUtterance> test,
                                         std::span<const EncoderStores> encoders, const Task2EvalConfig& config) {
  if (encoders.size() < 2) throw ConfigError("classifier sensitivity needs at least two encoders");
  if (submissions.empty()) throw ConfigError("classifier sensitivity needs at least one submission");

  SensitivityReport report;
  for (const auto& encoder : encoders) report.encoders.push_back(encoder.name);
  for (const auto& submission : submissions) {
    SubmissionSensitivity row;
    row.name = submission.name;
    for (const auto& encoder : encoders) {
      try {
        row.acc.push_back(evaluate_task2(submission.training_set, encoder.train, test, encoder.test, config).acc);
      } catch (const DataError& e) {
        throw DataError("encoder \"" + encoder.name + "\", submission \"" + submission.name + "\": " + e.what());
      }
    }
    row.best_acc = *std::max_element(row.acc.begin(), row.acc.end());
    std::tie(row.mean_acc, row.std_acc) = mean_and_std(row.acc);
    report.submissions.push_back(std::move(row));
  }

  for (std::size_t e = 0; e < encoders.size(); ++e) {
    std::vector<double> column;
    for (const auto& row : report.submissions) column.push_back(row.acc[e]);
    const auto ranks = competition_ranks(column);
    for (std::size_t s = 0; s < ranks.size(); ++s) report.submissions[s].rank.push_back(ranks[s]);
  }
  std::vector<double> best;
  for (const auto& row : report.submissions) best.push_back(row.best_acc);
  const auto best_ranks = competition_ranks(best);
  for (std::size_t s = 0; s < report.submissions.size(); ++s) {
    auto& row = report.submissions[s];
    row.rank_by_best = best_ranks[s];
    const std::vector<double> ranks(row.rank.begin(), row.rank.end());
    std::tie(row.mean_rank, row.std_rank) = mean_and_std(ranks);
  }
  return report;
}

nlohmann::ordered_json to_json(const SensitivityReport& report) {
  nlohmann::ordered_json out;
  out["encoders"] = report.encoders;
  out["tie_rule"] = kTieRule;
  auto& rows = out["submissions"] = nlohmann::ordered_json::array();
  for (const auto& row : report.submissions) {
    nlohmann::ordered_json r;
    r["name"] = row.name;
    r["acc"] = row.acc;
    r["rank"] = row.rank;
    r["best_acc"] = row.best_acc;
    r["mean_acc"] = row.mean_acc;
    r["std_acc"] = row.std_acc;
    r["rank_by_best"] = row.rank_by_best;
    r["mean_rank"] = row.mean_rank;
    r["std_rank"] = row.std_rank;
    rows.push_back(std::move(r));
  }
  return out;
}

std::string render_markdown(const SensitivityReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "| Submission | Best ACC | Rank (best) | Mean ACC | Std ACC | Mean rank | Std rank |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const auto& row : report.submissions) {
    out << "| " << row.name << " | " << row.best_acc << " | " << row.rank_by_best << " | " << row.mean_acc << " | "
        << row.std_acc << " | " << row.mean_rank << " | " << row.std_rank << " |\n";
  }
  return out.str();
}

double weighted_diversity(std::span<const IntentDiversity> intents) {
  // Extended precision keeps simple weighted means (e.g. 3*0.2 + 0.6 over 4) exact after rounding.
  long double weighted = 0, total = 0;
  for (const auto& intent : intents) {
    weighted += static_cast<long double>(intent.count) * static_cast<long double>(intent.diversity);
    total += static_cast<long double>(intent.count);
  }
  if (total == 0) throw DataError("no intents to average");
  return static_cast<double>(weighted / total);
}

DiversityReport semantic_diversity(std::span<const std::pair<std::string, std::string>> labeled,
                                   const EmbeddingStore& store, int min_count) {
  if (labeled.empty()) throw DataError("semantic diversity: no labelled utterances");
  const auto threshold = static_cast<std::size_t>(std::max(min_count, 1));
  std::map<std::string, std::vector<std::string>> by_intent;
  std::vector<std::string> all_ids;
  for (const auto& [id, intent] : labeled) {
    by_intent[intent].push_back(id);
    all_ids.push_back(id);
  }
  require_coverage(store, all_ids, "utterances");

  DiversityReport report;
  for (const auto& [intent, ids] : by_intent) {
    if (ids.size() < threshold) {
      ++report.dropped_intents;
      continue;
    }
    const Eigen::MatrixXd vectors = gather(store, ids);
    // Shifted mean: identical rows reproduce the row exactly.
    const Eigen::RowVectorXd centroid =
        vectors.row(0) + (vectors.rowwise() - vectors.row(0)).colwise().mean();
    const double centroid_sq = centroid.squaredNorm();
    const double centroid_norm = std::sqrt(centroid_sq);
    IntentDiversity row{intent, ids.size(), 1.0};
    if (centroid_norm == 0.0) {
      report.warnings.push_back("intent \"" + intent + "\" has a zero centroid; diversity set to 1");
    } else {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
        const double sq = vectors.row(i).squaredNorm();
        const double cosine =
            sq == 0.0 ? 0.0 : std::clamp(vectors.row(i).dot(centroid) / std::sqrt(sq * centroid_sq), -1.0, 1.0);
        sum += 1.0 - cosine;
      }
      row.diversity = sum / static_cast<double>(vectors.rows());
    }
    report.intents.push_back(std::move(row));
  }
  if (report.intents.empty()) {
    throw DataError("semantic diversity: no intent has at least " + std::to_string(threshold) + " utterances");
  }
  report.overall = weighted_diversity(report.intents);
  return report;
}

nlohmann::ordered_json to_json(const DiversityReport& report) {
  nlohmann::ordered_json out;
  out["overall"] = report.overall;
  out["dropped_intents"] = report.dropped_intents;
  auto& rows = out["intents"] = nlohmann::ordered_json::array();
  for (const auto& intent : report.intents) {
    nlohmann::ordered_json r;
    r["intent"] = intent.intent;
    r["count"] = intent.count;
    r["diversity"] = intent.diversity;
    rows.push_back(std::move(r));
  }
  out["warnings"] = report.warnings;
  return out;
}

std::string render_markdown(const DiversityReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "| Intent | Count | Diversity |\n|---|---|---|\n";
  for (const auto& intent : report.intents) {
    out << "| " << intent.intent << " | " << intent.count << " | " << intent.diversity << " |\n";
  }
  out << "| **Overall** | ";
  std::size_t total = 0;
  for (const auto& intent : report.intents) total += intent.count;
  out << total << " | " << report.overall << " |\n";
  return out.str();
}

}  // namespace intentbench
