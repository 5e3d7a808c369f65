#include "intentbench/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "intentbench/error.hpp"
#include "intentbench/hungarian.hpp"
#include "jsonl.hpp"

namespace intentbench {

namespace {

LabelMap label_map_from_pairs(std::span<const std::pair<std::string, std::string>> pairs,
                              const char* what) {
  LabelMap entries;
  for (const auto& [id, label] : pairs) {
    if (id.empty()) throw DataError(std::string(what) + ": empty id");
    if (label.empty()) throw DataError(std::string(what) + ": empty label for \"" + id + "\"");
    if (!entries.emplace(id, label).second) {
      throw DataError(std::string(what) + ": duplicate id \"" + id + "\"");
    }
  }
  return entries;
}

double choose2(std::int64_t k) { return 0.5 * static_cast<double>(k) * static_cast<double>(k - 1); }

void require_items(const ContingencyTable& table, const char* what) {
  if (table.n <= 0) throw std::invalid_argument(std::string(what) + ": empty contingency table");
}

double entropy(const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>& sizes, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < sizes.size(); ++i) {
    if (sizes(i) == 0) continue;
    const double p = static_cast<double>(sizes(i)) / n;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

ClusterAssignment ClusterAssignment::from_pairs(std::span<const std::pair<std::string, std::string>> pairs) {
  return ClusterAssignment{label_map_from_pairs(pairs, "cluster assignment")};
}

std::size_t ClusterAssignment::noise_count() const {
  std::size_t count = 0;
  for (const auto& [id, label] : entries) count += label == kNoiseLabel;
  return count;
}

ReferenceLabels ReferenceLabels::from_pairs(std::span<const std::pair<std::string, std::string>> pairs) {
  return ReferenceLabels{label_map_from_pairs(pairs, "reference labels")};
}

std::string to_string(NmiMode mode) {
  switch (mode) {
    case NmiMode::min: return "min";
    case NmiMode::geometric: return "geometric";
    case NmiMode::arithmetic: return "arithmetic";
    case NmiMode::max: return "max";
  }
  return "arithmetic";
}

NmiMode parse_nmi_mode(std::string_view text) {
  if (text == "min") return NmiMode::min;
  if (text == "geometric") return NmiMode::geometric;
  if (text == "arithmetic") return NmiMode::arithmetic;
  if (text == "max") return NmiMode::max;
  throw ConfigError("unknown NMI mode \"" + std::string(text) + "\" (min|geometric|arithmetic|max)");
}

std::string to_string(NoiseMode mode) {
  return mode == NoiseMode::single_cluster ? "single_cluster" : "singletons";
}

NoiseMode parse_noise_mode(std::string_view text) {
  if (text == "single_cluster") return NoiseMode::single_cluster;
  if (text == "singletons") return NoiseMode::singletons;
  throw ConfigError("unknown noise mode \"" + std::string(text) + "\" (single_cluster|singletons)");
}

ContingencyTable contingency(const ClusterAssignment& pred, const ReferenceLabels& ref) {
  std::size_t missing_ref = 0, missing_pred = 0;
  for (const auto& [id, label] : pred.entries) missing_ref += !ref.entries.contains(id);
  for (const auto& [id, label] : ref.entries) missing_pred += !pred.entries.contains(id);
  if (missing_ref || missing_pred) {
    throw DataError("key-set mismatch: " + std::to_string(missing_ref) +
                    " predicted ids have no reference label, " + std::to_string(missing_pred) +
                    " reference ids have no prediction");
  }
  if (pred.entries.empty()) throw DataError("cannot evaluate an empty assignment");

  ContingencyTable table;
  std::unordered_map<std::string, Eigen::Index> pred_index, ref_index;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  cells.reserve(pred.entries.size());
  for (const auto& [id, predicted] : pred.entries) {
    const auto& reference = ref.entries.at(id);
    auto [pi, p_new] = pred_index.try_emplace(predicted, static_cast<Eigen::Index>(table.predicted_labels.size()));
    if (p_new) table.predicted_labels.push_back(predicted);
    auto [ri, r_new] = ref_index.try_emplace(reference, static_cast<Eigen::Index>(table.reference_labels.size()));
    if (r_new) table.reference_labels.push_back(reference);
    cells.emplace_back(pi->second, ri->second);
  }
  table.counts = CountMatrix::Zero(static_cast<Eigen::Index>(table.predicted_labels.size()),
                                   static_cast<Eigen::Index>(table.reference_labels.size()));
  for (const auto& [r, c] : cells) ++table.counts(r, c);
  table.n = static_cast<std::int64_t>(cells.size());
  return table;
}

double clustering_accuracy(const ContingencyTable& table) {
  require_items(table, "clustering_accuracy");
  const auto matched = hungarian_max_assignment(table.counts.cast<double>());
  return matched.total / static_cast<double>(table.n);
}

PrecisionRecall clustering_prf(const ContingencyTable& table) {
  require_items(table, "clustering_prf");
  const double n = static_cast<double>(table.n);
  PrecisionRecall out;
  out.precision = static_cast<double>(table.counts.rowwise().maxCoeff().sum()) / n;
  out.recall = static_cast<double>(table.counts.colwise().maxCoeff().sum()) / n;
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

double nmi(const ContingencyTable& table, NmiMode mode) {
  require_items(table, "nmi");
  const double n = static_cast<double>(table.n);
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> row_sums = table.counts.rowwise().sum();
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> col_sums = table.counts.colwise().sum().transpose();
  const double h_pred = entropy(row_sums, n);
  const double h_ref = entropy(col_sums, n);
  if (h_pred == 0.0 && h_ref == 0.0) return 1.0;

  double mi = 0.0;
  for (Eigen::Index i = 0; i < table.counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.counts.cols(); ++j) {
      const auto nij = table.counts(i, j);
      if (nij == 0) continue;
      const double joint = static_cast<double>(nij);
      mi += joint / n *
            std::log(n * joint / (static_cast<double>(row_sums(i)) * static_cast<double>(col_sums(j))));
    }
  }
  mi = std::max(mi, 0.0);

  double norm = 0.0;
  switch (mode) {
    case NmiMode::min: norm = std::min(h_pred, h_ref); break;
    case NmiMode::geometric: norm = std::sqrt(h_pred * h_ref); break;
    case NmiMode::arithmetic: norm = 0.5 * (h_pred + h_ref); break;
    case NmiMode::max: norm = std::max(h_pred, h_ref); break;
  }
  // One side constant: MI is zero and min/geometric normalizers vanish.
  if (norm == 0.0) return 0.0;
  return mi / norm;
}

double ari(const ContingencyTable& table) {
  if (table.n < 2) throw std::invalid_argument("ari: needs at least two items");
  double index = 0.0, sum_pred = 0.0, sum_ref = 0.0;
  for (Eigen::Index i = 0; i < table.counts.size(); ++i) index += choose2(table.counts.data()[i]);
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> row_sums = table.counts.rowwise().sum();
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> col_sums = table.counts.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < row_sums.size(); ++i) sum_pred += choose2(row_sums(i));
  for (Eigen::Index j = 0; j < col_sums.size(); ++j) sum_ref += choose2(col_sums(j));
  const double expected = sum_pred * sum_ref / choose2(table.n);
  const double max_index = 0.5 * (sum_pred + sum_ref);
  // Only reachable when both partitions are all singletons or both a single block.
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

MetricsReport evaluate(const ClusterAssignment& pred, const ReferenceLabels& ref, const EvalOptions& options) {
  ContingencyTable table;
  if (options.noise_mode == NoiseMode::singletons && pred.noise_count() > 0) {
    ClusterAssignment expanded = pred;
    for (auto& [id, label] : expanded.entries) {
      if (label == kNoiseLabel) label = kNoiseLabel + "#" + id;
    }
    table = contingency(expanded, ref);
  } else {
    table = contingency(pred, ref);
  }

  MetricsReport report;
  report.acc = clustering_accuracy(table);
  const auto prf = clustering_prf(table);
  report.precision = prf.precision;
  report.recall = prf.recall;
  report.f1 = prf.f1;
  report.nmi = nmi(table, options.nmi_mode);
  report.ari = ari(table);
  report.n_predicted_clusters = static_cast<std::int64_t>(table.predicted_labels.size());
  report.n_reference_intents = static_cast<std::int64_t>(table.reference_labels.size());
  report.n_items = table.n;
  report.nmi_mode = options.nmi_mode;
  report.noise_mode = options.noise_mode;
  return report;
}

double metric_value(const MetricsReport& report, std::string_view metric) {
  if (metric == "acc") return report.acc;
  if (metric == "precision") return report.precision;
  if (metric == "recall") return report.recall;
  if (metric == "f1") return report.f1;
  if (metric == "nmi") return report.nmi;
  if (metric == "ari") return report.ari;
  throw ConfigError("unknown metric \"" + std::string(metric) + "\"");
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json out;
  out["acc"] = report.acc;
  out["precision"] = report.precision;
  out["recall"] = report.recall;
  out["f1"] = report.f1;
  out["nmi"] = report.nmi;
  out["ari"] = report.ari;
  out["n_predicted_clusters"] = report.n_predicted_clusters;
  out["n_reference_intents"] = report.n_reference_intents;
  out["n_items"] = report.n_items;
  out["nmi_mode"] = to_string(report.nmi_mode);
  out["noise_mode"] = to_string(report.noise_mode);
  out["tie_rule"] = kTieRule;
  return out;
}

MetricsReport report_from_json(const nlohmann::json& json) {
  try {
    MetricsReport report;
    report.acc = json.at("acc").get<double>();
    report.precision = json.at("precision").get<double>();
    report.recall = json.at("recall").get<double>();
    report.f1 = json.at("f1").get<double>();
    report.nmi = json.at("nmi").get<double>();
    report.ari = json.at("ari").get<double>();
    report.n_predicted_clusters = json.at("n_predicted_clusters").get<std::int64_t>();
    report.n_reference_intents = json.at("n_reference_intents").get<std::int64_t>();
    report.n_items = json.at("n_items").get<std::int64_t>();
    report.nmi_mode = parse_nmi_mode(json.at("nmi_mode").get<std::string>());
    report.noise_mode = parse_noise_mode(json.at("noise_mode").get<std::string>());
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
}

std::string render_markdown(const MetricsReport& report, const std::string& title) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  if (!title.empty()) out << "### " << title << "\n\n";
  out << "| ACC | P | R | F1 | NMI | ARI | #Pred | #Ref | N |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  out << "| " << report.acc << " | " << report.precision << " | " << report.recall << " | " << report.f1
      << " | " << report.nmi << " | " << report.ari << " | " << report.n_predicted_clusters << " | "
      << report.n_reference_intents << " | " << report.n_items << " |\n";
  return out.str();
}

std::vector<LeaderboardEntry> mrr_leaderboard(const TeamScores& scores, std::span<const std::string> metrics,
                                              std::span<const std::string> datasets) {
  if (metrics.empty() || datasets.empty()) {
    throw ConfigError("mrr_leaderboard: need at least one metric and one dataset");
  }
  std::map<std::string, double> reciprocal_sum;
  for (const auto& [team, cells] : scores) reciprocal_sum[team] = 0.0;
  for (const auto& dataset : datasets) {
    for (const auto& metric : metrics) {
      const auto cell = std::make_pair(dataset, metric);
      std::vector<std::pair<std::string, double>> column;
      for (const auto& [team, cells] : scores) {
        auto it = cells.find(cell);
        if (it == cells.end()) {
          throw DataError("team \"" + team + "\" has no score for dataset \"" + dataset + "\", metric \"" +
                          metric + "\"");
        }
        column.emplace_back(team, it->second);
      }
      for (const auto& [team, value] : column) {
        std::size_t better = 0;
        for (const auto& other : column) better += other.second > value;
        reciprocal_sum[team] += 1.0 / static_cast<double>(better + 1);
      }
    }
  }
  const double cells = static_cast<double>(metrics.size() * datasets.size());
  std::vector<LeaderboardEntry> board;
  for (const auto& [team, sum] : reciprocal_sum) board.push_back({team, sum / cells});
  std::stable_sort(board.begin(), board.end(),
                   [](const LeaderboardEntry& a, const LeaderboardEntry& b) { return a.mrr > b.mrr; });
  return board;
}

std::map<std::string, double> aggregate_mean(std::span<const std::map<std::string, double>> per_dataset) {
  if (per_dataset.empty()) throw DataError("aggregate_mean: no datasets");
  std::map<std::string, double> mean;
  for (const auto& [metric, value] : per_dataset.front()) mean[metric] = 0.0;
  for (const auto& scores : per_dataset) {
    if (scores.size() != mean.size()) throw DataError("aggregate_mean: metric keys differ across datasets");
    for (const auto& [metric, value] : scores) {
      auto it = mean.find(metric);
      if (it == mean.end()) throw DataError("aggregate_mean: metric \"" + metric + "\" missing from a dataset");
      it->second += value;
    }
  }
  for (auto& [metric, value] : mean) value /= static_cast<double>(per_dataset.size());
  return mean;
}

ClusterAssignment parse_assignment(std::istream& in, const std::string& source) {
  ClusterAssignment assignment;
  detail::for_each_json_line(in, source, [&](const detail::json& object, const detail::LineContext& ctx) {
    auto id = detail::require_nonempty_string(object, "utterance_id", ctx);
    auto label = detail::require_nonempty_string(object, "label", ctx);
    if (!assignment.entries.emplace(id, std::move(label)).second) {
      ctx.fail("duplicate utterance_id \"" + id + "\"");
    }
  });
  if (assignment.entries.empty()) throw DataError(source + ": assignment is empty");
  return assignment;
}

ClusterAssignment load_assignment(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_assignment(in, path.string());
}

void write_assignment(const ClusterAssignment& assignment, std::ostream& out) {
  for (const auto& [id, label] : assignment.entries) {
    nlohmann::ordered_json line;
    line["utterance_id"] = id;
    line["label"] = label;
    out << line.dump() << '\n';
  }
}

}  // namespace intentbench
