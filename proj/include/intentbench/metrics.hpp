#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace intentbench {

/// Label reserved for instances a clusterer left unassigned.
inline const std::string kNoiseLabel = "-1";

using LabelMap = std::map<std::string, std::string>;

/// Induced label per utterance id.
struct ClusterAssignment {
  LabelMap entries;

  static ClusterAssignment from_pairs(std::span<const std::pair<std::string, std::string>> pairs);
  std::size_t noise_count() const;
  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

/// Gold intent per utterance id.
struct ReferenceLabels {
  LabelMap entries;

  static ReferenceLabels from_pairs(std::span<const std::pair<std::string, std::string>> pairs);
  friend bool operator==(const ReferenceLabels&, const ReferenceLabels&) = default;
};

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Rows are predicted clusters, columns reference intents.
struct ContingencyTable {
  std::vector<std::string> predicted_labels;
  std::vector<std::string> reference_labels;
  CountMatrix counts;
  std::int64_t n = 0;
};

enum class NmiMode { min, geometric, arithmetic, max };
/// How noise-labelled instances enter the contingency table.
enum class NoiseMode { single_cluster, singletons };

std::string to_string(NmiMode mode);
NmiMode parse_nmi_mode(std::string_view text);
std::string to_string(NoiseMode mode);
NoiseMode parse_noise_mode(std::string_view text);

struct EvalOptions {
  NmiMode nmi_mode = NmiMode::arithmetic;
  NoiseMode noise_mode = NoiseMode::single_cluster;
};

struct MetricsReport {
  double acc = 0, precision = 0, recall = 0, f1 = 0, nmi = 0, ari = 0;
  std::int64_t n_predicted_clusters = 0, n_reference_intents = 0, n_items = 0;
  NmiMode nmi_mode = NmiMode::arithmetic;
  NoiseMode noise_mode = NoiseMode::single_cluster;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct PrecisionRecall {
  double precision = 0, recall = 0, f1 = 0;
};

/// Throws DataError when the id sets differ, reporting how many ids are missing on each side.
/// Label order is first appearance over ids in sorted order.
ContingencyTable contingency(const ClusterAssignment& pred, const ReferenceLabels& ref);

/// Hungarian-mapped accuracy. Unmatched clusters or intents contribute nothing.
double clustering_accuracy(const ContingencyTable& table);
/// Purity, inverse purity and their harmonic mean.
PrecisionRecall clustering_prf(const ContingencyTable& table);
double nmi(const ContingencyTable& table, NmiMode mode = NmiMode::arithmetic);
double ari(const ContingencyTable& table);

MetricsReport evaluate(const ClusterAssignment& pred, const ReferenceLabels& ref,
                       const EvalOptions& options = {});

/// Value of a named metric: acc, precision, recall, f1, nmi or ari.
double metric_value(const MetricsReport& report, std::string_view metric);

nlohmann::ordered_json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& json);
std::string render_markdown(const MetricsReport& report, const std::string& title = "");

/// (dataset, metric) -> score
using ScoreCells = std::map<std::pair<std::string, std::string>, double>;
/// team -> cells
using TeamScores = std::map<std::string, ScoreCells>;

struct LeaderboardEntry {
  std::string team;
  double mrr = 0;
};

inline const std::vector<std::string> kDefaultRankMetrics{"acc", "f1", "nmi"};
inline constexpr const char* kTieRule = "competition";

/// Mean reciprocal rank over every (dataset, metric) cell. Ties share the best rank (1,1,3);
/// output is sorted by MRR descending, then team id.
std::vector<LeaderboardEntry> mrr_leaderboard(const TeamScores& scores,
                                              std::span<const std::string> metrics,
                                              std::span<const std::string> datasets);

/// Unweighted per-metric mean across datasets. Every dataset must carry the same metric keys.
std::map<std::string, double> aggregate_mean(std::span<const std::map<std::string, double>> per_dataset);

ClusterAssignment load_assignment(const std::filesystem::path& path);
ClusterAssignment parse_assignment(std::istream& in, const std::string& source = "<stream>");
void write_assignment(const ClusterAssignment& assignment, std::ostream& out);

}  // namespace intentbench
