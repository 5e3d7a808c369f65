#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "intentbench/kmeans.hpp"
#include "intentbench/silhouette.hpp"

namespace intentbench {

/// Cluster-count search settings. The k bounds default to the task's published limits.
struct SearchConfig {
  int k_min = 5;
  int k_max = 50;
  int n_trials = 40;
  /// Uniformly drawn trials before the Parzen estimator takes over.
  int n_startup = 10;
  /// Fraction of trials forming the "good" density.
  double gamma = 0.25;
  int n_candidates = 24;
  /// Sweep every k in range instead of searching.
  bool exhaustive = false;
  SilhouetteMetric metric = SilhouetteMetric::euclidean;
  KMeansOptions kmeans;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless 1 < k_min <= k_max, 0 < gamma < 1 and n_startup >= 0. A startup
  /// count above n_trials makes every trial uniform.
  void validate() const;
};

struct Trial {
  int k = 0;
  double score = 0;
  std::uint64_t seed = 0;
};

struct TrialHistory {
  std::vector<Trial> trials;
  int best_k = 0;
  double best_score = -std::numeric_limits<double>::infinity();

  void add(const Trial& trial);
  bool empty() const { return trials.empty(); }
};

/// Next k to try. Trials are split into the top ceil(gamma * n) by score and the rest; each side
/// becomes a Gaussian-kernel density over k (bandwidth max(1, (k_max - k_min) / 10)) mixed with
/// one uniform component on [k_min, k_max]. Candidates are drawn from the good density and the
/// one maximising good/bad is returned. Draws outside the range are redrawn, and a k that has not
/// been tried yet is preferred over any repeat. Histories shorter than n_startup or with no score
/// spread get a uniform draw.
int tpe_suggest(const TrialHistory& history, const SearchConfig& config, std::mt19937_64& rng);

struct KSelection {
  KMeansResult<double> clustering;
  TrialHistory history;
  /// All trials tied (no usable silhouette signal); k_min was used.
  bool degenerate = false;
  std::vector<std::string> warnings;
};

/// Chooses k by silhouette: n_startup uniform trials then Parzen-estimator suggestions, or every k
/// in exhaustive mode. Each trial runs k-means with a fresh seed; the highest silhouette wins and
/// repeated k keep their best run. The upper bound is capped at n - 1.
/// Throws DataError when the matrix has no more than k_min rows.
KSelection select_k(const Eigen::MatrixXd& points, const SearchConfig& config);

/// {"trial", "k", "silhouette", "seed"} per line.
void write_trial_history(const TrialHistory& history, std::ostream& out);
/// Search settings plus the selected k, for reproducing a run.
nlohmann::ordered_json search_summary(const KSelection& selection, const SearchConfig& config);

}  // namespace intentbench
