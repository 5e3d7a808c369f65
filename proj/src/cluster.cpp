#include "intentbench/cluster.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "intentbench/error.hpp"

namespace intentbench {

std::string to_string(SilhouetteMetric metric) {
  return metric == SilhouetteMetric::euclidean ? "euclidean" : "cosine";
}

SilhouetteMetric parse_silhouette_metric(const std::string& text) {
  if (text == "euclidean") return SilhouetteMetric::euclidean;
  if (text == "cosine") return SilhouetteMetric::cosine;
  throw ConfigError("unknown silhouette metric \"" + text + "\" (euclidean|cosine)");
}

void SearchConfig::validate() const {
  if (k_min <= 1) throw ConfigError("k_min must be greater than 1");
  if (k_min > k_max) throw ConfigError("k_min must not exceed k_max");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie strictly between 0 and 1");
  if (n_trials < 1) throw ConfigError("n_trials must be positive");
  if (n_startup < 0) throw ConfigError("n_startup must be non-negative");
  if (n_candidates < 1) throw ConfigError("n_candidates must be positive");
  if (kmeans.restarts < 1 || kmeans.max_iter < 1 || !(kmeans.tol >= 0.0)) {
    throw ConfigError("k-means restarts and max_iter must be positive, tol non-negative");
  }
}

void TrialHistory::add(const Trial& trial) {
  trials.push_back(trial);
  if (trials.size() == 1 || trial.score > best_score) {
    best_score = trial.score;
    best_k = trial.k;
  }
}

KSelection select_k(const Eigen::MatrixXd& points, const SearchConfig& config) {
  config.validate();
  const auto n = static_cast<int>(points.rows());
  if (n <= config.k_min) {
    throw DataError("cannot search k in [" + std::to_string(config.k_min) + ", " + std::to_string(config.k_max) +
                    "] with only " + std::to_string(n) + " items");
  }
  SearchConfig bounded = config;
  bounded.k_max = std::min(config.k_max, n - 1);

  std::mt19937_64 rng(config.seed);
  KSelection selection;
  std::map<int, KMeansResult<double>> best_runs;

  auto run_trial = [&](int k) {
    KMeansOptions options = config.kmeans;
    options.seed = rng();
    auto clustering = kmeans(points, k, options);
    const double score = silhouette_score(points, clustering.labels, config.metric);
    selection.history.add({k, score, options.seed});
    auto it = best_runs.find(k);
    if (it == best_runs.end()) {
      best_runs.emplace(k, std::move(clustering));
    } else {
      const auto& trials = selection.history.trials;
      double previous = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t + 1 < trials.size(); ++t) {
        if (trials[t].k == k) previous = std::max(previous, trials[t].score);
      }
      if (score > previous) it->second = std::move(clustering);
    }
  };

  if (config.exhaustive) {
    for (int k = bounded.k_min; k <= bounded.k_max; ++k) run_trial(k);
  } else {
    for (int t = 0; t < config.n_trials; ++t) {
      const int k = t < config.n_startup ? std::uniform_int_distribution<int>(bounded.k_min, bounded.k_max)(rng)
                                         : tpe_suggest(selection.history, bounded, rng);
      run_trial(k);
    }
  }

  const auto& trials = selection.history.trials;
  const auto [lo, hi] = std::minmax_element(trials.begin(), trials.end(),
                                            [](const Trial& a, const Trial& b) { return a.score < b.score; });
  if (lo->score == hi->score) {
    selection.degenerate = true;
    selection.warnings.push_back("silhouette is identical for every trial; falling back to k_min=" +
                                 std::to_string(config.k_min));
    auto it = best_runs.find(config.k_min);
    if (it != best_runs.end()) {
      selection.clustering = it->second;
    } else {
      KMeansOptions options = config.kmeans;
      options.seed = rng();
      selection.clustering = kmeans(points, config.k_min, options);
    }
  } else {
    selection.clustering = best_runs.at(selection.history.best_k);
  }
  return selection;
}

void write_trial_history(const TrialHistory& history, std::ostream& out) {
  for (std::size_t t = 0; t < history.trials.size(); ++t) {
    const auto& trial = history.trials[t];
    nlohmann::ordered_json line;
    line["trial"] = t;
    line["k"] = trial.k;
    line["silhouette"] = trial.score;
    line["seed"] = trial.seed;
    out << line.dump() << '\n';
  }
}

nlohmann::ordered_json search_summary(const KSelection& selection, const SearchConfig& config) {
  nlohmann::ordered_json out;
  out["selected_k"] = selection.clustering.k;
  out["best_silhouette"] = selection.history.best_score;
  out["degenerate"] = selection.degenerate;
  out["inertia"] = selection.clustering.inertia;
  auto& search = out["search"];
  search["mode"] = config.exhaustive ? "exhaustive" : "tpe";
  search["k_min"] = config.k_min;
  search["k_max"] = config.k_max;
  search["n_trials"] = config.n_trials;
  search["n_startup"] = config.n_startup;
  search["gamma"] = config.gamma;
  search["n_candidates"] = config.n_candidates;
  search["bandwidth_rule"] = "max(1, (k_max - k_min) / 10)";
  search["metric"] = to_string(config.metric);
  search["seed"] = config.seed;
  auto& km = out["kmeans"];
  km["restarts"] = config.kmeans.restarts;
  km["max_iter"] = config.kmeans.max_iter;
  km["tol"] = config.kmeans.tol;
  out["warnings"] = selection.warnings;
  return out;
}

}  // namespace intentbench
