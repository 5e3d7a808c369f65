#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "intentbench/cluster.hpp"

namespace intentbench {

namespace {

// Equal-weight mixture of Gaussian kernels at `centers` plus a uniform over the integer range
// widened by half a step on each side.
class ParzenDensity {
 public:
  ParzenDensity(std::vector<double> centers, double bandwidth, int k_min, int k_max)
      : centers_(std::move(centers)), bandwidth_(bandwidth), lo_(k_min - 0.5), hi_(k_max + 0.5) {}

  double pdf(double x) const {
    double sum = (x >= lo_ && x <= hi_) ? 1.0 / (hi_ - lo_) : 0.0;
    const double norm = 1.0 / (bandwidth_ * std::sqrt(2.0 * std::numbers::pi));
    for (double c : centers_) {
      const double z = (x - c) / bandwidth_;
      sum += norm * std::exp(-0.5 * z * z);
    }
    return sum / static_cast<double>(centers_.size() + 1);
  }

  double sample(std::mt19937_64& rng) const {
    const auto component = std::uniform_int_distribution<std::size_t>(0, centers_.size())(rng);
    if (component == centers_.size()) return std::uniform_real_distribution<double>(lo_, hi_)(rng);
    return std::normal_distribution<double>(centers_[component], bandwidth_)(rng);
  }

 private:
  std::vector<double> centers_;
  double bandwidth_;
  double lo_, hi_;
};

int uniform_k(const SearchConfig& config, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(config.k_min, config.k_max)(rng);
}

}  // namespace

int tpe_suggest(const TrialHistory& history, const SearchConfig& config, std::mt19937_64& rng) {
  const auto& trials = history.trials;
  if (config.k_min == config.k_max) return config.k_min;
  if (trials.size() < 2 || static_cast<int>(trials.size()) < config.n_startup) return uniform_k(config, rng);
  const auto [lo, hi] = std::minmax_element(trials.begin(), trials.end(),
                                            [](const Trial& a, const Trial& b) { return a.score < b.score; });
  if (lo->score == hi->score) return uniform_k(config, rng);

  std::vector<std::size_t> order(trials.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return trials[a].score > trials[b].score; });
  auto n_good = static_cast<std::size_t>(std::ceil(config.gamma * static_cast<double>(trials.size())));
  n_good = std::clamp<std::size_t>(n_good, 1, trials.size());

  std::vector<double> good, bad;
  for (std::size_t r = 0; r < order.size(); ++r) {
    (r < n_good ? good : bad).push_back(static_cast<double>(trials[order[r]].k));
  }
  const double bandwidth = std::max(1.0, (config.k_max - config.k_min) / 10.0);
  const ParzenDensity good_density(std::move(good), bandwidth, config.k_min, config.k_max);
  const ParzenDensity bad_density(std::move(bad), bandwidth, config.k_min, config.k_max);

  std::vector<bool> tried(static_cast<std::size_t>(config.k_max - config.k_min + 1), false);
  for (const auto& t : trials) {
    if (t.k >= config.k_min && t.k <= config.k_max) tried[static_cast<std::size_t>(t.k - config.k_min)] = true;
  }

  // Untried k beat tried ones; the ratio decides within each group.
  int best_k = config.k_min;
  bool best_untried = false;
  double best_ratio = -1.0;
  for (int c = 0; c < config.n_candidates; ++c) {
    double draw = std::round(good_density.sample(rng));
    for (int redraw = 0; redraw < 32 && (draw < config.k_min || draw > config.k_max); ++redraw) {
      draw = std::round(good_density.sample(rng));
    }
    const int k = static_cast<int>(std::clamp(draw, static_cast<double>(config.k_min),
                                              static_cast<double>(config.k_max)));
    const bool untried = !tried[static_cast<std::size_t>(k - config.k_min)];
    const double ratio = good_density.pdf(k) / bad_density.pdf(k);
    if ((untried && !best_untried) || (untried == best_untried && ratio > best_ratio)) {
      best_untried = untried;
      best_ratio = ratio;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace intentbench
