#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace intentbench {

struct KMeansOptions {
  int restarts = 10;
  int max_iter = 300;
  /// Lloyd stops once the largest centroid coordinate shift falls below this.
  double tol = 1e-4;
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct KMeansResult {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Eigen::Index k = 0;
  Matrix centroids;
  std::vector<int> labels;
  /// Sum of squared distances to the assigned centroid.
  Scalar inertia = 0;
  int n_iter = 0;
  std::uint64_t seed = 0;
  /// Inertia after every assignment step, ending with the final (re-centred) value.
  std::vector<Scalar> inertia_trace;
};

/// Thrown when a Lloyd step increases the objective beyond rounding slack.
class MonotonicityViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
Scalar inertia_of(const MatrixX<Scalar>& points, const MatrixX<Scalar>& centroids,
                  const std::vector<int>& labels) {
  Scalar total = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

// Nearest centroid per point via the Gram expansion; returns exact squared distances to the
// chosen centroid.
template <typename Scalar>
void assign(const MatrixX<Scalar>& points, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& point_norms,
            const MatrixX<Scalar>& centroids, std::vector<int>& labels,
            Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& dist) {
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> centroid_norms = centroids.rowwise().squaredNorm().transpose();
  const MatrixX<Scalar> cross = points * centroids.transpose();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Eigen::Index best = 0;
    Scalar best_d = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const Scalar d = point_norms(i) + centroid_norms(j) - 2 * cross(i, j);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    dist(i) = (points.row(i) - centroids.row(best)).squaredNorm();
  }
}

// Every empty cluster takes the point lying farthest from its centroid, drawn from a cluster
// that can spare it.
template <typename Scalar>
void repair_empty(const MatrixX<Scalar>& points, MatrixX<Scalar>& centroids, std::vector<int>& labels,
                  Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& dist) {
  const Eigen::Index k = centroids.rows();
  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
  for (int label : labels) ++sizes[static_cast<std::size_t>(label)];
  for (Eigen::Index j = 0; j < k; ++j) {
    if (sizes[static_cast<std::size_t>(j)] > 0) continue;
    Eigen::Index far = -1;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      if (sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] < 2) continue;
      if (far < 0 || dist(i) > dist(far)) far = i;
    }
    auto& owner = labels[static_cast<std::size_t>(far)];
    --sizes[static_cast<std::size_t>(owner)];
    owner = static_cast<int>(j);
    ++sizes[static_cast<std::size_t>(j)];
    centroids.row(j) = points.row(far);
    dist(far) = 0;
  }
}

template <typename Scalar>
void check_non_increasing(Scalar previous, Scalar current) {
  const Scalar slack = Scalar(1000) * std::numeric_limits<Scalar>::epsilon() * std::max<Scalar>(Scalar(1), previous);
  if (current > previous + slack) {
    throw MonotonicityViolation("k-means inertia increased from " + std::to_string(previous) + " to " +
                                std::to_string(current));
  }
}

}  // namespace detail

/// k-means++ seeding: first index uniform, later ones drawn with probability proportional to the
/// squared distance to the nearest chosen centre. When every remaining point coincides with a
/// chosen centre, falls back to uniformly drawn unused indices.
template <typename Derived, typename Rng>
std::vector<Eigen::Index> kmeans_pp_seed(const Eigen::MatrixBase<Derived>& points, Eigen::Index k, Rng& rng) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) throw std::invalid_argument("kmeans_pp_seed: need 1 <= k <= n");
  std::vector<Eigen::Index> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  chosen.push_back(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
  used[static_cast<std::size_t>(chosen.back())] = true;

  Eigen::Matrix<double, Eigen::Dynamic, 1> nearest(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    nearest(i) = static_cast<double>((points.row(i) - points.row(chosen.back())).squaredNorm());
  }
  while (static_cast<Eigen::Index>(chosen.size()) < k) {
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!used[static_cast<std::size_t>(i)]) total += nearest(i);
    }
    Eigen::Index pick = -1;
    if (total > 0) {
      const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      double cumulative = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (used[static_cast<std::size_t>(i)] || nearest(i) <= 0) continue;
        cumulative += nearest(i);
        pick = i;
        if (cumulative > u) break;
      }
    } else {
      std::vector<Eigen::Index> unused;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!used[static_cast<std::size_t>(i)]) unused.push_back(i);
      }
      pick = unused[std::uniform_int_distribution<std::size_t>(0, unused.size() - 1)(rng)];
    }
    chosen.push_back(pick);
    used[static_cast<std::size_t>(pick)] = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest(i) = std::min(nearest(i), static_cast<double>((points.row(i) - points.row(pick)).squaredNorm()));
    }
  }
  return chosen;
}

/// Lloyd iterations from explicit initial centroids. Inertia is checked to be non-increasing at
/// every step; a violation throws MonotonicityViolation.
template <typename Derived>
KMeansResult<typename Derived::Scalar> lloyd(
    const Eigen::MatrixBase<Derived>& input,
    detail::MatrixX<typename Derived::Scalar> centroids, int max_iter, double tol) {
  using Scalar = typename Derived::Scalar;
  using Matrix = detail::MatrixX<Scalar>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Matrix points = input;
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centroids.rows();
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: need 1 <= k <= n");
  if (centroids.cols() != points.cols()) throw std::invalid_argument("kmeans: centroid dimension mismatch");

  const Vector point_norms = points.rowwise().squaredNorm();
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  Vector dist(n);
  KMeansResult<Scalar> result;
  result.k = k;

  int iter = 0;
  while (true) {
    detail::assign(points, point_norms, centroids, labels, dist);
    detail::repair_empty(points, centroids, labels, dist);
    Scalar current = 0;  // same order as inertia_of
    for (Eigen::Index i = 0; i < n; ++i) current += dist(i);
    if (!result.inertia_trace.empty()) detail::check_non_increasing(result.inertia_trace.back(), current);
    result.inertia_trace.push_back(current);
    ++iter;

    Matrix updated = Matrix::Zero(k, points.cols());
    Vector counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      updated.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
      counts(labels[static_cast<std::size_t>(i)]) += 1;
    }
    updated.array().colwise() /= counts.array();
    const Scalar shift = (updated - centroids).cwiseAbs().maxCoeff();
    centroids = std::move(updated);
    if (shift < static_cast<Scalar>(tol) || iter >= max_iter) break;
  }

  result.inertia = detail::inertia_of(points, centroids, labels);
  detail::check_non_increasing(result.inertia_trace.back(), result.inertia);
  result.inertia_trace.push_back(result.inertia);
  result.centroids = std::move(centroids);
  result.labels = std::move(labels);
  result.n_iter = iter;
  return result;
}

/// Best-of-restarts k-means (by inertia) with k-means++ seeding. Deterministic given the seed.
template <typename Derived>
KMeansResult<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& input, Eigen::Index k,
                                              const KMeansOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  const detail::MatrixX<Scalar> points = input;
  if (k < 1 || k > points.rows()) {
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(points.rows()) + "]");
  }
  if (!points.allFinite()) throw std::invalid_argument("kmeans: non-finite input");
  if (options.restarts < 1 || options.max_iter < 1) throw std::invalid_argument("kmeans: bad options");

  std::mt19937_64 master(options.seed);
  KMeansResult<Scalar> best;
  bool have_best = false;
  for (int r = 0; r < options.restarts; ++r) {
    std::mt19937_64 rng(master());
    const auto seeds = kmeans_pp_seed(points, k, rng);
    detail::MatrixX<Scalar> init(k, points.cols());
    for (Eigen::Index j = 0; j < k; ++j) init.row(j) = points.row(seeds[static_cast<std::size_t>(j)]);
    auto candidate = lloyd(points, std::move(init), options.max_iter, options.tol);
    if (!have_best || candidate.inertia < best.inertia) {
      best = std::move(candidate);
      have_best = true;
    }
  }
  best.seed = options.seed;
  return best;
}

}  // namespace intentbench
