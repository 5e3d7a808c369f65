#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace intentbench {

enum class SilhouetteMetric { euclidean, cosine };

std::string to_string(SilhouetteMetric metric);
SilhouetteMetric parse_silhouette_metric(const std::string& text);

/// Mean silhouette (b - a) / max(a, b) over all points.
///
/// a is the mean distance to the rest of the point's own cluster, b the smallest mean distance to
/// another cluster. Points in singleton clusters, and points with a = b = 0, score 0. A labelling
/// with as many clusters as points scores 0. Fewer than two clusters throws.
template <typename Derived>
double silhouette_score(const Eigen::MatrixBase<Derived>& input, std::span<const int> labels,
                        SilhouetteMetric metric = SilhouetteMetric::euclidean) {
  using Matrix = Eigen::MatrixXd;
  const Eigen::Index n = input.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw std::invalid_argument("silhouette_score: label count does not match row count");
  }

  std::unordered_map<int, Eigen::Index> compact;
  std::vector<Eigen::Index> cluster(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto [it, inserted] = compact.try_emplace(labels[static_cast<std::size_t>(i)],
                                              static_cast<Eigen::Index>(compact.size()));
    cluster[static_cast<std::size_t>(i)] = it->second;
  }
  const auto k = static_cast<Eigen::Index>(compact.size());
  if (k < 2) throw std::invalid_argument("silhouette_score: needs at least two clusters");
  if (k == n) return 0.0;

  Matrix points = input.template cast<double>();
  if (metric == SilhouetteMetric::cosine) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = points.row(i).norm();
      if (norm > 0) points.row(i) /= norm;
    }
  }
  const Eigen::VectorXd norms = points.rowwise().squaredNorm();

  Matrix membership = Matrix::Zero(n, k);
  Eigen::VectorXd sizes = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    membership(i, cluster[static_cast<std::size_t>(i)]) = 1.0;
    sizes(cluster[static_cast<std::size_t>(i)]) += 1.0;
  }

  // Distances come from the Gram expansion block by block; values below rounding level relative
  // to the operands are snapped to zero so coincident points are exactly at distance 0.
  constexpr Eigen::Index kBlock = 256;
  constexpr double kSnap = 1e-12;
  double total = 0.0;
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, n - start);
    Matrix dist = points.middleRows(start, rows) * points.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index i = start + r;
      for (Eigen::Index j = 0; j < n; ++j) {
        double d;
        if (metric == SilhouetteMetric::euclidean) {
          const double scale = norms(i) + norms(j);
          double sq = scale - 2.0 * dist(r, j);
          if (sq <= kSnap * scale) sq = 0.0;
          d = std::sqrt(sq);
        } else {
          d = 1.0 - dist(r, j);
          if (std::abs(d) <= kSnap) d = 0.0;
          d = std::clamp(d, 0.0, 2.0);
        }
        dist(r, j) = i == j ? 0.0 : d;
      }
    }
    const Matrix sums = dist * membership;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index i = start + r;
      const Eigen::Index own = cluster[static_cast<std::size_t>(i)];
      if (sizes(own) < 2) continue;
      const double a = sums(r, own) / (sizes(own) - 1.0);
      double b = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        if (c != own) b = std::min(b, sums(r, c) / sizes(c));
      }
      const double denom = std::max(a, b);
      if (denom > 0) total += (b - a) / denom;
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace intentbench
