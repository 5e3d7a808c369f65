#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace intentbench {

struct AssignmentResult {
  /// Column matched to each row, or -1. Exactly min(rows, cols) rows are matched.
  std::vector<Eigen::Index> row_to_col;
  double total = 0.0;
};

namespace detail {

// Among optimal matchings (tight edges under the final dual), move each row in turn to the
// smallest column that still admits a perfect matching on the remaining tight graph.
class LexicographicRefiner {
 public:
  LexicographicRefiner(const Eigen::MatrixXd& reduced, double tol, std::vector<Eigen::Index>& row_to_col)
      : reduced_(reduced), tol_(tol), row_to_col_(row_to_col), n_(reduced.rows()) {
    col_to_row_.assign(static_cast<std::size_t>(n_), -1);
    for (Eigen::Index i = 0; i < n_; ++i) col_to_row_[idx(row_to_col_[idx(i)])] = i;
    fixed_row_.assign(idx(n_), false);
    fixed_col_.assign(idx(n_), false);
  }

  void run() {
    for (Eigen::Index i = 0; i < n_; ++i) {
      const Eigen::Index current = row_to_col_[idx(i)];
      for (Eigen::Index j = 0; j < current; ++j) {
        if (fixed_col_[idx(j)] || !tight(i, j)) continue;
        if (try_move(i, j)) break;
      }
      fixed_row_[idx(i)] = true;
      fixed_col_[idx(row_to_col_[idx(i)])] = true;
    }
  }

 private:
  static std::size_t idx(Eigen::Index i) { return static_cast<std::size_t>(i); }
  bool tight(Eigen::Index i, Eigen::Index j) const { return std::abs(reduced_(i, j)) <= tol_; }

  // Re-seat the row currently on `target` along tight edges so that `freed` (row's old column)
  // absorbs the displacement.
  bool try_move(Eigen::Index row, Eigen::Index target) {
    const Eigen::Index freed = row_to_col_[idx(row)];
    const Eigen::Index displaced = col_to_row_[idx(target)];
    visited_.assign(idx(n_), false);
    visited_[idx(target)] = true;
    path_.clear();
    excluded_row_ = row;
    if (!search(displaced, freed)) return false;
    // path_ holds (row, new column) pairs from `displaced` down to the row that takes `freed`.
    for (const auto& [r, c] : path_) {
      row_to_col_[idx(r)] = c;
      col_to_row_[idx(c)] = r;
    }
    row_to_col_[idx(row)] = target;
    col_to_row_[idx(target)] = row;
    return true;
  }

  bool search(Eigen::Index r, Eigen::Index freed) {
    for (Eigen::Index c = 0; c < n_; ++c) {
      if (visited_[idx(c)] || fixed_col_[idx(c)] || !tight(r, c)) continue;
      visited_[idx(c)] = true;
      if (c == freed) {
        path_.emplace_back(r, c);
        return true;
      }
      const Eigen::Index next = col_to_row_[idx(c)];
      if (next == excluded_row_ || fixed_row_[idx(next)]) continue;
      path_.emplace_back(r, c);
      if (search(next, freed)) return true;
      path_.pop_back();
    }
    return false;
  }

  const Eigen::MatrixXd& reduced_;
  double tol_;
  std::vector<Eigen::Index>& row_to_col_;
  Eigen::Index n_;
  std::vector<Eigen::Index> col_to_row_;
  std::vector<bool> fixed_row_, fixed_col_, visited_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> path_;
  Eigen::Index excluded_row_ = -1;
};

}  // namespace detail

/// Maximum-profit one-to-one matching of rows to columns (Kuhn-Munkres, O(n^3)).
///
/// Rectangular inputs are padded square with zero-profit cells; the profit is turned into a cost
/// by subtraction from the maximum entry. Among optimal matchings the lexicographically smallest
/// row->column mapping is returned.
template <typename Derived>
AssignmentResult hungarian_max_assignment(const Eigen::MatrixBase<Derived>& profit) {
  const Eigen::Index rows = profit.rows();
  const Eigen::Index cols = profit.cols();
  if (rows == 0 || cols == 0) throw std::invalid_argument("hungarian_max_assignment: empty matrix");
  const Eigen::MatrixXd p = profit.template cast<double>();
  if (!p.allFinite()) throw std::invalid_argument("hungarian_max_assignment: non-finite entry");

  const Eigen::Index n = std::max(rows, cols);
  const double top = std::max(p.maxCoeff(), 0.0);
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, n, top);
  cost.topLeftCorner(rows, cols).array() = top - p.array();

  // Shortest augmenting paths with row/column potentials; index 0 is a sentinel column.
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto N = static_cast<std::size_t>(n);
  std::vector<double> u(N + 1, 0.0), v(N + 1, 0.0);
  std::vector<Eigen::Index> col_owner(N + 1, 0), way(N + 1, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    col_owner[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(N + 1, inf);
    std::vector<bool> used(N + 1, false);
    do {
      used[j0] = true;
      const Eigen::Index i0 = col_owner[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= N; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, static_cast<Eigen::Index>(j) - 1) - u[static_cast<std::size_t>(i0)] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = static_cast<Eigen::Index>(j0);
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= N; ++j) {
        if (used[j]) {
          u[static_cast<std::size_t>(col_owner[j])] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_owner[j0] != 0);
    do {
      const auto j1 = static_cast<std::size_t>(way[j0]);
      col_owner[j0] = col_owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Eigen::Index> square(N, -1);
  for (std::size_t j = 1; j <= N; ++j) square[static_cast<std::size_t>(col_owner[j] - 1)] = static_cast<Eigen::Index>(j) - 1;

  Eigen::MatrixXd reduced(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      reduced(i, j) = cost(i, j) - u[static_cast<std::size_t>(i) + 1] - v[static_cast<std::size_t>(j) + 1];
    }
  }
  const double tol = 1e-9 * std::max(1.0, top);
  detail::LexicographicRefiner(reduced, tol, square).run();

  AssignmentResult result;
  result.row_to_col.assign(static_cast<std::size_t>(rows), -1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::Index j = square[static_cast<std::size_t>(i)];
    if (j < cols) {
      result.row_to_col[static_cast<std::size_t>(i)] = j;
      result.total += p(i, j);
    }
  }
  return result;
}

}  // namespace intentbench
