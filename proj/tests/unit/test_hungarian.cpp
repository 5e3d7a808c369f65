#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "intentbench/hungarian.hpp"

using namespace intentbench;

TEST_CASE("2x2 example") {
  Eigen::MatrixXd p(2, 2);
  p << 2, 1, 1, 1;
  const auto r = hungarian_max_assignment(p);
  CHECK(r.row_to_col == std::vector<Eigen::Index>{0, 1});
  CHECK(r.total == 3.0);
}

TEST_CASE("identity profit gives the identity mapping") {
  for (int k = 1; k <= 7; ++k) {
    const auto r = hungarian_max_assignment(Eigen::MatrixXd::Identity(k, k));
    std::vector<Eigen::Index> id(static_cast<std::size_t>(k));
    std::iota(id.begin(), id.end(), 0);
    CHECK(r.row_to_col == id);
    CHECK(r.total == k);
  }
}

TEST_CASE("random 6x6 integer matrices match all 720 permutations") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> value(0, 9);
  for (int t = 0; t < 200; ++t) {
    Eigen::MatrixXd p(6, 6);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = value(rng);
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1;
    std::vector<int> best_perm;
    do {
      double total = 0;
      for (int i = 0; i < 6; ++i) total += p(i, perm[static_cast<std::size_t>(i)]);
      if (total > best) {  // first hit in lexicographic order wins ties
        best = total;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto r = hungarian_max_assignment(p);
    CHECK(r.total == best);
    double check = 0;
    for (int i = 0; i < 6; ++i) check += p(i, r.row_to_col[static_cast<std::size_t>(i)]);
    CHECK(check == best);
    // Ties resolve to the lexicographically smallest optimal mapping.
    CHECK(std::equal(best_perm.begin(), best_perm.end(), r.row_to_col.begin()));
  }
}

TEST_CASE("rectangular matrices match exactly min(rows, cols) rows") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> value(0, 1);
  for (auto [rows, cols] : {std::pair{2, 5}, std::pair{5, 2}, std::pair{1, 4}, std::pair{4, 1}}) {
    Eigen::MatrixXd p(rows, cols);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = value(rng);
    const auto r = hungarian_max_assignment(p);
    REQUIRE(r.row_to_col.size() == static_cast<std::size_t>(rows));
    const auto matched = std::count_if(r.row_to_col.begin(), r.row_to_col.end(), [](auto c) { return c >= 0; });
    CHECK(matched == std::min(rows, cols));
    std::vector<Eigen::Index> cols_used;
    for (auto c : r.row_to_col) {
      if (c >= 0) cols_used.push_back(c);
    }
    std::sort(cols_used.begin(), cols_used.end());
    CHECK(std::adjacent_find(cols_used.begin(), cols_used.end()) == cols_used.end());
  }
}

TEST_CASE("all-equal profits pick the identity") {
  const auto r = hungarian_max_assignment(Eigen::MatrixXd::Constant(4, 4, 2.5));
  CHECK(r.row_to_col == std::vector<Eigen::Index>{0, 1, 2, 3});
  CHECK(r.total == 10.0);
}

TEST_CASE("invalid input") {
  CHECK_THROWS_AS(hungarian_max_assignment(Eigen::MatrixXd(0, 3)), std::invalid_argument);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2);
  p(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(hungarian_max_assignment(p), std::invalid_argument);
}
