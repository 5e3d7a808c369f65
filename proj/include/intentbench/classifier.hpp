#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "intentbench/embed_store.hpp"
#include "intentbench/metrics.hpp"

namespace intentbench {

struct ClassifierConfig {
  double l2_lambda = 1e-4;
  int max_iter = 1000;
  /// Convergence threshold on the gradient max-norm.
  double tol = 1e-6;
  /// L-BFGS memory.
  int memory = 10;
};

/// Multinomial logistic regression. Row k of `weights` holds class k's coefficients followed by
/// its bias.
struct LogisticModel {
  std::vector<std::string> classes;
  Eigen::MatrixXd weights;
  double l2_lambda = 0;
  bool converged = false;
  int n_iter = 0;

  Eigen::Index dim() const { return weights.cols() - 1; }
};

struct ObjectiveValue {
  double value = 0;
  Eigen::MatrixXd gradient;
};

/// Mean softmax cross-entropy plus (lambda / 2) * ||W||^2 over the non-bias columns.
/// `targets` holds class indices into the rows of `weights`.
ObjectiveValue softmax_objective(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                                 std::span<const int> targets, double l2_lambda);

/// Full-batch L-BFGS with Armijo backtracking; every accepted step lowers the objective.
/// Class order is first appearance in `labels`. Bias rows are kept centred (softmax is invariant
/// to a common bias shift), which makes the optimum unique for lambda > 0.
/// Throws DataError for fewer than two classes, mismatched sizes or non-finite features.
LogisticModel train(const Eigen::MatrixXd& features, std::span<const std::string> labels,
                    const ClassifierConfig& config = {},
                    const std::optional<Eigen::MatrixXd>& initial_weights = std::nullopt);

struct Prediction {
  std::vector<std::string> labels;
  std::vector<int> class_index;
  /// m x |classes|, rows sum to one.
  Eigen::MatrixXd probabilities;
};

/// Arg-max of the softmax per row; ties go to the lower class index.
Prediction predict(const LogisticModel& model, const Eigen::MatrixXd& features);

nlohmann::ordered_json to_json(const LogisticModel& model);
LogisticModel model_from_json(const nlohmann::json& json);

struct PropagationConfig {
  ClassifierConfig classifier;
  /// L2-normalize embeddings before training.
  bool normalize = true;
};

struct PropagationResult {
  ClusterAssignment assignment;
  std::size_t propagated = 0;
  std::vector<std::string> warnings;
};

/// Trains the classifier on non-noise entries (features = embeddings, labels = cluster ids) and
/// relabels every noise entry with its prediction. Non-noise entries are never changed. An input
/// without noise is returned as-is with a warning. Fewer than two non-noise clusters throws.
PropagationResult propagate_noise_labels(const ClusterAssignment& assignment, const EmbeddingStore& store,
                                         const PropagationConfig& config = {});

/// Rows scaled to unit norm. Throws DataError naming the first zero row.
Eigen::MatrixXd normalize_rows(Eigen::MatrixXd matrix, std::span<const std::string> ids);

}  // namespace intentbench
