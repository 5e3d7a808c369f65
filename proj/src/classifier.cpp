#include "intentbench/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>

#include "intentbench/error.hpp"

namespace intentbench {

namespace {

Eigen::MatrixXd with_bias(const Eigen::MatrixXd& features) {
  Eigen::MatrixXd augmented(features.rows(), features.cols() + 1);
  augmented.leftCols(features.cols()) = features;
  augmented.col(features.cols()).setOnes();
  return augmented;
}

// Row-wise softmax in place, shifted by the row max.
void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - top).exp().matrix();
    logits.row(i) /= logits.row(i).sum();
  }
}

ObjectiveValue objective_augmented(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& augmented,
                                   std::span<const int> targets, double l2_lambda) {
  const Eigen::Index n = augmented.rows();
  const Eigen::Index d = augmented.cols() - 1;
  Eigen::MatrixXd logits = augmented * weights.transpose();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = logits.row(i).maxCoeff();
    const double log_norm = top + std::log((logits.row(i).array() - top).exp().sum());
    loss += log_norm - logits(i, targets[static_cast<std::size_t>(i)]);
  }
  softmax_rows(logits);
  for (Eigen::Index i = 0; i < n; ++i) logits(i, targets[static_cast<std::size_t>(i)]) -= 1.0;

  ObjectiveValue out;
  const double inv_n = 1.0 / static_cast<double>(n);
  out.gradient = inv_n * logits.transpose() * augmented;
  out.gradient.leftCols(d) += l2_lambda * weights.leftCols(d);
  out.value = loss * inv_n + 0.5 * l2_lambda * weights.leftCols(d).squaredNorm();
  return out;
}

void center_bias(Eigen::MatrixXd& weights) {
  auto bias = weights.col(weights.cols() - 1);
  bias.array() -= bias.mean();
}

double dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a.array() * b.array()).sum(); }

}  // namespace

ObjectiveValue softmax_objective(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                                 std::span<const int> targets, double l2_lambda) {
  if (weights.cols() != features.cols() + 1) throw std::invalid_argument("softmax_objective: shape mismatch");
  if (static_cast<Eigen::Index>(targets.size()) != features.rows()) {
    throw std::invalid_argument("softmax_objective: target count mismatch");
  }
  return objective_augmented(weights, with_bias(features), targets, l2_lambda);
}

LogisticModel train(const Eigen::MatrixXd& features, std::span<const std::string> labels,
                    const ClassifierConfig& config, const std::optional<Eigen::MatrixXd>& initial_weights) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw DataError("classifier: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(features.rows()) + " feature rows");
  }
  if (!features.allFinite()) throw DataError("classifier: non-finite features");
  if (config.l2_lambda < 0 || config.max_iter < 0 || config.memory < 1) {
    throw ConfigError("classifier: lambda must be non-negative, max_iter non-negative, memory positive");
  }

  LogisticModel model;
  model.l2_lambda = config.l2_lambda;
  std::unordered_map<std::string, int> class_index;
  std::vector<int> targets;
  targets.reserve(labels.size());
  for (const auto& label : labels) {
    if (label.empty()) throw DataError("classifier: empty class label");
    auto [it, inserted] = class_index.try_emplace(label, static_cast<int>(model.classes.size()));
    if (inserted) model.classes.push_back(label);
    targets.push_back(it->second);
  }
  if (model.classes.size() < 2) {
    throw DataError("classifier: need at least two classes, got " + std::to_string(model.classes.size()));
  }

  const auto k = static_cast<Eigen::Index>(model.classes.size());
  const Eigen::MatrixXd augmented = with_bias(features);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(k, augmented.cols());
  if (initial_weights) {
    if (initial_weights->rows() != k || initial_weights->cols() != augmented.cols()) {
      throw std::invalid_argument("classifier: initial weights have the wrong shape");
    }
    weights = *initial_weights;
  }
  center_bias(weights);

  auto current = objective_augmented(weights, augmented, targets, config.l2_lambda);
  std::deque<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> memory;  // (step, gradient change)
  int iter = 0;
  bool converged = current.gradient.cwiseAbs().maxCoeff() < config.tol;
  while (!converged && iter < config.max_iter) {
    // Two-loop recursion.
    Eigen::MatrixXd q = current.gradient;
    std::vector<double> alpha(memory.size());
    for (std::size_t m = memory.size(); m-- > 0;) {
      const auto& [s, y] = memory[m];
      alpha[m] = dot(s, q) / dot(y, s);
      q -= alpha[m] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= dot(s, y) / dot(y, y);
    } else {
      q /= std::max(1.0, current.gradient.norm());
    }
    for (std::size_t m = 0; m < memory.size(); ++m) {
      const auto& [s, y] = memory[m];
      const double beta = dot(y, q) / dot(y, s);
      q += (alpha[m] - beta) * s;
    }
    Eigen::MatrixXd direction = -q;
    double slope = dot(current.gradient, direction);
    if (!(slope < 0)) {
      memory.clear();
      direction = -current.gradient / std::max(1.0, current.gradient.norm());
      slope = dot(current.gradient, direction);
    }

    // Armijo backtracking.
    double step = 1.0;
    ObjectiveValue next;
    Eigen::MatrixXd candidate;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      candidate = weights + step * direction;
      next = objective_augmented(candidate, augmented, targets, config.l2_lambda);
      // A few ulps of slack so steps near the optimum, where the decrease is below rounding, still count.
      const double noise = 8 * std::numeric_limits<double>::epsilon() * std::abs(current.value);
      if (std::isfinite(next.value) && next.value <= current.value + 1e-4 * step * slope + noise) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iter;
    if (!accepted) break;

    Eigen::MatrixXd s = candidate - weights;
    Eigen::MatrixXd y = next.gradient - current.gradient;
    const double sy = dot(s, y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > config.memory) memory.pop_front();
    }
    weights = std::move(candidate);
    current = std::move(next);
    converged = current.gradient.cwiseAbs().maxCoeff() < config.tol;
  }

  model.weights = std::move(weights);
  model.converged = converged;
  model.n_iter = iter;
  return model;
}

Prediction predict(const LogisticModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.dim()) {
    throw DataError("classifier: feature dimension " + std::to_string(features.cols()) + " does not match model " +
                    std::to_string(model.dim()));
  }
  Prediction out;
  out.probabilities = with_bias(features) * model.weights.transpose();
  softmax_rows(out.probabilities);
  out.labels.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < out.probabilities.cols(); ++c) {
      if (out.probabilities(i, c) > out.probabilities(i, best)) best = c;
    }
    out.class_index.push_back(static_cast<int>(best));
    out.labels.push_back(model.classes[static_cast<std::size_t>(best)]);
  }
  return out;
}

nlohmann::ordered_json to_json(const LogisticModel& model) {
  nlohmann::ordered_json out;
  out["classes"] = model.classes;
  out["dim"] = model.dim();
  out["l2_lambda"] = model.l2_lambda;
  out["converged"] = model.converged;
  out["n_iter"] = model.n_iter;
  auto& flat = out["weights"] = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c) flat.push_back(model.weights(r, c));
  }
  return out;
}

LogisticModel model_from_json(const nlohmann::json& json) {
  try {
    LogisticModel model;
    model.classes = json.at("classes").get<std::vector<std::string>>();
    const auto dim = json.at("dim").get<Eigen::Index>();
    model.l2_lambda = json.at("l2_lambda").get<double>();
    model.converged = json.at("converged").get<bool>();
    model.n_iter = json.at("n_iter").get<int>();
    const auto flat = json.at("weights").get<std::vector<double>>();
    const auto k = static_cast<Eigen::Index>(model.classes.size());
    if (static_cast<Eigen::Index>(flat.size()) != k * (dim + 1)) throw DataError("weight count does not match shape");
    model.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), k, dim + 1);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed classifier model: ") + e.what());
  }
}

Eigen::MatrixXd normalize_rows(Eigen::MatrixXd matrix, std::span<const std::string> ids) {
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    const double norm = matrix.row(i).norm();
    if (norm == 0.0) {
      const std::string id = static_cast<std::size_t>(i) < ids.size() ? ids[static_cast<std::size_t>(i)] : std::to_string(i);
      throw DataError("cannot normalize zero vector \"" + id + "\"");
    }
    matrix.row(i) /= norm;
  }
  return matrix;
}

PropagationResult propagate_noise_labels(const ClusterAssignment& assignment, const EmbeddingStore& store,
                                         const PropagationConfig& config) {
  PropagationResult result{assignment, 0, {}};
  std::vector<std::string> train_ids, train_labels, noise_ids;
  for (const auto& [id, label] : assignment.entries) {
    if (label == kNoiseLabel) {
      noise_ids.push_back(id);
    } else {
      train_ids.push_back(id);
      train_labels.push_back(label);
    }
  }
  if (noise_ids.empty()) {
    result.warnings.push_back("assignment has no noise instances; returned unchanged");
    return result;
  }
  std::vector<std::string> distinct(train_labels);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    throw DataError("label propagation needs at least two non-noise clusters, found " +
                    std::to_string(distinct.size()));
  }

  Eigen::MatrixXd train_features = gather(store, train_ids);
  Eigen::MatrixXd noise_features = gather(store, noise_ids);
  if (config.normalize) {
    train_features = normalize_rows(std::move(train_features), train_ids);
    noise_features = normalize_rows(std::move(noise_features), noise_ids);
  }
  const auto model = train(train_features, train_labels, config.classifier);
  if (!model.converged) {
    result.warnings.push_back("classifier stopped after " + std::to_string(model.n_iter) +
                              " iterations without reaching the gradient tolerance");
  }
  const auto predicted = predict(model, noise_features);
  for (std::size_t i = 0; i < noise_ids.size(); ++i) result.assignment.entries[noise_ids[i]] = predicted.labels[i];
  result.propagated = noise_ids.size();
  return result;
}

}  // namespace intentbench
