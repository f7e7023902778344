#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "appclass/textproc.hpp"

namespace appclass::svm {

using textproc::SparseVector;

struct TrainConfig {
  double C = 1.0;
  /// Kept for configuration fidelity; the linear kernel has no gamma.
  double gamma = 0.001;
  /// Stop once (primal - dual) <= tolerance * primal.
  double tolerance = 1e-4;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 0;
  /// Learn an unregularized bias. When false the bias stays at 0.
  bool fit_intercept = true;

  bool operator==(const TrainConfig&) const = default;
};

/// Throws ValidationError unless C > 0, tolerance > 0 and max_epochs >= 1.
void validate(const TrainConfig& cfg);

struct BinaryModel {
  std::vector<double> weights;
  double bias = 0.0;

  double decision(const SparseVector& x) const { return x.dot(weights) + bias; }
  bool operator==(const BinaryModel&) const = default;
};

struct EpochStats {
  std::size_t epoch = 0;
  double primal = 0.0;
  double dual = 0.0;
};

struct TrainTrace {
  std::vector<EpochStats> epochs;
  bool converged = false;
};

/// (1/2)|w|^2 + C * sum(max(0, 1 - y (w.x + b))).
double primal_objective(const BinaryModel& model, std::span<const SparseVector> x,
                        std::span<const int> y, double c);

/// Hinge-loss linear SVM solved in the dual.
///
/// With an intercept the dual carries the constraint sum(alpha * y) = 0 and
/// is solved by maximal-violating-pair updates (SMO); the bias is read off
/// the KKT conditions (mean over free vectors, else the midpoint of the
/// feasible interval). Without an intercept each coordinate is minimized
/// exactly in a seeded random order. Either way every step maximizes the
/// dual along its direction, so the dual objective never decreases.
/// Training stops when (primal - dual) <= tolerance * primal at the end of
/// an epoch (n updates), when no update is possible, or after max_epochs.
/// Labels must be +1 or -1.
BinaryModel train_binary(std::span<const SparseVector> x, std::span<const int> y,
                         std::size_t dimension, const TrainConfig& cfg,
                         TrainTrace* trace = nullptr);

/// Index of the highest score; exact ties go to the lexicographically
/// smallest category name.
std::size_t argmax_category(std::span<const double> scores, std::span<const std::string> categories);

struct Prediction {
  std::string category;
  std::vector<double> scores;  // aligned with MultiClassModel::categories
};

/// One-vs-rest linear model. `text_features` is set for text channels; dense
/// inputs (embeddings) use the raw `dimension`-sized feature space.
struct MultiClassModel {
  std::vector<std::string> categories;
  std::vector<BinaryModel> models;
  std::size_t dimension = 0;
  std::optional<textproc::TextFeaturizer> text_features;
  TrainConfig config;
};

/// `labels[i]` must be one of `categories`. Categories are stored sorted.
MultiClassModel train_ovr(std::span<const SparseVector> x, std::span<const std::string> labels,
                          std::vector<std::string> categories, std::size_t dimension,
                          const TrainConfig& cfg);

Prediction predict(const MultiClassModel& model, const SparseVector& x);

struct GridSearchResult {
  double best_c = 0.0;
  std::vector<std::pair<double, double>> scores;  // (C, cross-validated macro F1)
};

/// k-fold cross-validated macro F1 for each C; ties go to the smallest C.
GridSearchResult grid_search(std::span<const SparseVector> x, std::span<const std::string> labels,
                             const std::vector<std::string>& categories, std::size_t dimension,
                             std::span<const double> c_grid, std::size_t folds,
                             const TrainConfig& base);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const MultiClassModel& model);
/// Throws ValidationError on a malformed document or a newer format version.
MultiClassModel model_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& doc);

}  // namespace appclass::svm
