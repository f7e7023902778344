#include "appclass/svm.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>

#include "appclass/error.hpp"
#include "appclass/eval.hpp"
#include "appclass/io.hpp"

namespace appclass::svm {

using nlohmann::json;

void validate(const TrainConfig& cfg) {
  if (!(cfg.C > 0.0)) throw ValidationError("svm C must be positive");
  if (!(cfg.tolerance > 0.0)) throw ValidationError("svm tolerance must be positive");
  if (cfg.max_epochs == 0) throw ValidationError("svm max_epochs must be at least 1");
}

double primal_objective(const BinaryModel& model, std::span<const SparseVector> x,
                        std::span<const int> y, double c) {
  double norm2 = 0.0;
  for (double w : model.weights) norm2 += w * w;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    loss += std::max(0.0, 1.0 - y[i] * model.decision(x[i]));
  return 0.5 * norm2 + c * loss;
}

namespace {

double dual_objective(const BinaryModel& model, std::span<const double> alpha) {
  double norm2 = 0.0;
  for (double w : model.weights) norm2 += w * w;
  return std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * norm2;
}

constexpr double kViolationFloor = 1e-12;

double sparse_dot(const SparseVector& a, const SparseVector& b) {
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ea.size() && j < eb.size()) {
    if (ea[i].index < eb[j].index) ++i;
    else if (eb[j].index < ea[i].index) ++j;
    else sum += ea[i++].value * eb[j++].value;
  }
  return sum;
}

void check_inputs(std::span<const SparseVector> x, std::span<const int> y, std::size_t dimension) {
  if (x.empty()) throw ValidationError("empty training set");
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  for (int label : y)
    if (label != 1 && label != -1) throw std::invalid_argument("labels must be +1 or -1");
  for (const auto& row : x)
    if (!row.empty() && row.entries().back().index >= dimension)
      throw std::invalid_argument("feature index outside the model dimension");
}

struct Recorder {
  std::span<const SparseVector> x;
  std::span<const int> y;
  const TrainConfig& cfg;
  TrainTrace* trace;

  bool record(std::size_t epoch, const BinaryModel& model, std::span<const double> alpha, bool optimal) {
    const double primal = primal_objective(model, x, y, cfg.C);
    const double dual = dual_objective(model, alpha);
    const bool done = optimal || primal - dual <= cfg.tolerance * std::max(primal, 1e-300);
    if (trace) {
      trace->epochs.push_back({epoch, primal, dual});
      trace->converged = done;
    }
    return done;
  }
};

// Bias from the KKT conditions given gradients g[k] = y_k (w.x_k) - 1.
double kkt_bias(std::span<const int> y, std::span<const double> alpha, std::span<const double> g, double c) {
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -ub;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const double yg = y[k] * g[k];
    if (alpha[k] >= c) {
      if (y[k] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[k] <= 0.0) {
      if (y[k] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  double r;
  if (free_count > 0) r = free_sum / static_cast<double>(free_count);
  else if (std::isfinite(ub) && std::isfinite(lb)) r = 0.5 * (ub + lb);
  else if (std::isfinite(ub)) r = ub;
  else r = lb;
  return -r;
}

BinaryModel train_with_intercept(std::span<const SparseVector> x, std::span<const int> y,
                                 std::size_t dimension, const TrainConfig& cfg, Recorder& rec) {
  const double c = cfg.C;
  const std::size_t n = x.size();
  BinaryModel model;
  model.weights.assign(dimension, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> g(n, -1.0);
  std::vector<double> sq(n);
  for (std::size_t k = 0; k < n; ++k) sq[k] = x[k].squared_norm();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    bool optimal = false;
    for (std::size_t step = 0; step < n; ++step) {
      std::size_t i = n, j = n;
      double m = -std::numeric_limits<double>::infinity();
      double big_m = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) {
        const double v = -y[k] * g[k];
        const bool up = (y[k] == 1 && alpha[k] < c) || (y[k] == -1 && alpha[k] > 0.0);
        const bool low = (y[k] == -1 && alpha[k] < c) || (y[k] == 1 && alpha[k] > 0.0);
        if (up && v > m) m = v, i = k;
        if (low && v < big_m) big_m = v, j = k;
      }
      if (i == n || j == n || m - big_m <= kViolationFloor) {
        optimal = true;
        break;
      }
      double curvature = sq[i] + sq[j] - 2.0 * sparse_dot(x[i], x[j]);
      if (curvature <= 0.0) curvature = 1e-12;
      double t = (m - big_m) / curvature;
      t = std::min(t, y[i] == 1 ? c - alpha[i] : alpha[i]);
      t = std::min(t, y[j] == 1 ? alpha[j] : c - alpha[j]);
      if (!(t > 0.0)) {
        optimal = true;
        break;
      }
      alpha[i] = std::clamp(alpha[i] + y[i] * t, 0.0, c);
      alpha[j] = std::clamp(alpha[j] - y[j] * t, 0.0, c);
      for (const auto& e : x[i].entries()) model.weights[e.index] += t * e.value;
      for (const auto& e : x[j].entries()) model.weights[e.index] -= t * e.value;
      for (std::size_t k = 0; k < n; ++k) g[k] = y[k] * x[k].dot(model.weights) - 1.0;
    }
    model.bias = kkt_bias(y, alpha, g, c);
    if (rec.record(epoch, model, alpha, optimal)) break;
  }
  return model;
}

BinaryModel train_without_intercept(std::span<const SparseVector> x, std::span<const int> y,
                                    std::size_t dimension, const TrainConfig& cfg, Recorder& rec) {
  const double c = cfg.C;
  const std::size_t n = x.size();
  BinaryModel model;
  model.weights.assign(dimension, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = x[i].squared_norm();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    io::shuffle(order, rng);
    bool moved = false;
    for (auto i : order) {
      const double yi = y[i];
      const double grad = yi * model.decision(x[i]) - 1.0;
      double projected = grad;
      if (alpha[i] <= 0.0)
        projected = std::min(grad, 0.0);
      else if (alpha[i] >= c)
        projected = std::max(grad, 0.0);
      if (projected == 0.0) continue;

      double updated;
      if (diag[i] > 0.0)
        updated = std::clamp(alpha[i] - grad / diag[i], 0.0, c);
      else
        updated = grad < 0.0 ? c : 0.0;
      const double step = (updated - alpha[i]) * yi;
      if (step == 0.0) continue;
      moved = true;
      alpha[i] = updated;
      for (const auto& e : x[i].entries()) model.weights[e.index] += step * e.value;
    }
    if (rec.record(epoch, model, alpha, !moved)) break;
  }
  return model;
}

}  // namespace

BinaryModel train_binary(std::span<const SparseVector> x, std::span<const int> y,
                         std::size_t dimension, const TrainConfig& cfg, TrainTrace* trace) {
  validate(cfg);
  check_inputs(x, y, dimension);
  if (trace) *trace = TrainTrace{};
  Recorder rec{x, y, cfg, trace};
  return cfg.fit_intercept ? train_with_intercept(x, y, dimension, cfg, rec)
                           : train_without_intercept(x, y, dimension, cfg, rec);
}

std::size_t argmax_category(std::span<const double> scores, std::span<const std::string> categories) {
  if (scores.empty() || scores.size() != categories.size())
    throw std::invalid_argument("scores and categories must be non-empty and aligned");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best] || (scores[i] == scores[best] && categories[i] < categories[best]))
      best = i;
  }
  return best;
}

MultiClassModel train_ovr(std::span<const SparseVector> x, std::span<const std::string> labels,
                          std::vector<std::string> categories, std::size_t dimension,
                          const TrainConfig& cfg) {
  validate(cfg);
  if (x.empty()) throw ValidationError("empty training set");
  if (x.size() != labels.size()) throw std::invalid_argument("x and labels differ in length");
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
  if (categories.empty()) throw ValidationError("no categories to train");
  for (const auto& label : labels)
    if (!std::binary_search(categories.begin(), categories.end(), label))
      throw ValidationError("training label outside the category set: " + label);

  MultiClassModel model;
  model.categories = categories;
  model.dimension = dimension;
  model.config = cfg;

  std::vector<std::future<BinaryModel>> jobs;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    jobs.push_back(std::async(std::launch::async, [&, c] {
      std::vector<int> y(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == categories[c] ? 1 : -1;
      TrainConfig binary_cfg = cfg;
      binary_cfg.seed = cfg.seed + c;
      return train_binary(x, y, dimension, binary_cfg);
    }));
  }
  for (auto& job : jobs) model.models.push_back(job.get());
  return model;
}

Prediction predict(const MultiClassModel& model, const SparseVector& x) {
  Prediction p;
  p.scores.reserve(model.models.size());
  for (const auto& m : model.models) p.scores.push_back(m.decision(x));
  p.category = model.categories[argmax_category(p.scores, model.categories)];
  return p;
}

GridSearchResult grid_search(std::span<const SparseVector> x, std::span<const std::string> labels,
                             const std::vector<std::string>& categories, std::size_t dimension,
                             std::span<const double> c_grid, std::size_t folds,
                             const TrainConfig& base) {
  if (c_grid.empty()) throw ValidationError("empty C grid");
  if (folds < 2) throw ValidationError("grid search needs at least 2 folds");
  if (x.size() < folds) throw ValidationError("fewer training examples than folds");
  if (x.size() != labels.size()) throw std::invalid_argument("x and labels differ in length");

  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(base.seed);
  io::shuffle(order, rng);
  std::vector<std::size_t> fold_of(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) fold_of[order[i]] = i % folds;

  GridSearchResult result;
  double best_score = -1.0;
  std::vector<double> grid(c_grid.begin(), c_grid.end());
  std::sort(grid.begin(), grid.end());
  for (double c : grid) {
    TrainConfig cfg = base;
    cfg.C = c;
    std::vector<eval::Predicted> predicted(x.size());
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<SparseVector> train_x;
      std::vector<std::string> train_y;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (fold_of[i] == f) continue;
        train_x.push_back(x[i]);
        train_y.push_back(labels[i]);
      }
      const auto model = train_ovr(train_x, train_y, categories, dimension, cfg);
      for (std::size_t i = 0; i < x.size(); ++i)
        if (fold_of[i] == f) predicted[i] = predict(model, x[i]).category;
    }
    std::vector<std::string> sorted_categories = categories;
    std::sort(sorted_categories.begin(), sorted_categories.end());
    const double score = eval::macro_f1(labels, predicted, sorted_categories);
    result.scores.emplace_back(c, score);
    if (score > best_score) {
      best_score = score;
      result.best_c = c;
    }
  }
  return result;
}

json to_json(const TrainConfig& cfg) {
  return json{{"C", cfg.C},
              {"gamma", cfg.gamma},
              {"tolerance", cfg.tolerance},
              {"max_epochs", cfg.max_epochs},
              {"seed", cfg.seed},
              {"fit_intercept", cfg.fit_intercept}};
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig cfg;
  cfg.C = doc.at("C").get<double>();
  cfg.gamma = doc.at("gamma").get<double>();
  cfg.tolerance = doc.at("tolerance").get<double>();
  cfg.max_epochs = doc.at("max_epochs").get<std::size_t>();
  cfg.seed = doc.at("seed").get<std::uint64_t>();
  cfg.fit_intercept = doc.at("fit_intercept").get<bool>();
  return cfg;
}

json to_json(const MultiClassModel& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = "one_vs_rest_linear_svm";
  doc["categories"] = model.categories;
  doc["dimension"] = model.dimension;
  if (model.text_features) {
    const auto& f = *model.text_features;
    json features;
    features["type"] = "tfidf";
    features["vocabulary"] = f.vocab.terms();
    features["document_frequency"] = f.vocab.document_frequency();
    features["corpus_size"] = f.corpus_size;
    features["idf"] = f.idf;
    features["mask"] = {{"k", f.mask.k}, {"selected", f.mask.selected}};
    doc["features"] = std::move(features);
  } else {
    doc["features"] = {{"type", "dense"}};
  }
  json binaries = json::array();
  for (std::size_t c = 0; c < model.categories.size(); ++c)
    binaries.push_back({{"category", model.categories[c]},
                        {"weights", model.models[c].weights},
                        {"bias", model.models[c].bias}});
  doc["models"] = std::move(binaries);
  doc["train_config"] = to_json(model.config);
  return doc;
}

MultiClassModel model_from_json(const json& doc) {
  try {
    const int version = doc.at("format_version").get<int>();
    if (version > kModelFormatVersion)
      throw ValidationError("model format version " + std::to_string(version) +
                            " is newer than supported version " +
                            std::to_string(kModelFormatVersion));
    if (version < 1) throw ValidationError("invalid model format version");

    MultiClassModel model;
    model.categories = doc.at("categories").get<std::vector<std::string>>();
    model.dimension = doc.at("dimension").get<std::size_t>();
    const auto& features = doc.at("features");
    if (features.at("type") == "tfidf") {
      textproc::TextFeaturizer f;
      f.vocab = textproc::Vocabulary::from_terms(
          features.at("vocabulary").get<std::vector<std::string>>(),
          features.at("document_frequency").get<std::vector<std::size_t>>());
      f.corpus_size = features.at("corpus_size").get<std::size_t>();
      f.idf = features.at("idf").get<std::vector<double>>();
      f.mask.k = features.at("mask").at("k").get<std::size_t>();
      f.mask.selected = features.at("mask").at("selected").get<std::vector<std::size_t>>();
      if (f.idf.size() != f.vocab.size()) throw ValidationError("idf table size mismatch");
      if (f.mask.selected.size() != model.dimension) throw ValidationError("mask size mismatch");
      for (std::size_t i = 0; i < f.mask.selected.size(); ++i)
        if (f.mask.selected[i] >= f.vocab.size() || (i && f.mask.selected[i] <= f.mask.selected[i - 1]))
          throw ValidationError("feature mask is not a strictly increasing vocabulary subset");
      model.text_features = std::move(f);
    } else if (features.at("type") != "dense") {
      throw ValidationError("unknown feature type in model document");
    }
    const auto& binaries = doc.at("models");
    if (binaries.size() != model.categories.size())
      throw ValidationError("model document needs exactly one binary model per category");
    for (std::size_t c = 0; c < binaries.size(); ++c) {
      if (binaries[c].at("category").get<std::string>() != model.categories[c])
        throw ValidationError("binary models are not aligned with categories");
      BinaryModel m;
      m.weights = binaries[c].at("weights").get<std::vector<double>>();
      m.bias = binaries[c].at("bias").get<double>();
      if (m.weights.size() != model.dimension) throw ValidationError("weight dimension mismatch");
      model.models.push_back(std::move(m));
    }
    model.config = train_config_from_json(doc.at("train_config"));
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace appclass::svm
