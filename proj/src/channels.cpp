#include "appclass/channels.hpp"

#include <algorithm>
#include <map>

#include "appclass/error.hpp"

namespace appclass::channels {

using nlohmann::json;

LabelMap identity_label_map(std::span<const std::string> categories) {
  LabelMap map;
  for (const auto& c : categories) map.emplace(c, c);
  return map;
}

std::optional<textproc::Tokens> build_channel_document(const AppRecord& app,
                                                       const EvidenceBundle& bundle,
                                                       ChannelId channel) {
  std::string text;
  switch (channel) {
    case ChannelId::text:
      text = app.description;
      break;
    case ChannelId::ocr:
      for (const auto& image : app.image_ids)
        if (auto it = bundle.ocr_texts.find(image); it != bundle.ocr_texts.end()) {
          text += it->second;
          text += ' ';
        }
      break;
    case ChannelId::caption:
      for (const auto& image : app.image_ids)
        if (auto it = bundle.captions.find(image); it != bundle.captions.end()) {
          text += it->second.text;
          text += ' ';
        }
      break;
    case ChannelId::detection:
    case ChannelId::embedding:
      throw std::invalid_argument("channel " + std::string(to_string(channel)) +
                                  " has no text document");
  }
  auto tokens = textproc::tokenize(text);
  if (tokens.empty()) return std::nullopt;
  return tokens;
}

std::optional<ImageLabel> detect_image_label(std::span<const DetectionBox> boxes,
                                             const LabelMap& label_map) {
  std::map<std::string, std::vector<double>> confidences;
  for (const auto& box : boxes)
    if (auto it = label_map.find(box.label); it != label_map.end())
      confidences[it->second].push_back(box.confidence);
  if (confidences.empty()) return std::nullopt;

  const std::string* best = nullptr;
  std::size_t best_count = 0;
  double best_sum = 0.0;
  // std::map iterates lexicographically, so strict comparisons keep the
  // smaller category on a full tie.
  for (auto& [category, confs] : confidences) {
    // Summing in sorted order makes the sum independent of box order.
    std::sort(confs.begin(), confs.end());
    double sum = 0.0;
    for (double c : confs) sum += c;
    if (!best || confs.size() > best_count || (confs.size() == best_count && sum > best_sum)) {
      best = &category;
      best_count = confs.size();
      best_sum = sum;
    }
  }
  return ImageLabel{*best, best_count};
}

std::optional<std::string> detect_app_label(std::span<const std::optional<ImageLabel>> image_labels) {
  struct Tally {
    std::size_t images = 0;
    std::size_t boxes = 0;
  };
  std::map<std::string, Tally> tally;
  for (const auto& label : image_labels) {
    if (!label) continue;
    auto& t = tally[label->category];
    ++t.images;
    t.boxes += label->box_count;
  }
  const std::string* best = nullptr;
  Tally best_tally;
  for (const auto& [category, t] : tally) {
    if (!best || t.images > best_tally.images ||
        (t.images == best_tally.images && t.boxes > best_tally.boxes)) {
      best = &category;
      best_tally = t;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

std::optional<DenseVector> embed_average(std::span<const DenseVector> vectors) {
  if (vectors.empty()) return std::nullopt;
  DenseVector mean = vectors.front();
  for (std::size_t k = 1; k < vectors.size(); ++k) {
    if (vectors[k].size() != mean.size())
      throw ValidationError("embedding dimensionality mismatch: " + std::to_string(vectors[k].size()) +
                            " vs " + std::to_string(mean.size()));
    const double n = static_cast<double>(k + 1);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += (vectors[k][d] - mean[d]) / n;
  }
  return mean;
}

std::vector<DenseVector> app_embeddings(const AppRecord& app, const EvidenceBundle& bundle) {
  std::vector<DenseVector> out;
  for (const auto& image : app.image_ids)
    if (auto it = bundle.embeddings.find(image); it != bundle.embeddings.end())
      out.push_back(it->second);
  return out;
}

namespace {

std::vector<std::optional<ImageLabel>> image_labels(const AppRecord& app, const EvidenceBundle& bundle,
                                                    const LabelMap& label_map) {
  std::vector<std::optional<ImageLabel>> labels;
  for (const auto& image : app.image_ids) {
    auto it = bundle.detections.find(image);
    if (it == bundle.detections.end())
      labels.emplace_back();
    else
      labels.push_back(detect_image_label(it->second, label_map));
  }
  return labels;
}

}  // namespace

ChannelModel train_channel(const corpus::Dataset& train, ChannelId channel,
                           const ChannelConfig& cfg) {
  ChannelModel model;
  model.channel = channel;
  model.label_map = cfg.label_map.empty() ? identity_label_map(cfg.categories) : cfg.label_map;
  for (const auto& [label, category] : model.label_map)
    if (std::find(cfg.categories.begin(), cfg.categories.end(), category) == cfg.categories.end())
      throw ValidationError("label map sends '" + label + "' to unknown category '" + category + "'");
  if (channel == ChannelId::detection) return model;

  std::vector<std::string> categories = cfg.categories;
  std::sort(categories.begin(), categories.end());
  std::vector<std::string> labels;
  std::vector<textproc::SparseVector> features;
  std::size_t dimension = 0;

  auto gold = [&](const AppRecord& app) -> const std::string& {
    if (!app.category) throw ValidationError("training app " + app.app_id + " has no category");
    return *app.category;
  };

  std::optional<textproc::TextFeaturizer> featurizer;
  if (channel == ChannelId::embedding) {
    for (const auto& app : train.apps()) {
      auto mean = embed_average(app_embeddings(app, train.bundle(app.app_id)));
      if (!mean) continue;
      if (!features.empty() && mean->size() != dimension)
        throw ValidationError("embedding dimensionality mismatch in training data");
      dimension = mean->size();
      features.push_back(textproc::SparseVector::from_dense(*mean));
      labels.push_back(gold(app));
    }
  } else {
    std::vector<textproc::Tokens> documents;
    std::vector<std::size_t> label_index;
    for (const auto& app : train.apps()) {
      auto doc = build_channel_document(app, train.bundle(app.app_id), channel);
      if (!doc) continue;
      const auto& category = gold(app);
      auto it = std::lower_bound(categories.begin(), categories.end(), category);
      if (it == categories.end() || *it != category)
        throw ValidationError("training label outside the category set: " + category);
      documents.push_back(std::move(*doc));
      labels.push_back(category);
      label_index.push_back(static_cast<std::size_t>(it - categories.begin()));
    }
    if (!documents.empty()) {
      featurizer = textproc::fit_featurizer(documents, label_index, categories, cfg.features);
      dimension = featurizer->dimension();
      for (const auto& doc : documents) features.push_back(featurizer->transform(doc));
    }
  }
  if (features.empty())
    throw InsufficientEvidence("no training app has evidence for channel " +
                               std::string(to_string(channel)));

  svm::TrainConfig svm_cfg = cfg.svm;
  if (!cfg.c_grid.empty() && features.size() >= cfg.cv_folds)
    svm_cfg.C = svm::grid_search(features, labels, categories, dimension, cfg.c_grid, cfg.cv_folds,
                                 cfg.svm)
                    .best_c;
  model.classifier = svm::train_ovr(features, labels, categories, dimension, svm_cfg);
  model.classifier->text_features = std::move(featurizer);
  return model;
}

ChannelPrediction predict_channel(const ChannelModel& model, const AppRecord& app,
                                  const EvidenceBundle& bundle) {
  ChannelPrediction out;
  out.channel = model.channel;
  switch (model.channel) {
    case ChannelId::detection: {
      const auto labels = image_labels(app, bundle, model.label_map);
      out.prediction = detect_app_label(labels);
      return out;
    }
    case ChannelId::embedding: {
      auto mean = embed_average(app_embeddings(app, bundle));
      if (!mean) return out;
      if (!model.classifier) throw std::logic_error("embedding channel model without classifier");
      if (mean->size() != model.classifier->dimension)
        throw ValidationError("embedding dimensionality differs from the trained model");
      auto p = svm::predict(*model.classifier, textproc::SparseVector::from_dense(*mean));
      out.prediction = std::move(p.category);
      out.scores = std::move(p.scores);
      return out;
    }
    case ChannelId::text:
    case ChannelId::ocr:
    case ChannelId::caption: {
      auto doc = build_channel_document(app, bundle, model.channel);
      if (!doc) return out;
      if (!model.classifier || !model.classifier->text_features)
        throw std::logic_error("text channel model without featurizer");
      auto p = svm::predict(*model.classifier, model.classifier->text_features->transform(*doc));
      out.prediction = std::move(p.category);
      out.scores = std::move(p.scores);
      return out;
    }
  }
  return out;
}

json to_json(const ChannelModel& model) {
  json doc;
  doc["format_version"] = kChannelFormatVersion;
  doc["channel"] = std::string(to_string(model.channel));
  doc["label_map"] = model.label_map;
  doc["classifier"] = model.classifier ? svm::to_json(*model.classifier) : json(nullptr);
  return doc;
}

ChannelModel channel_model_from_json(const json& doc) {
  try {
    const int version = doc.at("format_version").get<int>();
    if (version > kChannelFormatVersion)
      throw ValidationError("channel model format version " + std::to_string(version) +
                            " is newer than supported version " +
                            std::to_string(kChannelFormatVersion));
    ChannelModel model;
    const auto name = doc.at("channel").get<std::string>();
    auto id = parse_channel(name);
    if (!id) throw ValidationError("unknown channel in model document: " + name);
    model.channel = *id;
    model.label_map = doc.at("label_map").get<LabelMap>();
    if (const auto& c = doc.at("classifier"); !c.is_null()) model.classifier = svm::model_from_json(c);
    if (model.channel != ChannelId::detection && !model.classifier)
      throw ValidationError("channel " + name + " model lacks a classifier");
    if (model.classifier && (model.channel == ChannelId::embedding) == model.classifier->text_features.has_value())
      throw ValidationError("channel " + name + " model has the wrong feature type");
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed channel model document: ") + e.what());
  }
}

}  // namespace appclass::channels
