#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "appclass/channel_id.hpp"
#include "appclass/corpus.hpp"
#include "appclass/svm.hpp"
#include "appclass/textproc.hpp"

namespace appclass::channels {

using corpus::AppRecord;
using corpus::DetectionBox;
using corpus::EvidenceBundle;

/// A channel vote; `prediction` is nullopt when the channel abstains.
struct ChannelPrediction {
  ChannelId channel = ChannelId::text;
  std::optional<std::string> prediction;
  std::optional<std::vector<double>> scores;

  bool abstained() const { return !prediction.has_value(); }
  bool operator==(const ChannelPrediction&) const = default;
};

/// Identity map over the configured categories.
LabelMap identity_label_map(std::span<const std::string> categories);

/// Tokens for the text, ocr or caption channel; nullopt (abstain) when the
/// evidence is missing or tokenizes to nothing. OCR texts and captions are
/// concatenated in the app's image order.
std::optional<textproc::Tokens> build_channel_document(const AppRecord& app,
                                                       const EvidenceBundle& bundle,
                                                       ChannelId channel);

/// Winning category of one image and how many of its boxes carry it.
struct ImageLabel {
  std::string category;
  std::size_t box_count = 0;

  bool operator==(const ImageLabel&) const = default;
};

/// Category with the most boxes after mapping through `label_map`; ties go
/// to the larger confidence sum, then the lexicographically smaller
/// category. Boxes with unmapped labels are ignored. nullopt when no box
/// survives.
std::optional<ImageLabel> detect_image_label(std::span<const DetectionBox> boxes,
                                             const LabelMap& label_map);

/// Category chosen by the most images. Ties go to the larger total backing
/// box count, then the lexicographically smaller category. nullopt
/// (abstain) when no image has a label.
std::optional<std::string> detect_app_label(std::span<const std::optional<ImageLabel>> image_labels);

/// Component-wise running mean; nullopt for no vectors. Throws
/// ValidationError on mismatched dimensionality.
std::optional<DenseVector> embed_average(std::span<const DenseVector> vectors);

/// Per-image embeddings of an app in image order.
std::vector<DenseVector> app_embeddings(const AppRecord& app, const EvidenceBundle& bundle);

struct ChannelConfig {
  std::vector<std::string> categories;
  LabelMap label_map;
  textproc::FeaturizerOptions features;
  svm::TrainConfig svm;
  /// When non-empty, C is picked by cross-validated grid search.
  std::vector<double> c_grid;
  std::size_t cv_folds = 5;
};

/// Trained model for one channel. Detection is rule-based and carries only
/// the label map; every other channel carries a linear classifier.
struct ChannelModel {
  ChannelId channel = ChannelId::text;
  LabelMap label_map;
  std::optional<svm::MultiClassModel> classifier;
};

/// Throws InsufficientEvidence when no training app has evidence for the
/// channel, ValidationError when a training app lacks a gold category.
ChannelModel train_channel(const corpus::Dataset& train, ChannelId channel,
                           const ChannelConfig& cfg);

ChannelPrediction predict_channel(const ChannelModel& model, const AppRecord& app,
                                  const EvidenceBundle& bundle);

inline constexpr int kChannelFormatVersion = 1;

nlohmann::json to_json(const ChannelModel& model);
/// Throws ValidationError on malformed documents or newer versions.
ChannelModel channel_model_from_json(const nlohmann::json& doc);

}  // namespace appclass::channels
