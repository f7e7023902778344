#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "appclass/channel_id.hpp"

namespace appclass {

/// Object-detector label -> app category.
using LabelMap = std::map<std::string, std::string>;

using DenseVector = std::vector<double>;

}  // namespace appclass

namespace appclass::corpus {

struct AppRecord {
  std::string app_id;
  std::string description;
  std::optional<std::string> category;
  std::vector<std::string> image_ids;

  bool operator==(const AppRecord&) const = default;
};

struct DetectionBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  std::string label;
  double confidence = 0.0;

  bool operator==(const DetectionBox&) const = default;
};

struct Caption {
  std::string text;
  double confidence = 0.0;

  bool operator==(const Caption&) const = default;
};

/// Per-app channel evidence, keyed by image id.
struct EvidenceBundle {
  std::string app_id;
  std::map<std::string, std::string> ocr_texts;
  std::map<std::string, Caption> captions;
  std::map<std::string, std::vector<DetectionBox>> detections;
  std::map<std::string, DenseVector> embeddings;

  bool operator==(const EvidenceBundle&) const = default;
};

/// Loaded, validated app collection. Categories are kept sorted.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<std::string> categories);

  const std::vector<std::string>& categories() const { return categories_; }
  const std::vector<AppRecord>& apps() const { return apps_; }
  const std::map<std::string, EvidenceBundle>& evidence() const { return evidence_; }

  std::size_t size() const { return apps_.size(); }
  bool contains(const std::string& app_id) const { return index_.contains(app_id); }
  const AppRecord& app(const std::string& app_id) const;

  /// Bundle for an app; an empty bundle when the app has no evidence rows.
  const EvidenceBundle& bundle(const std::string& app_id) const;

  /// Throws ValidationError on a duplicate id, a foreign category, or
  /// duplicate image ids.
  void add_app(AppRecord app);

  /// Mutable bundle for an existing app.
  EvidenceBundle& bundle_for(const std::string& app_id);

  /// Shared dimensionality of every embedding vector, once one is loaded.
  std::optional<std::size_t> embedding_dimension() const { return embedding_dim_; }
  void set_embedding_dimension(std::size_t dim) { embedding_dim_ = dim; }

  /// Copy holding only the listed apps (and their evidence), in the given order.
  Dataset subset(const std::vector<std::size_t>& positions) const;

  bool operator==(const Dataset& other) const {
    return categories_ == other.categories_ && apps_ == other.apps_ && evidence_ == other.evidence_;
  }

 private:
  std::vector<std::string> categories_;
  std::vector<AppRecord> apps_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, EvidenceBundle> evidence_;
  std::optional<std::size_t> embedding_dim_;
};

struct ChannelPaths {
  std::optional<std::filesystem::path> ocr;
  std::optional<std::filesystem::path> captions;
  std::optional<std::filesystem::path> detections;
  std::optional<std::filesystem::path> embeddings;
};

struct LoadOptions {
  std::vector<std::string> categories;
  LabelMap label_map;
  /// Training-time loads reject apps without a gold category.
  bool require_category = true;
};

struct LoadReport {
  /// Evidence rows skipped because they name an unknown app or image,
  /// or repeat an (app, image) pair already loaded for that channel.
  std::size_t rejected_rows = 0;
  /// Detection boxes whose label is absent from the label map.
  std::size_t dropped_boxes = 0;
  std::vector<std::string> warnings;
};

struct LoadResult {
  Dataset dataset;
  LoadReport report;
};

LoadResult load_dataset(const std::filesystem::path& apps_path, const ChannelPaths& channels,
                        const LoadOptions& options);

/// Parses apps.jsonl text. `source` names the input in diagnostics.
Dataset parse_apps(const std::string& text, const LoadOptions& options,
                   const std::string& source = "apps");

/// Merges one channel file's rows into `dataset`.
void merge_channel(Dataset& dataset, ChannelId channel, const std::string& text,
                   const LoadOptions& options, LoadReport& report,
                   const std::string& source = "channel");

std::string serialize_apps(const Dataset& dataset);
std::string serialize_channel(const Dataset& dataset, ChannelId channel);

/// Unstratified seeded partition. Each side keeps the input order.
std::pair<Dataset, Dataset> split(const Dataset& dataset, std::size_t train_count,
                                  std::uint64_t seed);

}  // namespace appclass::corpus
