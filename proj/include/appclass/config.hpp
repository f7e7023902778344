#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "appclass/channel_id.hpp"
#include "appclass/channels.hpp"
#include "appclass/corpus.hpp"
#include "appclass/svm.hpp"

namespace appclass::cli {

/// Run configuration. Read from TOML (or JSON when the file ends in .json);
/// unknown keys and sections are ignored.
///
///   categories = ["beauty", "decor", "food"]
///   seed = 0
///   top_k = 100
///   min_df = 1
///   channels = ["text", "ocr", "caption", "detection", "embedding"]
///   [label_map]          # object label -> category; identity when absent
///   pizza = "food"
///   [svm]
///   C = 1.0
///   gamma = 0.001
///   tolerance = 1e-4
///   max_epochs = 1000
///   fit_intercept = true
///   c_grid = [0.1, 1.0, 10.0]   # optional; enables cross-validated C
///   cv_folds = 5
struct Config {
  std::vector<std::string> categories;
  LabelMap label_map;
  std::size_t top_k = textproc::kDefaultTopK;
  std::size_t min_df = 1;
  svm::TrainConfig svm;
  std::vector<double> c_grid;
  std::size_t cv_folds = 5;
  std::vector<ChannelId> channels_enabled{kAllChannels.begin(), kAllChannels.end()};
  std::uint64_t seed = 0;

  /// Sorts categories, fills the identity label map when empty, and throws
  /// ValidationError on any violated invariant.
  void normalize();

  corpus::LoadOptions load_options(bool require_category) const;
  channels::ChannelConfig channel_config() const;
  bool enabled(ChannelId id) const;
};

Config config_from_toml(const std::string& text);
Config config_from_json(const nlohmann::json& doc);
Config load_config(const std::filesystem::path& path);

nlohmann::json to_json(const Config& config);

}  // namespace appclass::cli
