#include "appclass/config.hpp"

#include <algorithm>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "appclass/error.hpp"
#include "appclass/io.hpp"

namespace appclass::cli {

using nlohmann::json;

void Config::normalize() {
  std::sort(categories.begin(), categories.end());
  if (categories.empty()) throw ValidationError("config: categories must be non-empty");
  if (std::adjacent_find(categories.begin(), categories.end()) != categories.end())
    throw ValidationError("config: duplicate category");
  for (const auto& c : categories)
    if (c.empty()) throw ValidationError("config: empty category name");
  if (label_map.empty()) label_map = channels::identity_label_map(categories);
  for (const auto& [label, category] : label_map)
    if (!std::binary_search(categories.begin(), categories.end(), category))
      throw ValidationError("config: label_map sends '" + label + "' to unknown category '" +
                            category + "'");
  if (top_k < 1) throw ValidationError("config: top_k must be at least 1");
  if (min_df < 1) throw ValidationError("config: min_df must be at least 1");
  if (!c_grid.empty() && cv_folds < 2) throw ValidationError("config: cv_folds must be at least 2");
  for (double c : c_grid)
    if (!(c > 0.0)) throw ValidationError("config: c_grid values must be positive");
  svm.seed = seed;
  svm::validate(svm);

  std::vector<ChannelId> ordered;
  for (auto id : kAllChannels)
    if (std::find(channels_enabled.begin(), channels_enabled.end(), id) != channels_enabled.end())
      ordered.push_back(id);
  if (ordered.empty()) throw ValidationError("config: no channels enabled");
  channels_enabled = std::move(ordered);
}

corpus::LoadOptions Config::load_options(bool require_category) const {
  return corpus::LoadOptions{categories, label_map, require_category};
}

channels::ChannelConfig Config::channel_config() const {
  channels::ChannelConfig cfg;
  cfg.categories = categories;
  cfg.label_map = label_map;
  cfg.features = {top_k, min_df};
  cfg.svm = svm;
  cfg.c_grid = c_grid;
  cfg.cv_folds = cv_folds;
  return cfg;
}

bool Config::enabled(ChannelId id) const {
  return std::find(channels_enabled.begin(), channels_enabled.end(), id) != channels_enabled.end();
}

namespace {

std::vector<ChannelId> parse_channel_names(const std::vector<std::string>& names) {
  std::vector<ChannelId> out;
  for (const auto& name : names) {
    auto id = parse_channel(name);
    if (!id) throw ValidationError("config: unknown channel '" + name + "'");
    out.push_back(*id);
  }
  return out;
}

template <typename T>
std::vector<T> toml_array(const toml::node_view<const toml::node>& node, const char* key) {
  std::vector<T> out;
  const auto* arr = node.as_array();
  if (!arr) throw ValidationError(std::string("config: '") + key + "' must be an array");
  for (const auto& item : *arr) {
    auto v = item.template value<T>();
    if (!v) throw ValidationError(std::string("config: bad element in '") + key + "'");
    out.push_back(*v);
  }
  return out;
}

template <typename T>
void read_scalar(const toml::node_view<const toml::node>& node, const char* key, T& target) {
  if (!node) return;
  auto v = node.template value<T>();
  if (!v) throw ValidationError(std::string("config: '") + key + "' has the wrong type");
  target = *v;
}

std::size_t non_negative(std::int64_t v, const char* key) {
  if (v < 0) throw ValidationError(std::string("config: '") + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

Config config_from_toml(const std::string& text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ValidationError(std::string("config: ") + std::string(e.description()));
  }
  const toml::node_view<const toml::node> view{root};

  Config cfg;
  if (view["categories"]) cfg.categories = toml_array<std::string>(view["categories"], "categories");
  if (view["channels"])
    cfg.channels_enabled = parse_channel_names(toml_array<std::string>(view["channels"], "channels"));
  std::int64_t seed = 0, top_k = static_cast<std::int64_t>(cfg.top_k),
               min_df = static_cast<std::int64_t>(cfg.min_df);
  read_scalar(view["seed"], "seed", seed);
  read_scalar(view["top_k"], "top_k", top_k);
  read_scalar(view["min_df"], "min_df", min_df);
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.top_k = non_negative(top_k, "top_k");
  cfg.min_df = non_negative(min_df, "min_df");

  if (const auto* map = root["label_map"].as_table()) {
    for (const auto& [key, value] : *map) {
      auto category = value.value<std::string>();
      if (!category) throw ValidationError("config: label_map values must be strings");
      cfg.label_map.emplace(std::string(key.str()), *category);
    }
  }
  if (auto svm = view["svm"]) {
    read_scalar(svm["C"], "svm.C", cfg.svm.C);
    read_scalar(svm["gamma"], "svm.gamma", cfg.svm.gamma);
    read_scalar(svm["tolerance"], "svm.tolerance", cfg.svm.tolerance);
    read_scalar(svm["fit_intercept"], "svm.fit_intercept", cfg.svm.fit_intercept);
    std::int64_t epochs = static_cast<std::int64_t>(cfg.svm.max_epochs);
    std::int64_t folds = static_cast<std::int64_t>(cfg.cv_folds);
    read_scalar(svm["max_epochs"], "svm.max_epochs", epochs);
    read_scalar(svm["cv_folds"], "svm.cv_folds", folds);
    cfg.svm.max_epochs = non_negative(epochs, "svm.max_epochs");
    cfg.cv_folds = non_negative(folds, "svm.cv_folds");
    if (svm["c_grid"]) cfg.c_grid = toml_array<double>(svm["c_grid"], "svm.c_grid");
  }
  cfg.normalize();
  return cfg;
}

Config config_from_json(const json& doc) {
  try {
    Config cfg;
    cfg.categories = doc.at("categories").get<std::vector<std::string>>();
    if (doc.contains("channels"))
      cfg.channels_enabled = parse_channel_names(doc["channels"].get<std::vector<std::string>>());
    cfg.seed = doc.value("seed", std::uint64_t{0});
    cfg.top_k = doc.value("top_k", cfg.top_k);
    cfg.min_df = doc.value("min_df", cfg.min_df);
    if (doc.contains("label_map")) cfg.label_map = doc["label_map"].get<LabelMap>();
    if (doc.contains("svm")) {
      const auto& s = doc["svm"];
      cfg.svm.C = s.value("C", cfg.svm.C);
      cfg.svm.gamma = s.value("gamma", cfg.svm.gamma);
      cfg.svm.tolerance = s.value("tolerance", cfg.svm.tolerance);
      cfg.svm.max_epochs = s.value("max_epochs", cfg.svm.max_epochs);
      cfg.svm.fit_intercept = s.value("fit_intercept", cfg.svm.fit_intercept);
      cfg.cv_folds = s.value("cv_folds", cfg.cv_folds);
      if (s.contains("c_grid")) cfg.c_grid = s["c_grid"].get<std::vector<double>>();
    }
    cfg.normalize();
    return cfg;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

Config load_config(const std::filesystem::path& path) {
  const auto text = io::read_file(path);
  if (path.extension() == ".json") {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("config: ") + e.what());
    }
    return config_from_json(doc);
  }
  return config_from_toml(text);
}

json to_json(const Config& config) {
  std::vector<std::string> channel_names;
  for (auto id : config.channels_enabled) channel_names.emplace_back(to_string(id));
  json svm = svm::to_json(config.svm);
  svm["c_grid"] = config.c_grid;
  svm["cv_folds"] = config.cv_folds;
  return json{{"categories", config.categories}, {"label_map", config.label_map},
              {"top_k", config.top_k},           {"min_df", config.min_df},
              {"channels", channel_names},       {"seed", config.seed},
              {"svm", svm}};
}

}  // namespace appclass::cli
