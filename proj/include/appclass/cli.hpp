#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "appclass/channels.hpp"
#include "appclass/config.hpp"
#include "appclass/corpus.hpp"
#include "appclass/eval.hpp"

namespace appclass::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kAbstain = "ABSTAIN";
inline constexpr const char* kUndecided = "UNDECIDED";
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr int kManifestFormatVersion = 1;

struct SplitArgs {
  std::filesystem::path apps;
  std::size_t train_count = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out_train;
  std::filesystem::path out_test;
  std::optional<std::filesystem::path> config;
};

struct TrainArgs {
  std::filesystem::path apps;
  corpus::ChannelPaths evidence;
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> top_k;
  std::optional<double> c;
  std::optional<std::vector<std::string>> channels;
};

struct PredictArgs {
  std::filesystem::path apps;
  corpus::ChannelPaths evidence;
  std::filesystem::path models;
  std::filesystem::path out;
};

struct EvaluateArgs {
  std::filesystem::path predictions;
  std::filesystem::path apps;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> config;
};

struct AblateArgs {
  std::filesystem::path models;
  std::filesystem::path apps;
  corpus::ChannelPaths evidence;
  std::filesystem::path out;
};

int cmd_split(const SplitArgs& args, std::ostream& err);
int cmd_train(const TrainArgs& args, std::ostream& err);
int cmd_predict(const PredictArgs& args, std::ostream& err);
int cmd_evaluate(const EvaluateArgs& args, std::ostream& err);
int cmd_ablate(const AblateArgs& args, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// A trained model directory: manifest plus one model per trained channel.
struct ModelSet {
  Config config;
  std::vector<channels::ChannelModel> models;
};

ModelSet load_models(const std::filesystem::path& dir);

/// One predictions-file row.
struct PredictionRow {
  std::string app_id;
  std::map<ChannelId, std::optional<std::string>> channels;  // nullopt = ABSTAIN
  std::string ensemble;
  std::optional<std::string> image_only;  // nullopt = UNDECIDED
  bool undecided = false;
};

std::vector<PredictionRow> predict_dataset(const ModelSet& models, const corpus::Dataset& dataset);

std::string predictions_to_csv(const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> predictions_from_csv(const std::string& text);

/// Per-method metrics for the report tables, scored against the gold labels.
eval::ReportInput score_predictions(const std::vector<PredictionRow>& rows,
                                    const corpus::Dataset& gold);

/// Sorted category names found in an apps file (gold labels only).
std::vector<std::string> categories_in_apps(const std::filesystem::path& apps);

}  // namespace appclass::cli
