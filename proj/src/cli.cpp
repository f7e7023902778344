#include "appclass/cli.hpp"

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "appclass/ensemble.hpp"
#include "appclass/error.hpp"
#include "appclass/io.hpp"

namespace appclass::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kPredictionHeader = {
    "app_id", "text", "ocr", "caption", "detection", "embedding", "ensemble", "image_only", "undecided"};

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

void report_load(const corpus::LoadReport& report, std::ostream& err) {
  if (report.rejected_rows == 0 && report.dropped_boxes == 0) return;
  err << "warning: " << report.rejected_rows << " evidence row(s) rejected, " << report.dropped_boxes
      << " detection box(es) dropped for unmapped labels\n";
  constexpr std::size_t kShown = 5;
  for (std::size_t i = 0; i < report.warnings.size() && i < kShown; ++i)
    err << "  " << report.warnings[i] << '\n';
  if (report.warnings.size() > kShown)
    err << "  ... " << report.warnings.size() - kShown << " more\n";
}

const std::optional<fs::path>& evidence_path(const corpus::ChannelPaths& paths, ChannelId id) {
  static const std::optional<fs::path> none;
  switch (id) {
    case ChannelId::ocr: return paths.ocr;
    case ChannelId::caption: return paths.captions;
    case ChannelId::detection: return paths.detections;
    case ChannelId::embedding: return paths.embeddings;
    case ChannelId::text: break;
  }
  return none;
}

std::string model_file_name(ChannelId id) { return std::string(to_string(id)) + ".model.json"; }

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string cell_of(const std::optional<std::string>& value, const char* missing) {
  return value ? *value : std::string(missing);
}

std::optional<std::string> optional_cell(const std::string& value, const char* missing) {
  if (value == missing) return std::nullopt;
  return value;
}

}  // namespace

std::vector<std::string> categories_in_apps(const fs::path& apps) {
  std::set<std::string> found;
  std::istringstream in(io::read_file(apps));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto record = json::parse(line);
      if (auto it = record.find("category"); it != record.end() && it->is_string())
        found.insert(it->get<std::string>());
    } catch (const json::parse_error& e) {
      throw ValidationError(apps.string() + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
  }
  return {found.begin(), found.end()};
}

int cmd_split(const SplitArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    corpus::LoadOptions options;
    if (args.config) {
      options = load_config(*args.config).load_options(false);
    } else {
      options.categories = categories_in_apps(args.apps);
      if (options.categories.empty()) options.categories = {"unlabeled"};
      options.require_category = false;
    }
    const auto dataset = corpus::parse_apps(io::read_file(args.apps), options, args.apps.string());
    const auto [train, test] = corpus::split(dataset, args.train_count, args.seed);
    io::write_file_atomic(args.out_train, corpus::serialize_apps(train));
    io::write_file_atomic(args.out_test, corpus::serialize_apps(test));
    return kExitOk;
  });
}

int cmd_train(const TrainArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    Config config = load_config(args.config);
    if (args.seed) config.seed = *args.seed;
    if (args.top_k) config.top_k = *args.top_k;
    if (args.c) config.svm.C = *args.c;
    if (args.channels) {
      config.channels_enabled.clear();
      for (const auto& name : *args.channels) {
        auto id = parse_channel(name);
        if (!id) throw ValidationError("unknown channel '" + name + "'");
        config.channels_enabled.push_back(*id);
      }
    }
    config.normalize();

    const auto loaded = corpus::load_dataset(args.apps, args.evidence, config.load_options(true));
    report_load(loaded.report, err);

    fs::create_directories(args.out);
    json manifest;
    manifest["format_version"] = kManifestFormatVersion;
    manifest["config"] = to_json(config);
    manifest["models"] = json::object();
    manifest["skipped"] = json::array();
    const auto channel_cfg = config.channel_config();
    for (auto id : config.channels_enabled) {
      const std::string name(to_string(id));
      if (id != ChannelId::text && !evidence_path(args.evidence, id)) {
        err << "warning: skipping channel " << name << ": no evidence file given\n";
        manifest["skipped"].push_back({{"channel", name}, {"reason", "no evidence file"}});
        continue;
      }
      try {
        const auto model = channels::train_channel(loaded.dataset, id, channel_cfg);
        io::write_file_atomic(args.out / model_file_name(id), dump(channels::to_json(model)));
        manifest["models"][name] = model_file_name(id);
      } catch (const InsufficientEvidence& e) {
        err << "warning: skipping channel " << name << ": " << e.what() << '\n';
        manifest["skipped"].push_back({{"channel", name}, {"reason", e.what()}});
      }
    }
    if (manifest["models"].empty()) throw InsufficientEvidence("no channel could be trained");
    io::write_file_atomic(args.out / kManifestName, dump(manifest));
    return kExitOk;
  });
}

ModelSet load_models(const fs::path& dir) {
  const auto manifest = parse_json_file(dir / kManifestName);
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version > kManifestFormatVersion)
      throw ValidationError("manifest format version " + std::to_string(version) + " is newer than supported");
    ModelSet set;
    set.config = config_from_json(manifest.at("config"));
    for (auto id : kAllChannels) {
      const auto& models = manifest.at("models");
      auto it = models.find(std::string(to_string(id)));
      if (it == models.end()) continue;
      auto model = channels::channel_model_from_json(parse_json_file(dir / it->get<std::string>()));
      if (model.channel != id)
        throw ValidationError("model file " + it->get<std::string>() + " holds channel " +
                              std::string(to_string(model.channel)));
      set.models.push_back(std::move(model));
    }
    if (set.models.empty()) throw ValidationError("model directory holds no channel models");
    return set;
  } catch (const json::exception& e) {
    throw ValidationError("malformed manifest: " + std::string(e.what()));
  }
}

std::vector<PredictionRow> predict_dataset(const ModelSet& models, const corpus::Dataset& dataset) {
  const auto& categories = models.config.categories;
  std::vector<PredictionRow> rows;
  rows.reserve(dataset.size());
  for (const auto& app : dataset.apps()) {
    const auto& bundle = dataset.bundle(app.app_id);
    PredictionRow row;
    row.app_id = app.app_id;
    std::vector<channels::ChannelPrediction> slate;
    for (const auto& model : models.models) {
      auto p = channels::predict_channel(model, app, bundle);
      row.channels[model.channel] = p.prediction;
      slate.push_back(std::move(p));
    }
    const ensemble::VoteSlate full(std::move(slate));
    const auto outcome = ensemble::vote(full, categories);
    row.ensemble = outcome.category;
    row.undecided = outcome.undecided;
    if (auto images = full.without_text()) {
      const auto image_outcome = ensemble::vote_image_only(*images, categories);
      if (!image_outcome.undecided) row.image_only = image_outcome.category;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string predictions_to_csv(const std::vector<PredictionRow>& rows) {
  eval::Table table;
  table.header = kPredictionHeader;
  for (const auto& row : rows) {
    std::vector<std::string> cells{row.app_id};
    for (auto id : kAllChannels) {
      auto it = row.channels.find(id);
      cells.push_back(it == row.channels.end() ? kAbstain : cell_of(it->second, kAbstain));
    }
    cells.push_back(row.ensemble);
    cells.push_back(cell_of(row.image_only, kUndecided));
    cells.push_back(row.undecided ? "true" : "false");
    table.rows.push_back(std::move(cells));
  }
  return table.to_csv();
}

std::vector<PredictionRow> predictions_from_csv(const std::string& text) {
  eval::Table table;
  try {
    table = eval::parse_csv(text);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("predictions: ") + e.what());
  }
  if (table.header != kPredictionHeader) throw ValidationError("predictions: unexpected header");
  std::vector<PredictionRow> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const auto where = "predictions row " + std::to_string(r + 2);
    if (cells.size() != kPredictionHeader.size()) throw ValidationError(where + ": wrong field count");
    PredictionRow row;
    row.app_id = cells[0];
    for (std::size_t c = 0; c < kAllChannels.size(); ++c)
      row.channels[kAllChannels[c]] = optional_cell(cells[1 + c], kAbstain);
    row.ensemble = cells[6];
    row.image_only = optional_cell(cells[7], kUndecided);
    if (cells[8] == "true" || cells[8] == "1")
      row.undecided = true;
    else if (cells[8] == "false" || cells[8] == "0")
      row.undecided = false;
    else
      throw ValidationError(where + ": undecided must be true or false");
    rows.push_back(std::move(row));
  }
  return rows;
}

eval::ReportInput score_predictions(const std::vector<PredictionRow>& rows, const corpus::Dataset& gold) {
  std::set<std::string> seen;
  std::vector<std::string> labels;
  std::map<ChannelId, std::vector<eval::Predicted>> per_channel;
  std::vector<eval::Predicted> ensemble, image_only;
  for (const auto& row : rows) {
    if (!gold.contains(row.app_id)) throw ValidationError("prediction for unknown app " + row.app_id);
    if (!seen.insert(row.app_id).second) throw ValidationError("duplicate prediction for " + row.app_id);
    const auto& app = gold.app(row.app_id);
    if (!app.category) throw ValidationError("app " + row.app_id + " has no gold category");
    labels.push_back(*app.category);
    for (auto id : kAllChannels) {
      auto it = row.channels.find(id);
      per_channel[id].push_back(it == row.channels.end() ? std::nullopt : it->second);
    }
    ensemble.push_back(row.undecided ? std::nullopt : eval::Predicted(row.ensemble));
    image_only.push_back(row.image_only);
  }
  if (seen.size() != gold.size()) throw ValidationError("some apps have no prediction row");

  const auto& categories = gold.categories();
  auto metrics = [&](const std::vector<eval::Predicted>& predicted) {
    try {
      return eval::class_metrics(eval::confusion(labels, predicted, categories));
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string("predictions: ") + e.what());
    }
  };
  eval::ReportInput input;
  input.categories = categories;
  input.text = metrics(per_channel[ChannelId::text]);
  input.ocr = metrics(per_channel[ChannelId::ocr]);
  input.caption = metrics(per_channel[ChannelId::caption]);
  input.detection = metrics(per_channel[ChannelId::detection]);
  input.embedding = metrics(per_channel[ChannelId::embedding]);
  input.ensemble = metrics(ensemble);
  input.image_only = metrics(image_only);
  return input;
}

int cmd_predict(const PredictArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto models = load_models(args.models);
    const auto loaded = corpus::load_dataset(args.apps, args.evidence, models.config.load_options(false));
    report_load(loaded.report, err);
    io::write_file_atomic(args.out, predictions_to_csv(predict_dataset(models, loaded.dataset)));
    return kExitOk;
  });
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto rows = predictions_from_csv(io::read_file(args.predictions));
    corpus::LoadOptions options;
    if (args.config) {
      options = load_config(*args.config).load_options(true);
    } else {
      std::set<std::string> categories;
      for (auto& c : categories_in_apps(args.apps)) categories.insert(c);
      for (const auto& row : rows) {
        for (const auto& [id, p] : row.channels)
          if (p) categories.insert(*p);
        categories.insert(row.ensemble);
        if (row.image_only) categories.insert(*row.image_only);
      }
      options.categories.assign(categories.begin(), categories.end());
      if (options.categories.empty()) throw ValidationError("no categories found in apps or predictions");
    }
    options.require_category = true;
    const auto gold = corpus::parse_apps(io::read_file(args.apps), options, args.apps.string());
    const auto input = score_predictions(rows, gold);

    fs::create_directories(args.out_dir);
    const std::pair<const char*, eval::Table> tables[] = {
        {"table1_f1_by_channel", eval::f1_by_channel_table(input)},
        {"table2_ensemble_ablation", eval::ensemble_ablation_table(input)},
        {"table3_precision_recall", eval::precision_recall_table(input)}};
    for (const auto& [name, table] : tables) {
      io::write_file_atomic(args.out_dir / (std::string(name) + ".csv"), table.to_csv());
      io::write_file_atomic(args.out_dir / (std::string(name) + ".md"), table.to_markdown());
    }
    return kExitOk;
  });
}

int cmd_ablate(const AblateArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto models = load_models(args.models);
    const auto loaded = corpus::load_dataset(args.apps, args.evidence, models.config.load_options(true));
    report_load(loaded.report, err);
    const auto input = score_predictions(predict_dataset(models, loaded.dataset), loaded.dataset);
    const auto table = eval::ensemble_ablation_table(input);
    io::write_file_atomic(args.out, table.to_csv());
    auto md = args.out;
    md.replace_extension(".md");
    io::write_file_atomic(md, table.to_markdown());
    return kExitOk;
  });
}

namespace {

void add_evidence_options(CLI::App& cmd, corpus::ChannelPaths& paths) {
  cmd.add_option("--ocr", paths.ocr, "OCR evidence (ocr.jsonl)")->check(CLI::ExistingFile);
  cmd.add_option("--captions", paths.captions, "caption evidence (captions.jsonl)")->check(CLI::ExistingFile);
  cmd.add_option("--detections", paths.detections, "detection evidence (detections.jsonl)")
      ->check(CLI::ExistingFile);
  cmd.add_option("--embeddings", paths.embeddings, "image embeddings (embeddings.jsonl)")
      ->check(CLI::ExistingFile);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-channel app classifier: train, predict, evaluate, ablate"};
  app.require_subcommand(1);

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Seeded train/test split of an apps file");
  split_cmd->add_option("--apps", split.apps, "apps.jsonl")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--train-count", split.train_count, "apps in the training split")
      ->required()
      ->check(CLI::PositiveNumber);
  split_cmd->add_option("--seed", split.seed, "shuffle seed");
  split_cmd->add_option("--out-train", split.out_train, "training apps output")->required();
  split_cmd->add_option("--out-test", split.out_test, "test apps output")->required();
  split_cmd->add_option("--config", split.config, "config (TOML or JSON)")->check(CLI::ExistingFile);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one model per enabled channel");
  train_cmd->add_option("--apps", train.apps, "apps.jsonl")->required()->check(CLI::ExistingFile);
  add_evidence_options(*train_cmd, train.evidence);
  train_cmd->add_option("--config", train.config, "config (TOML or JSON)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "model directory")->required();
  train_cmd->add_option("--seed", train.seed, "overrides config seed");
  train_cmd->add_option("--top-k", train.top_k, "overrides config top_k")->check(CLI::PositiveNumber);
  train_cmd->add_option("--svm-c", train.c, "overrides config svm.C")->check(CLI::PositiveNumber);
  train_cmd->add_option("--channels", train.channels, "overrides enabled channels")->delimiter(',');

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Per-channel and ensemble predictions");
  predict_cmd->add_option("--apps", predict.apps, "apps.jsonl")->required()->check(CLI::ExistingFile);
  add_evidence_options(*predict_cmd, predict.evidence);
  predict_cmd->add_option("--models", predict.models, "model directory")->required()->check(CLI::ExistingDirectory);
  predict_cmd->add_option("--out", predict.out, "predictions CSV")->required();

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a predictions file against gold labels");
  evaluate_cmd->add_option("--predictions", evaluate.predictions, "predictions CSV")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--apps", evaluate.apps, "apps.jsonl with gold categories")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--out-dir", evaluate.out_dir, "report directory")->required();
  evaluate_cmd->add_option("--config", evaluate.config, "config fixing the category set")
      ->check(CLI::ExistingFile);

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Image-only vs text+image ensemble comparison");
  ablate_cmd->add_option("--models", ablate.models, "model directory")->required()->check(CLI::ExistingDirectory);
  ablate_cmd->add_option("--apps", ablate.apps, "apps.jsonl with gold categories")
      ->required()
      ->check(CLI::ExistingFile);
  add_evidence_options(*ablate_cmd, ablate.evidence);
  ablate_cmd->add_option("--out", ablate.out, "comparison CSV (markdown written alongside)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (split_cmd->parsed()) return cmd_split(split, err);
  if (train_cmd->parsed()) return cmd_train(train, err);
  if (predict_cmd->parsed()) return cmd_predict(predict, err);
  if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate, err);
  if (ablate_cmd->parsed()) return cmd_ablate(ablate, err);
  return kExitUsage;
}

}  // namespace appclass::cli
