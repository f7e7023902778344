#include "appclass/corpus.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "appclass/error.hpp"
#include "appclass/io.hpp"

namespace appclass::corpus {

using nlohmann::json;

namespace {

[[noreturn]] void fail_line(const std::string& source, std::size_t line, const std::string& what) {
  throw ValidationError(source + ":" + std::to_string(line) + ": " + what);
}

// Calls `fn(object, line_number)` for every non-blank line.
template <typename Fn>
void for_each_record(const std::string& text, const std::string& source, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_line(source, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) fail_line(source, line_no, "record is not a JSON object");
    fn(record, line_no);
  }
}

std::string required_string(const json& record, const char* key, const std::string& source,
                            std::size_t line) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string())
    fail_line(source, line, std::string("missing or non-string field '") + key + "'");
  return it->get<std::string>();
}

double required_number(const json& record, const char* key, const std::string& source,
                       std::size_t line) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_number())
    fail_line(source, line, std::string("missing or non-numeric field '") + key + "'");
  return it->get<double>();
}

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

Dataset::Dataset(std::vector<std::string> categories) : categories_(std::move(categories)) {
  std::sort(categories_.begin(), categories_.end());
  if (categories_.empty()) throw ValidationError("category set is empty");
  if (std::adjacent_find(categories_.begin(), categories_.end()) != categories_.end())
    throw ValidationError("category set contains duplicates");
}

const AppRecord& Dataset::app(const std::string& app_id) const {
  auto it = index_.find(app_id);
  if (it == index_.end()) throw std::out_of_range("unknown app_id: " + app_id);
  return apps_[it->second];
}

const EvidenceBundle& Dataset::bundle(const std::string& app_id) const {
  static const EvidenceBundle empty{};
  auto it = evidence_.find(app_id);
  return it == evidence_.end() ? empty : it->second;
}

void Dataset::add_app(AppRecord app) {
  if (app.app_id.empty()) throw ValidationError("empty app_id");
  if (index_.contains(app.app_id)) throw ValidationError("duplicate app_id: " + app.app_id);
  if (app.category &&
      !std::binary_search(categories_.begin(), categories_.end(), *app.category))
    throw ValidationError("app " + app.app_id + ": category '" + *app.category +
                          "' is not in the configured set");
  std::set<std::string> seen;
  for (const auto& image : app.image_ids)
    if (!seen.insert(image).second)
      throw ValidationError("app " + app.app_id + ": duplicate image id " + image);
  index_.emplace(app.app_id, apps_.size());
  apps_.push_back(std::move(app));
}

EvidenceBundle& Dataset::bundle_for(const std::string& app_id) {
  if (!contains(app_id)) throw std::out_of_range("unknown app_id: " + app_id);
  auto [it, inserted] = evidence_.try_emplace(app_id);
  if (inserted) it->second.app_id = app_id;
  return it->second;
}

Dataset Dataset::subset(const std::vector<std::size_t>& positions) const {
  Dataset out;
  out.categories_ = categories_;
  out.embedding_dim_ = embedding_dim_;
  for (auto pos : positions) {
    const auto& record = apps_.at(pos);
    out.add_app(record);
    if (auto it = evidence_.find(record.app_id); it != evidence_.end())
      out.evidence_.emplace(it->first, it->second);
  }
  return out;
}

Dataset parse_apps(const std::string& text, const LoadOptions& options, const std::string& source) {
  Dataset dataset(options.categories);
  for_each_record(text, source, [&](const json& record, std::size_t line) {
    AppRecord app;
    app.app_id = required_string(record, "app_id", source, line);
    if (app.app_id.empty()) fail_line(source, line, "empty app_id");
    if (auto it = record.find("description"); it != record.end()) {
      if (!it->is_string()) fail_line(source, line, "field 'description' is not a string");
      app.description = it->get<std::string>();
    }
    if (auto it = record.find("category"); it != record.end() && !it->is_null()) {
      if (!it->is_string()) fail_line(source, line, "field 'category' is not a string or null");
      app.category = it->get<std::string>();
    }
    if (!app.category && options.require_category)
      fail_line(source, line, "app " + app.app_id + " has no category");
    if (auto it = record.find("images"); it != record.end()) {
      if (!it->is_array()) fail_line(source, line, "field 'images' is not an array");
      for (const auto& image : *it) {
        if (!image.is_string() || image.get<std::string>().empty())
          fail_line(source, line, "image ids must be non-empty strings");
        app.image_ids.push_back(image.get<std::string>());
      }
    }
    try {
      dataset.add_app(std::move(app));
    } catch (const ValidationError& e) {
      fail_line(source, line, e.what());
    }
  });
  return dataset;
}

void merge_channel(Dataset& dataset, ChannelId channel, const std::string& text,
                   const LoadOptions& options, LoadReport& report, const std::string& source) {
  if (channel == ChannelId::text)
    throw std::invalid_argument("the text channel has no evidence file");

  for_each_record(text, source, [&](const json& record, std::size_t line) {
    const auto app_id = required_string(record, "app_id", source, line);
    const auto image_id = required_string(record, "image_id", source, line);

    // Parse the payload fully before deciding acceptance, so a malformed row
    // is reported even when it names an unknown app.
    std::string ocr_text;
    Caption caption;
    std::vector<DetectionBox> boxes;
    std::size_t dropped = 0;
    DenseVector vector;
    switch (channel) {
      case ChannelId::ocr:
        ocr_text = required_string(record, "text", source, line);
        break;
      case ChannelId::caption:
        caption.text = required_string(record, "caption", source, line);
        caption.confidence = required_number(record, "confidence", source, line);
        if (!in_unit_interval(caption.confidence))
          fail_line(source, line, "caption confidence outside [0,1]");
        break;
      case ChannelId::detection: {
        auto it = record.find("boxes");
        if (it == record.end() || !it->is_array())
          fail_line(source, line, "missing or non-array field 'boxes'");
        for (const auto& raw : *it) {
          if (!raw.is_object()) fail_line(source, line, "box is not an object");
          DetectionBox box;
          box.x = required_number(raw, "x", source, line);
          box.y = required_number(raw, "y", source, line);
          box.w = required_number(raw, "w", source, line);
          box.h = required_number(raw, "h", source, line);
          box.label = required_string(raw, "label", source, line);
          box.confidence = required_number(raw, "confidence", source, line);
          if (!(box.w > 0.0) || !(box.h > 0.0)) fail_line(source, line, "box with w <= 0 or h <= 0");
          if (!in_unit_interval(box.confidence))
            fail_line(source, line, "box confidence outside [0,1]");
          if (box.label.empty()) fail_line(source, line, "box with empty label");
          if (options.label_map.contains(box.label))
            boxes.push_back(std::move(box));
          else
            ++dropped;
        }
        break;
      }
      case ChannelId::embedding: {
        auto it = record.find("vector");
        if (it == record.end() || !it->is_array() || it->empty())
          fail_line(source, line, "missing or empty field 'vector'");
        for (const auto& v : *it) {
          if (!v.is_number()) fail_line(source, line, "non-numeric embedding component");
          vector.push_back(v.get<double>());
        }
        break;
      }
      case ChannelId::text:
        break;
    }

    auto reject = [&](const std::string& why) {
      ++report.rejected_rows;
      report.warnings.push_back(source + ":" + std::to_string(line) + ": " + why);
    };
    if (!dataset.contains(app_id)) return reject("unknown app_id " + app_id);
    const auto& images = dataset.app(app_id).image_ids;
    if (std::find(images.begin(), images.end(), image_id) == images.end())
      return reject("image " + image_id + " is not listed for app " + app_id);

    if (channel == ChannelId::embedding) {
      if (auto dim = dataset.embedding_dimension(); dim && *dim != vector.size())
        fail_line(source, line,
                  "embedding dimensionality " + std::to_string(vector.size()) +
                      " differs from " + std::to_string(*dim));
    }

    auto& bundle = dataset.bundle_for(app_id);
    bool inserted = false;
    switch (channel) {
      case ChannelId::ocr:
        inserted = bundle.ocr_texts.try_emplace(image_id, std::move(ocr_text)).second;
        break;
      case ChannelId::caption:
        inserted = bundle.captions.try_emplace(image_id, std::move(caption)).second;
        break;
      case ChannelId::detection:
        inserted = bundle.detections.try_emplace(image_id, std::move(boxes)).second;
        break;
      case ChannelId::embedding: {
        const auto dim = vector.size();
        inserted = bundle.embeddings.try_emplace(image_id, std::move(vector)).second;
        if (inserted) dataset.set_embedding_dimension(dim);
        break;
      }
      case ChannelId::text:
        break;
    }
    if (!inserted) return reject("duplicate row for app " + app_id + " image " + image_id);
    if (dropped > 0) {
      report.dropped_boxes += dropped;
      report.warnings.push_back(source + ":" + std::to_string(line) + ": dropped " +
                                std::to_string(dropped) + " box(es) with unmapped labels");
    }
  });
}

LoadResult load_dataset(const std::filesystem::path& apps_path, const ChannelPaths& channels,
                        const LoadOptions& options) {
  LoadResult result;
  result.dataset = parse_apps(io::read_file(apps_path), options, apps_path.string());
  auto merge = [&](const std::optional<std::filesystem::path>& path, ChannelId id) {
    if (!path) return;
    merge_channel(result.dataset, id, io::read_file(*path), options, result.report,
                  path->string());
  };
  merge(channels.ocr, ChannelId::ocr);
  merge(channels.captions, ChannelId::caption);
  merge(channels.detections, ChannelId::detection);
  merge(channels.embeddings, ChannelId::embedding);
  return result;
}

std::string serialize_apps(const Dataset& dataset) {
  std::string out;
  for (const auto& app : dataset.apps()) {
    json record = json::object();
    record["app_id"] = app.app_id;
    record["description"] = app.description;
    record["category"] = app.category ? json(*app.category) : json(nullptr);
    record["images"] = app.image_ids;
    out += record.dump();
    out += '\n';
  }
  return out;
}

std::string serialize_channel(const Dataset& dataset, ChannelId channel) {
  std::string out;
  for (const auto& app : dataset.apps()) {
    const auto& bundle = dataset.bundle(app.app_id);
    for (const auto& image : app.image_ids) {
      json record = json::object();
      record["app_id"] = app.app_id;
      record["image_id"] = image;
      bool present = false;
      switch (channel) {
        case ChannelId::ocr:
          if (auto it = bundle.ocr_texts.find(image); it != bundle.ocr_texts.end()) {
            record["text"] = it->second;
            present = true;
          }
          break;
        case ChannelId::caption:
          if (auto it = bundle.captions.find(image); it != bundle.captions.end()) {
            record["caption"] = it->second.text;
            record["confidence"] = it->second.confidence;
            present = true;
          }
          break;
        case ChannelId::detection:
          if (auto it = bundle.detections.find(image); it != bundle.detections.end()) {
            json boxes = json::array();
            for (const auto& b : it->second)
              boxes.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h},
                               {"label", b.label}, {"confidence", b.confidence}});
            record["boxes"] = std::move(boxes);
            present = true;
          }
          break;
        case ChannelId::embedding:
          if (auto it = bundle.embeddings.find(image); it != bundle.embeddings.end()) {
            record["vector"] = it->second;
            present = true;
          }
          break;
        case ChannelId::text:
          throw std::invalid_argument("the text channel has no evidence file");
      }
      if (present) {
        out += record.dump();
        out += '\n';
      }
    }
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, std::size_t train_count,
                                  std::uint64_t seed) {
  if (train_count == 0 || train_count >= dataset.size())
    throw ValidationError("train_count must satisfy 0 < train_count < " +
                          std::to_string(dataset.size()) + ", got " + std::to_string(train_count));
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  io::shuffle(order, rng);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<long>(train_count));
  std::vector<std::size_t> test(order.begin() + static_cast<long>(train_count), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {dataset.subset(train), dataset.subset(test)};
}

}  // namespace appclass::corpus
