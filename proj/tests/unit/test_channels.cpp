#include <doctest.h>

#include <algorithm>
#include <random>

#include "appclass/channels.hpp"
#include "appclass/error.hpp"
#include "fixtures.hpp"
#include "../support/oracles.hpp"

using namespace appclass;
using namespace appclass::channels;

namespace {

const std::vector<std::string> kCats{"beauty", "decor", "food"};

DetectionBox box(const std::string& label, double confidence) {
  DetectionBox b;
  b.w = 1.0;
  b.h = 1.0;
  b.label = label;
  b.confidence = confidence;
  return b;
}

AppRecord app(const std::string& id, const std::string& description, std::vector<std::string> images,
              std::optional<std::string> category = std::nullopt) {
  return AppRecord{id, description, std::move(category), std::move(images)};
}

ChannelConfig config() {
  ChannelConfig cfg;
  cfg.categories = kCats;
  cfg.label_map = identity_label_map(kCats);
  return cfg;
}

}  // namespace

TEST_CASE("channel documents") {
  EvidenceBundle b;
  b.ocr_texts = {{"i1", "pizza menu"}, {"i2", "order now"}};
  b.captions = {{"i1", {"a plate of food", 0.9}}};
  const auto a = app("a1", "", {"i1", "i2"});

  CHECK(build_channel_document(a, b, ChannelId::ocr) == textproc::Tokens{"pizza", "menu", "order", "now"});
  CHECK_FALSE(build_channel_document(a, b, ChannelId::text).has_value());
  CHECK(build_channel_document(a, b, ChannelId::caption) == textproc::Tokens{"plate", "of", "food"});

  // Image order follows the app record, not the map.
  const auto reversed = app("a1", "Nail Salon", {"i2", "i1"});
  CHECK(build_channel_document(reversed, b, ChannelId::ocr) == textproc::Tokens{"order", "now", "pizza", "menu"});
  CHECK(build_channel_document(reversed, b, ChannelId::text) == textproc::Tokens{"nail", "salon"});
  CHECK_FALSE(build_channel_document(app("a2", "x", {}), EvidenceBundle{}, ChannelId::ocr).has_value());
}

TEST_CASE("detect_image_label examples") {
  const auto map = identity_label_map(kCats);
  const std::vector<DetectionBox> three{box("food", 0.5), box("food", 0.5), box("beauty", 0.9)};
  CHECK(detect_image_label(three, map) == ImageLabel{"food", 2});
  CHECK_FALSE(detect_image_label(std::vector<DetectionBox>{}, map).has_value());
  const std::vector<DetectionBox> tie{box("beauty", 0.4), box("food", 0.9)};
  CHECK(detect_image_label(tie, map) == ImageLabel{"food", 1});
  const std::vector<DetectionBox> full_tie{box("food", 0.5), box("decor", 0.5)};
  CHECK(detect_image_label(full_tie, map) == ImageLabel{"decor", 1});
  const std::vector<DetectionBox> unmapped{box("sofa", 1.0)};
  CHECK_FALSE(detect_image_label(unmapped, map).has_value());
  LabelMap custom{{"sofa", "decor"}};
  CHECK(detect_image_label(unmapped, custom) == ImageLabel{"decor", 1});
}

TEST_CASE("detect_app_label examples") {
  using L = std::optional<ImageLabel>;
  CHECK(detect_app_label(std::vector<L>{ImageLabel{"food", 1}, ImageLabel{"food", 1}, ImageLabel{"decor", 1}}) ==
        "food");
  CHECK_FALSE(detect_app_label(std::vector<L>{std::nullopt, std::nullopt}).has_value());
  CHECK_FALSE(detect_app_label(std::vector<L>{}).has_value());
  CHECK(detect_app_label(std::vector<L>{ImageLabel{"decor", 1}, ImageLabel{"food", 3}}) == "food");
  CHECK(detect_app_label(std::vector<L>{ImageLabel{"food", 2}, ImageLabel{"decor", 2}}) == "decor");
}

TEST_CASE("detection properties on random images") {
  std::mt19937_64 rng(41);
  const auto map = identity_label_map(kCats);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<DetectionBox> boxes;
    const auto n = rng() % 7;
    for (std::size_t i = 0; i < n; ++i) boxes.push_back(box(kCats[rng() % 3], 0.25 * static_cast<double>(rng() % 5)));
    const auto label = detect_image_label(boxes, map);
    CHECK(label.has_value() == (n > 0));
    if (!label) continue;
    for (const auto& c : kCats) {
      const auto count = std::count_if(boxes.begin(), boxes.end(), [&](const auto& b) { return b.label == c; });
      CHECK(static_cast<std::size_t>(count) <= label->box_count);
    }
    auto shuffled = boxes;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(detect_image_label(shuffled, map) == label);

    std::vector<std::optional<ImageLabel>> images;
    for (int i = 0; i < 5; ++i) {
      if (rng() % 4 == 0) images.push_back(std::nullopt);
      else images.push_back(ImageLabel{kCats[rng() % 3], 1 + rng() % 3});
    }
    const auto app_label = detect_app_label(images);
    std::shuffle(images.begin(), images.end(), rng);
    CHECK(detect_app_label(images) == app_label);
  }
}

TEST_CASE("detection channel matches the oracle on random fixtures") {
  std::mt19937_64 rng(1234);
  ChannelModel model;
  model.channel = ChannelId::detection;
  model.label_map = identity_label_map(kCats);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_images = rng() % 6;
    AppRecord a = app("a", "", {});
    EvidenceBundle bundle;
    std::vector<std::vector<oracle::Box>> oracle_images;
    for (std::size_t i = 0; i < n_images; ++i) {
      const auto id = "img" + std::to_string(i);
      a.image_ids.push_back(id);
      const std::size_t n_boxes = rng() % 7;
      std::vector<oracle::Box> ob;
      for (std::size_t k = 0; k < n_boxes; ++k) {
        const auto c = rng() % 3;
        const double conf = 0.1 * static_cast<double>(rng() % 11);
        bundle.detections[id].push_back(box(kCats[c], conf));
        ob.push_back({c, conf});
      }
      oracle_images.push_back(ob);
    }
    const auto got = predict_channel(model, a, bundle);
    const auto want = oracle::detection_app_label(oracle_images, 3);
    CHECK(got.channel == ChannelId::detection);
    REQUIRE(got.prediction.has_value() == want.has_value());
    if (want) CHECK(*got.prediction == kCats[*want]);
  }
}

TEST_CASE("predict_channel detection example") {
  ChannelModel model;
  model.channel = ChannelId::detection;
  model.label_map = identity_label_map(kCats);
  EvidenceBundle b;
  b.detections = {{"i1", {box("food", 0.5), box("food", 0.5)}}, {"i2", {box("beauty", 0.9)}}};
  CHECK(predict_channel(model, app("a", "", {"i1", "i2"}), b).prediction == "food");
}

TEST_CASE("embed_average") {
  const std::vector<DenseVector> two{{1.0, 0.0}, {0.0, 1.0}};
  CHECK(embed_average(two) == DenseVector{0.5, 0.5});
  CHECK(embed_average(std::vector<DenseVector>{{3.0, -1.5}}) == DenseVector{3.0, -1.5});
  CHECK_FALSE(embed_average(std::vector<DenseVector>{}).has_value());
  CHECK_THROWS_AS(embed_average(std::vector<DenseVector>{{1.0}, {1.0, 2.0}}), ValidationError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    DenseVector v(1 + rng() % 6);
    for (auto& c : v) c = u(rng);
    const std::vector<DenseVector> repeated(1 + rng() % 20, v);
    CHECK(embed_average(repeated) == v);
  }
}

TEST_CASE("train_channel") {
  fixtures::TempDir dir("channels-train");
  fixtures::CorpusSpec spec;
  spec.apps_per_category = 15;
  const auto files = fixtures::write_corpus(dir.path(), spec);
  corpus::LoadOptions opts{kCats, identity_label_map(kCats), true};
  const auto data =
      corpus::load_dataset(files.apps, {files.ocr, files.captions, files.detections, files.embeddings}, opts).dataset;

  SUBCASE("detection carries only the label map") {
    const auto m = train_channel(data, ChannelId::detection, config());
    CHECK_FALSE(m.classifier.has_value());
    CHECK(m.label_map == identity_label_map(kCats));
  }
  SUBCASE("ocr keeps at most 100 features") {
    const auto m = train_channel(data, ChannelId::ocr, config());
    REQUIRE(m.classifier.has_value());
    REQUIRE(m.classifier->text_features.has_value());
    CHECK(m.classifier->text_features->dimension() <= 100);
    CHECK(m.classifier->dimension == m.classifier->text_features->dimension());
  }
  SUBCASE("text abstains for blank descriptions") {
    const auto m = train_channel(data, ChannelId::text, config());
    for (const auto& a : data.apps()) {
      const auto p = predict_channel(m, a, data.bundle(a.app_id));
      CHECK(p.abstained() == !build_channel_document(a, data.bundle(a.app_id), ChannelId::text).has_value());
    }
  }
  SUBCASE("no evidence is an error") {
    const auto bare = corpus::load_dataset(files.apps, {}, opts).dataset;
    CHECK_THROWS_AS(train_channel(bare, ChannelId::ocr, config()), InsufficientEvidence);
  }
}

TEST_CASE("embedding channel fits a separable fixture") {
  corpus::Dataset d(kCats);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int i = 0; i < 30; ++i) {
    const auto& c = kCats[static_cast<std::size_t>(i % 3)];
    const auto id = "app" + std::to_string(i);
    d.add_app(app(id, "", {"p", "q"}, c));
    for (const char* img : {"p", "q"}) {
      DenseVector v(3);
      for (std::size_t k = 0; k < 3; ++k) v[k] = (kCats[k] == c ? 1.0 : 0.0) + noise(rng);
      d.bundle_for(id).embeddings[img] = v;
    }
  }
  d.set_embedding_dimension(3);
  const auto m = train_channel(d, ChannelId::embedding, config());
  for (const auto& a : d.apps()) CHECK(predict_channel(m, a, d.bundle(a.app_id)).prediction == a.category);
  CHECK(predict_channel(m, app("none", "", {"p"}), EvidenceBundle{}).abstained());
}

TEST_CASE("separable ocr fixture predicts gold") {
  corpus::Dataset d(kCats);
  const std::map<std::string, std::string> words{
      {"beauty", "lipstick nails"}, {"decor", "lamp curtain"}, {"food", "pizza burger"}};
  for (int i = 0; i < 24; ++i) {
    const auto& c = kCats[static_cast<std::size_t>(i % 3)];
    const auto id = "app" + std::to_string(i);
    d.add_app(app(id, "", {"s"}, c));
    d.bundle_for(id).ocr_texts["s"] = words.at(c) + " shop online";
  }
  const auto m = train_channel(d, ChannelId::ocr, config());
  for (const auto& a : d.apps()) CHECK(predict_channel(m, a, d.bundle(a.app_id)).prediction == a.category);
}

TEST_CASE("channel model documents round-trip") {
  corpus::Dataset d(kCats);
  for (int i = 0; i < 9; ++i) {
    const auto& c = kCats[static_cast<std::size_t>(i % 3)];
    d.add_app(app("a" + std::to_string(i), c + " shop " + c + "ish", {}, c));
  }
  const auto m = train_channel(d, ChannelId::text, config());
  const auto doc = to_json(m);
  const auto back = channel_model_from_json(nlohmann::json::parse(doc.dump()));
  CHECK(to_json(back).dump() == doc.dump());
  for (const auto& a : d.apps()) CHECK(predict_channel(back, a, {}) == predict_channel(m, a, {}));

  auto newer = doc;
  newer["format_version"] = kChannelFormatVersion + 1;
  CHECK_THROWS_AS(channel_model_from_json(newer), ValidationError);

  ChannelModel det;
  det.channel = ChannelId::detection;
  det.label_map = {{"sofa", "decor"}};
  const auto det_back = channel_model_from_json(to_json(det));
  CHECK(det_back.channel == ChannelId::detection);
  CHECK(det_back.label_map == det.label_map);
  CHECK_FALSE(det_back.classifier.has_value());
}
