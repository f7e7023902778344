#include "fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace fixtures {

namespace fs = std::filesystem;
using nlohmann::json;

TempDir::TempDir(const std::string& prefix) {
  static std::mt19937_64 rng(std::random_device{}());
  for (;;) {
    path_ = fs::temp_directory_path() / (prefix + "-" + std::to_string(rng() % 100000000));
    if (fs::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

const std::vector<std::string> kFiller = {"app",   "free",   "best",  "new",   "easy",  "daily",
                                          "top",   "great",  "simple", "fast", "smart", "store",
                                          "offer", "online", "share", "world", "plus",  "premium"};

std::string marker(const std::string& category, std::size_t i) {
  return category + "word" + std::to_string(i);
}

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }
  double gaussian(double sd) { return std::normal_distribution<double>(0.0, sd)(rng_); }

  // `length` words; each is a marker of `category` with probability
  // `signal`, otherwise a marker of a random category (probability `cross`)
  // or filler.
  std::string words(const std::string& category, const std::vector<std::string>& categories,
                    std::size_t length, double signal, double cross, std::size_t markers) {
    std::string out;
    for (std::size_t i = 0; i < length; ++i) {
      if (i) out += ' ';
      if (chance(signal))
        out += marker(category, below(markers));
      else if (chance(cross))
        out += marker(categories[below(categories.size())], below(markers));
      else
        out += kFiller[below(kFiller.size())];
    }
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

CorpusFiles write_corpus(const fs::path& dir, const CorpusSpec& spec) {
  Generator gen(spec.seed);
  constexpr std::size_t kMarkers = 25;
  const auto& cats = spec.categories;

  std::vector<std::vector<double>> centroids;
  for (std::size_t c = 0; c < cats.size(); ++c) {
    std::vector<double> centroid(spec.embedding_dim, 0.0);
    centroid[c % spec.embedding_dim] = 1.0;
    centroids.push_back(centroid);
  }

  std::ostringstream apps, ocr, captions, detections, embeddings;
  std::size_t serial = 0;
  for (std::size_t c = 0; c < cats.size(); ++c) {
    const auto& category = cats[c];
    const auto blank_count = category == spec.blanked_category
                                 ? static_cast<std::size_t>(spec.blank_fraction *
                                                            static_cast<double>(spec.apps_per_category))
                                 : 0;
    for (std::size_t a = 0; a < spec.apps_per_category; ++a) {
      const std::string app_id = "com.example." + category + "." + std::to_string(serial++);
      json images = json::array();
      for (std::size_t k = 0; k < spec.images_per_app; ++k) images.push_back("img" + std::to_string(k));
      const bool blank = a < blank_count;
      apps << json{{"app_id", app_id},
                   {"description", blank ? "" : gen.words(category, cats, 14, 0.45, 0.25, kMarkers)},
                   {"category", category},
                   {"images", images}}
                  .dump()
           << '\n';

      for (std::size_t k = 0; k < spec.images_per_app; ++k) {
        const std::string image = "img" + std::to_string(k);
        ocr << json{{"app_id", app_id}, {"image_id", image},
                    {"text", gen.words(category, cats, 8, 0.4, 0.3, kMarkers)}}
                   .dump()
            << '\n';
        captions << json{{"app_id", app_id}, {"image_id", image},
                         {"caption", "a picture of " + gen.words(category, cats, 5, 0.35, 0.35, kMarkers)},
                         {"confidence", 0.5 + 0.5 * static_cast<double>(gen.below(100)) / 100.0}}
                        .dump()
                 << '\n';
        json boxes = json::array();
        const std::size_t n_boxes = 1 + gen.below(3);
        for (std::size_t b = 0; b < n_boxes; ++b) {
          const std::string label = gen.chance(0.6) ? category : cats[gen.below(cats.size())];
          boxes.push_back({{"x", 10.0 * static_cast<double>(b)}, {"y", 5.0}, {"w", 40.0}, {"h", 30.0},
                           {"label", label}, {"confidence", 0.25 * static_cast<double>(1 + gen.below(4))}});
        }
        if (gen.chance(0.1)) boxes.push_back({{"x", 1.0}, {"y", 1.0}, {"w", 2.0}, {"h", 2.0},
                                              {"label", "sofa"}, {"confidence", 0.5}});
        detections << json{{"app_id", app_id}, {"image_id", image}, {"boxes", boxes}}.dump() << '\n';

        std::vector<double> vec(spec.embedding_dim);
        for (std::size_t d = 0; d < spec.embedding_dim; ++d) vec[d] = centroids[c][d] + gen.gaussian(0.6);
        embeddings << json{{"app_id", app_id}, {"image_id", image}, {"vector", vec}}.dump() << '\n';
      }
    }
  }

  CorpusFiles files{dir / "apps.jsonl",       dir / "ocr.jsonl",        dir / "captions.jsonl",
                    dir / "detections.jsonl", dir / "embeddings.jsonl", dir / "config.toml"};
  write_text(files.apps, apps.str());
  write_text(files.ocr, ocr.str());
  write_text(files.captions, captions.str());
  write_text(files.detections, detections.str());
  write_text(files.embeddings, embeddings.str());
  write_text(files.config, default_config_toml(cats));
  return files;
}

std::string default_config_toml(const std::vector<std::string>& categories, std::uint64_t seed) {
  std::string out = "categories = [";
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + categories[i] + "\"";
  }
  out += "]\nseed = " + std::to_string(seed) +
         "\ntop_k = 100\n\n[svm]\nC = 1.0\ngamma = 0.001\ntolerance = 1e-4\nmax_epochs = 1000\n";
  return out;
}

}  // namespace fixtures
