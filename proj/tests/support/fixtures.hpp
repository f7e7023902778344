#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

struct CorpusSpec {
  std::size_t apps_per_category = 100;
  std::vector<std::string> categories{"beauty", "decor", "food"};
  /// Category whose descriptions are partly blanked.
  std::string blanked_category = "food";
  double blank_fraction = 0.3;
  std::size_t images_per_app = 3;
  std::size_t embedding_dim = 8;
  std::uint64_t seed = 20181020;
};

struct CorpusFiles {
  std::filesystem::path apps, ocr, captions, detections, embeddings, config;
};

/// Writes a synthetic multi-channel corpus. Each category owns a set of
/// marker words; descriptions, OCR text and captions mix markers with
/// shared filler words, detection boxes mostly carry the true category,
/// and embeddings cluster around a per-category centroid. A fraction of
/// one category's descriptions are empty while its images stay
/// informative.
CorpusFiles write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec);

/// Default TOML config for the given categories.
std::string default_config_toml(const std::vector<std::string>& categories, std::uint64_t seed = 7);

}  // namespace fixtures
