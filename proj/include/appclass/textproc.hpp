#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace appclass::textproc {

using Tokens = std::vector<std::string>;

/// Lowercases (Unicode simple case mapping) and splits on every code point
/// that is not a letter or digit. Tokens shorter than two code points are
/// dropped. Invalid UTF-8 bytes act as separators.
Tokens tokenize(std::string_view text);

/// Terms in lexicographic (byte) order with their document frequencies.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from (term, df) pairs; terms must be unique and df >= 1.
  static Vocabulary from_terms(std::vector<std::string> terms, std::vector<std::size_t> df);

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<std::size_t>& document_frequency() const { return df_; }
  std::optional<std::size_t> find(std::string_view term) const;

 private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

Vocabulary fit_vocabulary(std::span<const Tokens> documents, std::size_t min_df = 1);

struct SparseEntry {
  std::size_t index = 0;
  double value = 0.0;

  bool operator==(const SparseEntry&) const = default;
};

/// Indices strictly increasing.
class SparseVector {
 public:
  SparseVector() = default;
  /// Throws std::invalid_argument unless indices are strictly increasing.
  explicit SparseVector(std::vector<SparseEntry> entries);

  static SparseVector from_dense(std::span<const double> values);

  const std::vector<SparseEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t nnz() const { return entries_.size(); }
  double squared_norm() const;
  double dot(std::span<const double> dense) const;

  bool operator==(const SparseVector&) const = default;

 private:
  std::vector<SparseEntry> entries_;
};

/// Smoothed idf: ln((1 + N) / (1 + df)) + 1.
std::vector<double> idf_weights(const Vocabulary& vocab, std::size_t corpus_size);

/// Raw count times idf, L2-normalized; out-of-vocabulary tokens are ignored.
SparseVector tfidf_encode(const Tokens& tokens, const Vocabulary& vocab, std::size_t corpus_size);
SparseVector tfidf_encode(const Tokens& tokens, const Vocabulary& vocab,
                          std::span<const double> idf);

/// Sorted vocabulary positions of the distinct in-vocabulary tokens.
std::vector<std::size_t> presence(const Tokens& tokens, const Vocabulary& vocab);

/// One-vs-rest 2x2 presence chi-square per term, maximized over categories.
/// `labels[d]` is the index of document d's category in `categories`.
std::vector<double> chi_square_scores(std::span<const std::vector<std::size_t>> doc_presence,
                                      std::span<const std::size_t> labels,
                                      const Vocabulary& vocab,
                                      std::span<const std::string> categories);

struct FeatureMask {
  std::vector<std::size_t> selected;  // strictly increasing
  std::size_t k = 0;

  bool operator==(const FeatureMask&) const = default;
};

inline constexpr std::size_t kDefaultTopK = 100;

/// Keeps the k highest scores; ties at the cutoff go to the lexicographically
/// smaller term. `terms[i]` names feature i.
FeatureMask select_top_k(std::span<const double> scores, std::span<const std::string> terms,
                         std::size_t k = kDefaultTopK);

/// Projects onto the mask and renumbers to 0..|mask|-1. Values are not
/// renormalized.
SparseVector apply_mask(const SparseVector& v, const FeatureMask& mask);

/// Fitted vocabulary, idf table and chi-square mask for one text channel.
struct TextFeaturizer {
  Vocabulary vocab;
  std::size_t corpus_size = 0;
  std::vector<double> idf;
  FeatureMask mask;

  std::size_t dimension() const { return mask.selected.size(); }
  SparseVector transform(const Tokens& tokens) const;
};

struct FeaturizerOptions {
  std::size_t top_k = kDefaultTopK;
  std::size_t min_df = 1;
};

TextFeaturizer fit_featurizer(std::span<const Tokens> documents, std::span<const std::size_t> labels,
                              std::span<const std::string> categories,
                              const FeaturizerOptions& options);

}  // namespace appclass::textproc
