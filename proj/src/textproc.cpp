#include "appclass/textproc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace appclass::textproc {

Tokens tokenize(std::string_view text) {
  Tokens tokens;
  std::string current;
  std::size_t code_points = 0;
  auto flush = [&] {
    if (code_points >= 2) tokens.push_back(current);
    current.clear();
    code_points = 0;
  };

  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  std::int32_t offset = 0;
  while (offset < length) {
    UChar32 c;
    U8_NEXT(bytes, offset, length, c);
    if (c < 0 || !u_isalnum(c)) {
      flush();
      continue;
    }
    const UChar32 lower = u_tolower(c);
    char buf[U8_MAX_LENGTH];
    std::int32_t n = 0;
    UBool error = false;
    U8_APPEND(reinterpret_cast<std::uint8_t*>(buf), n, U8_MAX_LENGTH, lower, error);
    if (error) continue;
    current.append(buf, static_cast<std::size_t>(n));
    ++code_points;
  }
  flush();
  return tokens;
}

Vocabulary Vocabulary::from_terms(std::vector<std::string> terms, std::vector<std::size_t> df) {
  if (terms.size() != df.size()) throw std::invalid_argument("terms and df differ in length");
  std::vector<std::size_t> order(terms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return terms[a] < terms[b]; });

  Vocabulary vocab;
  for (auto i : order) {
    if (df[i] == 0) throw std::invalid_argument("document frequency must be >= 1: " + terms[i]);
    if (!vocab.terms_.empty() && vocab.terms_.back() == terms[i])
      throw std::invalid_argument("duplicate vocabulary term: " + terms[i]);
    vocab.index_.emplace(terms[i], vocab.terms_.size());
    vocab.terms_.push_back(std::move(terms[i]));
    vocab.df_.push_back(df[i]);
  }
  return vocab;
}

std::optional<std::size_t> Vocabulary::find(std::string_view term) const {
  auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary fit_vocabulary(std::span<const Tokens> documents, std::size_t min_df) {
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    Tokens unique = doc;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (auto& term : unique) ++df[term];
  }
  std::vector<std::string> terms;
  std::vector<std::size_t> counts;
  for (auto& [term, count] : df) {
    if (count < std::max<std::size_t>(min_df, 1)) continue;
    terms.push_back(term);
    counts.push_back(count);
  }
  return Vocabulary::from_terms(std::move(terms), std::move(counts));
}

SparseVector::SparseVector(std::vector<SparseEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 1; i < entries_.size(); ++i)
    if (entries_[i].index <= entries_[i - 1].index)
      throw std::invalid_argument("sparse indices must be strictly increasing");
}

SparseVector SparseVector::from_dense(std::span<const double> values) {
  std::vector<SparseEntry> entries;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] != 0.0) entries.push_back({i, values[i]});
  return SparseVector(std::move(entries));
}

double SparseVector::squared_norm() const {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.value * e.value;
  return sum;
}

double SparseVector::dot(std::span<const double> dense) const {
  double sum = 0.0;
  for (const auto& e : entries_)
    if (e.index < dense.size()) sum += e.value * dense[e.index];
  return sum;
}

std::vector<double> idf_weights(const Vocabulary& vocab, std::size_t corpus_size) {
  std::vector<double> idf(vocab.size());
  const auto n = static_cast<double>(corpus_size);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto df = static_cast<double>(vocab.document_frequency()[i]);
    idf[i] = std::log((1.0 + n) / (1.0 + df)) + 1.0;
  }
  return idf;
}

SparseVector tfidf_encode(const Tokens& tokens, const Vocabulary& vocab,
                          std::span<const double> idf) {
  std::map<std::size_t, double> counts;
  for (const auto& token : tokens)
    if (auto pos = vocab.find(token)) counts[*pos] += 1.0;

  std::vector<SparseEntry> entries;
  entries.reserve(counts.size());
  double norm2 = 0.0;
  for (auto [index, count] : counts) {
    const double value = count * idf[index];
    entries.push_back({index, value});
    norm2 += value * value;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& e : entries) e.value *= inv;
  }
  return SparseVector(std::move(entries));
}

SparseVector tfidf_encode(const Tokens& tokens, const Vocabulary& vocab, std::size_t corpus_size) {
  const auto idf = idf_weights(vocab, corpus_size);
  return tfidf_encode(tokens, vocab, idf);
}

std::vector<std::size_t> presence(const Tokens& tokens, const Vocabulary& vocab) {
  std::vector<std::size_t> out;
  for (const auto& token : tokens)
    if (auto pos = vocab.find(token)) out.push_back(*pos);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> chi_square_scores(std::span<const std::vector<std::size_t>> doc_presence,
                                      std::span<const std::size_t> labels,
                                      const Vocabulary& vocab,
                                      std::span<const std::string> categories) {
  if (doc_presence.size() != labels.size())
    throw std::invalid_argument("documents and labels differ in length");
  const std::size_t n_terms = vocab.size();
  const std::size_t n_cats = categories.size();

  std::vector<double> docs_in_class(n_cats, 0.0);
  std::vector<double> docs_with_term(n_terms, 0.0);
  std::vector<double> joint(n_terms * n_cats, 0.0);  // [term][category]
  for (std::size_t d = 0; d < doc_presence.size(); ++d) {
    const auto c = labels[d];
    if (c >= n_cats) throw std::invalid_argument("label index outside the category list");
    docs_in_class[c] += 1.0;
    auto terms = doc_presence[d];
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (auto t : terms) {
      if (t >= n_terms) throw std::invalid_argument("term index outside the vocabulary");
      docs_with_term[t] += 1.0;
      joint[t * n_cats + c] += 1.0;
    }
  }

  const auto n = static_cast<double>(doc_presence.size());
  std::vector<double> scores(n_terms, 0.0);
  for (std::size_t t = 0; t < n_terms; ++t) {
    double best = 0.0;
    for (std::size_t c = 0; c < n_cats; ++c) {
      const double a = joint[t * n_cats + c];      // term, class
      const double b = docs_with_term[t] - a;      // term, other
      const double cc = docs_in_class[c] - a;      // no term, class
      const double d = n - a - b - cc;             // no term, other
      const double denom = (a + b) * (cc + d) * (a + cc) * (b + d);
      if (denom <= 0.0) continue;
      const double diff = a * d - b * cc;
      best = std::max(best, n * diff * diff / denom);
    }
    scores[t] = best;
  }
  return scores;
}

FeatureMask select_top_k(std::span<const double> scores, std::span<const std::string> terms,
                         std::size_t k) {
  if (scores.size() != terms.size()) throw std::invalid_argument("scores and terms differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return terms[a] < terms[b];
  });
  order.resize(std::min(k, order.size()));
  std::sort(order.begin(), order.end());
  return FeatureMask{std::move(order), k};
}

SparseVector apply_mask(const SparseVector& v, const FeatureMask& mask) {
  std::vector<SparseEntry> out;
  const auto& sel = mask.selected;
  auto it = sel.begin();
  for (const auto& e : v.entries()) {
    it = std::lower_bound(it, sel.end(), e.index);
    if (it == sel.end()) break;
    if (*it == e.index) out.push_back({static_cast<std::size_t>(it - sel.begin()), e.value});
  }
  return SparseVector(std::move(out));
}

SparseVector TextFeaturizer::transform(const Tokens& tokens) const {
  return apply_mask(tfidf_encode(tokens, vocab, idf), mask);
}

TextFeaturizer fit_featurizer(std::span<const Tokens> documents, std::span<const std::size_t> labels,
                              std::span<const std::string> categories,
                              const FeaturizerOptions& options) {
  TextFeaturizer f;
  f.vocab = fit_vocabulary(documents, options.min_df);
  f.corpus_size = documents.size();
  f.idf = idf_weights(f.vocab, f.corpus_size);
  std::vector<std::vector<std::size_t>> doc_presence;
  doc_presence.reserve(documents.size());
  for (const auto& doc : documents) doc_presence.push_back(presence(doc, f.vocab));
  const auto scores = chi_square_scores(doc_presence, labels, f.vocab, categories);
  f.mask = select_top_k(scores, f.vocab.terms(), options.top_k);
  return f;
}

}  // namespace appclass::textproc
