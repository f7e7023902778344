#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace appclass::eval {

/// A predicted category, or nullopt for an undecided (all-abstain) app.
using Predicted = std::optional<std::string>;

/// Rows are gold categories, columns predicted ones. Undecided predictions
/// are tallied per gold row in a separate column.
struct ConfusionMatrix {
  std::vector<std::string> categories;
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::size_t> undecided;

  std::size_t total() const;
  std::size_t trace() const;
};

ConfusionMatrix confusion(std::span<const std::string> gold, std::span<const Predicted> predicted,
                          std::vector<std::string> categories);

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct ClassMetrics {
  std::vector<std::string> categories;
  std::vector<ClassScore> per_class;
};

/// Undecided predictions count as false negatives for their gold class.
ClassMetrics class_metrics(const ConfusionMatrix& m);

double f1_score(double precision, double recall);

enum class Average { macro, micro, weighted };

struct Summary {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Summary summarize(const ClassMetrics& metrics, Average mode);

/// The F1 component of summarize().
double aggregate(const ClassMetrics& metrics, Average mode);

/// Convenience: confusion -> class_metrics -> macro F1.
double macro_f1(std::span<const std::string> gold, std::span<const Predicted> predicted,
                const std::vector<std::string>& categories);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
  std::string to_markdown() const;
};

/// Metrics for every method the report tables cover.
struct ReportInput {
  std::vector<std::string> categories;
  ClassMetrics ocr;
  ClassMetrics caption;
  ClassMetrics detection;
  ClassMetrics embedding;
  ClassMetrics text;
  ClassMetrics ensemble;
  ClassMetrics image_only;
};

/// Per-category F1 by channel: Category, OCR, Summarization, Object Detection,
/// Text, Ensemble; then macro, micro and weighted average rows.
Table f1_by_channel_table(const ReportInput& input);

/// Image-only vs text+image ensemble F1: Category, <categories...>, Average (macro).
Table ensemble_ablation_table(const ReportInput& input);

/// Macro precision, recall and F1 per method: Method, Precision, Recall, F1-score.
Table precision_recall_table(const ReportInput& input);

/// Minimal RFC 4180 reader for the tables written by to_csv().
Table parse_csv(const std::string& text);

}  // namespace appclass::eval
