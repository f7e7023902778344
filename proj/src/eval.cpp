#include "appclass/eval.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "appclass/io.hpp"

namespace appclass::eval {

namespace {

std::size_t category_index(const std::vector<std::string>& categories, const std::string& name) {
  auto it = std::find(categories.begin(), categories.end(), name);
  if (it == categories.end()) throw std::invalid_argument("unknown category: " + name);
  return static_cast<std::size_t>(it - categories.begin());
}

std::string cell(double value) { return io::format_fixed(value, 2); }

// Display width in code points, for aligning UTF-8 markdown cells.
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::size_t ConfusionMatrix::total() const {
  std::size_t sum = std::accumulate(undecided.begin(), undecided.end(), std::size_t{0});
  for (const auto& row : counts) sum = std::accumulate(row.begin(), row.end(), sum);
  return sum;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t sum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[i][i];
  return sum;
}

ConfusionMatrix confusion(std::span<const std::string> gold, std::span<const Predicted> predicted,
                          std::vector<std::string> categories) {
  if (gold.size() != predicted.size())
    throw std::invalid_argument("gold and predicted sequences differ in length");
  ConfusionMatrix m;
  m.categories = std::move(categories);
  const auto k = m.categories.size();
  m.counts.assign(k, std::vector<std::size_t>(k, 0));
  m.undecided.assign(k, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = category_index(m.categories, gold[i]);
    if (predicted[i])
      ++m.counts[g][category_index(m.categories, *predicted[i])];
    else
      ++m.undecided[g];
  }
  return m;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

ClassMetrics class_metrics(const ConfusionMatrix& m) {
  ClassMetrics out;
  out.categories = m.categories;
  const auto k = m.categories.size();
  for (std::size_t c = 0; c < k; ++c) {
    ClassScore s;
    s.tp = m.counts[c][c];
    std::size_t predicted_c = 0;
    for (std::size_t g = 0; g < k; ++g) predicted_c += m.counts[g][c];
    s.fp = predicted_c - s.tp;
    s.support = std::accumulate(m.counts[c].begin(), m.counts[c].end(), m.undecided[c]);
    s.fn = s.support - s.tp;
    s.precision = predicted_c > 0 ? static_cast<double>(s.tp) / static_cast<double>(predicted_c) : 0.0;
    s.recall = s.support > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.support) : 0.0;
    s.f1 = f1_score(s.precision, s.recall);
    out.per_class.push_back(s);
  }
  return out;
}

Summary summarize(const ClassMetrics& metrics, Average mode) {
  Summary s;
  const auto& pc = metrics.per_class;
  if (pc.empty()) return s;
  switch (mode) {
    case Average::macro: {
      for (const auto& c : pc) {
        s.precision += c.precision;
        s.recall += c.recall;
        s.f1 += c.f1;
      }
      const auto n = static_cast<double>(pc.size());
      s.precision /= n;
      s.recall /= n;
      s.f1 /= n;
      break;
    }
    case Average::micro: {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (const auto& c : pc) {
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
      }
      s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
      s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
      s.f1 = f1_score(s.precision, s.recall);
      break;
    }
    case Average::weighted: {
      std::size_t total = 0;
      for (const auto& c : pc) total += c.support;
      if (total == 0) break;
      for (const auto& c : pc) {
        const double w = static_cast<double>(c.support) / static_cast<double>(total);
        s.precision += w * c.precision;
        s.recall += w * c.recall;
        s.f1 += w * c.f1;
      }
      break;
    }
  }
  return s;
}

double aggregate(const ClassMetrics& metrics, Average mode) { return summarize(metrics, mode).f1; }

double macro_f1(std::span<const std::string> gold, std::span<const Predicted> predicted,
                const std::vector<std::string>& categories) {
  return aggregate(class_metrics(confusion(gold, predicted, categories)), Average::macro);
}

std::string Table::to_csv() const {
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_field(row[i]);
    }
    out += '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out;
}

std::string Table::to_markdown() const {
  std::vector<std::size_t> width(header.size(), 3);
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = std::max(width[i], display_width(header[i]));
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i)
      width[i] = std::max(width[i], display_width(row[i]));

  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    out += '|';
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string value = i < row.size() ? row[i] : "";
      out += ' ';
      out += value;
      out.append(width[i] - display_width(value), ' ');
      out += " |";
    }
    out += '\n';
  };
  emit(header);
  out += '|';
  for (auto w : width) {
    out.append(w + 2, '-');
    out += '|';
  }
  out += '\n';
  for (const auto& row : rows) emit(row);
  return out;
}

Table f1_by_channel_table(const ReportInput& in) {
  Table t;
  t.header = {"Category", "OCR", "Summarization", "Object Detection", "Text", "Ensemble"};
  const ClassMetrics* columns[] = {&in.ocr, &in.caption, &in.detection, &in.text, &in.ensemble};
  for (std::size_t c = 0; c < in.categories.size(); ++c) {
    std::vector<std::string> row{in.categories[c]};
    for (const auto* m : columns) row.push_back(cell(m->per_class.at(c).f1));
    t.rows.push_back(std::move(row));
  }
  const std::pair<const char*, Average> averages[] = {{"Average (macro)", Average::macro},
                                                      {"Average (micro)", Average::micro},
                                                      {"Average (weighted)", Average::weighted}};
  for (auto [label, mode] : averages) {
    std::vector<std::string> row{label};
    for (const auto* m : columns) row.push_back(cell(aggregate(*m, mode)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table ensemble_ablation_table(const ReportInput& in) {
  Table t;
  t.header.push_back("Category");
  for (const auto& c : in.categories) t.header.push_back(c);
  t.header.push_back("Average");
  const std::pair<const char*, const ClassMetrics*> rows[] = {{"Image only", &in.image_only},
                                                              {"Text + image", &in.ensemble}};
  for (auto [label, m] : rows) {
    std::vector<std::string> row{label};
    for (const auto& s : m->per_class) row.push_back(cell(s.f1));
    row.push_back(cell(aggregate(*m, Average::macro)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table precision_recall_table(const ReportInput& in) {
  Table t;
  t.header = {"Method", "Precision", "Recall", "F1-score"};
  const std::pair<const char*, const ClassMetrics*> rows[] = {
      {"OCR", &in.ocr},           {"Summarization", &in.caption}, {"Object Detection", &in.detection},
      {"Embedding", &in.embedding}, {"Text", &in.text},           {"Ensemble", &in.ensemble}};
  for (auto [label, m] : rows) {
    const auto s = summarize(*m, Average::macro);
    t.rows.push_back({label, cell(s.precision), cell(s.recall), cell(s.f1)});
  }
  return t;
}

Table parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw std::invalid_argument("unterminated quoted CSV field");
  if (any) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  Table t;
  if (records.empty()) return t;
  t.header = std::move(records.front());
  t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return t;
}

}  // namespace appclass::eval
