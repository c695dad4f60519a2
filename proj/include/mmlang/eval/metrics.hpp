#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmlang/core/error.hpp"
#include "mmlang/core/language.hpp"
#include "mmlang/core/task.hpp"

namespace mmlang {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double support = 0.0;  // gold count (mean over runs after aggregation)

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

// In macro mode f1/precision/recall are unweighted means over all task
// classes; in binary-positive mode they describe the positive class only.
struct MetricsReport {
  std::string task;
  MetricMode mode = MetricMode::macro;
  int positive_class = -1;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  int n_runs = 1;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Precision (recall) is 0 for a class with no predicted (gold) instances, and
// F1 is 0 whenever precision + recall is 0.
inline MetricsReport compute_metrics(std::span<const int> gold, std::span<const int> pred,
                                     const TaskSpec& task) {
  task.validate();
  if (gold.size() != pred.size())
    throw ValidationError("gold and predicted label lists differ in length");
  if (gold.empty()) throw ValidationError("no labels to score");
  const auto k = task.num_classes();
  std::vector<double> tp(k, 0), fp(k, 0), fn(k, 0), support(k, 0);
  double correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!task.valid_label(gold[i]) || !task.valid_label(pred[i]))
      throw ValidationError("label out of range for task '" + task.name + "'");
    const auto g = static_cast<std::size_t>(gold[i]);
    const auto p = static_cast<std::size_t>(pred[i]);
    support[g] += 1;
    if (g == p) {
      tp[g] += 1;
      correct += 1;
    } else {
      fp[p] += 1;
      fn[g] += 1;
    }
  }
  MetricsReport r;
  r.task = task.name;
  r.mode = task.metric_mode;
  r.positive_class = task.positive_class.value_or(-1);
  r.accuracy = correct / static_cast<double>(gold.size());
  r.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& m = r.per_class[c];
    m.precision = (tp[c] + fp[c]) > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    m.recall = (tp[c] + fn[c]) > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
    m.support = support[c];
  }
  if (task.metric_mode == MetricMode::binary_positive) {
    const auto& m = r.per_class[static_cast<std::size_t>(*task.positive_class)];
    r.precision = m.precision;
    r.recall = m.recall;
    r.f1 = m.f1;
  } else {
    for (const auto& m : r.per_class) {
      r.precision += m.precision;
      r.recall += m.recall;
      r.f1 += m.f1;
    }
    r.precision /= static_cast<double>(k);
    r.recall /= static_cast<double>(k);
    r.f1 /= static_cast<double>(k);
  }
  return r;
}

// Arithmetic mean of every metric across runs of the same task and mode.
inline MetricsReport aggregate_runs(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw ValidationError("no reports to aggregate");
  MetricsReport out = reports.front();
  const auto& first = reports.front();
  out.f1 = out.precision = out.recall = out.accuracy = 0.0;
  for (auto& c : out.per_class) c = {};
  int runs = 0;
  for (const auto& r : reports) {
    if (r.mode != first.mode || r.task != first.task || r.positive_class != first.positive_class ||
        r.per_class.size() != first.per_class.size())
      throw ValidationError("cannot aggregate reports with different task or metric mode");
    const double w = r.n_runs;
    out.f1 += r.f1 * w;
    out.precision += r.precision * w;
    out.recall += r.recall * w;
    out.accuracy += r.accuracy * w;
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
      out.per_class[c].precision += r.per_class[c].precision * w;
      out.per_class[c].recall += r.per_class[c].recall * w;
      out.per_class[c].f1 += r.per_class[c].f1 * w;
      out.per_class[c].support += r.per_class[c].support * w;
    }
    runs += r.n_runs;
  }
  const double n = runs;
  out.f1 /= n;
  out.precision /= n;
  out.recall /= n;
  out.accuracy /= n;
  for (auto& c : out.per_class) {
    c.precision /= n;
    c.recall /= n;
    c.f1 /= n;
    c.support /= n;
  }
  out.n_runs = runs;
  return out;
}

// Root-mean-square deviation of the five non-English F1 scores from English.
inline double rmsd_en(double f1_en, const std::map<Language, double>& f1_non_en) {
  auto check = [](double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("F1 value outside [0, 1]");
  };
  check(f1_en);
  if (f1_non_en.count(Language::en))
    throw ValidationError("rmsd_en takes the English score separately");
  double sum = 0.0;
  for (auto lang : kNonEnglish) {
    auto it = f1_non_en.find(lang);
    if (it == f1_non_en.end())
      throw ValidationError("missing F1 for language '" + std::string(to_string(lang)) + "'");
    check(it->second);
    const double d = f1_en - it->second;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(kNonEnglish.size()));
}

// Convenience overload taking all six languages.
inline double rmsd_en(const std::map<Language, double>& f1_all) {
  auto en = f1_all.find(Language::en);
  if (en == f1_all.end()) throw ValidationError("missing F1 for language 'en'");
  std::map<Language, double> rest(f1_all);
  rest.erase(Language::en);
  return rmsd_en(en->second, rest);
}

// Least-squares line of F1 against the language's position (0..5) in the
// pre-training corpus size order. Only slope comparisons are meaningful.
struct TrendFit {
  std::vector<Language> order;
  std::vector<double> f1;
  double slope = 0.0;
  double intercept = 0.0;
};

inline TrendFit trend_slope(const std::map<Language, double>& f1_by_language) {
  TrendFit fit;
  for (auto lang : kCorpusSizeOrder) {
    auto it = f1_by_language.find(lang);
    if (it == f1_by_language.end())
      throw ValidationError("missing F1 for language '" + std::string(to_string(lang)) + "'");
    fit.order.push_back(lang);
    fit.f1.push_back(it->second);
  }
  const double n = static_cast<double>(fit.f1.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < fit.f1.size(); ++i) {
    const double x = static_cast<double>(i);
    sx += x;
    sy += fit.f1[i];
    sxx += x * x;
    sxy += x * fit.f1[i];
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

}  // namespace mmlang
