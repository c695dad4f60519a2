#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mmlang/core/error.hpp"
#include "mmlang/core/language.hpp"

namespace mmlang {

// One annotator's Likert ratings (1..5) for one translated example.
struct AnnotationRecord {
  std::string example_id;
  Language language = Language::es;
  std::string annotator_id;
  int fluency = 0;
  int meaning = 0;
  bool attention_check_passed = true;
};

enum class LikertQuestion { fluency, meaning };

inline void validate(const AnnotationRecord& r) {
  if (r.fluency < 1 || r.fluency > 5 || r.meaning < 1 || r.meaning > 5)
    throw ValidationError("Likert score outside 1..5 for example '" + r.example_id + "'");
}

// Drops every record of an annotator who failed any attention check.
inline std::vector<AnnotationRecord> filter_attention_checks(
    std::span<const AnnotationRecord> records) {
  std::set<std::string> failed;
  for (const auto& r : records)
    if (!r.attention_check_passed) failed.insert(r.annotator_id);
  std::vector<AnnotationRecord> kept;
  for (const auto& r : records)
    if (!failed.count(r.annotator_id)) kept.push_back(r);
  return kept;
}

struct LikertSummary {
  double mean_fluency = 0.0;
  double mean_meaning = 0.0;
  std::size_t n_records = 0;
};

// Mean fluency and meaning per language after attention-check filtering.
// A language present in the input that loses all its records is an error.
inline std::map<Language, LikertSummary> aggregate_likert(std::span<const AnnotationRecord> records) {
  std::set<Language> languages;
  for (const auto& r : records) {
    validate(r);
    languages.insert(r.language);
  }
  if (languages.empty()) throw ValidationError("no annotation records");
  const auto kept = filter_attention_checks(records);
  std::map<Language, LikertSummary> out;
  for (const auto& r : kept) {
    auto& s = out[r.language];
    s.mean_fluency += r.fluency;
    s.mean_meaning += r.meaning;
    s.n_records += 1;
  }
  for (auto lang : languages) {
    auto it = out.find(lang);
    if (it == out.end())
      throw ValidationError("no annotation records left for language '" +
                            std::string(to_string(lang)) + "' after attention-check filtering");
    it->second.mean_fluency /= static_cast<double>(it->second.n_records);
    it->second.mean_meaning /= static_cast<double>(it->second.n_records);
  }
  return out;
}

// Two-rater Cohen's kappa over categorical labels, (p_o - p_e) / (1 - p_e).
// When chance agreement is 1 (both raters constant and identical) it is 1.
inline double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("rater label lists differ in length");
  if (a.empty()) throw ValidationError("no labels to compare");
  std::map<int, double> ca, cb;
  double agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    if (a[i] == b[i]) agree += 1;
  }
  const double n = static_cast<double>(a.size());
  const double p_o = agree / n;
  double p_e = 0;
  for (const auto& [label, count] : ca) {
    auto it = cb.find(label);
    if (it != cb.end()) p_e += (count / n) * (it->second / n);
  }
  if (p_e >= 1.0) return 1.0;
  return (p_o - p_e) / (1.0 - p_e);
}

struct AgreementSummary {
  double mean_pairwise_kappa = 0.0;
  std::vector<double> pairwise;  // rater slots (0,1), (0,2), (1,2)
  std::size_t n_items = 0;
};

// Mean of the pairwise kappas between rater slots for one language and
// question. Within each example, ratings are ordered by annotator id and
// assigned to slots 0..k-1; only examples with exactly `raters` ratings count.
inline AgreementSummary mean_pairwise_kappa(std::span<const AnnotationRecord> records,
                                            Language language, LikertQuestion question,
                                            int raters = 3) {
  if (raters < 2) throw ValidationError("agreement needs at least two raters");
  std::map<std::string, std::vector<std::pair<std::string, int>>> by_item;
  for (const auto& r : records) {
    if (r.language != language) continue;
    validate(r);
    by_item[r.example_id].emplace_back(r.annotator_id,
                                       question == LikertQuestion::fluency ? r.fluency : r.meaning);
  }
  std::vector<std::vector<int>> slots(static_cast<std::size_t>(raters));
  AgreementSummary s;
  for (auto& [id, ratings] : by_item) {
    if (static_cast<int>(ratings.size()) != raters) continue;
    std::sort(ratings.begin(), ratings.end());
    for (int k = 0; k < raters; ++k)
      slots[static_cast<std::size_t>(k)].push_back(ratings[static_cast<std::size_t>(k)].second);
    ++s.n_items;
  }
  if (s.n_items == 0)
    throw ValidationError("no fully annotated items for language '" +
                          std::string(to_string(language)) + "'");
  for (int i = 0; i < raters; ++i)
    for (int j = i + 1; j < raters; ++j)
      s.pairwise.push_back(cohen_kappa(slots[static_cast<std::size_t>(i)],
                                       slots[static_cast<std::size_t>(j)]));
  for (double k : s.pairwise) s.mean_pairwise_kappa += k;
  s.mean_pairwise_kappa /= static_cast<double>(s.pairwise.size());
  return s;
}

}  // namespace mmlang
