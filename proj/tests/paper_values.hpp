#pragma once

#include <array>
#include <map>
#include <string>

#include "mmlang/core/language.hpp"

// Published per-language F1 scores (rows en, es, fr, pt, zh, hi) and the
// disparity values printed next to the bar charts built from them.
namespace mmlang::paper {

struct Row {
  std::string label;
  std::array<double, 6> f1;  // en, es, fr, pt, zh, hi
  double rmsd;
};

inline std::map<Language, double> as_map(const std::array<double, 6>& f1) {
  const std::array<Language, 6> order{Language::en, Language::es, Language::fr,
                                      Language::pt, Language::zh, Language::hi};
  std::map<Language, double> out;
  for (std::size_t i = 0; i < 6; ++i) out[order[i]] = f1[i];
  return out;
}

inline const std::array<Row, 12>& disparity_rows() {
  static const std::array<Row, 12> rows{{
      {"monolingual text crisis", {0.71, 0.64, 0.69, 0.67, 0.65, 0.63}, 0.06},
      {"monolingual text fake_news", {0.59, 0.54, 0.56, 0.57, 0.56, 0.54}, 0.04},
      {"monolingual text emotion", {0.79, 0.75, 0.76, 0.71, 0.72, 0.70}, 0.07},
      {"monolingual multimodal crisis", {0.73, 0.72, 0.71, 0.71, 0.70, 0.68}, 0.03},
      {"monolingual multimodal fake_news", {0.60, 0.59, 0.58, 0.59, 0.58, 0.56}, 0.02},
      {"monolingual multimodal emotion", {0.85, 0.82, 0.81, 0.81, 0.80, 0.78}, 0.05},
      {"multilingual text crisis", {0.70, 0.62, 0.68, 0.66, 0.62, 0.47}, 0.11},
      {"multilingual text fake_news", {0.61, 0.57, 0.58, 0.54, 0.54, 0.43}, 0.09},
      {"multilingual text emotion", {0.77, 0.74, 0.72, 0.71, 0.69, 0.64}, 0.08},
      {"multilingual multimodal crisis", {0.75, 0.75, 0.74, 0.76, 0.73, 0.64}, 0.05},
      {"multilingual multimodal fake_news", {0.61, 0.60, 0.58, 0.56, 0.55, 0.46}, 0.08},
      {"multilingual multimodal emotion", {0.80, 0.76, 0.76, 0.77, 0.77, 0.75}, 0.04},
  }};
  return rows;
}

// Human-translated crisis subset.
inline const std::array<Row, 4>& human_subset_rows() {
  static const std::array<Row, 4> rows{{
      {"monolingual text", {0.68, 0.63, 0.64, 0.63, 0.64, 0.61}, 0.05},
      {"monolingual multimodal", {0.72, 0.69, 0.70, 0.68, 0.67, 0.66}, 0.04},
      {"multilingual text", {0.69, 0.62, 0.63, 0.61, 0.60, 0.44}, 0.15},
      {"multilingual multimodal", {0.73, 0.72, 0.72, 0.69, 0.66, 0.61}, 0.06},
  }};
  return rows;
}

}  // namespace mmlang::paper
