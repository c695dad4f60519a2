#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmlang/core/error.hpp"
#include "mmlang/core/language.hpp"
#include "mmlang/core/strings.hpp"
#include "mmlang/eval/metrics.hpp"

namespace mmlang {

// Presentation rounding; all computation stays at full precision.
inline std::string format_fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& c : r.per_class)
    per_class.push_back({{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1},
                         {"support", c.support}});
  return {{"task", r.task},
          {"mode", std::string(to_string(r.mode))},
          {"positive_class", r.positive_class},
          {"f1", r.f1},
          {"precision", r.precision},
          {"recall", r.recall},
          {"accuracy", r.accuracy},
          {"per_class", per_class},
          {"n_runs", r.n_runs}};
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.task = j.at("task").get<std::string>();
  r.mode = metric_mode_from_string(j.at("mode").get<std::string>());
  r.positive_class = j.at("positive_class").get<int>();
  r.f1 = j.at("f1").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  for (const auto& c : j.at("per_class"))
    r.per_class.push_back({c.at("precision").get<double>(), c.at("recall").get<double>(),
                           c.at("f1").get<double>(), c.at("support").get<double>()});
  r.n_runs = j.at("n_runs").get<int>();
  return r;
}

// One line per evaluated example: id, gold, pred, space-separated scores.
struct PredictionRecord {
  std::string id;
  int gold = 0;
  int pred = 0;
  std::vector<float> scores;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

inline std::string write_prediction_log(std::span<const PredictionRecord> records) {
  std::string out = "id\tgold\tpred\tscores\n";
  char buf[32];
  for (const auto& r : records) {
    out += r.id + "\t" + std::to_string(r.gold) + "\t" + std::to_string(r.pred) + "\t";
    for (std::size_t i = 0; i < r.scores.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(r.scores[i]));
      if (i) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline std::vector<PredictionRecord> parse_prediction_log(std::string_view body) {
  std::vector<PredictionRecord> out;
  auto lines = strings::split(body, '\n');
  if (lines.empty() || lines[0] != "id\tgold\tpred\tscores")
    throw ParseError("prediction log has no header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = strings::split(lines[i], '\t');
    if (f.size() != 4) throw ParseError("bad prediction log line " + std::to_string(i + 1));
    PredictionRecord r;
    r.id = std::string(f[0]);
    auto g = strings::parse_int<int>(f[1]);
    auto p = strings::parse_int<int>(f[2]);
    if (!g || !p) throw ParseError("bad label in prediction log line " + std::to_string(i + 1));
    r.gold = *g;
    r.pred = *p;
    if (!f[3].empty())
      for (auto s : strings::split(f[3], ' ')) r.scores.push_back(std::stof(std::string(s)));
    out.push_back(std::move(r));
  }
  return out;
}

// Per-language mean F1 of one (task, family, modality) configuration.
struct DisparityReport {
  std::string task;
  std::string family;
  std::string modality;
  std::map<Language, double> f1;
  double rmsd = 0.0;
};

inline DisparityReport make_disparity_report(std::string task, std::string family,
                                             std::string modality,
                                             std::map<Language, double> f1) {
  DisparityReport d{std::move(task), std::move(family), std::move(modality), std::move(f1), 0.0};
  d.rmsd = rmsd_en(d.f1);
  return d;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw Error("cannot write " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mmlang
