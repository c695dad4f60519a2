#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmlang/eval/metrics.hpp"
#include "mmlang/eval/reporting.hpp"
#include "mmlang/pipeline/run.hpp"

namespace mmlang {

// Seed-averaged metrics of one (task, family, modality) configuration.
struct ConfigurationSummary {
  std::string task;
  std::string family;
  CellModality modality = CellModality::text;
  std::map<Language, MetricsReport> by_language;
  std::map<Language, MetricsReport> human_by_language;

  std::map<Language, double> f1() const {
    std::map<Language, double> out;
    for (const auto& [l, r] : by_language) out[l] = r.f1;
    return out;
  }

  bool has_all_languages() const { return by_language.size() == kAllLanguages.size(); }

  std::optional<double> rmsd() const {
    if (!has_all_languages()) return std::nullopt;
    return rmsd_en(f1());
  }

  std::optional<TrendFit> trend() const {
    if (!has_all_languages()) return std::nullopt;
    return trend_slope(f1());
  }

  // English on the original test set against human-translated test sets.
  std::map<Language, double> human_f1() const {
    std::map<Language, double> out;
    if (auto en = by_language.find(Language::en); en != by_language.end()) out[Language::en] = en->second.f1;
    for (const auto& [l, r] : human_by_language)
      if (l != Language::en) out[l] = r.f1;
    return out;
  }
};

struct LedgerSummary {
  std::vector<ConfigurationSummary> configurations;  // text and multimodal
  std::vector<std::pair<std::string, MetricsReport>> image;  // per task

  const ConfigurationSummary* find(const std::string& task, const std::string& family,
                                   CellModality m) const {
    for (const auto& c : configurations)
      if (c.task == task && c.family == family && c.modality == m) return &c;
    return nullptr;
  }
};

// Groups complete cells and averages them over seeds. Configuration order
// follows the first appearance in the ledger.
inline LedgerSummary summarize(const Ledger& ledger) {
  using Group = std::map<std::string, std::vector<MetricsReport>>;
  std::vector<std::tuple<std::string, std::string, CellModality>> order;
  std::map<std::tuple<std::string, std::string, CellModality>, std::pair<Group, Group>> groups;
  std::vector<std::string> image_order;
  std::map<std::string, std::vector<MetricsReport>> image;
  for (const auto& r : ledger.cells) {
    if (r.status != "complete" || !r.metrics) continue;
    const auto& c = r.cell;
    if (c.modality == CellModality::image) {
      if (!image.count(c.task)) image_order.push_back(c.task);
      image[c.task].push_back(*r.metrics);
      continue;
    }
    const auto key = std::make_tuple(c.task, c.family, c.modality);
    if (!groups.count(key)) order.push_back(key);
    auto& [main, human] = groups[key];
    main[c.language].push_back(*r.metrics);
    if (r.human_metrics) human[c.language].push_back(*r.human_metrics);
  }
  LedgerSummary s;
  for (const auto& key : order) {
    ConfigurationSummary cs;
    std::tie(cs.task, cs.family, cs.modality) = key;
    const auto& [main, human] = groups.at(key);
    for (const auto& [l, reports] : main) cs.by_language[language_from_string(l)] = aggregate_runs(reports);
    for (const auto& [l, reports] : human)
      cs.human_by_language[language_from_string(l)] = aggregate_runs(reports);
    s.configurations.push_back(std::move(cs));
  }
  for (const auto& t : image_order) s.image.emplace_back(t, aggregate_runs(image.at(t)));
  return s;
}

namespace detail {

inline std::string cell_or_dash(const std::map<Language, double>& m, Language l) {
  auto it = m.find(l);
  return it == m.end() ? "-" : format_fixed(it->second);
}

inline std::string opt_fixed(const std::optional<double>& v, int decimals = 2) {
  return v ? format_fixed(*v, decimals) : "-";
}

inline std::string language_header() {
  std::string h;
  for (auto l : kAllLanguages) h += "\t" + std::string(to_string(l));
  return h;
}

inline std::string f1_table(const LedgerSummary& s, CellModality m) {
  std::string out = "task\tfamily" + language_header() + "\trmsd_en\n";
  for (const auto& c : s.configurations) {
    if (c.modality != m) continue;
    const auto f1 = c.f1();
    out += c.task + "\t" + c.family;
    for (auto l : kAllLanguages) out += "\t" + cell_or_dash(f1, l);
    out += "\t" + opt_fixed(c.rmsd()) + "\n";
  }
  return out;
}

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string svg_text(double x, double y, const std::string& body,
                            const std::string& extra = "") {
  return "<text x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", y) + "\" " + extra + ">" + body +
         "</text>\n";
}

inline constexpr const char* kTextColor = "#1f5fbf";
inline constexpr const char* kMultimodalColor = "#d62728";

// Grouped bars of F1 per language: blue text-only, red multimodal, each
// annotated with its RMSD_en.
inline std::string disparity_svg(const std::string& task, const std::string& family,
                                 const ConfigurationSummary* text,
                                 const ConfigurationSummary* mm) {
  const double W = 640, H = 380, left = 60, right = 20, top = 70, bottom = 50;
  const double plot_w = W - left - right, plot_h = H - top - bottom;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"380\" "
                  "viewBox=\"0 0 640 380\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"380\" fill=\"white\"/>\n";
  s += svg_text(left, 20, task + " / " + family + ": F1 by language", "font-size=\"14\"");
  double ann_y = 40;
  for (const auto* c : {text, mm}) {
    if (!c) continue;
    const bool is_text = c == text;
    s += svg_text(left + (is_text ? 0 : 260), ann_y,
                  std::string("RMSD_en ") + (is_text ? "text-only" : "multimodal") + " = " +
                      opt_fixed(c->rmsd()),
                  is_text ? "fill=\"#1f5fbf\"" : "fill=\"#d62728\"");
  }
  // Axes and gridlines at 0, 0.25, ..., 1.
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0, y = top + plot_h * (1 - v);
    s += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", y) + "\" x2=\"" +
         fmt("%.1f", left + plot_w) + "\" y2=\"" + fmt("%.1f", y) + "\" stroke=\"#ddd\"/>\n";
    s += svg_text(left - 8, y + 4, format_fixed(v), "text-anchor=\"end\"");
  }
  s += svg_text(16, top + plot_h / 2, "F1", "transform=\"rotate(-90 16 " + fmt("%.1f", top + plot_h / 2) + ")\"");
  const double group_w = plot_w / static_cast<double>(kAllLanguages.size());
  const double bar_w = group_w * 0.35;
  for (std::size_t g = 0; g < kAllLanguages.size(); ++g) {
    const auto lang = kAllLanguages[g];
    const double gx = left + group_w * static_cast<double>(g);
    int slot = 0;
    for (const auto* c : {text, mm}) {
      if (c) {
        if (auto it = c->by_language.find(lang); it != c->by_language.end()) {
          const double v = it->second.f1, h = plot_h * v;
          const double x = gx + group_w * 0.15 + bar_w * slot;
          s += "<rect class=\"" + std::string(c == text ? "text" : "multimodal") + "\" x=\"" +
               fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", top + plot_h - h) + "\" width=\"" +
               fmt("%.1f", bar_w) + "\" height=\"" + fmt("%.1f", h) + "\" fill=\"" +
               (c == text ? kTextColor : kMultimodalColor) + "\"/>\n";
          s += svg_text(x + bar_w / 2, top + plot_h - h - 4, format_fixed(v),
                        "text-anchor=\"middle\" font-size=\"9\"");
        }
      }
      ++slot;
    }
    s += svg_text(gx + group_w / 2, top + plot_h + 18, std::string(to_string(lang)),
                  "text-anchor=\"middle\"");
  }
  s += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", top + plot_h) + "\" x2=\"" +
       fmt("%.1f", left + plot_w) + "\" y2=\"" + fmt("%.1f", top + plot_h) + "\" stroke=\"black\"/>\n";
  s += "</svg>\n";
  return s;
}

// F1 against pre-training corpus rank with least-squares lines and slopes.
inline std::string trend_svg(const std::string& task, const std::string& family,
                             const ConfigurationSummary* text, const ConfigurationSummary* mm) {
  const double W = 640, H = 380, left = 60, right = 20, top = 70, bottom = 50;
  const double plot_w = W - left - right, plot_h = H - top - bottom;
  auto px = [&](double rank) { return left + plot_w * (rank + 0.5) / 6.0; };
  auto py = [&](double f1) { return top + plot_h * (1 - f1); };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"380\" "
                  "viewBox=\"0 0 640 380\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"380\" fill=\"white\"/>\n";
  s += svg_text(left, 20, task + " / " + family + ": F1 vs pre-training corpus rank",
                "font-size=\"14\"");
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    s += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", py(v)) + "\" x2=\"" +
         fmt("%.1f", left + plot_w) + "\" y2=\"" + fmt("%.1f", py(v)) + "\" stroke=\"#ddd\"/>\n";
    s += svg_text(left - 8, py(v) + 4, format_fixed(v), "text-anchor=\"end\"");
  }
  for (std::size_t r = 0; r < kCorpusSizeOrder.size(); ++r)
    s += svg_text(px(static_cast<double>(r)), top + plot_h + 18,
                  std::string(to_string(kCorpusSizeOrder[r])), "text-anchor=\"middle\"");
  double ann_x = left;
  for (const auto* c : {text, mm}) {
    if (!c) continue;
    const char* color = c == text ? kTextColor : kMultimodalColor;
    const auto fit = c->trend();
    const std::string label = c == text ? "text-only" : "multimodal";
    s += svg_text(ann_x, 40, label + ": m = " + (fit ? format_fixed(fit->slope, 3) : "-"),
                  std::string("fill=\"") + color + "\"");
    ann_x += 260;
    for (std::size_t r = 0; r < kCorpusSizeOrder.size(); ++r)
      if (auto it = c->by_language.find(kCorpusSizeOrder[r]); it != c->by_language.end())
        s += "<circle cx=\"" + fmt("%.1f", px(static_cast<double>(r))) + "\" cy=\"" +
             fmt("%.1f", py(it->second.f1)) + "\" r=\"4\" fill=\"" + color + "\"/>\n";
    if (fit)
      s += "<line x1=\"" + fmt("%.1f", px(0)) + "\" y1=\"" + fmt("%.1f", py(fit->intercept)) +
           "\" x2=\"" + fmt("%.1f", px(5)) + "\" y2=\"" +
           fmt("%.1f", py(fit->intercept + 5 * fit->slope)) + "\" stroke=\"" + color +
           "\" stroke-dasharray=\"6 3\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

inline std::string file_safe(std::string s) {
  for (auto& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  return s;
}

}  // namespace detail

// Writes the metric tables (tab-separated, two decimals) and SVG figures.
// Output is a pure function of the ledger. Returns the written paths.
inline std::vector<std::filesystem::path> emit_report(const Ledger& ledger,
                                                      const std::filesystem::path& dir) {
  if (ledger.count("complete") == 0) throw ValidationError("empty ledger: no evaluated cells");
  const auto s = summarize(ledger);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& body) {
    write_text_file(dir / name, body);
    written.push_back(dir / name);
  };

  put("table_text.tsv", detail::f1_table(s, CellModality::text));
  put("table_multimodal.tsv", detail::f1_table(s, CellModality::multimodal));

  std::string image = "task\tf1\tprecision\trecall\taccuracy\n";
  for (const auto& [task, r] : s.image)
    image += task + "\t" + format_fixed(r.f1) + "\t" + format_fixed(r.precision) + "\t" +
             format_fixed(r.recall) + "\t" + format_fixed(r.accuracy) + "\n";
  put("table_image.tsv", image);

  std::string human = "task\tfamily\tmodality" + detail::language_header() + "\trmsd_en\n";
  bool any_human = false;
  for (const auto& c : s.configurations) {
    if (c.human_by_language.empty()) continue;
    any_human = true;
    const auto f1 = c.human_f1();
    human += c.task + "\t" + c.family + "\t" + std::string(to_string(c.modality));
    for (auto l : kAllLanguages) human += "\t" + detail::cell_or_dash(f1, l);
    human += "\t" + (f1.size() == kAllLanguages.size() ? format_fixed(rmsd_en(f1)) : std::string("-")) + "\n";
  }
  if (any_human) put("table_human.tsv", human);

  std::string disparity = "task\tfamily\tmodality\trmsd_en\n";
  std::string trend = "task\tfamily\tmodality\tslope\tintercept\n";
  for (const auto& c : s.configurations) {
    const auto mod = std::string(to_string(c.modality));
    disparity += c.task + "\t" + c.family + "\t" + mod + "\t" + detail::opt_fixed(c.rmsd()) + "\n";
    const auto fit = c.trend();
    trend += c.task + "\t" + c.family + "\t" + mod + "\t" +
             (fit ? format_fixed(fit->slope) + "\t" + format_fixed(fit->intercept) : "-\t-") + "\n";
  }
  put("disparity.tsv", disparity);
  put("trend.tsv", trend);

  std::vector<std::pair<std::string, std::string>> seen;
  for (const auto& c : s.configurations) {
    const std::pair<std::string, std::string> key{c.task, c.family};
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    const auto* text = s.find(c.task, c.family, CellModality::text);
    const auto* mm = s.find(c.task, c.family, CellModality::multimodal);
    const auto stem = detail::file_safe(c.task) + "_" + detail::file_safe(c.family);
    put("disparity_" + stem + ".svg", detail::disparity_svg(c.task, c.family, text, mm));
    put("trend_" + stem + ".svg", detail::trend_svg(c.task, c.family, text, mm));
  }
  return written;
}

}  // namespace mmlang
