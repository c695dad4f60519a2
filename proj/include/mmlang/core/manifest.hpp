#pragma once

// Manifest files: UTF-8, tab-separated, one example per line.
//
//   # mmlang-manifest v1
//   # task<TAB>crisis
//   # classes<TAB>label0<TAB>label1...
//   # metric<TAB>macro | binary-positive
//   # positive<TAB>- | <class index>
//   # language<TAB>en
//   # provenance<TAB>original | machine-translated | human-translated
//   id<TAB>split<TAB>label<TAB>image_ref<TAB>text
//   <records...>
//
// Only the text column is escaped (\\ \t \n \r). Writing is canonical, so a
// manifest written by save_manifest reloads and re-saves byte for byte.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "mmlang/core/dataset.hpp"
#include "mmlang/core/error.hpp"
#include "mmlang/core/strings.hpp"

namespace mmlang {

inline constexpr std::string_view kManifestMagic = "# mmlang-manifest v1";
inline constexpr std::string_view kManifestColumns = "id\tsplit\tlabel\timage_ref\ttext";

inline std::string write_manifest(const DatasetVersion& dv) {
  validate(dv);
  for (const auto& c : dv.task.classes)
    if (strings::has_control_separator(c))
      throw ValidationError("class label contains a tab or newline");
  std::string out;
  out += kManifestMagic;
  out += "\n# task\t" + dv.task.name + "\n# classes";
  for (const auto& c : dv.task.classes) out += "\t" + c;
  out += "\n# metric\t";
  out += to_string(dv.task.metric_mode);
  out += "\n# positive\t";
  out += dv.task.positive_class ? std::to_string(*dv.task.positive_class) : "-";
  out += "\n# language\t";
  out += to_string(dv.language);
  out += "\n# provenance\t";
  out += to_string(dv.provenance);
  out += "\n";
  out += kManifestColumns;
  out += "\n";
  for (const auto& e : dv.examples) {
    if (strings::has_control_separator(e.id) || strings::has_control_separator(e.image_ref))
      throw ValidationError("id or image_ref of '" + e.id + "' contains a tab or newline");
    out += e.id;
    out += '\t';
    out += to_string(e.split);
    out += '\t';
    out += std::to_string(e.label);
    out += '\t';
    out += e.image_ref;
    out += '\t';
    out += strings::escape_field(e.text);
    out += '\n';
  }
  return out;
}

inline void save_manifest(const DatasetVersion& dv, const std::filesystem::path& path) {
  const auto body = write_manifest(dv);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write manifest " + path.string());
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw Error("cannot write manifest " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace detail {

inline std::string_view header_value(std::string_view line, std::string_view key,
                                     std::size_t line_no) {
  const std::string prefix = "# " + std::string(key) + "\t";
  if (line.substr(0, prefix.size()) != prefix)
    throw ParseError("manifest line " + std::to_string(line_no) + ": expected header '" +
                     std::string(key) + "'");
  return line.substr(prefix.size());
}

}  // namespace detail

// Parses manifest text. The task spec is taken from the header block.
inline DatasetVersion parse_manifest(std::string_view body) {
  if (body.empty()) throw ParseError("no examples");
  if (body.back() != '\n') throw ParseError("manifest does not end with a newline");
  auto lines = strings::split(body.substr(0, body.size() - 1), '\n');
  constexpr std::size_t kHeaderLines = 8;
  if (lines.size() < kHeaderLines) {
    if (lines.size() >= 1 && lines[0] == kManifestMagic) throw ParseError("no examples");
    throw ParseError("manifest header is incomplete");
  }
  if (lines[0] != kManifestMagic) throw ParseError("not an mmlang manifest (bad magic line)");

  DatasetVersion dv;
  dv.task.name = std::string(detail::header_value(lines[1], "task", 2));
  for (auto c : strings::split(detail::header_value(lines[2], "classes", 3), '\t'))
    dv.task.classes.emplace_back(c);
  dv.task.metric_mode = metric_mode_from_string(detail::header_value(lines[3], "metric", 4));
  const auto positive = detail::header_value(lines[4], "positive", 5);
  if (positive != "-") {
    auto idx = strings::parse_int<int>(positive);
    if (!idx) throw ParseError("manifest line 5: bad positive class '" + std::string(positive) + "'");
    dv.task.positive_class = *idx;
  }
  dv.language = language_from_string(detail::header_value(lines[5], "language", 6));
  const auto prov = detail::header_value(lines[6], "provenance", 7);
  auto p = parse_provenance(prov);
  if (!p) throw ParseError("manifest line 7: unknown provenance '" + std::string(prov) + "'");
  dv.provenance = *p;
  if (lines[7] != kManifestColumns) throw ParseError("manifest line 8: bad column header");
  dv.task.validate();

  for (std::size_t i = kHeaderLines; i < lines.size(); ++i) {
    const auto line_no = std::to_string(i + 1);
    auto fields = strings::split(lines[i], '\t');
    if (fields.size() != 5)
      throw ParseError("manifest line " + line_no + ": expected 5 fields, got " +
                       std::to_string(fields.size()));
    MultimodalExample e;
    e.id = std::string(fields[0]);
    auto split = parse_split(fields[1]);
    if (!split) throw ParseError("manifest line " + line_no + ": unknown split '" +
                                 std::string(fields[1]) + "'");
    e.split = *split;
    auto label = strings::parse_int<int>(fields[2]);
    if (!label) throw ParseError("manifest line " + line_no + ": bad label '" +
                                 std::string(fields[2]) + "'");
    e.label = *label;
    e.image_ref = std::string(fields[3]);
    auto text = strings::unescape_field(fields[4]);
    if (!text) throw ParseError("manifest line " + line_no + ": bad escape in text");
    e.text = std::move(*text);
    e.language = dv.language;
    dv.examples.push_back(std::move(e));
  }
  validate(dv);
  return dv;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline DatasetVersion load_manifest(const std::filesystem::path& path) {
  try {
    return parse_manifest(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// Loads and checks the header against the expected task definition.
inline DatasetVersion load_manifest(const std::filesystem::path& path, const TaskSpec& task) {
  auto dv = load_manifest(path);
  if (dv.task != task)
    throw ValidationError(path.string() + ": manifest task '" + dv.task.name +
                          "' does not match expected task '" + task.name + "'");
  return dv;
}

// image_refs that do not name an existing file under root. Missing images are
// reported here at load time; training refuses them.
inline std::vector<std::string> unresolved_images(const DatasetVersion& dv,
                                                  const std::filesystem::path& root) {
  std::vector<std::string> missing;
  for (const auto& e : dv.examples) {
    std::filesystem::path p(e.image_ref);
    if (p.is_relative()) p = root / p;
    if (!std::filesystem::exists(p)) missing.push_back(e.id);
  }
  return missing;
}

}  // namespace mmlang
