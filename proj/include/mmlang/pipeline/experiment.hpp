#pragma once

#include <fnmatch.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmlang/core/error.hpp"
#include "mmlang/core/language.hpp"
#include "mmlang/core/manifest.hpp"
#include "mmlang/synth/synthbench.hpp"
#include "mmlang/text/encoder.hpp"
#include "mmlang/train/early_stopping.hpp"

namespace mmlang {

enum class CellModality { text, image, multimodal };

constexpr std::string_view to_string(CellModality m) {
  switch (m) {
    case CellModality::text: return "text";
    case CellModality::image: return "image";
    case CellModality::multimodal: return "multimodal";
  }
  return "?";
}

inline CellModality cell_modality_from_string(std::string_view s) {
  if (s == "text") return CellModality::text;
  if (s == "image") return CellModality::image;
  if (s == "multimodal") return CellModality::multimodal;
  throw ValidationError("unknown modality '" + std::string(s) + "'");
}

// Image cells do not depend on language or encoder family.
inline constexpr std::string_view kSharedFamily = "shared";
inline constexpr std::string_view kAllLanguagesTag = "all";

struct TrainingOverrides {
  std::optional<double> learning_rate;
  std::optional<int> patience;
  std::optional<int> max_epochs;
  std::optional<int> batch_size;

  TrainingConfig apply(TrainingConfig c) const {
    if (learning_rate) c.learning_rate = *learning_rate;
    if (patience) c.patience = *patience;
    if (max_epochs) c.max_epochs = *max_epochs;
    if (batch_size) c.batch_size = *batch_size;
    c.validate();
    return c;
  }
};

struct TranslatorSettings {
  std::string kind = "stub";  // "stub" or "http"
  std::string url;
  std::string path = "/translate";
  std::string model = "marian-opus-mt";
  int workers = 4;
};

struct ExperimentTask {
  std::string name;
  std::optional<SynthConfig> synthetic;
  std::map<Language, std::filesystem::path> manifests;   // en required unless synthetic
  std::map<Language, std::filesystem::path> human_test;  // human-translated test subsets
  std::filesystem::path image_root;                      // defaults to the en manifest's dir
  bool clean = false;                                    // clean en text before translation
};

struct ExperimentManifest {
  std::string name = "experiment";
  std::vector<ExperimentTask> tasks;
  std::vector<Language> languages{kAllLanguages.begin(), kAllLanguages.end()};
  std::vector<EncoderFamily> families{EncoderFamily::monolingual, EncoderFamily::multilingual};
  std::vector<CellModality> modalities{CellModality::text, CellModality::image,
                                       CellModality::multimodal};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::map<std::string, std::string> text_encoders;  // "multilingual" or a language code -> id
  std::string backbone = "vgg16-imagenet";
  TranslatorSettings translator;
  std::filesystem::path translation_cache;
  TrainingOverrides text_training, image_training, fusion_training;
  std::filesystem::path output_dir = "runs";
  int workers = 1;

  const ExperimentTask& task(std::string_view name) const {
    for (const auto& t : tasks)
      if (t.name == name) return t;
    throw ValidationError("experiment has no task '" + std::string(name) + "'");
  }

  std::string encoder_id(EncoderFamily family, Language lang) const {
    const auto key = family == EncoderFamily::multilingual ? std::string("multilingual")
                                                           : std::string(to_string(lang));
    auto it = text_encoders.find(key);
    return it != text_encoders.end() ? it->second : default_encoder_id(family, lang);
  }

  TextEncoderSpec encoder_spec(EncoderFamily family, Language lang) const {
    TextEncoderSpec s;
    s.encoder_id = encoder_id(family, lang);
    s.family = family;
    s.language = lang;
    return s;
  }

  TrainingConfig training(CellModality m, std::uint64_t seed) const {
    TrainingConfig c = m == CellModality::text    ? text_training.apply(TrainingConfig::text_defaults())
                       : m == CellModality::image ? image_training.apply(TrainingConfig::image_defaults())
                                                  : fusion_training.apply(TrainingConfig::fusion_defaults());
    c.seed = seed;
    return c;
  }

  std::filesystem::path cache_path() const {
    return translation_cache.empty() ? output_dir / "translation_cache.tsv" : translation_cache;
  }

  void validate() const {
    if (tasks.empty()) throw ValidationError("experiment lists no tasks");
    if (seeds.empty()) throw ValidationError("experiment lists no seeds");
    if (families.empty()) throw ValidationError("experiment lists no model families");
    if (modalities.empty()) throw ValidationError("experiment lists no modalities");
    if (std::find(languages.begin(), languages.end(), Language::en) == languages.end())
      throw ValidationError("languages must include en");
    if (workers < 1) throw ValidationError("workers must be at least 1");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const auto& t = tasks[i];
      if (t.name.empty() || t.name.find('/') != std::string::npos)
        throw ValidationError("invalid task name '" + t.name + "'");
      for (std::size_t j = 0; j < i; ++j)
        if (tasks[j].name == t.name) throw ValidationError("duplicate task '" + t.name + "'");
      if (t.synthetic) {
        t.synthetic->validate();
      } else if (!t.manifests.count(Language::en)) {
        throw ValidationError("task '" + t.name + "' needs an en manifest or a synthetic config");
      }
    }
    if (translator.kind != "stub" && translator.kind != "http")
      throw ValidationError("translator kind must be 'stub' or 'http'");
    if (translator.kind == "http" && translator.url.empty())
      throw ValidationError("http translator needs a url");
  }
};

namespace detail {

using nlohmann::json;

template <class T>
T json_get(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline TrainingOverrides overrides_from_json(const json& j) {
  TrainingOverrides o;
  if (j.contains("learning_rate")) o.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("patience")) o.patience = j.at("patience").get<int>();
  if (j.contains("max_epochs")) o.max_epochs = j.at("max_epochs").get<int>();
  if (j.contains("batch_size")) o.batch_size = j.at("batch_size").get<int>();
  for (const auto& [k, v] : j.items())
    if (k != "learning_rate" && k != "patience" && k != "max_epochs" && k != "batch_size")
      throw ValidationError("unknown training key '" + k + "'");
  return o;
}

inline std::map<Language, std::filesystem::path> language_paths(const json& j,
                                                                const std::filesystem::path& base) {
  std::map<Language, std::filesystem::path> out;
  for (const auto& [k, v] : j.items()) out[language_from_string(k)] = resolve(base, v.get<std::string>());
  return out;
}

}  // namespace detail

inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
  using detail::json_get;
  SynthConfig c;
  c.task_name = json_get<std::string>(j, "task", c.task_name);
  c.num_classes = json_get<int>(j, "num_classes", c.num_classes);
  if (j.contains("n_per_split")) {
    const auto& n = j.at("n_per_split");
    c.sizes.train = n.at("train").get<std::size_t>();
    c.sizes.validation = n.at("validation").get<std::size_t>();
    c.sizes.test = n.at("test").get<std::size_t>();
  }
  c.text_dim = json_get<int>(j, "text_dim", c.text_dim);
  c.image_dim = json_get<int>(j, "image_dim", c.image_dim);
  if (j.contains("sigma_text")) {
    const auto& s = j.at("sigma_text");
    if (s.is_number()) {
      for (auto& [l, v] : c.sigma_text) v = s.get<double>();
    } else {
      for (const auto& [k, v] : s.items()) c.sigma_text[language_from_string(k)] = v.get<double>();
    }
  }
  c.sigma_image = json_get<double>(j, "sigma_image", c.sigma_image);
  c.separation = json_get<double>(j, "separation", c.separation);
  c.seed = json_get<std::uint64_t>(j, "seed", c.seed);
  c.toy_assets = json_get<bool>(j, "toy_assets", c.toy_assets);
  c.validate();
  return c;
}

inline nlohmann::json to_json(const SynthConfig& c) {
  nlohmann::json sigma;
  for (const auto& [l, v] : c.sigma_text) sigma[std::string(to_string(l))] = v;
  return {{"task", c.task_name},
          {"num_classes", c.num_classes},
          {"n_per_split",
           {{"train", c.sizes.train}, {"validation", c.sizes.validation}, {"test", c.sizes.test}}},
          {"text_dim", c.text_dim},
          {"image_dim", c.image_dim},
          {"sigma_text", sigma},
          {"sigma_image", c.sigma_image},
          {"separation", c.separation},
          {"seed", c.seed},
          {"toy_assets", c.toy_assets}};
}

// Relative paths are resolved against base_dir (normally the manifest's dir).
inline ExperimentManifest experiment_from_json(const nlohmann::json& j,
                                               const std::filesystem::path& base_dir) {
  using detail::json_get;
  ExperimentManifest m;
  try {
    m.name = json_get<std::string>(j, "name", m.name);
    m.output_dir = detail::resolve(base_dir, json_get<std::string>(j, "output_dir", "runs"));
    m.workers = json_get<int>(j, "workers", m.workers);
    if (j.contains("languages")) {
      m.languages.clear();
      for (const auto& s : j.at("languages")) m.languages.push_back(language_from_string(s.get<std::string>()));
    }
    if (j.contains("families")) {
      m.families.clear();
      for (const auto& s : j.at("families"))
        m.families.push_back(encoder_family_from_string(s.get<std::string>()));
    }
    if (j.contains("modalities")) {
      m.modalities.clear();
      for (const auto& s : j.at("modalities"))
        m.modalities.push_back(cell_modality_from_string(s.get<std::string>()));
    }
    if (j.contains("seeds")) m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("resources")) {
      const auto& r = j.at("resources");
      if (r.contains("text_encoders"))
        m.text_encoders = r.at("text_encoders").get<std::map<std::string, std::string>>();
      m.backbone = json_get<std::string>(r, "backbone", m.backbone);
      if (r.contains("translator")) {
        const auto& t = r.at("translator");
        m.translator.kind = json_get<std::string>(t, "kind", m.translator.kind);
        m.translator.url = json_get<std::string>(t, "url", m.translator.url);
        m.translator.path = json_get<std::string>(t, "path", m.translator.path);
        m.translator.model = json_get<std::string>(t, "model", m.translator.model);
        m.translator.workers = json_get<int>(t, "workers", m.translator.workers);
      }
      if (r.contains("translation_cache"))
        m.translation_cache = detail::resolve(base_dir, r.at("translation_cache").get<std::string>());
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      if (t.contains("text")) m.text_training = detail::overrides_from_json(t.at("text"));
      if (t.contains("image")) m.image_training = detail::overrides_from_json(t.at("image"));
      if (t.contains("fusion")) m.fusion_training = detail::overrides_from_json(t.at("fusion"));
    }
    for (const auto& tj : j.at("tasks")) {
      ExperimentTask t;
      t.name = tj.at("name").get<std::string>();
      if (tj.contains("synthetic")) {
        auto cfg = synth_config_from_json(tj.at("synthetic"));
        cfg.task_name = t.name;
        t.synthetic = cfg;
      }
      if (tj.contains("manifests")) t.manifests = detail::language_paths(tj.at("manifests"), base_dir);
      if (tj.contains("human_test")) t.human_test = detail::language_paths(tj.at("human_test"), base_dir);
      if (tj.contains("image_root"))
        t.image_root = detail::resolve(base_dir, tj.at("image_root").get<std::string>());
      t.clean = json_get<bool>(tj, "clean", false);
      m.tasks.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed experiment manifest: ") + e.what());
  }
  m.validate();
  return m;
}

inline ExperimentManifest load_experiment(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("cannot parse " + path.string() + ": " + e.what());
  }
  return experiment_from_json(j, path.has_parent_path() ? path.parent_path() : ".");
}

// One (task, family, language, modality, seed) unit of work.
struct Cell {
  std::string task;
  std::string family;
  std::string language;
  CellModality modality = CellModality::text;
  std::uint64_t seed = 0;

  std::string key() const {
    return task + "/" + family + "/" + language + "/" + std::string(to_string(modality)) +
           "/seed-" + std::to_string(seed);
  }
  std::filesystem::path dir(const std::filesystem::path& root) const { return root / key(); }

  friend bool operator==(const Cell&, const Cell&) = default;
};

inline Cell text_cell(const std::string& task, EncoderFamily f, Language l, std::uint64_t seed) {
  return {task, std::string(to_string(f)), std::string(to_string(l)), CellModality::text, seed};
}
inline Cell image_cell(const std::string& task, std::uint64_t seed) {
  return {task, std::string(kSharedFamily), std::string(kAllLanguagesTag), CellModality::image, seed};
}
inline Cell multimodal_cell(const std::string& task, EncoderFamily f, Language l, std::uint64_t seed) {
  return {task, std::string(to_string(f)), std::string(to_string(l)), CellModality::multimodal, seed};
}

// Every cell the experiment defines, ordered by task, modality, family,
// language, seed. Multimodal cells pull in the text and image cells they
// consume even when those modalities are not listed.
inline std::vector<Cell> expand_cells(const ExperimentManifest& m) {
  auto has = [&](CellModality x) {
    return std::find(m.modalities.begin(), m.modalities.end(), x) != m.modalities.end();
  };
  const bool mm = has(CellModality::multimodal);
  std::vector<Cell> cells;
  for (const auto& t : m.tasks) {
    if (has(CellModality::text) || mm)
      for (auto f : m.families)
        for (auto l : m.languages)
          for (auto s : m.seeds) cells.push_back(text_cell(t.name, f, l, s));
    if (has(CellModality::image) || mm)
      for (auto s : m.seeds) cells.push_back(image_cell(t.name, s));
    if (mm)
      for (auto f : m.families)
        for (auto l : m.languages)
          for (auto s : m.seeds) cells.push_back(multimodal_cell(t.name, f, l, s));
  }
  return cells;
}

// Shell-style glob over the cell key, e.g. "crisis/*/hi/*/seed-0".
inline bool cell_matches(const Cell& c, const std::string& pattern) {
  return pattern.empty() || ::fnmatch(pattern.c_str(), c.key().c_str(), 0) == 0;
}

}  // namespace mmlang
