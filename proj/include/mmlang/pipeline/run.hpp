#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mmlang/core/dataset.hpp"
#include "mmlang/core/manifest.hpp"
#include "mmlang/eval/metrics.hpp"
#include "mmlang/eval/reporting.hpp"
#include "mmlang/fusion/embedding_cache.hpp"
#include "mmlang/fusion/fusion.hpp"
#include "mmlang/image/backbone.hpp"
#include "mmlang/image/model.hpp"
#include "mmlang/pipeline/embedding_runs.hpp"
#include "mmlang/pipeline/experiment.hpp"
#include "mmlang/preprocess/text_clean.hpp"
#include "mmlang/synth/synthbench.hpp"
#include "mmlang/synth/toy_images.hpp"
#include "mmlang/text/encoder.hpp"
#include "mmlang/translate/cache.hpp"
#include "mmlang/translate/http_translator.hpp"
#include "mmlang/translate/translate_dataset.hpp"

namespace mmlang {

inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kHumanMetricsFile = "metrics_human.json";
inline constexpr const char* kMetadataFile = "metadata.json";
inline constexpr const char* kPredictionsFile = "predictions.tsv";
inline constexpr const char* kHumanPredictionsFile = "predictions_human.tsv";
inline constexpr const char* kCheckpointFile = "model.bin";
inline constexpr const char* kEmbeddingsFile = "embeddings.emb";
inline constexpr const char* kHumanEmbeddingsFile = "embeddings_human.emb";
inline constexpr const char* kErrorFile = "error.txt";
inline constexpr const char* kLedgerFile = "ledger.json";

inline nlohmann::json to_json(const TaskSpec& t) {
  nlohmann::json j{{"name", t.name},
                   {"classes", t.classes},
                   {"metric", std::string(to_string(t.metric_mode))}};
  j["positive_class"] = t.positive_class ? nlohmann::json(*t.positive_class) : nlohmann::json();
  return j;
}

inline TaskSpec task_from_json(const nlohmann::json& j) {
  TaskSpec t;
  t.name = j.at("name").get<std::string>();
  t.classes = j.at("classes").get<std::vector<std::string>>();
  t.metric_mode = metric_mode_from_string(j.at("metric").get<std::string>());
  if (!j.at("positive_class").is_null()) t.positive_class = j.at("positive_class").get<int>();
  t.validate();
  return t;
}

inline nlohmann::json to_json(const TrainingConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"patience", c.patience},
          {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed}};
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("cannot parse " + path.string() + ": " + e.what());
  }
}

// Status of one cell as recorded in the run directory.
struct CellRecord {
  Cell cell;
  std::string status = "pending";  // pending | complete | failed
  std::string error;
  std::optional<MetricsReport> metrics;
  std::optional<MetricsReport> human_metrics;
  int best_epoch = 0;
  int stopped_epoch = 0;
  double best_val_loss = 0.0;
};

struct Ledger {
  std::string experiment;
  std::vector<CellRecord> cells;

  std::size_t count(std::string_view status) const {
    return static_cast<std::size_t>(std::count_if(
        cells.begin(), cells.end(), [&](const CellRecord& r) { return r.status == status; }));
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : cells) {
      nlohmann::json c{{"key", r.cell.key()},
                       {"task", r.cell.task},
                       {"family", r.cell.family},
                       {"language", r.cell.language},
                       {"modality", std::string(mmlang::to_string(r.cell.modality))},
                       {"seed", r.cell.seed},
                       {"status", r.status}};
      if (!r.error.empty()) c["error"] = r.error;
      if (r.metrics) {
        c["metrics"] = mmlang::to_json(*r.metrics);
        c["best_epoch"] = r.best_epoch;
        c["stopped_epoch"] = r.stopped_epoch;
        c["best_val_loss"] = r.best_val_loss;
      }
      if (r.human_metrics) c["human_metrics"] = mmlang::to_json(*r.human_metrics);
      arr.push_back(std::move(c));
    }
    return {{"experiment", experiment}, {"cells", arr}};
  }

  static Ledger from_json(const nlohmann::json& j) {
    Ledger l;
    l.experiment = j.at("experiment").get<std::string>();
    for (const auto& c : j.at("cells")) {
      CellRecord r;
      r.cell = {c.at("task").get<std::string>(), c.at("family").get<std::string>(),
                c.at("language").get<std::string>(),
                cell_modality_from_string(c.at("modality").get<std::string>()),
                c.at("seed").get<std::uint64_t>()};
      r.status = c.at("status").get<std::string>();
      if (c.contains("error")) r.error = c.at("error").get<std::string>();
      if (c.contains("metrics")) {
        r.metrics = metrics_from_json(c.at("metrics"));
        r.best_epoch = c.at("best_epoch").get<int>();
        r.stopped_epoch = c.at("stopped_epoch").get<int>();
        r.best_val_loss = c.at("best_val_loss").get<double>();
      }
      if (c.contains("human_metrics")) r.human_metrics = metrics_from_json(c.at("human_metrics"));
      l.cells.push_back(std::move(r));
    }
    return l;
  }

  void save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }
  static Ledger load(const std::filesystem::path& path) {
    try {
      return from_json(read_json_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed ledger " + path.string() + ": " + e.what());
    }
  }
};

inline CellRecord read_cell_record(const Cell& cell, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  CellRecord r;
  r.cell = cell;
  const auto dir = cell.dir(root);
  if (fs::exists(dir / kMetricsFile)) {
    r.status = "complete";
    r.metrics = metrics_from_json(read_json_file(dir / kMetricsFile));
    if (fs::exists(dir / kHumanMetricsFile))
      r.human_metrics = metrics_from_json(read_json_file(dir / kHumanMetricsFile));
    const auto meta = read_json_file(dir / kMetadataFile);
    r.best_epoch = meta.at("best_epoch").get<int>();
    r.stopped_epoch = meta.at("stopped_epoch").get<int>();
    r.best_val_loss = meta.at("best_val_loss").get<double>();
  } else if (fs::exists(dir / kErrorFile)) {
    r.status = "failed";
    r.error = read_file(dir / kErrorFile);
  }
  return r;
}

// Ledger rebuilt from the run directories of every cell in the experiment.
inline Ledger scan_ledger(const ExperimentManifest& m) {
  Ledger l;
  l.experiment = m.name;
  for (const auto& c : expand_cells(m)) l.cells.push_back(read_cell_record(c, m.output_dir));
  return l;
}

inline std::unique_ptr<Translator> make_translator(const TranslatorSettings& s) {
  if (s.kind == "http") return std::make_unique<HttpTranslator>(s.url, s.path, s.model);
  return std::make_unique<TaggingTranslator>();
}

struct RunOptions {
  bool force = false;        // retrain selected cells even when complete
  std::string only;          // glob over cell keys; empty selects all
  std::shared_ptr<Translator> translator;  // overrides the manifest's translator
  std::function<void(const std::string&)> log;
};

struct RunSummary {
  Ledger ledger;
  int trained = 0;  // training runs performed by this invocation
  int skipped = 0;  // selected cells that were already complete
  int failed = 0;
};

class ExperimentRunner {
 public:
  ExperimentRunner(ExperimentManifest m, RunOptions opts = {})
      : m_(std::move(m)), opts_(std::move(opts)) {
    m_.validate();
    for (const auto& c : expand_cells(m_)) cell_locks_[c.key()] = std::make_unique<std::mutex>();
  }

  const ExperimentManifest& manifest() const { return m_; }

  // Loads, cleans and translates the datasets of a task (at most once).
  // Translated versions are stored under <out>/<task>/data and reused.
  void prepare_task(const std::string& name) {
    std::lock_guard lock(prepare_mu_);
    if (data_.count(name)) {
      if (!data_.at(name).error.empty()) throw Error(data_.at(name).error);
      return;
    }
    auto& td = data_[name];
    try {
      load_task(m_.task(name), td);
    } catch (const std::exception& e) {
      td.error = "task '" + name + "' could not be prepared: " + e.what();
      throw Error(td.error);
    }
  }

  const DatasetVersion& version(const std::string& task, Language lang) {
    prepare_task(task);
    return data_.at(task).versions.at(lang);
  }

  RunSummary run() {
    const auto cells = expand_cells(m_);
    std::vector<Cell> unimodal, fusion;
    for (const auto& c : cells) {
      if (!cell_matches(c, opts_.only)) continue;
      (c.modality == CellModality::multimodal ? fusion : unimodal).push_back(c);
    }
    std::filesystem::create_directories(m_.output_dir);
    ledger_ = scan_ledger(m_);
    for (const auto& t : m_.tasks) {
      try {
        prepare_task(t.name);
      } catch (const std::exception& e) {
        log(e.what());
      }
    }
    run_phase(unimodal);
    run_phase(fusion);
    RunSummary s;
    s.ledger = scan_ledger(m_);
    s.ledger.save(m_.output_dir / kLedgerFile);
    s.trained = trained_.load();
    s.skipped = skipped_.load();
    s.failed = failed_.load();
    return s;
  }

 private:
  struct TaskData {
    TaskSpec task;
    std::map<Language, DatasetVersion> versions;
    std::map<Language, DatasetVersion> human;
    std::optional<SynthBenchmark> bench;  // set for synthetic tasks
    bool embeddings_only = false;         // synthetic tasks without toy assets
    ImageSource images;
    std::string error;
  };

  void log(const std::string& msg) {
    if (opts_.log) {
      std::lock_guard lock(log_mu_);
      opts_.log(msg);
    }
  }

  Translator& translator() {
    if (opts_.translator) return *opts_.translator;
    if (!own_translator_) {
      own_translator_ = make_translator(m_.translator);
      if (m_.translator.kind == "stub")
        log("warning: using the tagging stub translator; translations are placeholders");
    }
    return *own_translator_;
  }

  void load_task(const ExperimentTask& t, TaskData& td) {
    namespace fs = std::filesystem;
    const auto data_dir = m_.output_dir / t.name / "data";
    if (t.synthetic) {
      td.bench = generate_synthetic(*t.synthetic);
      const auto paths = synth_output_paths(*t.synthetic, data_dir);
      bool present = fs::exists(paths.image_embeddings);
      for (const auto& [l, p] : paths.manifests) present = present && fs::exists(p);
      if (!present) write_synthetic(*td.bench, data_dir);
      td.task = td.bench->task;
      for (const auto& v : td.bench->versions) td.versions[v.language] = v;
      td.embeddings_only = !t.synthetic->toy_assets;
      td.images = synthetic_image_source();
      return;
    }

    const auto builtin = tasks::builtin(t.name);
    const auto en_path = t.manifests.at(Language::en);
    DatasetVersion en = builtin ? load_manifest(en_path, *builtin) : load_manifest(en_path);
    if (en.language != Language::en) throw ValidationError("en manifest is not English");
    if (en.task.name != t.name)
      throw ValidationError("manifest task '" + en.task.name + "' does not match '" + t.name + "'");
    if (t.clean) {
      for (auto& e : en.examples) e.text = clean_text(e.text);
      const auto p = data_dir / (t.name + "_en.tsv");
      if (!fs::exists(p) || read_file(p) != write_manifest(en)) save_manifest(en, p);
    }
    td.task = en.task;
    td.images = file_image_source(t.image_root.empty() ? en_path.parent_path() : t.image_root);

    std::vector<DatasetVersion> all{en};
    for (auto lang : m_.languages) {
      if (lang == Language::en) continue;
      DatasetVersion v;
      const auto stored = data_dir / (t.name + "_" + std::string(to_string(lang)) + ".tsv");
      if (auto it = t.manifests.find(lang); it != t.manifests.end()) {
        v = load_manifest(it->second, td.task);
      } else if (fs::exists(stored)) {
        v = load_manifest(stored, td.task);
      } else {
        log("translating " + t.name + " to " + std::string(to_string(lang)));
        TranslationCache cache(m_.cache_path());
        TranslateOptions o;
        o.workers = m_.translator.workers;
        v = translate_dataset(en, lang, translator(), cache, o);
        save_manifest(v, stored);
      }
      if (v.language != lang) throw ValidationError("manifest for " + std::string(to_string(lang)) + " has another language");
      all.push_back(std::move(v));
    }
    if (const auto bad = check_parallel(all); !bad.empty())
      throw ValidationError("language versions are not parallel; first mismatched id '" + bad.front() + "'");
    for (auto& v : all) td.versions[v.language] = std::move(v);

    for (const auto& [lang, path] : t.human_test) {
      auto h = load_manifest(path, td.task);
      if (h.language != lang) throw ValidationError("human test manifest language mismatch");
      for (const auto& e : h.examples) {
        const auto* orig = td.versions.at(Language::en).find(e.id);
        if (!orig || orig->split != Split::test || orig->label != e.label || e.split != Split::test)
          throw ValidationError("human test example '" + e.id + "' is not a test example of the task");
      }
      td.human[lang] = std::move(h);
    }
  }

  void run_phase(const std::vector<Cell>& cells) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const auto i = next.fetch_add(1);
        if (i >= cells.size()) return;
        run_top(cells[i]);
      }
    };
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(m_.workers), cells.size());
    if (n <= 1) {
      worker();
      return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }

  void run_top(const Cell& c) {
    try {
      ensure(c, opts_.force, true);
    } catch (const std::exception& e) {
      failed_.fetch_add(1);
      log("FAILED " + c.key() + ": " + e.what());
    }
    std::lock_guard lock(ledger_mu_);
    for (auto& r : ledger_.cells)
      if (r.cell == c) r = read_cell_record(c, m_.output_dir);
    ledger_.save(m_.output_dir / kLedgerFile);
  }

  static bool complete(const std::filesystem::path& dir) {
    return std::filesystem::exists(dir / kMetricsFile);
  }

  // Trains and evaluates a cell unless it is already complete.
  void ensure(const Cell& c, bool force, bool top) {
    std::lock_guard lock(*cell_locks_.at(c.key()));
    const auto dir = c.dir(m_.output_dir);
    if (!force && complete(dir)) {
      if (top) skipped_.fetch_add(1);
      return;
    }
    // A cell that already failed in this invocation is not retried as a
    // dependency of another cell.
    {
      std::lock_guard f(failures_mu_);
      if (auto it = failures_.find(c.key()); it != failures_.end()) throw Error(it->second);
    }
    try {
      prepare_task(c.task);
      std::filesystem::create_directories(dir);
      std::filesystem::remove(dir / kMetricsFile);
      std::filesystem::remove(dir / kHumanMetricsFile);
      std::filesystem::remove(dir / kErrorFile);
      const auto& td = data_.at(c.task);
      log("training " + c.key());
      switch (c.modality) {
        case CellModality::text: run_text(c, td, dir); break;
        case CellModality::image: run_image(c, td, dir); break;
        case CellModality::multimodal: run_multimodal(c, td, dir); break;
      }
    } catch (const std::exception& e) {
      {
        std::lock_guard f(failures_mu_);
        failures_[c.key()] = e.what();
      }
      try {
        write_text_file(dir / kErrorFile, e.what());
      } catch (...) {
      }
      throw;
    }
    trained_.fetch_add(1);
  }

  struct FitSummary {
    int best_epoch = 0;
    int stopped_epoch = 0;
    double best_val_loss = 0.0;
  };

  nlohmann::json base_metadata(const Cell& c, const TaskData& td, const TrainingConfig& cfg,
                               const FitSummary& fit) const {
    return {{"cell", c.key()},
            {"task", to_json(td.task)},
            {"family", c.family},
            {"language", c.language},
            {"modality", std::string(mmlang::to_string(c.modality))},
            {"seed", c.seed},
            {"config", to_json(cfg)},
            {"best_epoch", fit.best_epoch},
            {"stopped_epoch", fit.stopped_epoch},
            {"best_val_loss", fit.best_val_loss},
            {"mode", td.embeddings_only ? "embeddings" : "encoders"}};
  }

  static void save_checkpoint(const std::filesystem::path& path,
                              const std::function<void(std::ostream&)>& body) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw Error("cannot write " + path.string());
      body(f);
      if (!f) throw Error("cannot write " + path.string());
    }
    std::filesystem::rename(tmp, path);
  }

  static void finish(const std::filesystem::path& dir, const nlohmann::json& metadata,
                     std::span<const PredictionRecord> preds, const TaskSpec& task,
                     std::span<const PredictionRecord> human_preds = {}) {
    write_json_file(dir / kMetadataFile, metadata);
    write_text_file(dir / kPredictionsFile, write_prediction_log(preds));
    if (!human_preds.empty()) {
      write_text_file(dir / kHumanPredictionsFile, write_prediction_log(human_preds));
      write_json_file(dir / kHumanMetricsFile, to_json(metrics_from_records(human_preds, task)));
    }
    // Written last: its presence marks the cell complete.
    write_json_file(dir / kMetricsFile, to_json(metrics_from_records(preds, task)));
  }

  void run_text(const Cell& c, const TaskData& td, const std::filesystem::path& dir) {
    const auto lang = language_from_string(c.language);
    const auto family = encoder_family_from_string(c.family);
    const auto cfg = m_.training(CellModality::text, c.seed);
    const auto& dv = td.versions.at(lang);
    if (td.embeddings_only) {
      const auto run = run_linear_probe(td.task, td.bench->text_embeddings.at(lang), dv, cfg);
      save_checkpoint(dir / kCheckpointFile, [&](std::ostream& o) { run.model.save(o); });
      auto meta = base_metadata(c, td, cfg, {run.fit.best_epoch, run.fit.stopped_epoch, run.fit.best_val_loss});
      meta["model_checksum"] = strings::hex64(run.model.checksum());
      meta["embeddings"] = td.bench->text_embeddings.at(lang).model_checksum;
      finish(dir, meta, run.predictions, td.task);
      return;
    }
    const auto spec = m_.encoder_spec(family, lang);
    const auto train = dv.subset(Split::train);
    const auto val = dv.subset(Split::validation);
    const auto model = fine_tune_text(spec, td.task, train, val, cfg);
    save_checkpoint(dir / kCheckpointFile, [&](std::ostream& o) { model.save(o); });

    const auto checksum = strings::hex64(model.checksum());
    auto embed_all = [&](const DatasetVersion& v, const std::filesystem::path& path) {
      EmbeddingTable table;
      table.model_checksum = checksum;
      table.dataset_key = dataset_key(v);
      table.modality = Modality::text;
      for (const auto& e : v.examples) table.insert(e.id, embed_text(model, e.text).values);
      table.save(path);
    };
    embed_all(dv, dir / kEmbeddingsFile);

    auto predict = [&](std::span<const MultimodalExample> ex) {
      std::vector<PredictionRecord> out;
      for (const auto& e : ex) {
        const auto p = predict_text(model, e.text);
        out.push_back({e.id, e.label, p.label, p.scores});
      }
      return out;
    };
    std::vector<PredictionRecord> human_preds;
    if (auto it = td.human.find(lang); it != td.human.end()) {
      embed_all(it->second, dir / kHumanEmbeddingsFile);
      human_preds = predict(it->second.examples);
    }
    auto meta = base_metadata(c, td, cfg, {model.best_epoch, model.stopped_epoch, model.best_val_loss});
    meta["encoder_id"] = spec.encoder_id;
    meta["model_checksum"] = checksum;
    meta["dataset_key"] = dataset_key(dv);
    finish(dir, meta, predict(dv.subset(Split::test)), td.task, human_preds);
  }

  void run_image(const Cell& c, const TaskData& td, const std::filesystem::path& dir) {
    const auto cfg = m_.training(CellModality::image, c.seed);
    const auto& dv = td.versions.at(Language::en);
    if (td.embeddings_only) {
      const auto run = run_linear_probe(td.task, td.bench->image_embeddings, dv, cfg);
      save_checkpoint(dir / kCheckpointFile, [&](std::ostream& o) { run.model.save(o); });
      auto meta = base_metadata(c, td, cfg, {run.fit.best_epoch, run.fit.stopped_epoch, run.fit.best_val_loss});
      meta["model_checksum"] = strings::hex64(run.model.checksum());
      meta["embeddings"] = td.bench->image_embeddings.model_checksum;
      finish(dir, meta, run.predictions, td.task);
      return;
    }
    const auto backbone = make_backbone(m_.backbone);
    const auto all = backbone_features(*backbone, dv.examples, td.images);
    auto slice = [&](Split s) {
      std::vector<Eigen::Index> cols;
      for (std::size_t i = 0; i < dv.examples.size(); ++i)
        if (dv.examples[i].split == s) cols.push_back(static_cast<Eigen::Index>(i));
      LabeledFeatures f;
      f.x.resize(all.x.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j) {
        f.x.col(static_cast<Eigen::Index>(j)) = all.x.col(cols[j]);
        f.y.push_back(all.y[static_cast<std::size_t>(cols[j])]);
      }
      return f;
    };
    const auto model = train_image_head(backbone, td.task, slice(Split::train),
                                        slice(Split::validation), cfg);
    save_checkpoint(dir / kCheckpointFile, [&](std::ostream& o) { model.head.save(o); });

    const auto checksum = strings::hex64(model.checksum());
    EmbeddingTable table;
    table.model_checksum = checksum;
    table.dataset_key = dataset_key(dv);
    table.modality = Modality::image;
    std::vector<PredictionRecord> preds;
    for (std::size_t i = 0; i < dv.examples.size(); ++i) {
      const auto& e = dv.examples[i];
      const nn::Vector feat = all.x.col(static_cast<Eigen::Index>(i));
      table.insert(e.id, embed_image_features(model, feat).values);
      if (e.split == Split::test) {
        const auto p = predict_image_features(model, feat);
        preds.push_back({e.id, e.label, p.label, p.scores});
      }
    }
    table.save(dir / kEmbeddingsFile);
    auto meta = base_metadata(c, td, cfg, {model.best_epoch, model.stopped_epoch, model.best_val_loss});
    meta["backbone"] = backbone->id();
    meta["backbone_checksum"] = strings::hex64(backbone->parameter_checksum());
    meta["head_widths"] = model.head.widths();
    meta["model_checksum"] = checksum;
    meta["dataset_key"] = dataset_key(dv);
    finish(dir, meta, preds, td.task);
  }

  EmbeddingTable load_table(const std::filesystem::path& dir, const char* file) const {
    auto table = EmbeddingTable::load(dir / file);
    const auto meta = read_json_file(dir / kMetadataFile);
    if (table.model_checksum != meta.at("model_checksum").get<std::string>())
      throw ValidationError("embedding table in " + dir.string() + " does not match its checkpoint");
    return table;
  }

  void run_multimodal(const Cell& c, const TaskData& td, const std::filesystem::path& dir) {
    const auto lang = language_from_string(c.language);
    const auto family = encoder_family_from_string(c.family);
    const auto tc = text_cell(c.task, family, lang, c.seed);
    const auto ic = image_cell(c.task, c.seed);
    for (const auto& dep : {tc, ic}) {
      try {
        ensure(dep, false, false);
      } catch (const std::exception& e) {
        throw Error("dependency " + dep.key() + " failed: " + e.what());
      }
    }
    const auto cfg = m_.training(CellModality::multimodal, c.seed);
    const auto& dv = td.versions.at(lang);
    const auto tdir = tc.dir(m_.output_dir);
    const auto idir = ic.dir(m_.output_dir);

    EmbeddingTable text, image, human_text;
    if (td.embeddings_only) {
      text = td.bench->text_embeddings.at(lang);
      image = td.bench->image_embeddings;
    } else {
      text = load_table(tdir, kEmbeddingsFile);
      image = load_table(idir, kEmbeddingsFile);
    }
    const auto run = run_fusion_on_tables(td.task, text, image, dv, cfg);
    save_checkpoint(dir / kCheckpointFile, [&](std::ostream& o) { run.model.save(o); });

    std::vector<PredictionRecord> human_preds;
    if (auto it = td.human.find(lang); it != td.human.end() && !td.embeddings_only) {
      human_text = EmbeddingTable::load(tdir / kHumanEmbeddingsFile);
      const auto& ex = it->second.examples;
      const auto feats = concat_features(human_text.features(ex), image.features(ex));
      human_preds = predict_records(run.model, feats, ex);
    }
    auto meta = base_metadata(c, td, cfg, {run.fit.best_epoch, run.fit.stopped_epoch, run.fit.best_val_loss});
    meta["layer_widths"] = run.model.widths();
    meta["parameter_count"] = run.model.parameter_count();
    meta["model_checksum"] = strings::hex64(run.model.checksum());
    meta["text_embeddings"] = text.model_checksum;
    meta["image_embeddings"] = image.model_checksum;
    meta["depends_on"] = {tc.key(), ic.key()};
    finish(dir, meta, run.predictions, td.task, human_preds);
  }

  ExperimentManifest m_;
  RunOptions opts_;
  std::map<std::string, TaskData> data_;
  std::map<std::string, std::unique_ptr<std::mutex>> cell_locks_;
  std::recursive_mutex prepare_mu_;
  std::mutex log_mu_;
  std::mutex ledger_mu_;
  std::mutex failures_mu_;
  std::map<std::string, std::string> failures_;
  std::unique_ptr<Translator> own_translator_;
  Ledger ledger_;
  std::atomic<int> trained_{0}, skipped_{0}, failed_{0};
};

// Executes every selected cell not yet complete; the ledger is rewritten
// after each cell and once more from a full directory scan at the end.
inline RunSummary run_experiment(const ExperimentManifest& m, RunOptions opts = {}) {
  ExperimentRunner runner(m, std::move(opts));
  return runner.run();
}

// Recomputes metrics of completed cells from their prediction logs.
inline Ledger reevaluate(const ExperimentManifest& m) {
  namespace fs = std::filesystem;
  for (const auto& c : expand_cells(m)) {
    const auto dir = c.dir(m.output_dir);
    if (!fs::exists(dir / kMetricsFile)) continue;
    const auto task = task_from_json(read_json_file(dir / kMetadataFile).at("task"));
    auto redo = [&](const char* preds, const char* metrics) {
      if (!fs::exists(dir / preds)) return;
      const auto records = parse_prediction_log(read_file(dir / preds));
      const auto body = to_json(metrics_from_records(records, task)).dump(2) + "\n";
      if (read_file(dir / metrics) != body) write_text_file(dir / metrics, body);
    };
    redo(kHumanPredictionsFile, kHumanMetricsFile);
    redo(kPredictionsFile, kMetricsFile);
  }
  auto ledger = scan_ledger(m);
  ledger.save(m.output_dir / kLedgerFile);
  return ledger;
}

}  // namespace mmlang
