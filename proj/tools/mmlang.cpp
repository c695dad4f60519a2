#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mmlang/core/manifest.hpp"
#include "mmlang/pipeline/experiment.hpp"
#include "mmlang/pipeline/report.hpp"
#include "mmlang/pipeline/run.hpp"
#include "mmlang/preprocess/text_clean.hpp"
#include "mmlang/synth/synthbench.hpp"

namespace fs = std::filesystem;
using namespace mmlang;

namespace {

void print_summary(const RunSummary& s) {
  std::printf("trained %d, skipped %d, failed %d; ledger: %zu complete, %zu failed, %zu pending\n",
              s.trained, s.skipped, s.failed, s.ledger.count("complete"),
              s.ledger.count("failed"), s.ledger.count("pending"));
}

RunOptions cli_options(bool force, std::string only) {
  RunOptions o;
  o.force = force;
  o.only = std::move(only);
  o.log = [](const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); };
  return o;
}

// Narrows an experiment to the single cell named on the command line.
ExperimentManifest single_cell(ExperimentManifest m, const std::string& task, Language lang,
                               EncoderFamily family, std::uint64_t seed, CellModality modality) {
  std::vector<ExperimentTask> kept{m.task(task)};
  m.tasks = kept;
  m.languages = {Language::en};
  if (lang != Language::en) m.languages.push_back(lang);
  m.families = {family};
  m.seeds = {seed};
  m.modalities = {modality};
  return m;
}

int train_one(const fs::path& experiment, const std::string& task, const std::string& language,
              const std::string& family, std::uint64_t seed, CellModality modality, bool force) {
  const auto lang = language_from_string(language);
  const auto fam = encoder_family_from_string(family);
  const auto m = single_cell(load_experiment(experiment), task, lang, fam, seed, modality);
  const Cell cell = modality == CellModality::image      ? image_cell(task, seed)
                    : modality == CellModality::text      ? text_cell(task, fam, lang, seed)
                                                          : multimodal_cell(task, fam, lang, seed);
  const auto s = run_experiment(m, cli_options(force, cell.key()));
  print_summary(s);
  for (const auto& r : s.ledger.cells)
    if (r.cell == cell) {
      if (r.status != "complete") {
        std::fprintf(stderr, "%s: %s\n", cell.key().c_str(), r.error.c_str());
        return 1;
      }
      std::printf("%s: f1 %.4f accuracy %.4f stopped_epoch %d best_epoch %d\n",
                  cell.key().c_str(), r.metrics->f1, r.metrics->accuracy, r.stopped_epoch,
                  r.best_epoch);
    }
  return s.failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual multimodal classification pipeline and disparity reports"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Validate a manifest and optionally clean its text");
  std::string prep_in, prep_out, contractions, emoticons, image_root;
  bool clean = false;
  prepare->add_option("--in", prep_in, "Input manifest")->required()->check(CLI::ExistingFile);
  prepare->add_option("--out", prep_out, "Output manifest (default: validate only)");
  prepare->add_flag("--clean", clean, "Apply the text cleaning rules");
  prepare->add_option("--contractions", contractions, "Contraction table file")->check(CLI::ExistingFile);
  prepare->add_option("--emoticons", emoticons, "Emoticon list file")->check(CLI::ExistingFile);
  prepare->add_option("--image-root", image_root, "Directory image refs are relative to");

  // translate
  auto* translate = app.add_subcommand("translate", "Machine-translate a task's English data");
  std::string exp_path, task, target;
  translate->add_option("--experiment", exp_path, "Experiment manifest")->required()->check(CLI::ExistingFile);
  translate->add_option("--task", task, "Task name")->required();
  translate->add_option("--target", target, "Target language")->required();

  // train-text / train-image / train-fusion
  std::string language = "en", family = "multilingual";
  std::uint64_t seed = 0;
  bool force = false;
  auto* train_text = app.add_subcommand("train-text", "Fine-tune one text classifier");
  auto* train_image = app.add_subcommand("train-image", "Train one image classifier head");
  auto* train_fusion = app.add_subcommand("train-fusion", "Train one fusion network");
  for (auto* sub : {train_text, train_image, train_fusion}) {
    sub->add_option("--experiment", exp_path, "Experiment manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--task", task, "Task name")->required();
    sub->add_option("--seed", seed, "Run seed");
    sub->add_flag("--force", force, "Retrain even if the run is complete");
  }
  for (auto* sub : {train_text, train_fusion}) {
    sub->add_option("--language", language, "Language code")->required();
    sub->add_option("--family", family, "monolingual or multilingual")->required();
  }

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Recompute metrics from prediction logs");
  evaluate->add_option("--experiment", exp_path, "Experiment manifest")->required()->check(CLI::ExistingFile);

  // report
  auto* report = app.add_subcommand("report", "Emit tables and figures from a ledger");
  std::string ledger_path, report_dir;
  report->add_option("--experiment", exp_path, "Experiment manifest")->check(CLI::ExistingFile);
  report->add_option("--ledger", ledger_path, "Ledger file (default: <output_dir>/ledger.json)");
  report->add_option("--out", report_dir, "Report directory (default: <output_dir>/report)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
  std::string synth_config, synth_out;
  synth->add_option("--config", synth_config, "Synthetic config (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "Run every cell of an experiment");
  std::string only;
  run->add_option("--experiment", exp_path, "Experiment manifest")->required()->check(CLI::ExistingFile);
  run->add_flag("--force", force, "Retrain selected cells even if complete");
  run->add_option("--only", only, "Glob over cell keys, e.g. 'crisis/*/hi/*/seed-0'");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prepare) {
      auto dv = load_manifest(prep_in);
      if (clean) {
        TextCleaner cleaner(contractions.empty() && emoticons.empty()
                                ? CleaningTables::defaults()
                                : load_cleaning_tables(
                                      contractions.empty() ? fs::path(MMLANG_DATA_DIR) / "contractions.txt" : fs::path(contractions),
                                      emoticons.empty() ? fs::path(MMLANG_DATA_DIR) / "emoticons.txt" : fs::path(emoticons)));
        for (auto& e : dv.examples) e.text = cleaner(e.text);
      }
      const auto sizes = dv.split_sizes();
      std::printf("%s/%s: %zu train, %zu validation, %zu test\n", dv.task.name.c_str(),
                  std::string(to_string(dv.language)).c_str(), sizes.train, sizes.validation,
                  sizes.test);
      const auto props = class_proportions(dv);
      for (std::size_t c = 0; c < props.size(); ++c)
        std::printf("  %-24s %.4f\n", dv.task.classes[c].c_str(), props[c]);
      const auto root = image_root.empty() ? fs::path(prep_in).parent_path() : fs::path(image_root);
      const auto missing = unresolved_images(dv, root);
      if (!missing.empty())
        std::fprintf(stderr, "warning: %zu image refs do not resolve (first: %s)\n",
                     missing.size(), missing.front().c_str());
      if (!prep_out.empty()) save_manifest(dv, prep_out);
      return 0;
    }
    if (*translate) {
      auto m = load_experiment(exp_path);
      std::vector<ExperimentTask> kept{m.task(task)};
      m.tasks = kept;
      m.languages = {Language::en, language_from_string(target)};
      ExperimentRunner runner(m, cli_options(false, ""));
      const auto& v = runner.version(task, language_from_string(target));
      const auto sizes = v.split_sizes();
      std::printf("%s/%s: %zu train, %zu validation, %zu test\n", task.c_str(), target.c_str(),
                  sizes.train, sizes.validation, sizes.test);
      return 0;
    }
    if (*train_text)
      return train_one(exp_path, task, language, family, seed, CellModality::text, force);
    if (*train_image)
      return train_one(exp_path, task, "en", "multilingual", seed, CellModality::image, force);
    if (*train_fusion)
      return train_one(exp_path, task, language, family, seed, CellModality::multimodal, force);
    if (*evaluate) {
      const auto ledger = reevaluate(load_experiment(exp_path));
      std::printf("%zu complete, %zu failed, %zu pending\n", ledger.count("complete"),
                  ledger.count("failed"), ledger.count("pending"));
      return 0;
    }
    if (*report) {
      fs::path out_dir;
      if (!exp_path.empty()) out_dir = load_experiment(exp_path).output_dir;
      if (ledger_path.empty()) {
        if (out_dir.empty()) throw ValidationError("report needs --experiment or --ledger");
        ledger_path = (out_dir / kLedgerFile).string();
      }
      if (report_dir.empty())
        report_dir = ((out_dir.empty() ? fs::path(ledger_path).parent_path() : out_dir) / "report").string();
      for (const auto& p : emit_report(Ledger::load(ledger_path), report_dir))
        std::printf("%s\n", p.string().c_str());
      return 0;
    }
    if (*synth) {
      const auto cfg = synth_config_from_json(nlohmann::json::parse(read_file(synth_config)));
      const auto paths = write_synthetic(generate_synthetic(cfg), synth_out);
      for (const auto& [l, p] : paths.manifests) std::printf("%s\n", p.string().c_str());
      for (const auto& [l, p] : paths.text_embeddings) std::printf("%s\n", p.string().c_str());
      std::printf("%s\n", paths.image_embeddings.string().c_str());
      return 0;
    }
    if (*run) {
      const auto m = load_experiment(exp_path);
      const auto s = run_experiment(m, cli_options(force, only));
      print_summary(s);
      if (s.ledger.count("complete") > 0) emit_report(s.ledger, m.output_dir / "report");
      return s.failed == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
