#pragma once

#include <map>

#include "mmlang/eval/metrics.hpp"
#include "mmlang/pipeline/embedding_runs.hpp"
#include "mmlang/synth/synthbench.hpp"

namespace mmlang {

// Text-only, image-only and multimodal F1 per language on one synthetic
// benchmark, trained with one seed.
struct SyntheticStudy {
  std::map<Language, double> text_f1;
  std::map<Language, double> multimodal_f1;
  double image_f1 = 0.0;
  double rmsd_text = 0.0;
  double rmsd_multimodal = 0.0;
  double slope_text = 0.0;
  double slope_multimodal = 0.0;
};

struct StudyTraining {
  TrainingConfig text = TrainingConfig::text_defaults();
  TrainingConfig image = TrainingConfig::image_defaults();
  TrainingConfig fusion = TrainingConfig::fusion_defaults();
};

inline SyntheticStudy run_synthetic_study(const SynthBenchmark& bench, std::uint64_t seed,
                                          StudyTraining training = {}) {
  training.text.seed = training.image.seed = training.fusion.seed = seed;
  SyntheticStudy s;
  const auto& en = bench.version(Language::en);
  s.image_f1 = run_linear_probe(bench.task, bench.image_embeddings, en, training.image).metrics.f1;
  for (auto lang : kAllLanguages) {
    const auto& dv = bench.version(lang);
    const auto& text = bench.text_embeddings.at(lang);
    s.text_f1[lang] = run_linear_probe(bench.task, text, dv, training.text).metrics.f1;
    s.multimodal_f1[lang] =
        run_fusion_on_tables(bench.task, text, bench.image_embeddings, dv, training.fusion)
            .metrics.f1;
  }
  s.rmsd_text = rmsd_en(s.text_f1);
  s.rmsd_multimodal = rmsd_en(s.multimodal_f1);
  s.slope_text = trend_slope(s.text_f1).slope;
  s.slope_multimodal = trend_slope(s.multimodal_f1).slope;
  return s;
}

}  // namespace mmlang
