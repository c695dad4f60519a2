#pragma once

#include <span>
#include <vector>

#include "mmlang/core/dataset.hpp"
#include "mmlang/eval/metrics.hpp"
#include "mmlang/eval/reporting.hpp"
#include "mmlang/fusion/embedding_cache.hpp"
#include "mmlang/fusion/fusion.hpp"
#include "mmlang/train/early_stopping.hpp"
#include "mmlang/train/mlp_trainer.hpp"

namespace mmlang {

// Training and evaluation over precomputed embedding tables. The synthetic
// benchmark uses this path for the unimodal classifiers (a softmax layer on
// the given embeddings) and for the fusion network.
struct EmbeddingRun {
  nn::Mlp model;
  FitResult fit;
  std::vector<PredictionRecord> predictions;
  MetricsReport metrics;
};

inline std::vector<PredictionRecord> predict_records(const nn::Mlp& model,
                                                     const LabeledFeatures& data,
                                                     std::span<const MultimodalExample> examples) {
  std::vector<PredictionRecord> out;
  const nn::Matrix logits = model.forward(data.x);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto p = prediction_from_logits(logits.col(static_cast<Eigen::Index>(i)));
    out.push_back({examples[i].id, examples[i].label, p.label, p.scores});
  }
  return out;
}

inline MetricsReport metrics_from_records(std::span<const PredictionRecord> records,
                                          const TaskSpec& task) {
  std::vector<int> gold, pred;
  for (const auto& r : records) {
    gold.push_back(r.gold);
    pred.push_back(r.pred);
  }
  return compute_metrics(gold, pred, task);
}

inline EmbeddingRun train_and_evaluate(nn::Mlp model, const TaskSpec& task,
                                       const LabeledFeatures& train, const LabeledFeatures& val,
                                       const LabeledFeatures& test,
                                       std::span<const MultimodalExample> test_examples,
                                       const TrainingConfig& cfg) {
  EmbeddingRun run;
  run.model = std::move(model);
  MlpTrainer trainer(run.model, train, val, cfg);
  run.fit = fit(trainer, cfg);
  run.predictions = predict_records(run.model, test, test_examples);
  run.metrics = metrics_from_records(run.predictions, task);
  return run;
}

// Softmax classifier on one modality's embeddings.
inline EmbeddingRun run_linear_probe(const TaskSpec& task, const EmbeddingTable& table,
                                     const DatasetVersion& dv, const TrainingConfig& cfg) {
  cfg.validate();
  nn::Rng rng(cfg.seed ^ 0x5DEECE66DULL);
  nn::Mlp model({table.dim, static_cast<int>(task.num_classes())}, rng);
  const auto test = dv.subset(Split::test);
  return train_and_evaluate(std::move(model), task, table.features(dv.subset(Split::train)),
                            table.features(dv.subset(Split::validation)), table.features(test),
                            test, cfg);
}

// Fusion network on [text; image] embeddings.
inline EmbeddingRun run_fusion_on_tables(const TaskSpec& task, const EmbeddingTable& text,
                                         const EmbeddingTable& image, const DatasetVersion& dv,
                                         const TrainingConfig& cfg) {
  cfg.validate();
  if (text.modality != Modality::text || image.modality != Modality::image)
    throw ValidationError("fusion expects a text table and an image table");
  auto features = [&](Split s) {
    const auto ex = dv.subset(s);
    return concat_features(text.features(ex), image.features(ex));
  };
  nn::Rng rng(cfg.seed ^ 0x7F4A7C159E3779B9ULL);
  const auto test = dv.subset(Split::test);
  return train_and_evaluate(make_fusion_net(task.num_classes(), rng), task,
                            features(Split::train), features(Split::validation),
                            features(Split::test), test, cfg);
}

}  // namespace mmlang
