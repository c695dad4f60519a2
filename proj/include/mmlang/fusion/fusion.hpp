#pragma once

#include <array>
#include <span>
#include <vector>

#include "mmlang/core/dataset.hpp"
#include "mmlang/core/embedding.hpp"
#include "mmlang/core/error.hpp"
#include "mmlang/image/model.hpp"
#include "mmlang/nn/mlp.hpp"
#include "mmlang/text/encoder.hpp"
#include "mmlang/train/mlp_trainer.hpp"

namespace mmlang {

// Text block (768) followed by image block (256).
struct FusedVector {
  nn::Vector values;
  int dim() const { return static_cast<int>(values.size()); }
};

inline FusedVector fuse(const EmbeddingVector& text, const EmbeddingVector& image) {
  if (text.modality != Modality::text || image.modality != Modality::image)
    throw ValidationError("fuse expects (text, image) embeddings in that order");
  if (text.dim() != kTextEmbeddingDim || image.dim() != kImageEmbeddingDim)
    throw ValidationError("fuse expects 768-dim text and 256-dim image embeddings, got " +
                          std::to_string(text.dim()) + " and " + std::to_string(image.dim()));
  FusedVector f;
  f.values.resize(kFusedEmbeddingDim);
  f.values.head(kTextEmbeddingDim) = text.values;
  f.values.tail(kImageEmbeddingDim) = image.values;
  return f;
}

// Hidden widths after the 1024-wide input.
inline constexpr std::array<int, 3> kFusionHidden{512, 128, 32};

struct FusionModel {
  nn::Mlp net;  // 1024 -> 512 -> 128 -> 32 -> |classes|
  TaskSpec task;
  Language language = Language::en;
  EncoderFamily family = EncoderFamily::multilingual;
  TrainingConfig config;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int stopped_epoch = 0;

  std::vector<int> layer_widths() const { return net.widths(); }

  // Weights plus biases of the fixed architecture for a class count.
  static std::size_t expected_parameter_count(std::size_t num_classes) {
    const std::size_t c = num_classes;
    return 1024 * 512 + 512 * 128 + 128 * 32 + 32 * c + (512 + 128 + 32 + c);
  }
};

inline nn::Mlp make_fusion_net(std::size_t num_classes, nn::Rng& rng) {
  return nn::Mlp({kFusedEmbeddingDim, kFusionHidden[0], kFusionHidden[1], kFusionHidden[2],
                  static_cast<int>(num_classes)},
                 rng);
}

// Trains the fusion network on precomputed fused vectors (one column each).
inline FusionModel train_fusion(const TaskSpec& task, Language language, EncoderFamily family,
                                const LabeledFeatures& train, const LabeledFeatures& val,
                                const TrainingConfig& cfg) {
  task.validate();
  cfg.validate();
  if (train.x.rows() != kFusedEmbeddingDim || val.x.rows() != kFusedEmbeddingDim)
    throw ValidationError("fusion features must be 1024-dimensional");
  FusionModel model;
  model.task = task;
  model.language = language;
  model.family = family;
  model.config = cfg;
  nn::Rng rng(cfg.seed ^ 0x7F4A7C159E3779B9ULL);
  model.net = make_fusion_net(task.num_classes(), rng);
  MlpTrainer trainer(model.net, train, val, cfg);
  const auto r = fit(trainer, cfg);
  model.best_val_loss = r.best_val_loss;
  model.best_epoch = r.best_epoch;
  model.stopped_epoch = r.stopped_epoch;
  return model;
}

// Stacks [text; image] feature columns.
inline LabeledFeatures concat_features(const LabeledFeatures& text, const LabeledFeatures& image) {
  if (text.y != image.y) throw ValidationError("text and image features are not aligned");
  if (text.x.rows() != kTextEmbeddingDim || image.x.rows() != kImageEmbeddingDim)
    throw ValidationError("fusion expects 768-dim text and 256-dim image features");
  LabeledFeatures f;
  f.x.resize(kFusedEmbeddingDim, text.x.cols());
  f.x.topRows(kTextEmbeddingDim) = text.x;
  f.x.bottomRows(kImageEmbeddingDim) = image.x;
  f.y = text.y;
  return f;
}

inline LabeledFeatures fused_features(const FineTunedTextModel& text_model,
                                      const ImageModel& image_model,
                                      std::span<const MultimodalExample> split,
                                      const ImageSource& source) {
  LabeledFeatures f;
  f.x.resize(kFusedEmbeddingDim, static_cast<Eigen::Index>(split.size()));
  const auto img = backbone_features(*image_model.backbone, split, source);
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto t = embed_text(text_model, split[i].text);
    const auto im = embed_image_features(image_model, img.x.col(static_cast<Eigen::Index>(i)));
    f.x.col(static_cast<Eigen::Index>(i)) = fuse(t, im).values;
    f.y.push_back(split[i].label);
  }
  return f;
}

// The unimodal models are only read: their embeddings are extracted once and
// fed to the fusion network.
inline FusionModel train_fusion(const FineTunedTextModel& text_model, const ImageModel& image_model,
                                std::span<const MultimodalExample> train,
                                std::span<const MultimodalExample> val, const ImageSource& source,
                                const TrainingConfig& cfg) {
  if (text_model.task != image_model.task)
    throw ValidationError("text model task '" + text_model.task.name +
                          "' differs from image model task '" + image_model.task.name + "'");
  if (train.empty() || val.empty()) throw ValidationError("empty training or validation split");
  for (auto split : {train, val})
    for (const auto& e : split)
      if (e.language != text_model.language)
        throw ValidationError("text model language does not match the dataset language");
  const auto tr = fused_features(text_model, image_model, train, source);
  const auto va = fused_features(text_model, image_model, val, source);
  return train_fusion(text_model.task, text_model.language, text_model.spec.family, tr, va, cfg);
}

inline Prediction predict_fusion(const FusionModel& model, const FusedVector& fused) {
  if (fused.dim() != kFusedEmbeddingDim) throw ValidationError("fused vector must be 1024-dim");
  return prediction_from_logits(model.net.forward(fused.values).col(0));
}

inline Prediction predict_fusion(const FusionModel& model, const FineTunedTextModel& text_model,
                                 const ImageModel& image_model, const MultimodalExample& example,
                                 const ImageSource& source) {
  if (example.text.empty()) throw ValidationError("example '" + example.id + "' has no text");
  if (example.image_ref.empty()) throw ValidationError("example '" + example.id + "' has no image");
  const auto t = embed_text(text_model, example.text);
  const auto i = embed_image(image_model, standardize_image(source(example)));
  return predict_fusion(model, fuse(t, i));
}

}  // namespace mmlang
