#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mmlang/core/dataset.hpp"
#include "mmlang/core/embedding.hpp"
#include "mmlang/core/error.hpp"
#include "mmlang/image/backbone.hpp"
#include "mmlang/nn/mlp.hpp"
#include "mmlang/train/mlp_trainer.hpp"

namespace mmlang {

inline constexpr int kImageHeadHidden = 4096;

// Produces the raw image for an example (from its image_ref).
using ImageSource = std::function<Image(const MultimodalExample&)>;

// Reads PPM files; relative image_refs resolve against root.
inline ImageSource file_image_source(std::filesystem::path root) {
  return [root = std::move(root)](const MultimodalExample& e) {
    std::filesystem::path p(e.image_ref);
    if (p.is_relative()) p = root / p;
    return read_ppm(p);
  };
}

// Frozen backbone plus a trainable head of widths (4096, 256, |classes|).
struct ImageModel {
  std::shared_ptr<const ImageBackbone> backbone;
  nn::Mlp head;
  TaskSpec task;
  TrainingConfig config;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int stopped_epoch = 0;

  std::array<int, 3> head_widths() const {
    const auto w = head.widths();
    return {w.at(1), w.at(2), w.at(3)};
  }

  std::uint64_t checksum() const { return head.checksum() ^ backbone->parameter_checksum(); }
};

inline nn::Mlp make_image_head(int feature_dim, std::size_t num_classes, nn::Rng& rng) {
  return nn::Mlp({feature_dim, kImageHeadHidden, kImageEmbeddingDim, static_cast<int>(num_classes)},
                 rng);
}

inline LabeledFeatures backbone_features(const ImageBackbone& backbone,
                                         std::span<const MultimodalExample> split,
                                         const ImageSource& source) {
  LabeledFeatures out;
  out.x.resize(backbone.feature_dim(), static_cast<Eigen::Index>(split.size()));
  for (std::size_t i = 0; i < split.size(); ++i) {
    Image raw;
    try {
      raw = source(split[i]);
    } catch (const std::exception& ex) {
      throw Error("unresolvable image '" + split[i].image_ref + "' for example '" + split[i].id +
                  "': " + ex.what());
    }
    out.x.col(static_cast<Eigen::Index>(i)) = backbone.features(standardize_image(raw));
    out.y.push_back(split[i].label);
  }
  return out;
}

// Trains only the head; the backbone is shared read-only.
inline ImageModel train_image_head(std::shared_ptr<const ImageBackbone> backbone,
                                   const TaskSpec& task, const LabeledFeatures& train,
                                   const LabeledFeatures& val, const TrainingConfig& cfg) {
  task.validate();
  cfg.validate();
  ImageModel model;
  model.backbone = std::move(backbone);
  model.task = task;
  model.config = cfg;
  nn::Rng rng(cfg.seed ^ 0x1F2E3D4C5B6A7988ULL);
  model.head = make_image_head(model.backbone->feature_dim(), task.num_classes(), rng);
  for (int y : train.y)
    if (!task.valid_label(y)) throw ValidationError("training label out of range");
  MlpTrainer trainer(model.head, train, val, cfg);
  const auto r = fit(trainer, cfg);
  model.best_val_loss = r.best_val_loss;
  model.best_epoch = r.best_epoch;
  model.stopped_epoch = r.stopped_epoch;
  return model;
}

inline ImageModel train_image_head(std::shared_ptr<const ImageBackbone> backbone,
                                   const TaskSpec& task, std::span<const MultimodalExample> train,
                                   std::span<const MultimodalExample> val,
                                   const ImageSource& source, const TrainingConfig& cfg) {
  if (train.empty()) throw ValidationError("empty training split");
  if (val.empty()) throw ValidationError("empty validation split");
  const auto train_x = backbone_features(*backbone, train, source);
  const auto val_x = backbone_features(*backbone, val, source);
  return train_image_head(std::move(backbone), task, train_x, val_x, cfg);
}

// Post-ReLU activations of the width-256 head layer.
inline EmbeddingVector embed_image_features(const ImageModel& model, const nn::Vector& features) {
  return {Modality::image, model.head.penultimate(features).col(0)};
}

inline EmbeddingVector embed_image(const ImageModel& model, const StandardImage& image) {
  return embed_image_features(model, model.backbone->features(image));
}

inline Prediction predict_image_features(const ImageModel& model, const nn::Vector& features) {
  return prediction_from_logits(model.head.forward(features).col(0));
}

inline Prediction predict_image(const ImageModel& model, const StandardImage& image) {
  return predict_image_features(model, model.backbone->features(image));
}

}  // namespace mmlang
