#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "mmlang/core/error.hpp"
#include "mmlang/nn/mlp.hpp"
#include "mmlang/train/early_stopping.hpp"

namespace mmlang {

// Fixed feature vectors (one column per example) with their labels.
struct LabeledFeatures {
  nn::Matrix x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

inline double mean_loss(const nn::Mlp& model, const LabeledFeatures& data, int batch = 256) {
  if (data.size() == 0) return 0.0;
  double total = 0.0;
  const auto n = static_cast<Eigen::Index>(data.size());
  for (Eigen::Index start = 0; start < n; start += batch) {
    const auto len = std::min<Eigen::Index>(batch, n - start);
    const nn::Matrix logits = model.forward(data.x.middleCols(start, len));
    std::span<const int> labels(data.y.data() + start, static_cast<std::size_t>(len));
    total += nn::softmax_cross_entropy(logits, labels, nullptr) * static_cast<double>(len);
  }
  return total / static_cast<double>(n);
}

// Cross-entropy + Adam over fixed features. Satisfies Trainable.
class MlpTrainer {
 public:
  MlpTrainer(nn::Mlp& model, const LabeledFeatures& train, const LabeledFeatures& val,
             const TrainingConfig& cfg)
      : model_(model), train_(train), val_(val), cfg_(cfg),
        adam_(nn::AdamOptions{static_cast<float>(cfg.learning_rate)}) {
    if (train.size() == 0) throw ValidationError("empty training split");
    if (val.size() == 0) throw ValidationError("empty validation split");
    if (train.x.rows() != model.input_width() || val.x.rows() != model.input_width())
      throw ValidationError("feature width does not match the model input width");
    order_.resize(train.size());
    std::iota(order_.begin(), order_.end(), 0);
  }

  double train_epoch(nn::Rng& rng) {
    std::shuffle(order_.begin(), order_.end(), rng);
    const auto batch = static_cast<std::size_t>(cfg_.batch_size);
    double total = 0.0;
    nn::Matrix xb;
    std::vector<int> yb;
    for (std::size_t start = 0; start < order_.size(); start += batch) {
      const auto len = std::min(batch, order_.size() - start);
      xb.resize(train_.x.rows(), static_cast<Eigen::Index>(len));
      yb.resize(len);
      for (std::size_t j = 0; j < len; ++j) {
        const auto src = order_[start + j];
        xb.col(static_cast<Eigen::Index>(j)) = train_.x.col(static_cast<Eigen::Index>(src));
        yb[j] = train_.y[src];
      }
      const auto trace = model_.forward_trace(xb);
      nn::Matrix d_logits;
      total += nn::softmax_cross_entropy(trace.logits(), yb, &d_logits) * static_cast<double>(len);
      model_.backward(trace, d_logits, grads_);
      adam_.begin_step();
      model_.apply(adam_, grads_);
    }
    return total / static_cast<double>(order_.size());
  }

  double validation_loss() const { return mean_loss(model_, val_); }
  nn::Mlp snapshot() const { return model_; }
  void restore(nn::Mlp m) { model_ = std::move(m); }

 private:
  nn::Mlp& model_;
  const LabeledFeatures& train_;
  const LabeledFeatures& val_;
  TrainingConfig cfg_;
  nn::Adam adam_;
  std::vector<std::size_t> order_;
  std::vector<nn::DenseGrad> grads_;
};

}  // namespace mmlang
