#pragma once

#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mmlang/core/error.hpp"
#include "mmlang/nn/tensor.hpp"

namespace mmlang {

struct TrainingConfig {
  double learning_rate = 1e-4;
  int patience = 5;
  int max_epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0)) throw ValidationError("learning rate must be positive");
    if (patience < 1) throw ValidationError("patience must be at least 1");
    if (max_epochs < 1) throw ValidationError("max_epochs must be at least 1");
    if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  }

  static TrainingConfig text_defaults() { return {}; }
  static TrainingConfig image_defaults() {
    TrainingConfig c;
    c.patience = 10;
    return c;
  }
  static TrainingConfig fusion_defaults() { return {}; }

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

// Tracks validation loss across epochs (1-based). An epoch improves only on a
// strict decrease; training should stop once `patience` epochs have passed
// without improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {
    if (patience < 1) throw ValidationError("patience must be at least 1");
  }

  // Returns true when this epoch is the new best.
  bool observe(double val_loss) {
    ++epoch_;
    if (val_loss < best_loss_) {
      best_loss_ = val_loss;
      best_epoch_ = epoch_;
      return true;
    }
    return false;
  }

  bool should_stop() const { return epoch_ - best_epoch_ >= patience_; }

  int epoch() const { return epoch_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  int patience() const { return patience_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

// Anything that can run one training epoch, report a validation loss, and
// save/restore its parameters.
template <class M>
concept Trainable = requires(M& m, const M& cm, nn::Rng& rng) {
  { m.train_epoch(rng) } -> std::convertible_to<double>;
  { cm.validation_loss() } -> std::convertible_to<double>;
  { cm.snapshot() };
  { m.restore(cm.snapshot()) };
};

struct FitResult {
  int stopped_epoch = 0;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool hit_epoch_cap = false;
  std::vector<double> train_losses;
  std::vector<double> val_losses;
};

// Trains until early stopping fires or max_epochs is reached, then restores
// the parameters from the best validation epoch.
template <Trainable M>
FitResult fit(M& model, const TrainingConfig& cfg) {
  cfg.validate();
  nn::Rng rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL);
  EarlyStopping stopper(cfg.patience);
  auto best = model.snapshot();
  FitResult r;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    r.train_losses.push_back(model.train_epoch(rng));
    const double val = model.validation_loss();
    r.val_losses.push_back(val);
    if (stopper.observe(val)) best = model.snapshot();
    r.stopped_epoch = epoch;
    if (stopper.should_stop()) break;
  }
  r.hit_epoch_cap = !stopper.should_stop();
  r.best_epoch = stopper.best_epoch();
  r.best_val_loss = stopper.best_loss();
  model.restore(std::move(best));
  return r;
}

}  // namespace mmlang
