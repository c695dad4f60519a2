#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mmlang/nn/adam.hpp"
#include "mmlang/nn/layers.hpp"
#include "mmlang/nn/mlp.hpp"
#include "mmlang/train/early_stopping.hpp"
#include "mmlang/train/mlp_trainer.hpp"

using namespace mmlang;
using nn::Matrix;

namespace {

double loss_of(const nn::Mlp& m, const Matrix& x, const std::vector<int>& y) {
  return nn::softmax_cross_entropy(m.forward(x), y, nullptr);
}

}  // namespace

TEST(Layers, SoftmaxCrossEntropyValueAndGradient) {
  Matrix logits(3, 2);
  logits << 1, 0, 2, 0, 3, 0;
  const std::vector<int> y{2, 0};
  Matrix grad;
  const double loss = nn::softmax_cross_entropy(logits, y, &grad);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const double expected = (-(3.0 - std::log(z)) + std::log(3.0)) / 2.0;
  EXPECT_NEAR(loss, expected, 1e-6);
  // d/dlogits = (softmax - onehot) / n
  EXPECT_NEAR(grad(2, 0), (std::exp(3.0) / z - 1.0) / 2.0, 1e-6);
  EXPECT_NEAR(grad(0, 1), (1.0 / 3.0 - 1.0) / 2.0, 1e-6);
  EXPECT_NEAR(grad.sum(), 0.0, 1e-6);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  nn::Rng rng(3);
  nn::Mlp m({6, 5, 4, 3}, rng);
  Matrix x = Matrix::Random(6, 4);
  const std::vector<int> y{0, 2, 1, 2};
  const auto trace = m.forward_trace(x);
  Matrix d_logits, d_input;
  nn::softmax_cross_entropy(trace.logits(), y, &d_logits);
  const auto grads = m.backward(trace, d_logits, &d_input);
  const float h = 1e-3f;
  for (std::size_t k = 0; k < m.layers().size(); ++k) {
    for (Eigen::Index i = 0; i < m.layers()[k].weight.size(); i += 3) {
      auto plus = m, minus = m;
      plus.layers()[k].weight.data()[i] += h;
      minus.layers()[k].weight.data()[i] -= h;
      const double fd = (loss_of(plus, x, y) - loss_of(minus, x, y)) / (2 * h);
      EXPECT_NEAR(grads[k].weight.data()[i], fd, 2e-3) << "layer " << k << " index " << i;
    }
    for (Eigen::Index i = 0; i < m.layers()[k].bias.size(); ++i) {
      auto plus = m, minus = m;
      plus.layers()[k].bias[i] += h;
      minus.layers()[k].bias[i] -= h;
      const double fd = (loss_of(plus, x, y) - loss_of(minus, x, y)) / (2 * h);
      EXPECT_NEAR(grads[k].bias[i], fd, 2e-3);
    }
  }
  for (Eigen::Index i = 0; i < x.size(); i += 2) {
    Matrix xp = x, xm = x;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    const double fd = (loss_of(m, xp, y) - loss_of(m, xm, y)) / (2 * h);
    EXPECT_NEAR(d_input.data()[i], fd, 2e-3);
  }
}

TEST(Mlp, WidthsParameterCountAndPenultimate) {
  nn::Rng rng(1);
  nn::Mlp m({10, 8, 3}, rng);
  EXPECT_EQ(m.widths(), (std::vector<int>{10, 8, 3}));
  EXPECT_EQ(m.parameter_count(), 10u * 8 + 8 + 8 * 3 + 3);
  Matrix x = Matrix::Random(10, 2);
  const Matrix pen = m.penultimate(x);
  EXPECT_EQ(pen.rows(), 8);
  EXPECT_GE(pen.minCoeff(), 0.0f);
  EXPECT_EQ(pen, m.forward_trace(x).activations[1]);
}

TEST(Mlp, SaveLoadRoundTrip) {
  nn::Rng rng(2);
  nn::Mlp m({4, 7, 2}, rng);
  std::stringstream ss;
  m.save(ss);
  EXPECT_EQ(nn::Mlp::load(ss), m);
  std::stringstream truncated(ss.str().substr(0, 20));
  EXPECT_THROW(nn::Mlp::load(truncated), Error);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  nn::Adam adam({0.01f});
  Eigen::VectorXf p(3), g(3);
  p << 1, 1, 1;
  g << 0.5f, -2.0f, 1e-3f;
  adam.begin_step();
  adam.update(0, p, g);
  // With bias correction the first update is lr * g / |g| (up to epsilon).
  EXPECT_NEAR(p[0], 0.99f, 1e-5);
  EXPECT_NEAR(p[1], 1.01f, 1e-5);
  EXPECT_NEAR(p[2], 0.99f, 1e-4);
  EXPECT_EQ(adam.step_count(), 1);
}

TEST(Adam, DefaultsMatchTrainingContract) {
  EXPECT_FLOAT_EQ(nn::AdamOptions{}.learning_rate, 1e-4f);
  EXPECT_DOUBLE_EQ(TrainingConfig::text_defaults().learning_rate, 1e-4);
  EXPECT_EQ(TrainingConfig::text_defaults().patience, 5);
  EXPECT_EQ(TrainingConfig::image_defaults().patience, 10);
  EXPECT_EQ(TrainingConfig::fusion_defaults().patience, 5);
  EXPECT_EQ(TrainingConfig{}.batch_size, 32);
  EXPECT_EQ(TrainingConfig{}.max_epochs, 50);
}

TEST(TrainingConfig, Validation) {
  TrainingConfig c;
  c.patience = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.max_epochs = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

namespace {

// Replays a fixed validation-loss sequence. The "parameters" are the number
// of the epoch that produced them, so restore() reveals which checkpoint won.
struct ScriptedModel {
  std::vector<double> losses;
  int epoch = 0;
  int restored = -1;

  double train_epoch(nn::Rng&) {
    ++epoch;
    return 0.0;
  }
  double validation_loss() const { return losses.at(static_cast<std::size_t>(epoch - 1)); }
  int snapshot() const { return epoch; }
  void restore(int e) { restored = e; }
};

FitResult run_script(std::vector<double> losses, int patience, int max_epochs, int* restored) {
  ScriptedModel m{std::move(losses)};
  TrainingConfig cfg;
  cfg.patience = patience;
  cfg.max_epochs = max_epochs;
  const auto r = fit(m, cfg);
  *restored = m.restored;
  return r;
}

}  // namespace

TEST(EarlyStopping, PaperTextExample) {
  int restored = 0;
  const auto r = run_script({1.00, 0.90, 0.91, 0.92, 0.93, 0.94, 0.95, 0.5, 0.4}, 5, 50, &restored);
  EXPECT_EQ(r.stopped_epoch, 7);
  EXPECT_EQ(r.best_epoch, 2);
  EXPECT_EQ(restored, 2);
  EXPECT_DOUBLE_EQ(r.best_val_loss, 0.90);
  EXPECT_FALSE(r.hit_epoch_cap);
}

TEST(EarlyStopping, ImageExampleStopsAtThirteen) {
  std::vector<double> losses{1.0, 0.8, 0.7};
  for (int i = 0; i < 20; ++i) losses.push_back(0.7 + 0.01 * i);  // first one ties: no improvement
  int restored = 0;
  const auto r = run_script(losses, 10, 50, &restored);
  EXPECT_EQ(r.stopped_epoch, 13);
  EXPECT_EQ(r.best_epoch, 3);
  EXPECT_EQ(restored, 3);
}

TEST(EarlyStopping, StrictlyDecreasingRunsToCap) {
  std::vector<double> losses;
  for (int i = 0; i < 50; ++i) losses.push_back(1.0 - 0.01 * i);
  int restored = 0;
  const auto r = run_script(losses, 5, 50, &restored);
  EXPECT_EQ(r.stopped_epoch, 50);
  EXPECT_EQ(r.best_epoch, 50);
  EXPECT_EQ(restored, 50);
  EXPECT_TRUE(r.hit_epoch_cap);
}

// Crafted families: an improvement phase up to best epoch b (possibly with
// plateaus and an interim best), then `patience` or more non-improving epochs.
TEST(EarlyStopping, CraftedSequencesStopPatienceAfterBest) {
  int checked = 0;
  for (int patience : {1, 2, 5, 10}) {
    for (int best : {1, 2, 4, 7, 12}) {
      for (int shape = 0; shape < 3; ++shape) {
        std::vector<double> losses;
        for (int e = 1; e <= best; ++e) {
          double v = 2.0 - 0.1 * e;
          // shape 1: plateau before the best; shape 2: a bump that recovers
          // within the patience window.
          if (shape == 1 && e + 1 == best && patience > 1 && !losses.empty()) v = losses.back();
          if (shape == 2 && e + 1 == best && patience > 1) v = 5.0;
          losses.push_back(v);
        }
        const double best_loss = losses.back();
        for (int k = 0; k < patience + 5; ++k)
          losses.push_back(k % 2 ? best_loss : best_loss + 0.01 * (k + 1));
        int restored = 0;
        const auto r = run_script(losses, patience, 200, &restored);
        ASSERT_EQ(r.best_epoch, best) << "patience " << patience << " shape " << shape;
        EXPECT_EQ(r.stopped_epoch, best + patience);
        EXPECT_EQ(r.stopped_epoch - r.best_epoch, patience);
        EXPECT_EQ(restored, best);
        EXPECT_DOUBLE_EQ(r.best_val_loss, best_loss);
        ++checked;
      }
    }
  }
  EXPECT_GE(checked, 20);
}

TEST(MlpTrainer, LearnsSeparableData) {
  nn::Rng rng(5);
  std::normal_distribution<float> n(0.0f, 0.3f);
  auto make = [&](int count) {
    LabeledFeatures f;
    f.x.resize(2, count);
    for (int i = 0; i < count; ++i) {
      const int y = i % 2;
      f.x(0, i) = (y ? 1.0f : -1.0f) + n(rng);
      f.x(1, i) = n(rng);
      f.y.push_back(y);
    }
    return f;
  };
  const auto train = make(200), val = make(100);
  nn::Mlp m({2, 8, 2}, rng);
  TrainingConfig cfg;
  cfg.learning_rate = 1e-2;
  MlpTrainer t(m, train, val, cfg);
  const auto r = fit(t, cfg);
  EXPECT_LT(r.best_val_loss, 0.2);
  EXPECT_DOUBLE_EQ(mean_loss(m, val), r.best_val_loss);
}
