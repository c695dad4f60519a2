#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace mmlang::nn {

struct AdamOptions {
  float learning_rate = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

// Adam with bias correction. Each parameter tensor owns a slot holding its
// first and second moment estimates; call begin_step() once per minibatch.
class Adam {
 public:
  explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

  void begin_step() { ++t_; }
  long step_count() const { return t_; }
  const AdamOptions& options() const { return opts_; }

  void update(std::size_t slot, float* param, const float* grad, std::size_t n) {
    if (slot >= moments_.size()) moments_.resize(slot + 1);
    auto& mo = moments_[slot];
    if (static_cast<std::size_t>(mo.m.size()) != n) {
      mo.m = Eigen::ArrayXf::Zero(static_cast<Eigen::Index>(n));
      mo.v = Eigen::ArrayXf::Zero(static_cast<Eigen::Index>(n));
    }
    const auto len = static_cast<Eigen::Index>(n);
    Eigen::Map<Eigen::ArrayXf> p(param, len);
    Eigen::Map<const Eigen::ArrayXf> g(grad, len);
    mo.m = opts_.beta1 * mo.m + (1.0f - opts_.beta1) * g;
    mo.v = opts_.beta2 * mo.v + (1.0f - opts_.beta2) * g.square();
    const float c1 = 1.0f - std::pow(opts_.beta1, static_cast<float>(t_));
    const float c2 = 1.0f - std::pow(opts_.beta2, static_cast<float>(t_));
    const float step = opts_.learning_rate / c1;
    p -= step * mo.m / ((mo.v / c2).sqrt() + opts_.epsilon);
  }

  template <class Dense>
  void update(std::size_t slot, Dense& param, const Dense& grad) {
    update(slot, param.data(), grad.data(), static_cast<std::size_t>(param.size()));
  }

 private:
  struct Moments {
    Eigen::ArrayXf m;
    Eigen::ArrayXf v;
  };
  AdamOptions opts_;
  long t_ = 0;
  std::vector<Moments> moments_;
};

}  // namespace mmlang::nn
