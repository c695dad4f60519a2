#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "mmlang/core/error.hpp"
#include "mmlang/nn/adam.hpp"
#include "mmlang/nn/layers.hpp"

namespace mmlang::nn {

// Stack of dense layers with ReLU between them and raw logits at the end.
class Mlp {
 public:
  Mlp() = default;

  // widths = {input, hidden..., output}
  Mlp(const std::vector<int>& widths, Rng& rng) {
    if (widths.size() < 2) throw ValidationError("an MLP needs at least input and output widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      if (widths[i] < 1 || widths[i + 1] < 1) throw ValidationError("layer widths must be positive");
      layers_.emplace_back(widths[i], widths[i + 1]);
      layers_.back().init_uniform(rng);
    }
  }

  explicit Mlp(std::vector<Dense> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 1; i < layers_.size(); ++i)
      if (layers_[i].in() != layers_[i - 1].out())
        throw ValidationError("MLP layers do not chain");
  }

  // {input, hidden..., output}
  std::vector<int> widths() const {
    std::vector<int> w;
    if (layers_.empty()) return w;
    w.push_back(layers_.front().in());
    for (const auto& l : layers_) w.push_back(l.out());
    return w;
  }

  int input_width() const { return layers_.front().in(); }
  int output_width() const { return layers_.back().out(); }
  const std::vector<Dense>& layers() const { return layers_; }
  std::vector<Dense>& layers() { return layers_; }

  // activations[0] is the input, activations[k] the output of layer k
  // (post-ReLU for hidden layers, logits for the last one).
  struct Trace {
    std::vector<Matrix> activations;
    const Matrix& logits() const { return activations.back(); }
  };

  Trace forward_trace(const Matrix& x) const {
    Trace t;
    t.activations.reserve(layers_.size() + 1);
    t.activations.push_back(x);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Matrix y = layers_[i].forward(t.activations.back());
      if (i + 1 < layers_.size()) y = relu(y);
      t.activations.push_back(std::move(y));
    }
    return t;
  }

  Matrix forward(const Matrix& x) const {
    Matrix a = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      a = layers_[i].forward(a);
      if (i + 1 < layers_.size()) a = relu(a);
    }
    return a;
  }

  // Post-ReLU activations of the last hidden layer.
  Matrix penultimate(const Matrix& x) const {
    if (layers_.size() < 2) throw ValidationError("MLP has no hidden layer");
    Matrix a = x;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) a = relu(layers_[i].forward(a));
    return a;
  }

  // Gradients of every layer given d(loss)/d(logits). Writes the gradient
  // with respect to the input when d_input is non-null. `grads` is reused
  // across calls so steady-state training does not reallocate.
  void backward(const Trace& trace, const Matrix& d_logits, std::vector<DenseGrad>& grads,
                Matrix* d_input = nullptr) const {
    grads.resize(layers_.size());
    Matrix delta = d_logits;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const Matrix& in = trace.activations[k];
      grads[k].weight.noalias() = delta * in.transpose();
      grads[k].bias.noalias() = delta.rowwise().sum();
      if (k > 0 || d_input) {
        Matrix prev = layers_[k].weight.transpose() * delta;
        if (k > 0) relu_backward_inplace(prev, trace.activations[k]);
        delta = std::move(prev);
      }
    }
    if (d_input) *d_input = std::move(delta);
  }

  std::vector<DenseGrad> backward(const Trace& trace, const Matrix& d_logits,
                                  Matrix* d_input = nullptr) const {
    std::vector<DenseGrad> grads;
    backward(trace, d_logits, grads, d_input);
    return grads;
  }

  void apply(Adam& adam, const std::vector<DenseGrad>& grads, std::size_t slot_offset = 0) {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      adam.update(slot_offset + 2 * k, layers_[k].weight, grads[k].weight);
      adam.update(slot_offset + 2 * k + 1, layers_[k].bias, grads[k].bias);
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.parameter_count();
    return n;
  }

  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& l : layers_) h = l.checksum(h);
    return h;
  }

  void save(std::ostream& out) const {
    io::write_u64(out, layers_.size());
    for (const auto& l : layers_) io::write_dense(out, l);
  }

  static Mlp load(std::istream& in) {
    const auto n = io::read_u64(in);
    if (n == 0 || n > 64) throw ParseError("implausible layer count in checkpoint");
    std::vector<Dense> layers;
    for (std::uint64_t i = 0; i < n; ++i) layers.push_back(io::read_dense(in));
    return Mlp(std::move(layers));
  }

  friend bool operator==(const Mlp& a, const Mlp& b) { return a.layers_ == b.layers_; }

 private:
  std::vector<Dense> layers_;
};

}  // namespace mmlang::nn
