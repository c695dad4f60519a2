#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmlang/core/error.hpp"
#include "mmlang/nn/tensor.hpp"

namespace mmlang::nn {

// Fully connected layer y = W x + b. weight is (out x in).
struct Dense {
  Matrix weight;
  Vector bias;

  Dense() = default;
  Dense(int in, int out) : weight(Matrix::Zero(out, in)), bias(Vector::Zero(out)) {}

  int in() const { return static_cast<int>(weight.cols()); }
  int out() const { return static_cast<int>(weight.rows()); }

  // Uniform(-1/sqrt(in), 1/sqrt(in)) for weights and biases.
  void init_uniform(Rng& rng) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(in()));
    std::uniform_real_distribution<float> dist(-bound, bound);
    for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = dist(rng);
    for (Eigen::Index i = 0; i < bias.size(); ++i) bias[i] = dist(rng);
  }

  Matrix forward(const Matrix& x) const {
    Matrix y = weight * x;
    y.colwise() += bias;
    return y;
  }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(weight.size() + bias.size());
  }

  std::uint64_t checksum(std::uint64_t h = 0xcbf29ce484222325ULL) const {
    return nn::checksum(bias, nn::checksum(weight, h));
  }

  friend bool operator==(const Dense& a, const Dense& b) {
    return a.weight == b.weight && a.bias == b.bias;
  }
};

struct DenseGrad {
  Matrix weight;
  Vector bias;
};

inline Matrix relu(const Matrix& x) { return x.cwiseMax(0.0f); }

// Multiply the upstream gradient by the ReLU derivative evaluated at the
// post-activation values.
inline void relu_backward_inplace(Matrix& grad, const Matrix& activated) {
  grad = (activated.array() > 0.0f).select(grad, 0.0f);
}

// Mean softmax cross-entropy over the batch. Returns the loss and writes
// d(loss)/d(logits) into grad when it is non-null.
inline double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels,
                                    Matrix* grad) {
  const auto n = logits.cols();
  if (static_cast<std::size_t>(n) != labels.size())
    throw ValidationError("label count does not match batch size");
  double loss = 0.0;
  if (grad) grad->resize(logits.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto col = logits.col(j);
    const float m = col.maxCoeff();
    const double sum = (col.array() - m).exp().cast<double>().sum();
    const double log_z = m + std::log(sum);
    const auto y = labels[static_cast<std::size_t>(j)];
    loss += log_z - col[y];
    if (grad) {
      for (Eigen::Index i = 0; i < logits.rows(); ++i)
        (*grad)(i, j) = static_cast<float>(std::exp(col[i] - log_z));
      (*grad)(y, j) -= 1.0f;
    }
  }
  if (grad && n > 0) *grad /= static_cast<float>(n);
  return n > 0 ? loss / static_cast<double>(n) : 0.0;
}

namespace io {

inline void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("truncated checkpoint");
  return v;
}

inline void write_floats(std::ostream& out, const float* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(float)));
}

inline void read_floats(std::istream& in, float* p, std::size_t n) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw ParseError("truncated checkpoint");
}

inline void write_dense(std::ostream& out, const Dense& d) {
  write_u64(out, static_cast<std::uint64_t>(d.in()));
  write_u64(out, static_cast<std::uint64_t>(d.out()));
  write_floats(out, d.weight.data(), static_cast<std::size_t>(d.weight.size()));
  write_floats(out, d.bias.data(), static_cast<std::size_t>(d.bias.size()));
}

inline Dense read_dense(std::istream& in) {
  const auto n_in = read_u64(in);
  const auto n_out = read_u64(in);
  if (n_in == 0 || n_out == 0 || n_in > (1u << 24) || n_out > (1u << 24))
    throw ParseError("implausible layer shape in checkpoint");
  Dense d(static_cast<int>(n_in), static_cast<int>(n_out));
  read_floats(in, d.weight.data(), static_cast<std::size_t>(d.weight.size()));
  read_floats(in, d.bias.data(), static_cast<std::size_t>(d.bias.size()));
  return d;
}

}  // namespace io
}  // namespace mmlang::nn
