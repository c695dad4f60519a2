#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "mmlang/core/strings.hpp"

namespace mmlang::nn {

using Matrix = Eigen::MatrixXf;  // column-major; batches are stored one example per column
using Vector = Eigen::VectorXf;
using Rng = std::mt19937_64;

inline std::uint64_t checksum(const Matrix& m, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return strings::fnv1a_bytes(m.data(), static_cast<std::size_t>(m.size()) * sizeof(float), h);
}

inline std::uint64_t checksum(const Vector& v, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return strings::fnv1a_bytes(v.data(), static_cast<std::size_t>(v.size()) * sizeof(float), h);
}

// Index of the largest value; ties go to the lowest index.
template <class Vec>
int argmax(const Vec& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline Vector softmax(const Vector& logits) {
  const float m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

}  // namespace mmlang::nn
