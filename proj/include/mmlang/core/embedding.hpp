#pragma once

#include <string_view>
#include <vector>

#include "mmlang/core/error.hpp"
#include "mmlang/nn/tensor.hpp"

namespace mmlang {

enum class Modality { text, image, fused };

constexpr std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::text: return "text";
    case Modality::image: return "image";
    case Modality::fused: return "fused";
  }
  return "?";
}

inline constexpr int kTextEmbeddingDim = 768;
inline constexpr int kImageEmbeddingDim = 256;
inline constexpr int kFusedEmbeddingDim = kTextEmbeddingDim + kImageEmbeddingDim;

struct EmbeddingVector {
  Modality modality = Modality::text;
  nn::Vector values;

  int dim() const { return static_cast<int>(values.size()); }

  friend bool operator==(const EmbeddingVector& a, const EmbeddingVector& b) {
    return a.modality == b.modality && a.values.size() == b.values.size() && a.values == b.values;
  }
};

// Predicted class plus softmax scores over the task's classes.
struct Prediction {
  int label = 0;
  std::vector<float> scores;
};

// argmax with ties resolved toward the lowest class index.
inline int decide(const std::vector<float>& scores) {
  if (scores.empty()) throw ValidationError("no scores to decide from");
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
  return best;
}

inline Prediction prediction_from_logits(const nn::Vector& logits) {
  Prediction p;
  p.label = nn::argmax(logits);
  const nn::Vector s = nn::softmax(logits);
  p.scores.assign(s.data(), s.data() + s.size());
  return p;
}

}  // namespace mmlang
