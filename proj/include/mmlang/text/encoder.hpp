#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmlang/core/dataset.hpp"
#include "mmlang/core/embedding.hpp"
#include "mmlang/core/error.hpp"
#include "mmlang/core/task.hpp"
#include "mmlang/nn/adam.hpp"
#include "mmlang/nn/layers.hpp"
#include "mmlang/text/tokenizer.hpp"
#include "mmlang/train/early_stopping.hpp"

namespace mmlang {

enum class EncoderFamily { monolingual, multilingual };

constexpr std::string_view to_string(EncoderFamily f) {
  return f == EncoderFamily::monolingual ? "monolingual" : "multilingual";
}

inline EncoderFamily encoder_family_from_string(std::string_view s) {
  if (s == "monolingual") return EncoderFamily::monolingual;
  if (s == "multilingual") return EncoderFamily::multilingual;
  throw ParseError("unknown encoder family '" + std::string(s) + "'");
}

// Identifies a pretrained text encoder. The desk-scale encoder behind an id is
// a hashed token-embedding table followed by a per-token tanh projection to
// hidden_dim; its "pretrained" weights are derived deterministically from the
// id, so the same id always yields the same starting point.
struct TextEncoderSpec {
  std::string encoder_id;
  EncoderFamily family = EncoderFamily::multilingual;
  Language language = Language::en;
  int hidden_dim = kTextEmbeddingDim;
  int token_dim = 64;
  int vocab_buckets = 16384;
  int max_tokens = 128;

  bool supports(Language l) const {
    return family == EncoderFamily::multilingual || language == l;
  }

  void validate() const {
    if (encoder_id.empty()) throw ValidationError("encoder id is empty");
    if (hidden_dim < 1 || token_dim < 1 || vocab_buckets < 1 || max_tokens < 1)
      throw ValidationError("text encoder dimensions must be positive");
  }

  friend bool operator==(const TextEncoderSpec&, const TextEncoderSpec&) = default;
};

// Encoder ids used by default for each family and language.
inline std::string default_encoder_id(EncoderFamily family, Language lang) {
  if (family == EncoderFamily::multilingual) return "distilbert-base-multilingual-cased";
  switch (lang) {
    case Language::en: return "distilbert-base-cased";
    case Language::es: return "dccuchile/bert-base-spanish-wwm-cased";
    case Language::fr: return "camembert-base";
    case Language::pt: return "neuralmind/bert-base-portuguese-cased";
    case Language::zh: return "hfl/chinese-bert-wwm-ext";
    case Language::hi: return "monsoon-nlp/hindi-bert";
  }
  return {};
}

// Token embeddings (token_dim x vocab, one column per bucket) and the
// per-token projection whose mean-pooled output is the text embedding.
struct TextBody {
  nn::Matrix embeddings;
  nn::Dense projection;

  static TextBody pretrained(const TextEncoderSpec& spec) {
    spec.validate();
    nn::Rng rng(strings::fnv1a(spec.encoder_id));
    TextBody b;
    b.embeddings.resize(spec.token_dim, spec.vocab_buckets);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    for (Eigen::Index i = 0; i < b.embeddings.size(); ++i) b.embeddings.data()[i] = normal(rng);
    b.projection = nn::Dense(spec.token_dim, spec.hidden_dim);
    b.projection.init_uniform(rng);
    return b;
  }

  // hidden_dim x n_tokens matrix of penultimate per-token outputs.
  nn::Matrix token_outputs(std::span<const int> ids) const {
    nn::Matrix e(embeddings.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t t = 0; t < ids.size(); ++t)
      e.col(static_cast<Eigen::Index>(t)) = embeddings.col(ids[t]);
    return projection.forward(e).array().tanh().matrix();
  }

  std::uint64_t checksum(std::uint64_t h = 0xcbf29ce484222325ULL) const {
    return projection.checksum(nn::checksum(embeddings, h));
  }

  friend bool operator==(const TextBody& a, const TextBody& b) {
    return a.embeddings == b.embeddings && a.projection == b.projection;
  }
};

struct FineTunedTextModel {
  TextEncoderSpec spec;
  TaskSpec task;
  Language language = Language::en;
  TextBody body;
  nn::Dense head;  // hidden_dim -> |classes|
  TrainingConfig config;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int stopped_epoch = 0;

  std::vector<int> ids(std::string_view text) const {
    auto v = token_ids(text, spec.vocab_buckets, spec.max_tokens);
    if (v.empty()) throw ValidationError("text tokenizes to zero tokens");
    return v;
  }

  std::uint64_t checksum() const { return head.checksum(body.checksum()); }

  void save(std::ostream& out) const {
    nn::io::write_u64(out, static_cast<std::uint64_t>(body.embeddings.rows()));
    nn::io::write_u64(out, static_cast<std::uint64_t>(body.embeddings.cols()));
    nn::io::write_floats(out, body.embeddings.data(),
                         static_cast<std::size_t>(body.embeddings.size()));
    nn::io::write_dense(out, body.projection);
    nn::io::write_dense(out, head);
  }

  // Restores weights saved by save(); spec/task/metadata come from the sidecar.
  void load_weights(std::istream& in) {
    const auto rows = nn::io::read_u64(in);
    const auto cols = nn::io::read_u64(in);
    if (static_cast<int>(rows) != spec.token_dim || static_cast<int>(cols) != spec.vocab_buckets)
      throw ParseError("text checkpoint does not match the encoder spec");
    body.embeddings.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    nn::io::read_floats(in, body.embeddings.data(), static_cast<std::size_t>(body.embeddings.size()));
    body.projection = nn::io::read_dense(in);
    head = nn::io::read_dense(in);
    if (head.in() != spec.hidden_dim || head.out() != static_cast<int>(task.num_classes()))
      throw ParseError("text checkpoint head does not match the task");
  }
};

// Mean over token positions of the penultimate per-token outputs.
inline EmbeddingVector embed_text(const FineTunedTextModel& model, std::string_view text) {
  const auto ids = model.ids(text);
  const nn::Matrix h = model.body.token_outputs(ids);
  return {Modality::text, h.rowwise().mean()};
}

inline Prediction predict_text(const FineTunedTextModel& model, std::string_view text) {
  const auto emb = embed_text(model, text);
  const nn::Matrix logits = model.head.forward(emb.values);
  return prediction_from_logits(logits.col(0));
}

namespace detail {

struct TokenizedSplit {
  std::vector<std::vector<int>> ids;
  std::vector<int> labels;
};

// Full fine-tuning of body and head. The embedding table gets lazy Adam
// updates (only columns touched by the minibatch move), the dense parts get
// ordinary Adam.
class TextTrainer {
 public:
  TextTrainer(FineTunedTextModel& model, TokenizedSplit train, TokenizedSplit val,
              const TrainingConfig& cfg)
      : model_(model), train_(std::move(train)), val_(std::move(val)), cfg_(cfg),
        adam_(nn::AdamOptions{static_cast<float>(cfg.learning_rate)}),
        emb_m_(nn::Matrix::Zero(model.body.embeddings.rows(), model.body.embeddings.cols())),
        emb_v_(emb_m_) {
    order_.resize(train_.ids.size());
    std::iota(order_.begin(), order_.end(), 0);
  }

  double train_epoch(nn::Rng& rng) {
    std::shuffle(order_.begin(), order_.end(), rng);
    const auto batch = static_cast<std::size_t>(cfg_.batch_size);
    double total = 0.0;
    for (std::size_t start = 0; start < order_.size(); start += batch) {
      const auto len = std::min(batch, order_.size() - start);
      total += step(std::span<const std::size_t>(order_.data() + start, len)) *
               static_cast<double>(len);
    }
    return total / static_cast<double>(order_.size());
  }

  double validation_loss() const {
    double total = 0.0;
    for (std::size_t i = 0; i < val_.ids.size(); ++i) {
      const nn::Matrix h = model_.body.token_outputs(val_.ids[i]);
      const nn::Vector pooled = h.rowwise().mean();
      const nn::Matrix logits = model_.head.forward(pooled);
      const int y = val_.labels[i];
      total += nn::softmax_cross_entropy(logits, std::span<const int>(&y, 1), nullptr);
    }
    return total / static_cast<double>(val_.ids.size());
  }

  struct Snapshot {
    TextBody body;
    nn::Dense head;
  };
  Snapshot snapshot() const { return {model_.body, model_.head}; }
  void restore(Snapshot s) {
    model_.body = std::move(s.body);
    model_.head = std::move(s.head);
  }

 private:
  double step(std::span<const std::size_t> batch) {
    auto& body = model_.body;
    const auto n = static_cast<Eigen::Index>(batch.size());
    std::vector<Eigen::Index> offsets{0};
    std::vector<int> flat;
    std::vector<int> labels;
    for (auto idx : batch) {
      const auto& ids = train_.ids[idx];
      flat.insert(flat.end(), ids.begin(), ids.end());
      offsets.push_back(static_cast<Eigen::Index>(flat.size()));
      labels.push_back(train_.labels[idx]);
    }
    const auto total_tokens = static_cast<Eigen::Index>(flat.size());
    nn::Matrix e(body.embeddings.rows(), total_tokens);
    for (Eigen::Index t = 0; t < total_tokens; ++t)
      e.col(t) = body.embeddings.col(flat[static_cast<std::size_t>(t)]);
    const nn::Matrix h = body.projection.forward(e).array().tanh().matrix();
    nn::Matrix pooled(h.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto b = offsets[static_cast<std::size_t>(j)];
      const auto len = offsets[static_cast<std::size_t>(j) + 1] - b;
      pooled.col(j) = h.middleCols(b, len).rowwise().mean();
    }
    const nn::Matrix logits = model_.head.forward(pooled);
    nn::Matrix d_logits;
    const double loss = nn::softmax_cross_entropy(logits, labels, &d_logits);

    const nn::Matrix d_head_w = d_logits * pooled.transpose();
    const nn::Vector d_head_b = d_logits.rowwise().sum();
    const nn::Matrix d_pooled = model_.head.weight.transpose() * d_logits;
    nn::Matrix d_pre(h.rows(), total_tokens);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto b = offsets[static_cast<std::size_t>(j)];
      const auto len = offsets[static_cast<std::size_t>(j) + 1] - b;
      const float inv = 1.0f / static_cast<float>(len);
      for (Eigen::Index t = b; t < b + len; ++t) d_pre.col(t) = d_pooled.col(j) * inv;
    }
    d_pre.array() *= (1.0f - h.array().square());
    const nn::Matrix d_proj_w = d_pre * e.transpose();
    const nn::Vector d_proj_b = d_pre.rowwise().sum();
    const nn::Matrix d_e = body.projection.weight.transpose() * d_pre;

    // Accumulate per-bucket gradients for the touched columns.
    std::vector<int> touched(flat);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    nn::Matrix d_emb = nn::Matrix::Zero(body.embeddings.rows(), static_cast<Eigen::Index>(touched.size()));
    for (Eigen::Index t = 0; t < total_tokens; ++t) {
      const auto pos = std::lower_bound(touched.begin(), touched.end(), flat[static_cast<std::size_t>(t)]) -
                       touched.begin();
      d_emb.col(pos) += d_e.col(t);
    }

    adam_.begin_step();
    adam_.update(0, model_.head.weight, d_head_w);
    adam_.update(1, model_.head.bias, d_head_b);
    adam_.update(2, body.projection.weight, d_proj_w);
    adam_.update(3, body.projection.bias, d_proj_b);
    lazy_embedding_update(touched, d_emb);
    return loss;
  }

  void lazy_embedding_update(const std::vector<int>& touched, const nn::Matrix& grad) {
    const auto& o = adam_.options();
    const auto t = static_cast<float>(adam_.step_count());
    const float c1 = 1.0f - std::pow(o.beta1, t);
    const float c2 = 1.0f - std::pow(o.beta2, t);
    for (std::size_t k = 0; k < touched.size(); ++k) {
      const auto col = touched[k];
      const auto g = grad.col(static_cast<Eigen::Index>(k)).array();
      auto m = emb_m_.col(col).array();
      auto v = emb_v_.col(col).array();
      m = o.beta1 * m + (1.0f - o.beta1) * g;
      v = o.beta2 * v + (1.0f - o.beta2) * g.square();
      model_.body.embeddings.col(col).array() -=
          (o.learning_rate / c1) * m / ((v / c2).sqrt() + o.epsilon);
    }
  }

  FineTunedTextModel& model_;
  TokenizedSplit train_;
  TokenizedSplit val_;
  TrainingConfig cfg_;
  nn::Adam adam_;
  nn::Matrix emb_m_;
  nn::Matrix emb_v_;
  std::vector<std::size_t> order_;
};

inline TokenizedSplit tokenize_split(const FineTunedTextModel& model,
                                     std::span<const MultimodalExample> split) {
  TokenizedSplit out;
  for (const auto& e : split) {
    auto ids = token_ids(e.text, model.spec.vocab_buckets, model.spec.max_tokens);
    if (ids.empty())
      throw ValidationError("example '" + e.id + "' tokenizes to zero tokens");
    if (!model.task.valid_label(e.label))
      throw ValidationError("example '" + e.id + "' has an out-of-range label");
    out.ids.push_back(std::move(ids));
    out.labels.push_back(e.label);
  }
  return out;
}

}  // namespace detail

// Replaces the pre-training head with a fresh classification head and
// fine-tunes body and head with cross-entropy and Adam, stopping on
// validation loss. The returned model carries the best-validation weights.
// Only the head initialization and the shuffling order depend on cfg.seed.
inline FineTunedTextModel fine_tune_text(const TextEncoderSpec& spec, const TaskSpec& task,
                                         std::span<const MultimodalExample> train,
                                         std::span<const MultimodalExample> val,
                                         const TrainingConfig& cfg) {
  spec.validate();
  task.validate();
  cfg.validate();
  if (train.empty()) throw ValidationError("empty training split");
  if (val.empty()) throw ValidationError("empty validation split");
  const Language lang = train.front().language;
  for (auto split : {train, val})
    for (const auto& e : split)
      if (e.language != lang) throw ValidationError("training data mixes languages");
  if (!spec.supports(lang))
    throw ValidationError("encoder '" + spec.encoder_id + "' is monolingual " +
                          std::string(to_string(spec.language)) + " but the data is " +
                          std::string(to_string(lang)));

  FineTunedTextModel model;
  model.spec = spec;
  model.task = task;
  model.language = lang;
  model.config = cfg;
  model.body = TextBody::pretrained(spec);
  model.head = nn::Dense(spec.hidden_dim, static_cast<int>(task.num_classes()));
  nn::Rng head_rng(cfg.seed ^ 0xA5A5A5A5DEADBEEFULL);
  model.head.init_uniform(head_rng);

  detail::TextTrainer trainer(model, detail::tokenize_split(model, train),
                              detail::tokenize_split(model, val), cfg);
  const auto result = fit(trainer, cfg);
  model.best_val_loss = result.best_val_loss;
  model.best_epoch = result.best_epoch;
  model.stopped_epoch = result.stopped_epoch;
  return model;
}

}  // namespace mmlang
