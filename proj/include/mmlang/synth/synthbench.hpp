#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mmlang/core/dataset.hpp"
#include "mmlang/core/embedding.hpp"
#include "mmlang/core/error.hpp"
#include "mmlang/core/manifest.hpp"
#include "mmlang/fusion/embedding_cache.hpp"
#include "mmlang/nn/tensor.hpp"

namespace mmlang {

// Synthetic multimodal benchmark. Each example has a latent class c; its text
// embedding in language L is prototype_text(c) + N(0, sigma_text[L]^2 I) and
// its image embedding is prototype_image(c) + N(0, sigma_image^2 I). The
// image noise is shared by all language versions.
struct SynthConfig {
  std::string task_name = "synth";
  int num_classes = 4;
  SplitSizes sizes{600, 200, 400};
  int text_dim = kTextEmbeddingDim;
  int image_dim = kImageEmbeddingDim;
  std::map<Language, double> sigma_text{{Language::en, 1.0}, {Language::es, 1.0},
                                        {Language::fr, 1.0}, {Language::pt, 1.0},
                                        {Language::zh, 1.0}, {Language::hi, 1.0}};
  double sigma_image = 1.0;
  // Distance between any two class prototypes (same for text and image).
  double separation = 4.0;
  std::uint64_t seed = 0;
  // Also fill the text field with toy token strings whose class signal
  // weakens as sigma_text grows, and point image_ref at synth:// images.
  bool toy_assets = false;

  void validate() const {
    if (num_classes < 2) throw ValidationError("synthetic task needs at least two classes");
    if (text_dim < num_classes || image_dim < num_classes)
      throw ValidationError("embedding dims must be at least the number of classes");
    if (sizes.train == 0 || sizes.validation == 0 || sizes.test == 0)
      throw ValidationError("every split needs at least one example");
    if (!(sigma_image >= 0)) throw ValidationError("sigma_image must be non-negative");
    if (!(separation >= 0)) throw ValidationError("separation must be non-negative");
    for (auto lang : kAllLanguages) {
      auto it = sigma_text.find(lang);
      if (it == sigma_text.end())
        throw ValidationError("sigma_text missing language '" + std::string(to_string(lang)) + "'");
      if (!(it->second >= 0)) throw ValidationError("sigma_text must be non-negative");
    }
    for (auto lang : kNonEnglish)
      if (sigma_text.at(Language::en) > sigma_text.at(lang))
        throw ValidationError("sigma_text[en] must not exceed any other language's sigma");
  }

  TaskSpec task() const {
    TaskSpec t;
    t.name = task_name;
    for (int c = 0; c < num_classes; ++c) t.classes.push_back("class_" + std::to_string(c));
    t.metric_mode = MetricMode::macro;
    return t;
  }

  // Hash of every field that changes the generated data.
  std::string fingerprint() const {
    std::string s = task_name + "|" + std::to_string(num_classes) + "|" +
                    std::to_string(sizes.train) + "," + std::to_string(sizes.validation) + "," +
                    std::to_string(sizes.test) + "|" + std::to_string(text_dim) + "|" +
                    std::to_string(image_dim) + "|" + std::to_string(sigma_image) + "|" +
                    std::to_string(separation) + "|" + std::to_string(seed) + "|" +
                    (toy_assets ? "toy" : "emb");
    for (const auto& [l, v] : sigma_text) s += "|" + std::string(to_string(l)) + std::to_string(v);
    return strings::hex64(strings::fnv1a(s)).substr(0, 12);
  }
};

struct SynthBenchmark {
  SynthConfig config;
  TaskSpec task;
  std::vector<DatasetVersion> versions;  // kAllLanguages order
  std::map<Language, EmbeddingTable> text_embeddings;
  EmbeddingTable image_embeddings;
  std::vector<nn::Vector> text_prototypes;
  std::vector<nn::Vector> image_prototypes;

  const DatasetVersion& version(Language lang) const {
    for (const auto& v : versions)
      if (v.language == lang) return v;
    throw ValidationError("no version for language '" + std::string(to_string(lang)) + "'");
  }
};

namespace detail {

// k mutually orthogonal vectors of norm separation / sqrt(2), so every pair
// of prototypes is exactly `separation` apart.
inline std::vector<nn::Vector> orthogonal_prototypes(int k, int dim, double separation,
                                                     nn::Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> basis;
  while (static_cast<int>(basis.size()) < k) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
    for (const auto& b : basis) v -= v.dot(b) * b;
    const double n = v.norm();
    if (n < 1e-6) continue;
    basis.push_back(v / n);
  }
  std::vector<nn::Vector> out;
  for (const auto& b : basis) out.push_back((b * (separation / std::sqrt(2.0))).cast<float>());
  return out;
}

inline nn::Vector gaussian_around(const nn::Vector& center, double sigma, nn::Rng& rng) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  nn::Vector v(center.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = center[i] + static_cast<float>(sigma) * normal(rng);
  return v;
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Toy sentence: 8 tokens, each a class keyword with probability
// 1 / (1 + sigma), otherwise a filler word shared by all classes.
inline std::string toy_sentence(Language lang, int label, double sigma, nn::Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> word(0, 11);
  const double p_signal = 1.0 / (1.0 + sigma);
  const auto tag = std::string(to_string(lang));
  std::string s;
  for (int t = 0; t < 8; ++t) {
    if (t) s += ' ';
    if (u(rng) < p_signal)
      s += tag + "kw" + std::to_string(label) + "x" + std::to_string(word(rng) % 4);
    else
      s += tag + "fill" + std::to_string(word(rng));
  }
  return s;
}

}  // namespace detail

// Fully determined by the config (including its seed).
inline SynthBenchmark generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  SynthBenchmark b;
  b.config = cfg;
  b.task = cfg.task();

  nn::Rng proto_rng(detail::mix(cfg.seed, 1));
  b.text_prototypes =
      detail::orthogonal_prototypes(cfg.num_classes, cfg.text_dim, cfg.separation, proto_rng);
  b.image_prototypes =
      detail::orthogonal_prototypes(cfg.num_classes, cfg.image_dim, cfg.separation, proto_rng);

  // Balanced labels within each split, shuffled.
  nn::Rng label_rng(detail::mix(cfg.seed, 2));
  struct Row {
    std::string id;
    Split split;
    int label;
  };
  std::vector<Row> rows;
  const std::size_t n_total = cfg.sizes.total();
  const int width = static_cast<int>(std::to_string(n_total).size());
  std::size_t counter = 0;
  for (auto split : kAllSplits) {
    const std::size_t n = split == Split::train        ? cfg.sizes.train
                          : split == Split::validation ? cfg.sizes.validation
                                                       : cfg.sizes.test;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(cfg.num_classes));
    std::shuffle(labels.begin(), labels.end(), label_rng);
    for (auto y : labels) {
      auto num = std::to_string(counter++);
      rows.push_back({cfg.task_name + "-" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num,
                      split, y});
    }
  }

  const auto fp = cfg.fingerprint();
  b.image_embeddings.model_checksum = "synth-image-" + fp;
  b.image_embeddings.modality = Modality::image;
  nn::Rng image_rng(detail::mix(cfg.seed, 3));
  for (const auto& r : rows)
    b.image_embeddings.insert(
        r.id, detail::gaussian_around(b.image_prototypes[static_cast<std::size_t>(r.label)],
                                      cfg.sigma_image, image_rng));

  for (auto lang : kAllLanguages) {
    const double sigma = cfg.sigma_text.at(lang);
    nn::Rng text_rng(detail::mix(cfg.seed, 10 + static_cast<std::uint64_t>(lang)));
    nn::Rng toy_rng(detail::mix(cfg.seed, 20 + static_cast<std::uint64_t>(lang)));
    DatasetVersion dv;
    dv.task = b.task;
    dv.language = lang;
    dv.provenance = lang == Language::en ? Provenance::original : Provenance::machine_translated;
    auto& table = b.text_embeddings[lang];
    table.model_checksum = "synth-text-" + std::string(to_string(lang)) + "-" + fp;
    table.modality = Modality::text;
    for (const auto& r : rows) {
      MultimodalExample e;
      e.id = r.id;
      e.split = r.split;
      e.label = r.label;
      e.language = lang;
      if (cfg.toy_assets) {
        e.text = detail::toy_sentence(lang, r.label, sigma, toy_rng);
        e.image_ref = "synth://" + std::to_string(cfg.seed) + "/" + r.id + "/" +
                      std::to_string(r.label);
      } else {
        e.text = "synthetic example " + r.id;
        e.image_ref = "synth://" + std::to_string(cfg.seed) + "/" + r.id;
      }
      table.insert(r.id, detail::gaussian_around(b.text_prototypes[static_cast<std::size_t>(r.label)],
                                                 sigma, text_rng));
      dv.examples.push_back(std::move(e));
    }
    validate(dv);
    table.dataset_key = dataset_key(dv);
    b.versions.push_back(std::move(dv));
  }
  b.image_embeddings.dataset_key = dataset_key(b.version(Language::en));
  return b;
}

struct SynthOutputPaths {
  std::map<Language, std::filesystem::path> manifests;
  std::map<Language, std::filesystem::path> text_embeddings;
  std::filesystem::path image_embeddings;
};

inline SynthOutputPaths synth_output_paths(const SynthConfig& cfg, const std::filesystem::path& dir) {
  SynthOutputPaths p;
  for (auto lang : kAllLanguages) {
    const auto l = std::string(to_string(lang));
    p.manifests[lang] = dir / (cfg.task_name + "_" + l + ".tsv");
    p.text_embeddings[lang] = dir / "embeddings" / (cfg.task_name + "_text_" + l + ".emb");
  }
  p.image_embeddings = dir / "embeddings" / (cfg.task_name + "_image.emb");
  return p;
}

// Writes the six manifests and the embedding files in the standard formats.
inline SynthOutputPaths write_synthetic(const SynthBenchmark& b, const std::filesystem::path& dir) {
  auto paths = synth_output_paths(b.config, dir);
  for (const auto& v : b.versions) {
    save_manifest(v, paths.manifests.at(v.language));
    b.text_embeddings.at(v.language).save(paths.text_embeddings.at(v.language));
  }
  b.image_embeddings.save(paths.image_embeddings);
  return paths;
}

}  // namespace mmlang
