#include <gtest/gtest.h>

#include <random>

#include "mmlang/core/manifest.hpp"
#include "mmlang/pipeline/embedding_runs.hpp"
#include "mmlang/synth/synthbench.hpp"
#include "test_util.hpp"

using namespace mmlang;

namespace {

SynthConfig small(std::uint64_t seed = 0) {
  SynthConfig c;
  c.sizes = {120, 40, 80};
  c.seed = seed;
  return c;
}

// Nearest-prototype accuracy for equidistant orthogonal prototypes under
// isotropic noise. Only the noise components along the k prototype
// directions matter: class c wins when r + g_c beats every other g_j, with
// r = separation / sqrt(2) and g ~ N(0, sigma^2).
double bayes_accuracy_mc(int k, double separation, double sigma, int samples) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, sigma);
  const double r = separation / std::sqrt(2.0);
  int wins = 0;
  for (int s = 0; s < samples; ++s) {
    const double own = r + g(rng);
    bool best = true;
    for (int j = 1; j < k; ++j)
      if (g(rng) >= own) best = false;
    wins += best;
  }
  return static_cast<double>(wins) / samples;
}

double nearest_prototype_accuracy(const EmbeddingTable& table, const std::vector<nn::Vector>& protos,
                                  const DatasetVersion& dv, Split split) {
  int correct = 0, n = 0;
  for (const auto& e : dv.subset(split)) {
    const auto& v = table.at(e.id);
    int best = 0;
    float best_d = (v - protos[0]).squaredNorm();
    for (std::size_t c = 1; c < protos.size(); ++c) {
      const float d = (v - protos[c]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    correct += best == e.label;
    ++n;
  }
  return static_cast<double>(correct) / n;
}

}  // namespace

TEST(Synth, ShapesParallelismAndProvenance) {
  const auto b = generate_synthetic(small());
  ASSERT_EQ(b.versions.size(), 6u);
  EXPECT_TRUE(check_parallel(b.versions).empty());
  EXPECT_EQ(b.text_embeddings.at(Language::hi).dim, 768);
  EXPECT_EQ(b.image_embeddings.dim, 256);
  EXPECT_EQ(b.version(Language::en).provenance, Provenance::original);
  EXPECT_EQ(b.version(Language::zh).provenance, Provenance::machine_translated);
  EXPECT_EQ(b.version(Language::en).split_sizes(), (SplitSizes{120, 40, 80}));
  // Balanced classes in every split.
  for (auto s : kAllSplits) {
    std::vector<int> counts(4, 0);
    for (const auto& e : b.version(Language::fr).subset(s)) counts[e.label]++;
    EXPECT_EQ(*std::max_element(counts.begin(), counts.end()),
              *std::min_element(counts.begin(), counts.end()));
  }
  // Prototypes are exactly `separation` apart.
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) {
      EXPECT_NEAR((b.text_prototypes[i] - b.text_prototypes[j]).norm(), 4.0, 1e-4);
      EXPECT_NEAR((b.image_prototypes[i] - b.image_prototypes[j]).norm(), 4.0, 1e-4);
    }
}

TEST(Synth, DeterministicGivenSeed) {
  const auto a = generate_synthetic(small(3));
  const auto b = generate_synthetic(small(3));
  const auto c = generate_synthetic(small(4));
  const auto& id = a.versions[0].examples[17].id;
  EXPECT_EQ(a.text_embeddings.at(Language::pt).at(id), b.text_embeddings.at(Language::pt).at(id));
  EXPECT_EQ(a.image_embeddings.at(id), b.image_embeddings.at(id));
  EXPECT_EQ(a.versions[2].examples[5].label, b.versions[2].examples[5].label);
  EXPECT_NE(a.image_embeddings.at(id), c.image_embeddings.at(id));
  EXPECT_EQ(a.config.fingerprint(), b.config.fingerprint());
  EXPECT_NE(a.config.fingerprint(), c.config.fingerprint());
}

TEST(Synth, ValidationErrors) {
  auto c = small();
  c.num_classes = 1;
  EXPECT_THROW(generate_synthetic(c), ValidationError);
  c = small();
  c.image_dim = 2;
  EXPECT_THROW(generate_synthetic(c), ValidationError);
  c = small();
  c.sigma_image = -0.1;
  EXPECT_THROW(generate_synthetic(c), ValidationError);
  c = small();
  c.sigma_text[Language::es] = -1;
  EXPECT_THROW(generate_synthetic(c), ValidationError);
  c = small();
  c.sigma_text[Language::en] = 2.0;
  EXPECT_THROW(generate_synthetic(c), ValidationError);
  c = small();
  c.sigma_text.erase(Language::zh);
  EXPECT_THROW(generate_synthetic(c), ValidationError);
  c = small();
  c.sizes.validation = 0;
  EXPECT_THROW(generate_synthetic(c), ValidationError);
}

TEST(Synth, WrittenFilesRoundTrip) {
  mmlang::testing::TempDir dir;
  const auto b = generate_synthetic(small(8));
  const auto paths = write_synthetic(b, dir.path());
  std::vector<DatasetVersion> loaded;
  for (auto lang : kAllLanguages) loaded.push_back(load_manifest(paths.manifests.at(lang), b.task));
  EXPECT_TRUE(check_parallel(loaded).empty());
  EXPECT_EQ(loaded[4].examples, b.versions[4].examples);
  const auto t = EmbeddingTable::load(paths.text_embeddings.at(Language::hi));
  EXPECT_EQ(t.rows, b.text_embeddings.at(Language::hi).rows);
  EXPECT_EQ(t.model_checksum, b.text_embeddings.at(Language::hi).model_checksum);
  EXPECT_EQ(t.dataset_key, dataset_key(loaded[static_cast<std::size_t>(
                               std::find(kAllLanguages.begin(), kAllLanguages.end(), Language::hi) -
                               kAllLanguages.begin())]));
  const auto im = EmbeddingTable::load(paths.image_embeddings);
  EXPECT_EQ(im.modality, Modality::image);
  EXPECT_EQ(im.rows.size(), 240u);
}

TEST(Synth, ToyAssetsCarryLabelsAndKeywords) {
  auto c = small(2);
  c.toy_assets = true;
  const auto b = generate_synthetic(c);
  const auto& e = b.version(Language::es).examples[0];
  EXPECT_NE(e.image_ref.find("/" + std::to_string(e.label)), std::string::npos);
  EXPECT_EQ(std::count(e.text.begin(), e.text.end(), ' '), 7);
  EXPECT_TRUE(check_parallel(b.versions).empty());
}

TEST(Synth, NearestPrototypeMatchesBayesOracle) {
  for (double sigma : {0.8, 1.6, 2.4}) {
    SynthConfig c;
    c.sizes = {4, 4, 4000};
    for (auto& [l, s] : c.sigma_text) s = sigma;
    c.sigma_image = sigma;
    c.seed = 21;
    const auto b = generate_synthetic(c);
    const double oracle = bayes_accuracy_mc(4, 4.0, sigma, 100000);
    const auto& en = b.version(Language::en);
    EXPECT_NEAR(nearest_prototype_accuracy(b.text_embeddings.at(Language::en), b.text_prototypes,
                                           en, Split::test),
                oracle, 0.03)
        << "sigma " << sigma;
    EXPECT_NEAR(nearest_prototype_accuracy(b.image_embeddings, b.image_prototypes, en, Split::test),
                oracle, 0.03);
  }
}

TEST(Synth, TrainedProbeApproachesBayesOracle) {
  SynthConfig c;
  c.text_dim = 8;
  c.image_dim = 8;
  c.sizes = {2000, 500, 4000};
  for (auto& [l, s] : c.sigma_text) s = 1.6;
  c.seed = 5;
  const auto b = generate_synthetic(c);
  auto cfg = TrainingConfig::text_defaults();
  cfg.learning_rate = 1e-2;
  const auto run = run_linear_probe(b.task, b.text_embeddings.at(Language::en),
                                    b.version(Language::en), cfg);
  EXPECT_NEAR(run.metrics.accuracy, bayes_accuracy_mc(4, 4.0, 1.6, 100000), 0.03);
}

TEST(Synth, NoiselessDataIsPerfectlySeparable) {
  auto c = small(1);
  for (auto& [l, s] : c.sigma_text) s = 0.0;
  c.sigma_image = 0.0;
  const auto b = generate_synthetic(c);
  const auto& en = b.version(Language::en);
  EXPECT_DOUBLE_EQ(
      run_linear_probe(b.task, b.image_embeddings, en, TrainingConfig::image_defaults()).metrics.f1,
      1.0);
  for (const auto& dv : b.versions) {
    const auto& text = b.text_embeddings.at(dv.language);
    EXPECT_DOUBLE_EQ(run_linear_probe(b.task, text, dv, TrainingConfig::text_defaults()).metrics.f1,
                     1.0);
    EXPECT_DOUBLE_EQ(run_fusion_on_tables(b.task, text, b.image_embeddings, dv,
                                          TrainingConfig::fusion_defaults())
                         .metrics.f1,
                     1.0);
  }
}

TEST(Synth, CleanImagesBeatNoisyHindiText) {
  auto c = small(6);
  c.sigma_image = 0.0;
  c.sigma_text[Language::hi] = 4.0;
  const auto b = generate_synthetic(c);
  const double image =
      run_linear_probe(b.task, b.image_embeddings, b.version(Language::en),
                       TrainingConfig::image_defaults())
          .metrics.f1;
  const double hi = run_linear_probe(b.task, b.text_embeddings.at(Language::hi),
                                     b.version(Language::hi), TrainingConfig::text_defaults())
                        .metrics.f1;
  EXPECT_DOUBLE_EQ(image, 1.0);
  EXPECT_LT(hi, image);
}

TEST(Synth, TextF1DoesNotIncreaseWithSigma) {
  const std::vector<double> sigmas{0.6, 1.0, 1.4, 1.8};
  std::vector<double> mean_f1;
  for (double s : sigmas) {
    double total = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto c = small(seed);
      c.sigma_text[Language::en] = 0.5;
      c.sigma_text[Language::hi] = s;
      const auto b = generate_synthetic(c);
      auto cfg = TrainingConfig::text_defaults();
      cfg.seed = seed;
      total += run_linear_probe(b.task, b.text_embeddings.at(Language::hi), b.version(Language::hi),
                                cfg)
                   .metrics.f1;
    }
    mean_f1.push_back(total / 10);
  }
  for (std::size_t i = 1; i < mean_f1.size(); ++i)
    EXPECT_LE(mean_f1[i], mean_f1[i - 1]) << "sigma " << sigmas[i];
}
