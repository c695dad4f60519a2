#include <gtest/gtest.h>

#include <sstream>

#include "mmlang/eval/metrics.hpp"
#include "mmlang/synth/toy_images.hpp"
#include "test_util.hpp"

using namespace mmlang;

namespace {

TaskSpec four_class() {
  TaskSpec t;
  t.name = "shapes";
  t.classes = {"a", "b", "c", "d"};
  return t;
}

// Labels cycle; images come from `render(example)`.
struct ImageData {
  std::vector<MultimodalExample> train, val, test;
};

ImageData split_data(const TaskSpec& task, SplitSizes sizes, std::uint64_t seed) {
  auto dv = mmlang::testing::make_dataset(task, sizes, Language::en, "s" + std::to_string(seed));
  for (auto& e : dv.examples) e.image_ref = "synth://" + std::to_string(seed) + "/" + e.id + "/" +
                                            std::to_string(e.label);
  return {dv.subset(Split::train), dv.subset(Split::validation), dv.subset(Split::test)};
}

double test_accuracy(const ImageModel& m, std::span<const MultimodalExample> test,
                     const ImageSource& src, const TaskSpec& task) {
  std::vector<int> gold, pred;
  for (const auto& e : test) {
    gold.push_back(e.label);
    pred.push_back(predict_image(m, standardize_image(src(e))).label);
  }
  return compute_metrics(gold, pred, task).accuracy;
}

}  // namespace

TEST(ImageBackbone, SameIdSameWeightsAndFeatureDim) {
  PooledProjectionBackbone a, b;
  EXPECT_EQ(a.parameter_checksum(), b.parameter_checksum());
  EXPECT_NE(a.parameter_checksum(), PooledProjectionBackbone("resnet").parameter_checksum());
  EXPECT_EQ(a.feature_dim(), 512);
  EXPECT_EQ(a.id(), "vgg16-imagenet");
}

TEST(ImageBackbone, PixelsOutsideCenterCropAreIgnored) {
  // 224 x 300: shorter side already 224, crop keeps columns 38..261.
  const auto plan = plan_resize_crop(224, 300);
  EXPECT_EQ(plan.crop_left, 38);
  auto img = render_noise_image(224, 300, 4);
  PooledProjectionBackbone bb;
  const auto before = bb.features(standardize_image(img));
  for (int y = 0; y < 224; ++y)
    for (int x = 0; x < 300; ++x)
      if (x < 38 || x > 261)
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = 1.0f - img.at(y, x, c);
  EXPECT_EQ(bb.features(standardize_image(img)), before);
  img.at(100, 38, 0) += 0.5f;
  EXPECT_NE(bb.features(standardize_image(img)), before);
}

TEST(ImageModel, HeadWidthsAndEmbeddingDim) {
  nn::Rng rng(0);
  ImageModel m;
  m.backbone = make_backbone("vgg16-imagenet");
  m.head = make_image_head(m.backbone->feature_dim(), 3, rng);
  EXPECT_EQ(m.head_widths(), (std::array<int, 3>{4096, 256, 3}));
  const auto e = embed_image(m, standardize_image(render_patch_image(1, 32, 0.0, 1)));
  EXPECT_EQ(e.dim(), 256);
  EXPECT_EQ(e.modality, Modality::image);
  EXPECT_GE(e.values.minCoeff(), 0.0f);
}

TEST(ImageModel, LearnsColouredPatchesWithFrozenBackbone) {
  const auto task = four_class();
  const auto d = split_data(task, {80, 40, 80}, 1);
  const auto src = synthetic_image_source(32, 0.05);
  auto backbone = make_backbone("vgg16-imagenet");
  const auto before = backbone->parameter_checksum();
  auto cfg = TrainingConfig::image_defaults();
  cfg.max_epochs = 30;
  const auto m = train_image_head(backbone, task, d.train, d.val, src, cfg);
  EXPECT_EQ(backbone->parameter_checksum(), before);
  EXPECT_GE(test_accuracy(m, d.test, src, task), 0.95);
  EXPECT_LE(m.best_epoch, m.stopped_epoch);
}

TEST(ImageModel, NoiseImagesStayAtChance) {
  const auto task = four_class();
  double total = 0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const auto d = split_data(task, {40, 20, 100}, 100 + s);
    const ImageSource noise = [](const MultimodalExample& e) {
      return render_noise_image(24, 24, strings::fnv1a(e.image_ref));
    };
    auto cfg = TrainingConfig::image_defaults();
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.max_epochs = 15;
    const auto m = train_image_head(make_backbone("vgg16-imagenet"), task, d.train, d.val, noise, cfg);
    total += test_accuracy(m, d.test, noise, task);
  }
  EXPECT_NEAR(total / seeds, 0.25, 0.05);
}

TEST(ImageModel, UnresolvableImageNamesTheExample) {
  const auto task = four_class();
  auto d = split_data(task, {4, 4, 4}, 2);
  d.train[1].image_ref = "missing/file.ppm";
  try {
    train_image_head(make_backbone("vgg16-imagenet"), task, d.train, d.val,
                     file_image_source("/nonexistent"), TrainingConfig::image_defaults());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(d.train[0].id), std::string::npos);
  }
}

TEST(ToyImages, SyntheticRefsRequireLabel) {
  MultimodalExample e;
  e.image_ref = "synth://3/x";
  EXPECT_THROW(synthetic_image_source()(e), Error);
  e.image_ref = "synth://3/x/2";
  const auto img = synthetic_image_source(16, 0.0)(e);
  EXPECT_EQ(img.height, 16);
  EXPECT_FLOAT_EQ(img.at(8, 8, 2), class_color(2)[2]);
  EXPECT_FLOAT_EQ(img.at(0, 0, 0), 0.5f);
}
