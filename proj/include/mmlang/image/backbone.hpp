#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "mmlang/core/strings.hpp"
#include "mmlang/nn/layers.hpp"
#include "mmlang/preprocess/image.hpp"

namespace mmlang {

// Frozen pretrained feature extractor feeding the image head.
class ImageBackbone {
 public:
  virtual ~ImageBackbone() = default;
  virtual std::string id() const = 0;
  virtual int feature_dim() const = 0;
  virtual nn::Vector features(const StandardImage& image) const = 0;
  virtual std::uint64_t parameter_checksum() const = 0;
};

// Desk-scale stand-in for a convolutional backbone: average-pools the image
// on a grid x grid lattice per channel, then applies a fixed projection with
// ReLU. Weights derive from the id, so an id always names the same network.
class PooledProjectionBackbone final : public ImageBackbone {
 public:
  explicit PooledProjectionBackbone(std::string id = "vgg16-imagenet", int grid = 14,
                                    int feature_dim = 512)
      : id_(std::move(id)), grid_(grid), projection_(grid * grid * 3, feature_dim) {
    if (kStandardImageSize % grid != 0) throw ValidationError("grid must divide 224");
    nn::Rng rng(strings::fnv1a(id_));
    projection_.init_uniform(rng);
  }

  std::string id() const override { return id_; }
  int feature_dim() const override { return projection_.out(); }

  nn::Vector pooled(const StandardImage& image) const {
    const auto& px = image.pixels();
    const int cell = kStandardImageSize / grid_;
    nn::Vector out = nn::Vector::Zero(grid_ * grid_ * 3);
    for (int y = 0; y < px.height; ++y) {
      const int gy = y / cell;
      for (int x = 0; x < px.width; ++x) {
        const int gx = x / cell;
        for (int c = 0; c < 3; ++c) out[(gy * grid_ + gx) * 3 + c] += px.at(y, x, c);
      }
    }
    return out / static_cast<float>(cell * cell);
  }

  nn::Vector features(const StandardImage& image) const override {
    return nn::relu(projection_.forward(pooled(image))).col(0);
  }

  std::uint64_t parameter_checksum() const override { return projection_.checksum(); }

  const nn::Dense& projection() const { return projection_; }

 private:
  std::string id_;
  int grid_;
  nn::Dense projection_;
};

inline std::shared_ptr<const ImageBackbone> make_backbone(const std::string& id) {
  return std::make_shared<PooledProjectionBackbone>(id);
}

}  // namespace mmlang
