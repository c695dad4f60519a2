#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "mmlang/core/dataset.hpp"
#include "mmlang/core/strings.hpp"
#include "mmlang/image/model.hpp"
#include "mmlang/preprocess/image.hpp"

namespace mmlang {

// Distinct saturated colours for class patches.
inline std::array<float, 3> class_color(int label) {
  static constexpr std::array<std::array<float, 3>, 8> kColors{{{0.9f, 0.1f, 0.1f},
                                                                {0.1f, 0.8f, 0.1f},
                                                                {0.1f, 0.2f, 0.9f},
                                                                {0.9f, 0.9f, 0.1f},
                                                                {0.8f, 0.1f, 0.8f},
                                                                {0.1f, 0.9f, 0.9f},
                                                                {0.5f, 0.5f, 0.5f},
                                                                {0.9f, 0.5f, 0.1f}}};
  return kColors[static_cast<std::size_t>(label) % kColors.size()];
}

// Grey noisy background with a centered square patch in the class colour.
inline Image render_patch_image(int label, int size, double noise, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::normal_distribution<float> n(0.0f, static_cast<float>(noise));
  Image img(size, size, 3);
  const auto color = class_color(label);
  const int lo = size / 4, hi = size - size / 4;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const bool in_patch = y >= lo && y < hi && x >= lo && x < hi;
      for (int c = 0; c < 3; ++c) {
        const float base = in_patch ? color[static_cast<std::size_t>(c)] : 0.5f;
        img.at(y, x, c) = std::clamp(base + n(rng), 0.0f, 1.0f);
      }
    }
  return img;
}

// Uniform random pixels; carries no class information.
inline Image render_noise_image(int height, int width, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(height, width, 3);
  for (auto& v : img.data) v = u(rng);
  return img;
}

// Image source for "synth://<seed>/<id>/<label>" refs written with toy assets.
inline ImageSource synthetic_image_source(int size = 64, double noise = 0.05) {
  return [size, noise](const MultimodalExample& e) {
    if (e.image_ref.rfind("synth://", 0) != 0)
      throw Error("not a synthetic image ref: " + e.image_ref);
    const auto parts = strings::split(std::string_view(e.image_ref).substr(8), '/');
    if (parts.size() != 3) throw Error("synthetic image ref carries no label: " + e.image_ref);
    auto label = strings::parse_int<int>(parts[2]);
    if (!label) throw Error("bad synthetic image ref: " + e.image_ref);
    return render_patch_image(*label, size, noise, strings::fnv1a(e.image_ref));
  };
}

}  // namespace mmlang
