#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mmlang/core/error.hpp"

namespace mmlang {

// Row-major H x W x C float image, values nominally in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c = 3, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c),
             fill) {}

  float& at(int y, int x, int c) { return data[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data[index(y, x, c)]; }

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
            static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels) +
           static_cast<std::size_t>(c);
  }

  friend bool operator==(const Image&, const Image&) = default;
};

inline constexpr int kStandardImageSize = 224;

// Per-channel normalization constants; defaults are the ImageNet statistics.
struct Normalization {
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> stddev{0.229f, 0.224f, 0.225f};
};

// Geometry of the resize-then-center-crop step.
struct ResizePlan {
  int resized_height;
  int resized_width;
  int crop_top;
  int crop_left;

  friend bool operator==(const ResizePlan&, const ResizePlan&) = default;
};

// Shorter side becomes `target`, the longer side keeps the aspect ratio
// (rounded half up), and the crop takes the lower offset when the margin is odd.
inline ResizePlan plan_resize_crop(int height, int width, int target = kStandardImageSize) {
  if (height < 1 || width < 1) throw ValidationError("image must be at least 1x1");
  const auto h = static_cast<std::int64_t>(height);
  const auto w = static_cast<std::int64_t>(width);
  const auto t = static_cast<std::int64_t>(target);
  ResizePlan p{};
  if (h <= w) {
    p.resized_height = target;
    p.resized_width = static_cast<int>((2 * w * t + h) / (2 * h));
  } else {
    p.resized_width = target;
    p.resized_height = static_cast<int>((2 * h * t + w) / (2 * w));
  }
  p.resized_height = std::max(p.resized_height, target);
  p.resized_width = std::max(p.resized_width, target);
  p.crop_top = (p.resized_height - target) / 2;
  p.crop_left = (p.resized_width - target) / 2;
  return p;
}

// Bilinear resampling with half-pixel centers and edge clamping. Scale 1 is
// an exact copy.
inline Image resize_bilinear(const Image& src, int out_h, int out_w) {
  if (out_h == src.height && out_w == src.width) return src;
  Image dst(out_h, out_w, src.channels);
  const double sy = static_cast<double>(src.height) / out_h;
  const double sx = static_cast<double>(src.width) / out_w;
  std::vector<int> x0(static_cast<std::size_t>(out_w)), x1(static_cast<std::size_t>(out_w));
  std::vector<float> fx(static_cast<std::size_t>(out_w));
  for (int x = 0; x < out_w; ++x) {
    double s = (x + 0.5) * sx - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src.width - 1));
    const int lo = static_cast<int>(std::floor(s));
    const auto ux = static_cast<std::size_t>(x);
    x0[ux] = lo;
    x1[ux] = std::min(lo + 1, src.width - 1);
    fx[ux] = static_cast<float>(s - lo);
  }
  for (int y = 0; y < out_h; ++y) {
    double s = (y + 0.5) * sy - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(std::floor(s));
    const int y1 = std::min(y0 + 1, src.height - 1);
    const auto fy = static_cast<float>(s - y0);
    for (int x = 0; x < out_w; ++x) {
      const auto ux = static_cast<std::size_t>(x);
      for (int c = 0; c < src.channels; ++c) {
        const float top = src.at(y0, x0[ux], c) * (1 - fx[ux]) + src.at(y0, x1[ux], c) * fx[ux];
        const float bot = src.at(y1, x0[ux], c) * (1 - fx[ux]) + src.at(y1, x1[ux], c) * fx[ux];
        dst.at(y, x, c) = top * (1 - fy) + bot * fy;
      }
    }
  }
  return dst;
}

inline Image crop(const Image& src, int top, int left, int h, int w) {
  if (top < 0 || left < 0 || top + h > src.height || left + w > src.width)
    throw ValidationError("crop window outside the image");
  Image dst(h, w, src.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < src.channels; ++c) dst.at(y, x, c) = src.at(top + y, left + x, c);
  return dst;
}

// Resize so the shorter side is 224, then take the centered 224x224 square.
inline Image resize_and_center_crop(const Image& img, int target = kStandardImageSize) {
  if (img.channels != 3)
    throw ValidationError("expected a 3-channel image, got " + std::to_string(img.channels));
  const auto plan = plan_resize_crop(img.height, img.width, target);
  const auto resized = resize_bilinear(img, plan.resized_height, plan.resized_width);
  return crop(resized, plan.crop_top, plan.crop_left, target, target);
}

// A 224x224x3 image normalized per channel. Only standardize_image builds one.
class StandardImage {
 public:
  const Image& pixels() const { return pixels_; }
  friend bool operator==(const StandardImage&, const StandardImage&) = default;

  // For callers that already hold normalized 224x224x3 data (e.g. from a cache).
  static StandardImage adopt(Image normalized) {
    if (normalized.height != kStandardImageSize || normalized.width != kStandardImageSize ||
        normalized.channels != 3)
      throw ValidationError("standard images are 224x224x3");
    return StandardImage(std::move(normalized));
  }

 private:
  explicit StandardImage(Image img) : pixels_(std::move(img)) {}
  Image pixels_;
  friend StandardImage standardize_image(const Image&, const Normalization&);
};

inline StandardImage standardize_image(const Image& img, const Normalization& norm = {}) {
  Image out = resize_and_center_crop(img);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) {
        auto& v = out.at(y, x, c);
        const auto uc = static_cast<std::size_t>(c);
        v = (v - norm.mean[uc]) / norm.stddev[uc];
      }
  return StandardImage(std::move(out));
}

// Binary PPM (P6, maxval <= 255) reader and writer.
inline Image read_ppm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open image " + path.string());
  auto next_token = [&]() {
    std::string tok;
    char c;
    while (f.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(f, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        continue;
      }
      tok += c;
    }
    return tok;
  };
  if (next_token() != "P6") throw ParseError(path.string() + ": not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": bad PPM header");
  }
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
    throw ParseError(path.string() + ": unsupported PPM geometry");
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
  f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (f.gcount() != static_cast<std::streamsize>(raw.size()))
    throw ParseError(path.string() + ": truncated PPM");
  Image img(h, w, 3);
  for (std::size_t i = 0; i < raw.size(); ++i)
    img.data[i] = static_cast<float>(raw[i]) / static_cast<float>(maxval);
  return img;
}

inline void write_ppm(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 3) throw ValidationError("PPM output needs 3 channels");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write image " + path.string());
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.data.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<unsigned char>(std::lround(std::clamp(img.data[i], 0.0f, 1.0f) * 255.0f));
  f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

}  // namespace mmlang
