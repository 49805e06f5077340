#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "zstack/error.hpp"
#include "zstack/image.hpp"

namespace zstack {

// Multilevel separable orthonormal Haar transform in Mallat layout: after
// level l the approximation band occupies the top-left (W>>l) x (H>>l)
// block. Dimensions must be divisible by 2^levels.
class HaarTransform {
 public:
  explicit HaarTransform(int levels) : levels_(levels) {
    if (levels < 1) throw InvalidArgument("wavelet levels must be >= 1");
  }

  int levels() const { return levels_; }

  void check(const Image& img) const {
    const int block = 1 << levels_;
    if (img.width() % block != 0 || img.height() % block != 0 || img.width() < block || img.height() < block) {
      throw InvalidArgument("image size not divisible by 2^levels");
    }
  }

  Image forward(Image img) const {
    check(img);
    std::vector<double> scratch(static_cast<std::size_t>(std::max(img.width(), img.height())));
    int w = img.width();
    int h = img.height();
    for (int l = 0; l < levels_; ++l) {
      for (int y = 0; y < h; ++y) split(img.row(y), 1, w, scratch);
      for (int x = 0; x < w; ++x) split(&img(x, 0), img.width(), h, scratch);
      w /= 2;
      h /= 2;
    }
    return img;
  }

  Image inverse(Image coeffs) const {
    check(coeffs);
    std::vector<double> scratch(static_cast<std::size_t>(std::max(coeffs.width(), coeffs.height())));
    for (int l = levels_ - 1; l >= 0; --l) {
      const int w = coeffs.width() >> l;
      const int h = coeffs.height() >> l;
      for (int x = 0; x < w; ++x) merge(&coeffs(x, 0), coeffs.width(), h, scratch);
      for (int y = 0; y < h; ++y) merge(coeffs.row(y), 1, w, scratch);
    }
    return coeffs;
  }

 private:
  static constexpr double kInvSqrt2 = 0.70710678118654752440;

  static void split(double* p, std::ptrdiff_t step, int n, std::vector<double>& tmp) {
    const int half = n / 2;
    for (int i = 0; i < half; ++i) {
      const double a = p[(2 * i) * step];
      const double b = p[(2 * i + 1) * step];
      tmp[i] = (a + b) * kInvSqrt2;
      tmp[half + i] = (a - b) * kInvSqrt2;
    }
    for (int i = 0; i < n; ++i) p[i * step] = tmp[i];
  }

  static void merge(double* p, std::ptrdiff_t step, int n, std::vector<double>& tmp) {
    const int half = n / 2;
    for (int i = 0; i < half; ++i) {
      const double s = p[i * step];
      const double d = p[(half + i) * step];
      tmp[2 * i] = (s + d) * kInvSqrt2;
      tmp[2 * i + 1] = (s - d) * kInvSqrt2;
    }
    for (int i = 0; i < n; ++i) p[i * step] = tmp[i];
  }

  int levels_;
};

// Edge-replicating pad up to the next multiple of `block` on each axis.
inline Image pad_to_multiple(ImageView src, int block) {
  const int w = (src.width + block - 1) / block * block;
  const int h = (src.height + block - 1) / block * block;
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y, src.height - 1);
    for (int x = 0; x < w; ++x) out(x, y) = src(std::min(x, src.width - 1), sy);
  }
  return out;
}

}  // namespace zstack
