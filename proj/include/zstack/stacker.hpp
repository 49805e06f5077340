#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zstack/error.hpp"
#include "zstack/image.hpp"
#include "zstack/parallel.hpp"
#include "zstack/wavelet.hpp"

namespace zstack {

enum class StackMethod { PixelBased, NeighborBased, WaveletBased };

inline std::string_view to_string(StackMethod m) {
  switch (m) {
    case StackMethod::PixelBased: return "pixel";
    case StackMethod::NeighborBased: return "neighbor";
    case StackMethod::WaveletBased: return "wavelet";
  }
  return "?";
}

inline StackMethod parse_stack_method(std::string_view name) {
  std::string lower(name);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "pixel") return StackMethod::PixelBased;
  if (lower == "neighbor") return StackMethod::NeighborBased;
  if (lower == "wavelet") return StackMethod::WaveletBased;
  throw InvalidArgument("unknown stacking method '" + std::string(name) + "'");
}

struct FusionResult {
  Frame image;
  std::vector<int> label_map;  // per-pixel source frame; empty for wavelet fusion
  StackMethod method = StackMethod::PixelBased;
};

using FocusMap = Image;

// Squared Sobel magnitude per interior pixel; border pixels are 0.
inline Image sobel_energy(ImageView img) {
  Image e(img.width, img.height, 0.0);
  for (int y = 1; y + 1 < img.height; ++y) {
    const double* up = img.row(y - 1);
    const double* mid = img.row(y);
    const double* dn = img.row(y + 1);
    double* out = e.row(y);
    for (int x = 1; x + 1 < img.width; ++x) {
      const double gx = (up[x + 1] + 2.0 * mid[x + 1] + dn[x + 1]) - (up[x - 1] + 2.0 * mid[x - 1] + dn[x - 1]);
      const double gy = (dn[x - 1] + 2.0 * dn[x] + dn[x + 1]) - (up[x - 1] + 2.0 * up[x] + up[x + 1]);
      out[x] = gx * gx + gy * gy;
    }
  }
  return e;
}

// Per-pixel Tenengrad summed over a window x window neighbourhood; positions
// outside the frame contribute 0.
inline FocusMap focus_map_teng(ImageView frame, int window) {
  if (window < 3 || window % 2 == 0) throw InvalidArgument("focus map window must be odd and >= 3");
  const Image energy = sobel_energy(frame);
  const int w = frame.width;
  const int h = frame.height;
  const int r = window / 2;
  Image rows(w, h);
  for (int y = 0; y < h; ++y) {
    const double* in = energy.row(y);
    double* out = rows.row(y);
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = std::max(0, x - r); k <= std::min(w - 1, x + r); ++k) s += in[k];
      out[x] = s;
    }
  }
  FocusMap map(w, h);
  for (int y = 0; y < h; ++y) {
    double* out = map.row(y);
    const int lo = std::max(0, y - r);
    const int hi = std::min(h - 1, y + r);
    for (int x = 0; x < w; ++x) out[x] = 0.0;
    for (int k = lo; k <= hi; ++k) {
      const double* in = rows.row(k);
      for (int x = 0; x < w; ++x) out[x] += in[x];
    }
  }
  return map;
}

namespace detail {

inline void check_fusion_inputs(std::span<const Frame> frames) {
  if (frames.size() < 2) throw InvalidArgument("focus stacking needs at least 2 frames");
  for (const auto& f : frames) require_same_size(frames[0], f, "focus stacking");
}

inline Frame compose(std::span<const Frame> frames, const std::vector<int>& labels) {
  const Frame& first = frames[0];
  Image out(first.width(), first.height());
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = frames[static_cast<std::size_t>(labels[i])].pixels()[i];
  return Frame(std::move(out));
}

}  // namespace detail

inline FusionResult stack_pixel(std::span<const Frame> frames, int window = 9) {
  detail::check_fusion_inputs(frames);
  std::vector<FocusMap> maps(frames.size());
  parallel_for(frames.size(), [&](std::size_t k) { maps[k] = focus_map_teng(frames[k], window); });

  const std::size_t n = frames[0].size();
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = maps[0].pixels()[i];
    for (std::size_t k = 1; k < maps.size(); ++k) {
      const double v = maps[k].pixels()[i];
      if (v > best) {
        best = v;
        labels[i] = static_cast<int>(k);
      }
    }
  }
  Frame image = detail::compose(frames, labels);
  return FusionResult{std::move(image), std::move(labels), StackMethod::PixelBased};
}

// Median filter over a tile-label grid; the window is truncated at the
// borders and even-sized neighbourhoods take the lower median.
inline std::vector<int> median_relabel(const std::vector<int>& labels, int rows, int cols, int window) {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("median window must be odd and positive");
  const int r = window / 2;
  std::vector<int> out(labels.size());
  std::vector<int> hood;
  for (int ty = 0; ty < rows; ++ty) {
    for (int tx = 0; tx < cols; ++tx) {
      hood.clear();
      for (int y = std::max(0, ty - r); y <= std::min(rows - 1, ty + r); ++y) {
        for (int x = std::max(0, tx - r); x <= std::min(cols - 1, tx + r); ++x) {
          hood.push_back(labels[static_cast<std::size_t>(y) * cols + x]);
        }
      }
      std::sort(hood.begin(), hood.end());
      out[static_cast<std::size_t>(ty) * cols + tx] = hood[(hood.size() - 1) / 2];
    }
  }
  return out;
}

// Block-wise Tenengrad vote followed by median relabelling of the tile map.
inline FusionResult stack_neighbor(std::span<const Frame> frames, int block = 16, int median_window = 3) {
  detail::check_fusion_inputs(frames);
  if (block < 1) throw InvalidArgument("block size must be positive");
  const int w = frames[0].width();
  const int h = frames[0].height();
  const int cols = (w + block - 1) / block;
  const int rows = (h + block - 1) / block;
  const std::size_t tiles = static_cast<std::size_t>(rows) * cols;

  std::vector<std::vector<double>> tile_fm(frames.size(), std::vector<double>(tiles, 0.0));
  parallel_for(frames.size(), [&](std::size_t k) {
    const Image energy = sobel_energy(frames[k]);
    auto& acc = tile_fm[k];
    for (int y = 0; y < h; ++y) {
      const double* e = energy.row(y);
      double* tile_row = acc.data() + static_cast<std::size_t>(y / block) * cols;
      for (int x = 0; x < w; ++x) tile_row[x / block] += e[x];
    }
  });

  std::vector<int> tile_labels(tiles, 0);
  for (std::size_t t = 0; t < tiles; ++t) {
    for (std::size_t k = 1; k < frames.size(); ++k) {
      if (tile_fm[k][t] > tile_fm[static_cast<std::size_t>(tile_labels[t])][t]) tile_labels[t] = static_cast<int>(k);
    }
  }
  tile_labels = median_relabel(tile_labels, rows, cols, median_window);

  std::vector<int> labels(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const int* tile_row = tile_labels.data() + static_cast<std::size_t>(y / block) * cols;
    int* out = labels.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) out[x] = tile_row[x / block];
  }
  Frame image = detail::compose(frames, labels);
  return FusionResult{std::move(image), std::move(labels), StackMethod::NeighborBased};
}

// Haar fusion: detail coefficients by max |value|, approximation band by mean.
inline FusionResult stack_wavelet(std::span<const Frame> frames, int levels = 4) {
  detail::check_fusion_inputs(frames);
  if (levels < 1) throw InvalidArgument("wavelet levels must be >= 1");
  const int block = 1 << std::min(levels, 30);
  const int w = frames[0].width();
  const int h = frames[0].height();
  if (levels >= 30 || w < block || h < block) {
    throw InvalidArgument("wavelet levels " + std::to_string(levels) + " too large for " + std::to_string(w) +
                          "x" + std::to_string(h));
  }
  const HaarTransform haar(levels);
  std::vector<Image> coeffs(frames.size());
  parallel_for(frames.size(), [&](std::size_t k) { coeffs[k] = haar.forward(pad_to_multiple(frames[k], block)); });

  const int pw = coeffs[0].width();
  const int ph = coeffs[0].height();
  const int aw = pw >> levels;
  const int ah = ph >> levels;
  const double inv_n = 1.0 / static_cast<double>(frames.size());
  Image fused(pw, ph);
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      if (x < aw && y < ah) {
        double sum = 0.0;
        for (const auto& c : coeffs) sum += c(x, y);
        fused(x, y) = sum * inv_n;
      } else {
        double best = coeffs[0](x, y);
        for (std::size_t k = 1; k < coeffs.size(); ++k) {
          const double v = coeffs[k](x, y);
          if (std::abs(v) > std::abs(best)) best = v;
        }
        fused(x, y) = best;
      }
    }
  }
  const Image full = haar.inverse(std::move(fused));
  Image cropped(w, h);
  for (int y = 0; y < h; ++y) std::copy(full.row(y), full.row(y) + w, cropped.row(y));
  return FusionResult{Frame::clamped(std::move(cropped)), {}, StackMethod::WaveletBased};
}

struct StackParams {
  int pixel_window = 9;
  int block = 16;
  int median_window = 3;
  int levels = 4;
};

inline FusionResult focus_stack(std::span<const Frame> frames, StackMethod method, const StackParams& p = {}) {
  switch (method) {
    case StackMethod::PixelBased: return stack_pixel(frames, p.pixel_window);
    case StackMethod::NeighborBased: return stack_neighbor(frames, p.block, p.median_window);
    case StackMethod::WaveletBased: return stack_wavelet(frames, p.levels);
  }
  throw InvalidArgument("unknown stacking method");
}

// Label map as an 8-bit-scalable image: label / (frames - 1).
inline Image label_image(const std::vector<int>& labels, int width, int height, std::size_t frames) {
  Image out(width, height);
  const double scale = frames > 1 ? 1.0 / static_cast<double>(frames - 1) : 0.0;
  auto px = out.pixels();
  for (std::size_t i = 0; i < labels.size(); ++i) px[i] = labels[i] * scale;
  return out;
}

}  // namespace zstack
