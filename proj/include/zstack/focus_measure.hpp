#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "zstack/error.hpp"
#include "zstack/image.hpp"
#include "zstack/parallel.hpp"

namespace zstack {

enum class FMOperator { VOLL4, TENG, LAPM, LAPV };

inline constexpr std::array<FMOperator, 4> kAllOperators = {FMOperator::VOLL4, FMOperator::TENG,
                                                            FMOperator::LAPM, FMOperator::LAPV};

inline std::string_view to_string(FMOperator op) {
  switch (op) {
    case FMOperator::VOLL4: return "voll4";
    case FMOperator::TENG: return "teng";
    case FMOperator::LAPM: return "lapm";
    case FMOperator::LAPV: return "lapv";
  }
  return "?";
}

inline FMOperator parse_operator(std::string_view name) {
  for (FMOperator op : kAllOperators) {
    if (to_string(op) == name) return op;
  }
  std::string upper(name);
  for (auto& c : upper) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (FMOperator op : kAllOperators) {
    if (to_string(op) == upper) return op;
  }
  throw InvalidArgument("unknown focus measure operator '" + std::string(name) + "'");
}

// Vollath F4: lag-1 minus lag-2 horizontal autocorrelation. Not zero on
// constant images (the two sums have different term counts).
inline double fm_voll4(ImageView img) {
  double lag1 = 0.0;
  double lag2 = 0.0;
  // One pass; each sum still accumulates in row-major order.
  for (int y = 0; y < img.height; ++y) {
    const double* r = img.row(y);
    int x = 0;
    for (; x + 2 < img.width; ++x) {
      lag1 += r[x] * r[x + 1];
      lag2 += r[x] * r[x + 2];
    }
    for (; x + 1 < img.width; ++x) lag1 += r[x] * r[x + 1];
  }
  return lag1 - lag2;
}

// Tenengrad: summed squared 3x3 Sobel gradient over interior pixels.
inline double fm_teng(ImageView img) {
  double sum = 0.0;
  for (int y = 1; y + 1 < img.height; ++y) {
    const double* up = img.row(y - 1);
    const double* mid = img.row(y);
    const double* dn = img.row(y + 1);
    for (int x = 1; x + 1 < img.width; ++x) {
      const double gx = (up[x + 1] + 2.0 * mid[x + 1] + dn[x + 1]) - (up[x - 1] + 2.0 * mid[x - 1] + dn[x - 1]);
      const double gy = (dn[x - 1] + 2.0 * dn[x] + dn[x + 1]) - (up[x - 1] + 2.0 * up[x] + up[x + 1]);
      sum += gx * gx + gy * gy;
    }
  }
  return sum;
}

// Sum-modified Laplacian, unit step.
inline double fm_lapm(ImageView img) {
  double sum = 0.0;
  for (int y = 1; y + 1 < img.height; ++y) {
    const double* up = img.row(y - 1);
    const double* mid = img.row(y);
    const double* dn = img.row(y + 1);
    for (int x = 1; x + 1 < img.width; ++x) {
      const double c2 = 2.0 * mid[x];
      sum += std::abs(c2 - mid[x - 1] - mid[x + 1]) + std::abs(c2 - up[x] - dn[x]);
    }
  }
  return sum;
}

// Population variance of the 4-neighbour Laplacian over interior pixels.
// Two passes (mean, then squared deviations) for numerical stability.
inline double fm_lapv(ImageView img) {
  if (img.width < 3 || img.height < 3) return 0.0;
  auto laplacian = [&](const double* up, const double* mid, const double* dn, int x) {
    return up[x] + dn[x] + mid[x - 1] + mid[x + 1] - 4.0 * mid[x];
  };
  double sum = 0.0;
  for (int y = 1; y + 1 < img.height; ++y) {
    const double* up = img.row(y - 1);
    const double* mid = img.row(y);
    const double* dn = img.row(y + 1);
    for (int x = 1; x + 1 < img.width; ++x) sum += laplacian(up, mid, dn, x);
  }
  const double count = static_cast<double>(img.width - 2) * (img.height - 2);
  const double mean = sum / count;
  double ss = 0.0;
  for (int y = 1; y + 1 < img.height; ++y) {
    const double* up = img.row(y - 1);
    const double* mid = img.row(y);
    const double* dn = img.row(y + 1);
    for (int x = 1; x + 1 < img.width; ++x) {
      const double d = laplacian(up, mid, dn, x) - mean;
      ss += d * d;
    }
  }
  return ss / count;
}

inline double focus_measure(ImageView img, FMOperator op) {
  switch (op) {
    case FMOperator::VOLL4: return fm_voll4(img);
    case FMOperator::TENG: return fm_teng(img);
    case FMOperator::LAPM: return fm_lapm(img);
    case FMOperator::LAPV: return fm_lapv(img);
  }
  return 0.0;
}

// Focus measure as a function of frame index, plus the preprocessing that
// produced it.
struct FocalCurve {
  std::vector<double> values;
  int source_stride = 1;
  int mirror_offset = 0;  // samples prepended by mirror_extend
  int smooth_window = 1;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }

  // Length of the curve before mirroring.
  std::size_t source_length() const {
    return mirror_offset == 0 ? values.size() : values.size() - 2 * static_cast<std::size_t>(mirror_offset);
  }

  friend bool operator==(const FocalCurve&, const FocalCurve&) = default;
};

inline FocalCurve focal_curve(const ZStack& stack, FMOperator op) {
  if (stack.empty()) throw InvalidArgument("focal_curve: empty stack");
  FocalCurve curve;
  curve.values.resize(stack.size());
  curve.source_stride = stack.stride();
  parallel_for(stack.size(), [&](std::size_t k) { curve.values[k] = focus_measure(stack[k], op); });
  return curve;
}

struct SectorGrid {
  int rows = 4;
  int cols = 4;

  friend bool operator==(const SectorGrid&, const SectorGrid&) = default;
};

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  int area() const { return width * height; }
  bool contains(int px, int py) const { return px >= x && px < x + width && py >= y && py < y + height; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

inline void validate_grid(const SectorGrid& grid, int width, int height) {
  if (grid.rows < 1 || grid.cols < 1) throw InvalidArgument("sector grid must be at least 1x1");
  if (grid.rows > height / 3 || grid.cols > width / 3) {
    throw InvalidArgument("sector grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                          " too fine for " + std::to_string(width) + "x" + std::to_string(height) +
                          " frame");
  }
}

// Near-equal partition; the last row/column of sectors absorbs the remainder.
inline Rect sector_rect(const SectorGrid& grid, int width, int height, int row, int col) {
  const int bw = width / grid.cols;
  const int bh = height / grid.rows;
  Rect r{col * bw, row * bh, bw, bh};
  if (col == grid.cols - 1) r.width = width - r.x;
  if (row == grid.rows - 1) r.height = height - r.y;
  return r;
}

struct SectorFMMap {
  SectorGrid grid;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  double value(int r, int c) const { return values[static_cast<std::size_t>(r) * grid.cols + c]; }
  bool is_valid(int r, int c) const { return valid[static_cast<std::size_t>(r) * grid.cols + c] != 0; }
  std::size_t sectors() const { return values.size(); }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v;
    return n;
  }
};

// A sector is excluded when strictly more than half of its pixels are masked.
inline SectorFMMap sector_fm(const Frame& frame, const SectorGrid& grid, FMOperator op,
                             const BinaryMask& mask) {
  if (mask.width() != frame.width() || mask.height() != frame.height()) {
    throw DimensionMismatch("sector_fm: mask does not match frame");
  }
  validate_grid(grid, frame.width(), frame.height());
  SectorFMMap map{grid, {}, {}};
  map.values.resize(static_cast<std::size_t>(grid.rows) * grid.cols);
  map.valid.resize(map.values.size());
  const ImageView view = frame.view();
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const Rect s = sector_rect(grid, frame.width(), frame.height(), r, c);
      const std::size_t i = static_cast<std::size_t>(r) * grid.cols + c;
      map.values[i] = focus_measure(view.crop(s.x, s.y, s.width, s.height), op);
      const std::size_t masked = mask.count(s.x, s.y, s.width, s.height);
      map.valid[i] = 2 * masked > static_cast<std::size_t>(s.area()) ? 0 : 1;
    }
  }
  return map;
}

inline SectorFMMap sector_fm(const Frame& frame, const SectorGrid& grid, FMOperator op) {
  return sector_fm(frame, grid, op, BinaryMask(frame.width(), frame.height()));
}

}  // namespace zstack
