#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zstack/error.hpp"
#include "zstack/focus_measure.hpp"
#include "zstack/image.hpp"
#include "zstack/rng.hpp"

namespace zstack {

struct PlaneSpec {
  Rect region;
  int z_index = 0;  // base focal position where the region is sharp
  friend bool operator==(const PlaneSpec&, const PlaneSpec&) = default;
};

struct DirtSpec {
  int z_index = 0;
  int blob_count = 4;
  double blob_radius = 4.0;
  friend bool operator==(const DirtSpec&, const DirtSpec&) = default;
};

// Procedural specimen plus acquisition model. z indices count base focal
// positions; each base position is emitted 1 + duplicates_per_frame times, so
// the rendered stack has n_frames * (1 + duplicates_per_frame) frames.
struct SceneSpec {
  int width = 160;
  int height = 120;
  std::vector<PlaneSpec> planes;
  int n_frames = 40;
  double blur_slope = 0.35;  // Gaussian sigma (pixels) per frame of defocus
  std::optional<DirtSpec> dirt;
  double vignette_strength = 0.0;
  int duplicates_per_frame = 0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  double max_sigma = 0.0;  // 0 = uncapped defocus growth

  int group_size() const { return 1 + duplicates_per_frame; }
  int stack_length() const { return n_frames * group_size(); }

  double sigma_at(int k, int z) const {
    double s = blur_slope * std::abs(k - z);
    if (max_sigma > 0.0) s = std::min(s, max_sigma);
    return s < kIdentitySigma ? 0.0 : s;
  }

  static constexpr double kIdentitySigma = 0.3;

  void validate() const {
    if (width < Frame::kMinSide || height < Frame::kMinSide) throw InvalidArgument("scene must be at least 3x3");
    if (n_frames < 1) throw InvalidArgument("scene needs at least one frame");
    if (planes.empty()) throw InvalidArgument("scene needs at least one plane");
    if (!(blur_slope >= 0.0)) throw InvalidArgument("blur_slope must be >= 0");
    if (!(vignette_strength >= 0.0 && vignette_strength < 1.0)) throw InvalidArgument("vignette_strength must lie in [0,1)");
    if (duplicates_per_frame < 0) throw InvalidArgument("duplicates_per_frame must be >= 0");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be >= 0");
    if (!(max_sigma >= 0.0)) throw InvalidArgument("max_sigma must be >= 0");
    long long area = 0;
    for (std::size_t i = 0; i < planes.size(); ++i) {
      const Rect& r = planes[i].region;
      if (r.width <= 0 || r.height <= 0 || r.x < 0 || r.y < 0 || r.x + r.width > width || r.y + r.height > height) {
        throw InvalidArgument("plane " + std::to_string(i) + " region outside the frame");
      }
      if (planes[i].z_index < 0 || planes[i].z_index >= n_frames) {
        throw InvalidArgument("plane " + std::to_string(i) + " z_index outside [0, n_frames)");
      }
      for (std::size_t j = 0; j < i; ++j) {
        const Rect& o = planes[j].region;
        const bool disjoint = r.x + r.width <= o.x || o.x + o.width <= r.x || r.y + r.height <= o.y ||
                              o.y + o.height <= r.y;
        if (!disjoint) {
          throw InvalidArgument("plane regions " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
        }
      }
      area += r.area();
    }
    if (area != static_cast<long long>(width) * height) throw InvalidArgument("plane regions do not tile the frame");
    if (dirt) {
      if (dirt->z_index < 0 || dirt->z_index >= n_frames) throw InvalidArgument("dirt z_index outside [0, n_frames)");
      if (dirt->blob_count < 0 || !(dirt->blob_radius > 0.0)) throw InvalidArgument("invalid dirt blobs");
    }
  }
};

struct FrameInterval {
  int first = 0;
  int last = 0;
  bool contains(int k) const { return k >= first && k <= last; }
  int length() const { return last - first + 1; }
  friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

// Ground truth for a rendered scene. Frame indices are rendered-stack
// indices; plane_best points at the first copy of each duplicate group.
struct SceneTruth {
  Frame all_in_focus;
  Image dirt_opacity;  // sharp blob coverage in [0,1]; empty without dirt
  std::vector<int> plane_best;
  FrameInterval focused_segment;
  std::vector<int> dirt_frames;
  int group_size = 1;
  int stack_length = 0;

  // Base focal position of a rendered frame.
  int group_of(int frame) const { return frame / group_size; }
};

namespace synth {

inline constexpr double kDirtIntensity = 0.05;
inline constexpr double kLineIntensity = 0.08;

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Band-limited value noise (three octaves) with random dark line segments.
inline Image specimen_texture(int width, int height, std::uint64_t seed) {
  Image img(width, height, 0.0);
  const int cells[3] = {16, 8, 4};
  const double amps[3] = {0.5, 0.3, 0.2};
  for (int o = 0; o < 3; ++o) {
    Rng rng = Rng::stream(seed, 100 + o);
    const int cell = cells[o];
    const int gw = width / cell + 2;
    const int gh = height / cell + 2;
    std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
    for (auto& v : lattice) v = rng.uniform();
    for (int y = 0; y < height; ++y) {
      const int gy = y / cell;
      const double ty = smoothstep(static_cast<double>(y % cell) / cell);
      for (int x = 0; x < width; ++x) {
        const int gx = x / cell;
        const double tx = smoothstep(static_cast<double>(x % cell) / cell);
        auto at = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * gw + i]; };
        const double top = at(gx, gy) + (at(gx + 1, gy) - at(gx, gy)) * tx;
        const double bot = at(gx, gy + 1) + (at(gx + 1, gy + 1) - at(gx, gy + 1)) * tx;
        img(x, y) += amps[o] * (top + (bot - top) * ty);
      }
    }
  }
  for (double& v : img.pixels()) v = 0.25 + 0.6 * v;

  Rng rng = Rng::stream(seed, 200);
  const int lines = std::max(1, width * height / 400);
  for (int i = 0; i < lines; ++i) {
    const double x0 = rng.uniform(0.0, width);
    const double y0 = rng.uniform(0.0, height);
    const double angle = rng.uniform(0.0, 6.283185307179586);
    const double length = rng.uniform(8.0, 32.0);
    const int steps = static_cast<int>(length * 2.0);
    for (int s = 0; s <= steps; ++s) {
      const int x = static_cast<int>(std::lround(x0 + std::cos(angle) * s * 0.5));
      const int y = static_cast<int>(std::lround(y0 + std::sin(angle) * s * 0.5));
      if (x >= 0 && x < width && y >= 0 && y < height) img(x, y) = kLineIntensity;
    }
  }
  return img;
}

inline Image dirt_blobs(int width, int height, const DirtSpec& dirt, std::uint64_t seed) {
  Image alpha(width, height, 0.0);
  Rng rng = Rng::stream(seed, 300);
  for (int b = 0; b < dirt.blob_count; ++b) {
    const double cx = rng.uniform(0.0, width);
    const double cy = rng.uniform(0.0, height);
    const double r2 = dirt.blob_radius * dirt.blob_radius;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        if (dx * dx + dy * dy <= r2) alpha(x, y) = 1.0;
      }
    }
  }
  return alpha;
}

}  // namespace synth

// Separable Gaussian truncated at 3 sigma. Taps falling outside the source
// are dropped and the remaining weights renormalized. Only `roi` of the
// output is computed (returned as a roi-sized image).
inline Image gaussian_blur(ImageView src, double sigma, const Rect& roi) {
  Image out(roi.width, roi.height);
  if (sigma <= 0.0) {
    for (int y = 0; y < roi.height; ++y) {
      for (int x = 0; x < roi.width; ++x) out(x, y) = src(roi.x + x, roi.y + y);
    }
    return out;
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));

  const int y0 = std::max(0, roi.y - radius);
  const int y1 = std::min(src.height - 1, roi.y + roi.height - 1 + radius);
  Image horizontal(roi.width, y1 - y0 + 1);
  for (int y = y0; y <= y1; ++y) {
    const double* in = src.row(y);
    double* h = horizontal.row(y - y0);
    for (int x = 0; x < roi.width; ++x) {
      const int cx = roi.x + x;
      const int lo = std::max(-radius, -cx);
      const int hi = std::min(radius, src.width - 1 - cx);
      double acc = 0.0;
      double norm = 0.0;
      for (int i = lo; i <= hi; ++i) {
        acc += kernel[i + radius] * in[cx + i];
        norm += kernel[i + radius];
      }
      h[x] = acc / norm;
    }
  }
  for (int y = 0; y < roi.height; ++y) {
    const int cy = roi.y + y;
    const int lo = std::max(-radius, -cy);
    const int hi = std::min(radius, src.height - 1 - cy);
    double* o = out.row(y);
    double norm = 0.0;
    for (int i = lo; i <= hi; ++i) norm += kernel[i + radius];
    for (int x = 0; x < roi.width; ++x) o[x] = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const double wgt = kernel[i + radius] / norm;
      const double* h = horizontal.row(cy + i - y0);
      for (int x = 0; x < roi.width; ++x) o[x] += wgt * h[x];
    }
  }
  return out;
}

inline Image gaussian_blur(ImageView src, double sigma) {
  return gaussian_blur(src, sigma, Rect{0, 0, src.width, src.height});
}

inline SceneTruth generate_scene(const SceneSpec& spec) {
  spec.validate();
  SceneTruth truth;
  truth.all_in_focus = Frame::clamped(synth::specimen_texture(spec.width, spec.height, spec.seed));
  const int g = spec.group_size();
  truth.group_size = g;
  truth.stack_length = spec.stack_length();

  int zmin = spec.n_frames;
  int zmax = -1;
  for (const auto& p : spec.planes) {
    truth.plane_best.push_back(p.z_index * g);
    zmin = std::min(zmin, p.z_index);
    zmax = std::max(zmax, p.z_index);
  }
  // Margin: frames whose blur stays at or below one pixel.
  const int margin = spec.blur_slope > 0.0 ? static_cast<int>(std::floor(1.0 / spec.blur_slope + 1e-9)) : spec.n_frames;
  const int lo = std::max(0, zmin - margin);
  const int hi = std::min(spec.n_frames - 1, zmax + margin);
  truth.focused_segment = {lo * g, hi * g + g - 1};

  if (spec.dirt) {
    truth.dirt_opacity = synth::dirt_blobs(spec.width, spec.height, *spec.dirt, spec.seed);
    for (int c = 0; c < g; ++c) truth.dirt_frames.push_back(spec.dirt->z_index * g + c);
  }
  return truth;
}

// Frame k of the rendered stack = region-wise defocus of the specimen, dirt
// composited with its own defocus, vignetting, then per-copy sensor noise.
inline ZStack render_zstack(const SceneTruth& truth, const SceneSpec& spec) {
  spec.validate();
  if (truth.all_in_focus.width() != spec.width || truth.all_in_focus.height() != spec.height) {
    throw DimensionMismatch("scene truth does not match spec");
  }
  const int w = spec.width;
  const int h = spec.height;
  const int g = spec.group_size();

  std::vector<double> vignette(static_cast<std::size_t>(w) * h, 1.0);
  if (spec.vignette_strength > 0.0) {
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    const double rmax2 = cx * cx + cy * cy;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double r2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / rmax2;
        vignette[static_cast<std::size_t>(y) * w + x] = 1.0 - spec.vignette_strength * r2;
      }
    }
  }

  // Blurred regions are shared between frames at the same defocus distance.
  std::vector<std::map<double, Image>> plane_cache(spec.planes.size());
  std::map<double, Image> dirt_cache;

  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(spec.stack_length()));
  for (int k = 0; k < spec.n_frames; ++k) {
    Image base(w, h);
    for (std::size_t p = 0; p < spec.planes.size(); ++p) {
      const Rect& r = spec.planes[p].region;
      const double sigma = spec.sigma_at(k, spec.planes[p].z_index);
      auto it = plane_cache[p].find(sigma);
      if (it == plane_cache[p].end()) {
        it = plane_cache[p].emplace(sigma, gaussian_blur(truth.all_in_focus, sigma, r)).first;
      }
      for (int y = 0; y < r.height; ++y) {
        std::copy(it->second.row(y), it->second.row(y) + r.width, base.row(r.y + y) + r.x);
      }
    }
    if (spec.dirt) {
      const double sigma = spec.sigma_at(k, spec.dirt->z_index);
      auto it = dirt_cache.find(sigma);
      if (it == dirt_cache.end()) it = dirt_cache.emplace(sigma, gaussian_blur(truth.dirt_opacity, sigma)).first;
      auto px = base.pixels();
      auto alpha = it->second.pixels();
      for (std::size_t i = 0; i < px.size(); ++i) px[i] = px[i] * (1.0 - alpha[i]) + synth::kDirtIntensity * alpha[i];
    }
    {
      auto px = base.pixels();
      for (std::size_t i = 0; i < px.size(); ++i) px[i] *= vignette[i];
    }
    for (int c = 0; c < g; ++c) {
      Image copy = base;
      if (spec.noise_sigma > 0.0) {
        Rng rng = Rng::stream(spec.seed, 1000 + static_cast<std::uint64_t>(k) * g + c);
        for (double& v : copy.pixels()) v += spec.noise_sigma * rng.normal();
      }
      frames.push_back(Frame::clamped(std::move(copy)));
    }
  }
  return ZStack(std::move(frames), 1, std::to_string(w) + "x" + std::to_string(h));
}

}  // namespace zstack
