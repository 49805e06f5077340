#pragma once

// Seeded scene families used by the acceptance checks and `bench`.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "zstack/rng.hpp"
#include "zstack/simsynth.hpp"

namespace zstack::suites {

// Random guillotine partition of a width x height frame into `count`
// rectangles, each side >= min_side, cut positions on a `snap` lattice.
inline std::vector<Rect> guillotine_layout(int width, int height, int count, int min_side, int snap, Rng& rng) {
  std::vector<Rect> rects{{0, 0, width, height}};
  while (static_cast<int>(rects.size()) < count) {
    std::sort(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) { return a.area() > b.area(); });
    bool split = false;
    for (std::size_t i = 0; i < rects.size() && !split; ++i) {
      const Rect r = rects[i];
      const bool vertical_first = r.width >= r.height;
      for (int attempt = 0; attempt < 2 && !split; ++attempt) {
        const bool vertical = (attempt == 0) == vertical_first;
        const int len = vertical ? r.width : r.height;
        const int lo = (min_side + snap - 1) / snap;
        const int hi = (len - min_side) / snap;
        if (hi < lo) continue;
        const int cut = snap * rng.uniform_int(lo, hi);
        Rect a = r;
        Rect b = r;
        if (vertical) {
          a.width = cut;
          b.x += cut;
          b.width -= cut;
        } else {
          a.height = cut;
          b.y += cut;
          b.height -= cut;
        }
        rects[i] = a;
        rects.push_back(b);
        split = true;
      }
    }
    if (!split) throw InvalidArgument("cannot fit that many regions at the requested minimum size");
  }
  std::sort(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
  return rects;
}

// `count` distinct z positions in [lo, hi], pairwise at least `gap` apart.
inline std::vector<int> spread_z(int count, int lo, int hi, int gap, Rng& rng) {
  if (lo + (count - 1) * gap > hi) throw InvalidArgument("z range too narrow for the requested planes");
  const int slack = hi - lo - (count - 1) * gap;
  std::vector<int> offsets(static_cast<std::size_t>(count));
  for (auto& o : offsets) o = rng.uniform_int(0, slack);
  std::sort(offsets.begin(), offsets.end());
  std::vector<int> z(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) z[i] = lo + i * gap + offsets[i];
  std::vector<int> order(z);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
  return order;
}

inline constexpr int kCoarseStride = 8;

// Long slow-scan stacks (120-240 frames) whose focused segment spans at
// most a tenth of the stack, with a dirt layer well away from it and vignetting.
inline SceneSpec fast_search_scene(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 1);
  SceneSpec s;
  s.seed = seed;
  s.width = 160;
  s.height = 120;
  s.n_frames = rng.uniform_int(120, 240);
  s.blur_slope = 0.35;
  s.max_sigma = 8.0;
  s.noise_sigma = 0.005;
  s.vignette_strength = rng.uniform(0.2, 0.6);

  const int margin = static_cast<int>(1.0 / s.blur_slope + 1e-9);
  const int budget = s.n_frames / 10 - 2 * margin - 1;  // max plane spread
  const int planes = rng.uniform_int(1, 3);
  const int spread = planes == 1 ? 0 : rng.uniform_int(planes - 1, std::max(planes - 1, budget));
  const int z0 = rng.uniform_int(margin, s.n_frames - 1 - margin - spread);
  const auto rects = guillotine_layout(s.width, s.height, planes, 40, 4, rng);
  for (int i = 0; i < planes; ++i) {
    const int z = planes == 1 ? z0 : z0 + (i == 0 ? 0 : i == planes - 1 ? spread : rng.uniform_int(0, spread));
    s.planes.push_back({rects[i], z});
  }

  // Dirt at least a quarter of the stack away from the specimen.
  const int away = s.n_frames / 4;
  std::vector<int> options;
  for (int z = 0; z < s.n_frames; ++z) {
    if (z < z0 - away || z > z0 + spread + away) options.push_back(z);
  }
  DirtSpec d;
  d.z_index = options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(options.size()) - 1))];
  d.blob_count = rng.uniform_int(2, 4);
  d.blob_radius = rng.uniform(2.0, 4.0);
  s.dirt = d;
  return s;
}

// 2-5 well separated planes, every base position captured 1 + 4 times.
inline SceneSpec coverage_scene(std::uint64_t seed, int planes) {
  Rng rng = Rng::stream(seed, 2);
  SceneSpec s;
  s.seed = seed;
  s.width = 160;
  s.height = 120;
  s.n_frames = rng.uniform_int(40, 60);
  s.blur_slope = 0.35;
  s.max_sigma = 8.0;
  s.noise_sigma = 0.005;
  s.vignette_strength = rng.uniform(0.0, 0.4);
  s.duplicates_per_frame = 4;
  const auto rects = guillotine_layout(s.width, s.height, planes, 40, 4, rng);
  const auto z = spread_z(planes, 4, s.n_frames - 5, 8, rng);
  for (int i = 0; i < planes; ++i) s.planes.push_back({rects[i], z[i]});
  return s;
}

// Dirt placed far from the specimen planes (distance >= 30 base positions).
inline SceneSpec dirt_scene(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 3);
  SceneSpec s;
  s.seed = seed;
  s.width = 160;
  s.height = 120;
  s.n_frames = rng.uniform_int(80, 120);
  s.blur_slope = 0.35;
  s.max_sigma = 8.0;
  s.noise_sigma = 0.005;
  s.vignette_strength = rng.uniform(0.0, 0.5);
  const int planes = rng.uniform_int(1, 3);
  const auto rects = guillotine_layout(s.width, s.height, planes, 40, 4, rng);
  const bool dirt_low = rng.uniform() < 0.5;
  const int zlo = dirt_low ? 45 : 5;
  const int zhi = dirt_low ? s.n_frames - 6 : s.n_frames - 46;
  const auto z = spread_z(planes, zlo, zhi, 8, rng);
  for (int i = 0; i < planes; ++i) s.planes.push_back({rects[i], z[i]});
  const auto [mn, mx] = std::minmax_element(z.begin(), z.end());
  DirtSpec d;
  d.z_index = dirt_low ? rng.uniform_int(0, *mn - 30)
                       : rng.uniform_int(*mx + 30, s.n_frames - 1);
  d.blob_count = rng.uniform_int(2, 4);
  d.blob_radius = rng.uniform(2.0, 4.0);
  s.dirt = d;
  return s;
}

// 2-3 planes with arbitrary (unsnapped) boundaries; used for fusion quality.
inline SceneSpec stacking_scene(std::uint64_t seed, int width = 160, int height = 120) {
  Rng rng = Rng::stream(seed, 4);
  SceneSpec s;
  s.seed = seed;
  s.width = width;
  s.height = height;
  s.n_frames = 40;
  s.blur_slope = 0.35;
  s.max_sigma = 8.0;
  s.noise_sigma = 0.003;
  const int planes = rng.uniform_int(2, 3);
  const int min_side = std::min(width, height) / 4;
  const auto rects = guillotine_layout(width, height, planes, min_side, 1, rng);
  const auto z = spread_z(planes, 4, s.n_frames - 5, 8, rng);
  for (int i = 0; i < planes; ++i) s.planes.push_back({rects[i], z[i]});
  return s;
}

}  // namespace zstack::suites
