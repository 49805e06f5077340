#include <gtest/gtest.h>

#include "zstack/zstack.hpp"

using namespace zstack;

namespace {

SceneSpec two_plane_spec() {
  SceneSpec s;
  s.seed = 21;
  s.n_frames = 60;
  s.max_sigma = 8.0;
  s.planes = {{{0, 0, 80, 120}, 20}, {{80, 0, 80, 120}, 40}};
  return s;
}

}  // namespace

TEST(Simsynth, DeterministicForSeed) {
  SceneSpec s = two_plane_spec();
  s.noise_sigma = 0.01;
  s.vignette_strength = 0.3;
  s.dirt = DirtSpec{5, 3, 3.0};
  const ZStack a = render_zstack(generate_scene(s), s);
  const ZStack b = render_zstack(generate_scene(s), s);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  s.seed = 22;
  EXPECT_NE(render_zstack(generate_scene(s), s)[20], a[20]);
}

TEST(Simsynth, TruthMetadata) {
  SceneSpec s = two_plane_spec();
  s.duplicates_per_frame = 2;
  s.dirt = DirtSpec{3, 2, 2.0};
  const SceneTruth t = generate_scene(s);
  EXPECT_EQ(t.plane_best, (std::vector<int>{60, 120}));
  EXPECT_EQ(t.group_size, 3);
  EXPECT_EQ(t.stack_length, 180);
  EXPECT_EQ(t.dirt_frames, (std::vector<int>{9, 10, 11}));
  // Margin floor(1/0.35) = 2 base positions on each side.
  EXPECT_EQ(t.focused_segment, (FrameInterval{18 * 3, 42 * 3 + 2}));
  EXPECT_EQ(render_zstack(t, s).size(), 180u);
}

TEST(Simsynth, FocusedSegmentCoversPlaneRange) {
  SceneSpec s;
  s.n_frames = 100;
  s.planes = {{{0, 0, 80, 120}, 10}, {{80, 0, 80, 120}, 90}};
  const FrameInterval seg = generate_scene(s).focused_segment;
  EXPECT_LE(seg.first, 10);
  EXPECT_GE(seg.last, 90);
}

TEST(Simsynth, ZeroSlopeMakesEveryFrameSharp) {
  SceneSpec s;
  s.n_frames = 6;
  s.blur_slope = 0.0;
  s.planes = {{{0, 0, 160, 120}, 2}};
  const SceneTruth t = generate_scene(s);
  const ZStack z = render_zstack(t, s);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(z[i], t.all_in_focus);
  EXPECT_EQ(t.focused_segment, (FrameInterval{0, 5}));
}

TEST(Simsynth, InFocusFrameEqualsTruthWithoutNoiseOrVignette) {
  const SceneSpec s = two_plane_spec();
  const SceneTruth t = generate_scene(s);
  const ZStack z = render_zstack(t, s);
  const Frame& f20 = z[20];
  const Frame& f40 = z[40];
  for (int y = 0; y < 120; ++y) {
    for (int x = 0; x < 80; ++x) EXPECT_EQ(f20(x, y), t.all_in_focus(x, y));
    for (int x = 80; x < 160; ++x) EXPECT_EQ(f40(x, y), t.all_in_focus(x, y));
  }
}

TEST(Simsynth, EveryOperatorPeaksAtThePlane) {
  SceneSpec s;
  s.seed = 4;
  s.n_frames = 40;
  s.noise_sigma = 0.005;
  s.vignette_strength = 0.3;
  s.planes = {{{0, 0, 160, 120}, 17}};
  const ZStack z = render_zstack(generate_scene(s), s);
  for (FMOperator op : kAllOperators) {
    const FocalCurve c = focal_curve(z, op);
    EXPECT_EQ(std::max_element(c.values.begin(), c.values.end()) - c.values.begin(), 17) << to_string(op);
  }
}

TEST(Simsynth, SinglePlaneCurveIsUnimodal) {
  SceneSpec s;
  s.seed = 5;
  s.n_frames = 40;
  s.max_sigma = 8.0;
  s.planes = {{{0, 0, 160, 120}, 15}};
  const FocalCurve c = focal_curve(render_zstack(generate_scene(s), s), FMOperator::TENG);
  for (int k = 1; k <= 15; ++k) EXPECT_GE(c[static_cast<std::size_t>(k)], c[static_cast<std::size_t>(k - 1)]) << k;
  for (int k = 16; k < 40; ++k) EXPECT_LE(c[static_cast<std::size_t>(k)], c[static_cast<std::size_t>(k - 1)]) << k;
}

TEST(Simsynth, DirtAddsSecondaryPeak) {
  SceneSpec s;
  s.seed = 6;
  s.n_frames = 80;
  s.max_sigma = 8.0;
  s.planes = {{{0, 0, 160, 120}, 60}};
  s.dirt = DirtSpec{10, 4, 4.0};
  const FocalCurve c = focal_curve(render_zstack(generate_scene(s), s), FMOperator::TENG);
  EXPECT_GT(c[10], c[4]);
  EXPECT_GT(c[10], c[16]);
  EXPECT_LT(c[10], c[60]);
}

TEST(Simsynth, ValidationErrors) {
  SceneSpec s = two_plane_spec();
  s.planes[1].region.width = 70;
  EXPECT_THROW(generate_scene(s), InvalidArgument);  // does not tile
  s = two_plane_spec();
  s.planes[1].region.x = 70;
  s.planes[1].region.width = 90;
  EXPECT_THROW(generate_scene(s), InvalidArgument);  // overlap / outside
  s = two_plane_spec();
  s.planes[0].z_index = 60;
  EXPECT_THROW(generate_scene(s), InvalidArgument);
  s = two_plane_spec();
  s.vignette_strength = 1.0;
  EXPECT_THROW(generate_scene(s), InvalidArgument);
  s = two_plane_spec();
  s.dirt = DirtSpec{-1, 2, 2.0};
  EXPECT_THROW(generate_scene(s), InvalidArgument);
  s = two_plane_spec();
  s.planes.clear();
  EXPECT_THROW(generate_scene(s), InvalidArgument);
  s = two_plane_spec();
  EXPECT_THROW(render_zstack(generate_scene(s), [] {
                 SceneSpec o = two_plane_spec();
                 o.width = 100;
                 o.planes = {{{0, 0, 100, 120}, 3}};
                 return o;
               }()),
               DimensionMismatch);
}

TEST(Simsynth, GaussianBlurPreservesConstantsAndRoi) {
  const Image c(20, 15, 0.4);
  const Image blurred = gaussian_blur(c, 2.5);
  for (double v : blurred.pixels()) EXPECT_NEAR(v, 0.4, 1e-12);
  const Image tex = synth::specimen_texture(40, 30, 3);
  const Image full = gaussian_blur(tex, 1.7);
  const Image roi = gaussian_blur(tex, 1.7, Rect{5, 7, 20, 10});
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) EXPECT_NEAR(roi(x, y), full(5 + x, 7 + y), 1e-12);
  }
}

TEST(Suites, ScenesAreValidAndDeterministic) {
  for (std::uint64_t seed = 1000; seed < 1010; ++seed) {
    const SceneSpec a = suites::fast_search_scene(seed);
    EXPECT_NO_THROW(a.validate());
    EXPECT_GE(a.n_frames, 120);
    EXPECT_LE(a.n_frames, 240);
    const SceneTruth t = generate_scene(a);
    EXPECT_LE(t.focused_segment.length(), a.n_frames / 10);
    ASSERT_TRUE(a.dirt.has_value());
    EXPECT_FALSE(t.focused_segment.contains(a.dirt->z_index));
    EXPECT_EQ(suites::fast_search_scene(seed).planes, a.planes);
  }
  for (int planes = 2; planes <= 5; ++planes) {
    const SceneSpec c = suites::coverage_scene(2000 + planes, planes);
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.planes.size(), static_cast<std::size_t>(planes));
    EXPECT_EQ(c.duplicates_per_frame, 4);
  }
  for (std::uint64_t seed = 3000; seed < 3010; ++seed) {
    const SceneSpec d = suites::dirt_scene(seed);
    EXPECT_NO_THROW(d.validate());
    for (const auto& p : d.planes) EXPECT_GE(std::abs(p.z_index - d.dirt->z_index), 30);
  }
  EXPECT_NO_THROW(suites::stacking_scene(4000, 1024, 768).validate());
}

TEST(Suites, SpreadZKeepsGap) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto z = suites::spread_z(4, 4, 55, 8, rng);
    std::sort(z.begin(), z.end());
    EXPECT_GE(z.front(), 4);
    EXPECT_LE(z.back(), 55);
    for (std::size_t i = 1; i < z.size(); ++i) EXPECT_GE(z[i] - z[i - 1], 8);
  }
}
