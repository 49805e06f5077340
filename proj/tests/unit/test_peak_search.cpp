#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "zstack/zstack.hpp"

using namespace zstack;

namespace {

FocalCurve curve_of(std::vector<double> v, int stride = 1) {
  FocalCurve c;
  c.values = std::move(v);
  c.source_stride = stride;
  return c;
}

std::vector<int> indices(const std::vector<Peak>& ps) {
  std::vector<int> out;
  for (const auto& p : ps) out.push_back(p.index);
  return out;
}

ZStack single_plane_stack(int n, int z, std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  spec.n_frames = n;
  spec.max_sigma = 8.0;
  spec.noise_sigma = 0.002;
  spec.planes = {{{0, 0, spec.width, spec.height}, z}};
  return render_zstack(generate_scene(spec), spec);
}

}  // namespace

TEST(Smoothen, Examples) {
  const FocalCurve c = curve_of({0, 3, 0});
  EXPECT_EQ(smoothen(c, 1).values, c.values);
  EXPECT_EQ(smoothen(c, 3).values, (std::vector<double>{1.5, 1.0, 1.5}));
  const FocalCurve k = curve_of(std::vector<double>(11, 2.5));
  for (int w : {1, 3, 5, 9, 21}) EXPECT_EQ(smoothen(k, w).values, k.values);
  EXPECT_EQ(smoothen(c, 3).smooth_window, 3);
  EXPECT_THROW(smoothen(c, 2), InvalidArgument);
  EXPECT_THROW(smoothen(c, 0), InvalidArgument);
}

TEST(Smoothen, InteriorMeanPreserved) {
  // Constant-extended fixture: the ramp sits in the interior, flat shoulders
  // longer than the window, so the moving average conserves the sum.
  std::vector<double> v(40, 1.0);
  for (int i = 15; i < 25; ++i) v[static_cast<std::size_t>(i)] = 1.0 + (i - 15) * 0.3;
  for (int i = 25; i < 40; ++i) v[static_cast<std::size_t>(i)] = 1.0;
  const auto s = smoothen(curve_of(v), 5);
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    a += v[i];
    b += s.values[i];
  }
  EXPECT_NEAR(a / 40, b / 40, 1e-9);
}

TEST(DefaultSmoothWindow, OddAndScaled) {
  EXPECT_EQ(default_smooth_window(10), 3);
  EXPECT_EQ(default_smooth_window(100), 5);
  EXPECT_EQ(default_smooth_window(120), 7);
  for (std::size_t n = 3; n < 500; n += 7) EXPECT_EQ(default_smooth_window(n) % 2, 1);
}

TEST(MirrorExtend, Examples) {
  const FocalCurve m = mirror_extend(curve_of({1, 2, 3, 4}));
  EXPECT_EQ(m.values, (std::vector<double>{2, 1, 1, 2, 3, 4, 4, 3}));
  EXPECT_EQ(m.mirror_offset, 2);
  EXPECT_EQ(m.source_length(), 4u);
  EXPECT_EQ(mirror_extend(curve_of({5, 5})).values, (std::vector<double>{5, 5, 5, 5}));
  EXPECT_THROW(mirror_extend(curve_of({1})), InvalidArgument);
  EXPECT_THROW(mirror_extend(m), InvalidArgument);
}

TEST(MirrorExtend, OddLengthMatchesReverseSliceOracle) {
  const std::vector<double> v{3, 1, 4, 1, 5};
  const FocalCurve m = mirror_extend(curve_of(v));
  std::vector<double> want(v.begin(), v.begin() + 3);
  std::reverse(want.begin(), want.end());
  want.insert(want.end(), v.begin(), v.end());
  want.insert(want.end(), v.rbegin(), v.rbegin() + 3);
  EXPECT_EQ(m.values, want);
}

TEST(MirrorExtend, RisingEndGainsProminence) {
  std::vector<double> v(9, 0.0);
  v.back() = 10.0;
  EXPECT_TRUE(find_peaks(curve_of(v), 0.0).empty());
  const FocalCurve m = mirror_extend(curve_of(v));
  const auto peaks = find_peaks(m, 0.0);
  ASSERT_FALSE(peaks.empty());
  const Peak* p = most_prominent(peaks, m);
  EXPECT_EQ(p->prominence, 10.0);
  EXPECT_EQ(p->index - m.mirror_offset, 8);
}

TEST(FindPeaks, Examples) {
  const auto c = curve_of({0, 1, 0, 3, 0, 2, 0});
  const auto all = find_peaks(c, 0.0);
  ASSERT_EQ(indices(all), (std::vector<int>{1, 3, 5}));
  EXPECT_EQ(all[0].prominence, 1.0);
  EXPECT_EQ(all[1].prominence, 3.0);
  EXPECT_EQ(all[2].prominence, 2.0);
  EXPECT_EQ(indices(find_peaks(c, 2.5)), (std::vector<int>{3}));
  EXPECT_TRUE(find_peaks(curve_of({1, 2, 3, 4, 5, 6}), 0.0).empty());
}

TEST(FindPeaks, PlateauCenterRoundsLeft) {
  const auto ps = find_peaks(curve_of({0, 2, 2, 2, 2, 0}), 0.0);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].index, 2);
  EXPECT_TRUE(find_peaks(curve_of({0, 2, 2}), 0.0).empty());  // plateau reaching the end
}

TEST(FindPeaks, BaseCrossingsAtRelativeHeight) {
  // Peak 8 above a floor of 0; half-prominence level 4.
  const auto c = curve_of({0, 0, 1, 3, 6, 8, 5, 4, 2, 0, 0});
  const auto half = find_peaks(c, 0.0, 0.5);
  ASSERT_EQ(half.size(), 1u);
  EXPECT_EQ(half[0].left_base, 3);
  EXPECT_EQ(half[0].right_base, 7);
  const auto full = find_peaks(c, 0.0, 1.0);
  EXPECT_EQ(full[0].left_base, 1);
  EXPECT_EQ(full[0].right_base, 9);
  EXPECT_THROW(find_peaks(c, 0.0, 0.0), InvalidArgument);
  EXPECT_THROW(find_peaks(c, 0.0, 1.5), InvalidArgument);
}

TEST(FindPeaks, MatchesBruteForceOracleOnRandomCurves) {
  Rng rng(20240611);
  for (int t = 0; t < 1000; ++t) {
    const int n = rng.uniform_int(20, 200);
    const auto v = t % 3 == 0 ? oracle::random_step_curve(rng, n) : oracle::random_curve(rng, n);
    for (double rel : {kBaseRelHeight, 1.0}) {
      const auto got = find_peaks(std::span<const double>(v), 0.0, rel);
      const auto want = oracle::peaks(v, rel);
      ASSERT_EQ(got.size(), want.size()) << "curve " << t;
      for (std::size_t i = 0; i < got.size(); ++i) {
        ASSERT_EQ(got[i].index, want[i].index) << "curve " << t;
        ASSERT_EQ(got[i].prominence, want[i].prominence) << "curve " << t;
        ASSERT_EQ(got[i].left_base, want[i].left_base) << "curve " << t << " rel " << rel;
        ASSERT_EQ(got[i].right_base, want[i].right_base) << "curve " << t << " rel " << rel;
        ASSERT_EQ(got[i].height, v[static_cast<std::size_t>(got[i].index)]);
      }
    }
  }
}

TEST(FindPeaks, ThresholdMonotonicity) {
  Rng rng(77);
  for (int t = 0; t < 200; ++t) {
    const auto v = oracle::random_curve(rng, rng.uniform_int(20, 120));
    double p1 = rng.uniform(0.0, 0.5);
    double p2 = p1 + rng.uniform(0.0, 0.5);
    const auto low = indices(find_peaks(std::span<const double>(v), p1));
    const auto high = indices(find_peaks(std::span<const double>(v), p2));
    EXPECT_TRUE(std::includes(low.begin(), low.end(), high.begin(), high.end()));
  }
}

TEST(BinSearch, Examples) {
  EXPECT_EQ(bin_search_prominent_peak(curve_of({0, 1, 0, 3, 0, 2, 0})).index, 3);
  EXPECT_EQ(bin_search_prominent_peak(curve_of({0, 2, 0})).index, 1);
  EXPECT_EQ(bin_search_prominent_peak(curve_of({0, 3, 0, 3, 0})).index, 1);
  EXPECT_THROW(bin_search_prominent_peak(curve_of({4, 4, 4, 4})), NoPeak);
  EXPECT_THROW(bin_search_prominent_peak(curve_of({1, 2, 3})), NoPeak);
}

TEST(BinSearch, MatchesExhaustiveMaximumProminence) {
  Rng rng(31337);
  for (int t = 0; t < 1000; ++t) {
    const int n = rng.uniform_int(5, 150);
    const auto v = t % 2 ? oracle::random_step_curve(rng, n, 3) : oracle::random_curve(rng, n);
    const auto ref = oracle::peaks(v, kBaseRelHeight);
    if (ref.empty()) continue;
    EXPECT_EQ(bin_search_prominent_peak(curve_of(v)).index, oracle::best_peak(ref)) << "curve " << t;
  }
}

TEST(BinSearch, MirroredTiePrefersSourceRange) {
  Rng rng(4242);
  for (int t = 0; t < 500; ++t) {
    const auto v = oracle::random_step_curve(rng, rng.uniform_int(4, 60), 4);
    const FocalCurve m = mirror_extend(curve_of(v));
    const auto ref = oracle::peaks(m.values, kBaseRelHeight);
    if (ref.empty()) continue;
    const int first = m.mirror_offset;
    const int last = first + static_cast<int>(m.source_length()) - 1;
    EXPECT_EQ(bin_search_prominent_peak(m).index, oracle::best_peak(ref, first, last)) << "curve " << t;
  }
  // Isolated peak and its mirror twin tie exactly; the original wins.
  const FocalCurve m = mirror_extend(curve_of({0, 5, 0, 0, 0, 0, 0, 0}));
  const Peak p = bin_search_prominent_peak(m);
  EXPECT_EQ(p.index - m.mirror_offset, 1);
}

TEST(MapBack, Examples) {
  FocalCurve c = mirror_extend(curve_of({1, 2, 3, 4}, 10));
  Peak p;
  p.left_base = 3;
  p.right_base = 6;
  const Segment s = map_back(p, c);
  EXPECT_EQ(s.start_frame, 1);
  EXPECT_EQ(s.end_frame, 3);
  EXPECT_EQ(s.start_z, 10);
  EXPECT_EQ(s.end_z, 30);
  EXPECT_FALSE(s.degenerate);

  p.left_base = 0;
  p.right_base = 1;
  const Segment d = map_back(p, c);
  EXPECT_EQ(d.start_frame, 0);
  EXPECT_EQ(d.end_frame, 0);
  EXPECT_TRUE(d.degenerate);

  const FocalCurve plain = curve_of({0, 1, 2, 1, 0, 0}, 3);
  p.left_base = 1;
  p.right_base = 4;
  const Segment id = map_back(p, plain);
  EXPECT_EQ(id.start_frame, 1);
  EXPECT_EQ(id.end_frame, 4);
  EXPECT_EQ(id.end_z, 12);
}

TEST(MapBack, PeakInsideExtensionRejected) {
  const FocalCurve c = mirror_extend(curve_of(std::vector<double>(10, 0.0)));  // offset 5
  Peak p;
  p.left_base = 0;
  p.right_base = 3;  // maps to [-5, -2]
  EXPECT_THROW(map_back(p, c), InvalidPeak);
  p.left_base = 16;  // maps past the end
  p.right_base = 19;
  EXPECT_THROW(map_back(p, c), InvalidPeak);
}

TEST(FastSearch, SinglePlaneSegmentContainsFocus) {
  const ZStack stack = single_plane_stack(40, 12, 7);
  const Segment s = fast_search(stack, FMOperator::VOLL4);
  EXPECT_LE(s.start_frame, 10);
  EXPECT_GE(s.end_frame, 14);
  EXPECT_LT(s.length(), 20);
}

TEST(FastSearch, FocusAtFinalFrame) {
  const ZStack stack = single_plane_stack(30, 29, 8);
  const auto r = fast_search_detailed(stack, FMOperator::VOLL4);
  EXPECT_EQ(r.segment.end_frame, 29);
  EXPECT_TRUE(r.segment.contains(29));
  EXPECT_GE(r.peak.index, r.curve.mirror_offset);
}

TEST(FastSearch, FocusAtFirstFrame) {
  const ZStack stack = single_plane_stack(30, 0, 9);
  const Segment s = fast_search(stack, FMOperator::TENG);
  EXPECT_EQ(s.start_frame, 0);
}

TEST(FastSearch, ConstantSceneHasNoPeak) {
  const ZStack stack(std::vector<Frame>(12, Frame::constant(16, 16, 0.4)));
  EXPECT_THROW(fast_search(stack), NoPeak);
  EXPECT_THROW(fast_search(ZStack(std::vector<Frame>(2, Frame::constant(4, 4, 0.1)))), InvalidArgument);
}

TEST(FastSearch, StrideCarriedIntoMotorSteps) {
  const ZStack fine = single_plane_stack(96, 50, 10);
  const ZStack coarse = fine.decimate(8);
  const Segment s = fast_search(coarse);
  EXPECT_EQ(s.start_z, static_cast<long long>(s.start_frame) * 8);
  EXPECT_LE(s.start_z, 50);
  EXPECT_GE(s.end_z, 50);
}

TEST(FastSearch, AmbiguityFlagForTwoEqualPlanes) {
  SceneSpec spec;
  spec.seed = 3;
  spec.n_frames = 60;
  spec.max_sigma = 8.0;
  spec.planes = {{{0, 0, 80, 120}, 15}, {{80, 0, 80, 120}, 45}};
  const auto r = fast_search_detailed(render_zstack(generate_scene(spec), spec), FMOperator::TENG);
  EXPECT_GT(r.runner_up_ratio, 0.5);
  EXPECT_EQ(r.ambiguous, r.runner_up_ratio > kAmbiguousRunnerUp);
}

TEST(FastSearch, SegmentCoversFullStackCoverageSelection) {
  for (std::uint64_t seed : {1000u, 1001u, 1002u}) {
    const SceneSpec spec = suites::fast_search_scene(seed);
    const ZStack full = render_zstack(generate_scene(spec), spec);
    const Segment s = fast_search(full.decimate(suites::kCoarseStride));
    for (int k : full_focus_coverage(full).selected) {
      EXPECT_TRUE(k >= s.start_z && k <= s.end_z) << "seed " << seed << " frame " << k;
    }
  }
}
