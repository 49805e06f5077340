#pragma once

// Timing harness: medians with a distribution-free 95% interval, operator
// and stacker comparisons, and the two-pass scan frame-count model.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "zstack/focus_measure.hpp"
#include "zstack/parallel.hpp"
#include "zstack/peak_search.hpp"
#include "zstack/rng.hpp"
#include "zstack/serialization.hpp"
#include "zstack/simsynth.hpp"
#include "zstack/stacker.hpp"
#include "zstack/suites.hpp"

namespace zstack::bench {

inline constexpr int kMinRepeats = 30;

struct TimingStats {
  int repeats = 0;
  double median_ms = 0.0;
  double ci_low_ms = 0.0;  // 95% interval for the median
  double ci_high_ms = 0.0;
  double mean_ms = 0.0;
  double min_ms = 0.0;

  double ci_half_width() const { return 0.5 * (ci_high_ms - ci_low_ms); }
  bool below(const TimingStats& other) const { return ci_high_ms < other.ci_low_ms; }
};

// Median with the order-statistic interval from the normal approximation to
// the binomial: ranks n/2 -+ 1.96 sqrt(n)/2.
inline TimingStats summarize(std::vector<double> samples_ms) {
  if (samples_ms.empty()) throw InvalidArgument("no timing samples");
  std::sort(samples_ms.begin(), samples_ms.end());
  const std::size_t n = samples_ms.size();
  TimingStats t;
  t.repeats = static_cast<int>(n);
  t.median_ms = n % 2 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
  const double half = 1.96 * std::sqrt(static_cast<double>(n)) / 2.0;
  const auto lo = static_cast<long long>(std::floor(n / 2.0 - half));
  const auto hi = static_cast<long long>(std::ceil(n / 2.0 + half));
  t.ci_low_ms = samples_ms[static_cast<std::size_t>(std::clamp(lo, 0LL, static_cast<long long>(n) - 1))];
  t.ci_high_ms = samples_ms[static_cast<std::size_t>(std::clamp(hi - 1, 0LL, static_cast<long long>(n) - 1))];
  double sum = 0.0;
  for (double s : samples_ms) sum += s;
  t.mean_ms = sum / static_cast<double>(n);
  t.min_ms = samples_ms.front();
  return t;
}

// Runs fn `warmup` times untimed, then `repeats` timed runs.
inline TimingStats time_runs(const std::function<void()>& fn, int repeats, int warmup = 3) {
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    samples.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return summarize(std::move(samples));
}

// Keeps results alive so the optimizer cannot drop timed work.
inline volatile double g_sink = 0.0;

inline Frame random_frame(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  Image img(width, height);
  for (double& v : img.pixels()) v = rng.uniform();
  return Frame(std::move(img));
}

struct Resolution {
  int width = 0;
  int height = 0;
  std::string tag() const { return std::to_string(width) + "x" + std::to_string(height); }
  long long pixels() const { return static_cast<long long>(width) * height; }
};

inline Resolution parse_resolution(const std::string& text) {
  const SectorGrid g = parse_grid(text);  // same "AxB" grammar
  if (g.rows < 3 || g.cols < 3) throw InvalidArgument("resolution must be at least 3x3: " + text);
  return {g.rows, g.cols};
}

struct OperatorTiming {
  FMOperator op;
  Resolution resolution;
  TimingStats stats;
};

// One seeded random frame per resolution; every operator timed on it. Timed
// on the calling thread only (operators are single-threaded per frame).
inline std::vector<OperatorTiming> bench_operators(const std::vector<Resolution>& resolutions, int repeats,
                                                   std::uint64_t seed = 7) {
  if (repeats < kMinRepeats) throw InvalidArgument("bench_operators needs at least 30 repeats");
  std::vector<OperatorTiming> out;
  for (const auto& res : resolutions) {
    const Frame frame = random_frame(res.width, res.height, seed);
    for (FMOperator op : kAllOperators) {
      const auto stats = time_runs([&] { g_sink = g_sink + focus_measure(frame, op); }, repeats);
      out.push_back({op, res, stats});
    }
  }
  return out;
}

struct ScanStrategy {
  int frames_full_slow = 0;
  int frames_two_pass = 0;
  int coarse_frames = 0;
  int segment_frames = 0;
  double reduction = 0.0;
  Segment segment;  // fine-frame indices
};

// Frame-count model of the two-pass scan: a coarse pass capturing every
// coarse_stride-th position, then a fine pass over the returned segment.
inline ScanStrategy scan_strategy(const ZStack& fine, int coarse_stride, FMOperator op = FMOperator::VOLL4) {
  if (coarse_stride < 1) throw InvalidArgument("coarse_stride must be >= 1");
  const ZStack coarse = fine.decimate(coarse_stride);
  const Segment coarse_seg = fast_search(coarse, op);
  ScanStrategy s;
  s.frames_full_slow = static_cast<int>(fine.size());
  s.coarse_frames = static_cast<int>(coarse.size());
  s.segment.start_frame = coarse_seg.start_frame * coarse_stride;
  s.segment.end_frame = std::min(static_cast<int>(fine.size()) - 1, coarse_seg.end_frame * coarse_stride);
  s.segment.start_z = static_cast<long long>(s.segment.start_frame) * fine.stride();
  s.segment.end_z = static_cast<long long>(s.segment.end_frame) * fine.stride();
  s.segment.degenerate = coarse_seg.degenerate;
  s.segment_frames = s.segment.length();
  s.frames_two_pass = s.coarse_frames + s.segment_frames;
  s.reduction = static_cast<double>(s.frames_full_slow) / s.frames_two_pass;
  return s;
}

inline ScanStrategy bench_scan_strategy(const SceneSpec& spec, int coarse_stride) {
  if (coarse_stride < 2) throw InvalidArgument("bench_scan_strategy needs coarse_stride >= 2");
  const auto truth = generate_scene(spec);
  return scan_strategy(render_zstack(truth, spec), coarse_stride);
}

struct StackerTiming {
  StackMethod method;
  TimingStats stats;
};

// Times each fusion method on the same `frames`-frame simulated coverage set.
inline std::vector<StackerTiming> bench_stackers(int width, int height, int frames, int repeats,
                                                 std::uint64_t seed = 7) {
  if (repeats < kMinRepeats) throw InvalidArgument("bench_stackers needs at least 30 repeats");
  if (frames < 2) throw InvalidArgument("bench_stackers needs at least 2 frames");
  const SceneSpec spec = suites::stacking_scene(seed, width, height);
  const ZStack stack = render_zstack(generate_scene(spec), spec);
  // Plane-best frames first, then frames stepping away from the first plane.
  std::vector<Frame> input;
  for (const auto& p : spec.planes) {
    if (static_cast<int>(input.size()) < frames) input.push_back(stack[static_cast<std::size_t>(p.z_index)]);
  }
  for (int step = 1; static_cast<int>(input.size()) < frames; ++step) {
    input.push_back(stack[static_cast<std::size_t>((spec.planes[0].z_index + 2 * step) % spec.n_frames)]);
  }
  std::vector<StackerTiming> out;
  for (StackMethod m : {StackMethod::PixelBased, StackMethod::NeighborBased, StackMethod::WaveletBased}) {
    const auto stats = time_runs([&] { g_sink = g_sink + focus_stack(input, m).image(0, 0); }, repeats, 2);
    out.push_back({m, stats});
  }
  return out;
}

inline json to_json_value(const TimingStats& t) {
  return {{"repeats", t.repeats},
          {"median_ms", t.median_ms},
          {"ci95_ms", {t.ci_low_ms, t.ci_high_ms}},
          {"mean_ms", t.mean_ms},
          {"min_ms", t.min_ms}};
}

inline json to_json_value(const ScanStrategy& s) {
  return {{"frames_full_slow", s.frames_full_slow},
          {"frames_two_pass", s.frames_two_pass},
          {"coarse_frames", s.coarse_frames},
          {"segment_frames", s.segment_frames},
          {"reduction", s.reduction},
          {"segment", s.segment}};
}

}  // namespace zstack::bench
