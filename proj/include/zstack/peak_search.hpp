#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "zstack/error.hpp"
#include "zstack/focus_measure.hpp"
#include "zstack/image.hpp"

namespace zstack {

// A local maximum of a curve with its topographic prominence. Bases are the
// nearest samples on each side at or below height - rel_height * prominence
// (see find_peaks).
struct Peak {
  int index = 0;
  double height = 0.0;
  double prominence = 0.0;
  int left_base = 0;
  int right_base = 0;

  int width() const { return right_base - left_base; }
  friend bool operator==(const Peak&, const Peak&) = default;
};

// Frame interval of the source stack. start_z/end_z are in motor steps.
struct Segment {
  int start_frame = 0;
  int end_frame = 0;
  long long start_z = 0;
  long long end_z = 0;
  bool degenerate = false;  // both bases clamped onto one frame

  int length() const { return end_frame - start_frame + 1; }
  bool contains(int frame) const { return frame >= start_frame && frame <= end_frame; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

// Centered moving average; near the ends the window is truncated to the
// samples that exist.
inline FocalCurve smoothen(const FocalCurve& curve, int window) {
  if (window < 1 || window % 2 == 0) {
    throw InvalidArgument("smoothing window must be odd and positive, got " + std::to_string(window));
  }
  const int n = static_cast<int>(curve.size());
  const int half = window / 2;
  FocalCurve out = curve;
  out.smooth_window = window;
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) sum += curve.values[j];
    out.values[i] = sum / (hi - lo + 1);
  }
  return out;
}

inline int default_smooth_window(std::size_t n) {
  int w = std::max(3, static_cast<int>(std::lround(static_cast<double>(n) / 20.0)));
  return w % 2 == 0 ? w + 1 : w;
}

// Prepends the reversed first half and appends the reversed second half so
// peaks near either end acquire a descent on both sides.
inline FocalCurve mirror_extend(const FocalCurve& curve) {
  const std::size_t n = curve.size();
  if (n < 2) throw InvalidArgument("mirror_extend needs at least 2 samples");
  if (curve.mirror_offset != 0) throw InvalidArgument("curve is already mirrored");
  const std::size_t left = (n + 1) / 2;  // ceil(n/2)
  const std::size_t right_from = n / 2;  // floor(n/2)
  FocalCurve out = curve;
  out.values.clear();
  out.values.reserve(n + left + (n - right_from));
  for (std::size_t i = left; i-- > 0;) out.values.push_back(curve.values[i]);
  out.values.insert(out.values.end(), curve.values.begin(), curve.values.end());
  for (std::size_t i = n; i-- > right_from;) out.values.push_back(curve.values[i]);
  out.mirror_offset = static_cast<int>(left);
  return out;
}

// Relative height at which peak bases (and so widths) are measured.
inline constexpr double kBaseRelHeight = 0.5;

// Strict local maxima (plateaus count once, at their center rounded left),
// filtered by prominence >= min_prominence, in index order.
inline std::vector<Peak> find_peaks(std::span<const double> v, double min_prominence,
                                    double rel_height = kBaseRelHeight) {
  if (!(rel_height > 0.0 && rel_height <= 1.0)) throw InvalidArgument("rel_height must lie in (0,1]");
  std::vector<Peak> peaks;
  const int n = static_cast<int>(v.size());
  if (n < 3) return peaks;
  int i = 1;
  while (i < n - 1) {
    if (!(v[i - 1] < v[i])) {
      ++i;
      continue;
    }
    int ahead = i + 1;
    while (ahead < n - 1 && v[ahead] == v[i]) ++ahead;
    if (!(v[ahead] < v[i])) {
      i = ahead;
      continue;
    }
    const int plateau_lo = i;
    const int plateau_hi = ahead - 1;
    const double h = v[i];

    double left_min = h;
    for (int j = plateau_lo - 1; j >= 0 && v[j] <= h; --j) left_min = std::min(left_min, v[j]);
    double right_min = h;
    for (int j = plateau_hi + 1; j < n && v[j] <= h; ++j) right_min = std::min(right_min, v[j]);
    const double reference = std::max(left_min, right_min);

    Peak p;
    p.index = (plateau_lo + plateau_hi) / 2;
    p.height = h;
    p.prominence = h - reference;
    const double level = rel_height == 1.0 ? reference : h - rel_height * p.prominence;
    p.left_base = plateau_lo - 1;
    while (v[p.left_base] > level) --p.left_base;
    p.right_base = plateau_hi + 1;
    while (v[p.right_base] > level) ++p.right_base;
    if (p.prominence >= min_prominence) peaks.push_back(p);
    i = ahead;
  }
  return peaks;
}

inline std::vector<Peak> find_peaks(const FocalCurve& curve, double min_prominence,
                                    double rel_height = kBaseRelHeight) {
  return find_peaks(std::span<const double>(curve.values), min_prominence, rel_height);
}

// Highest prominence, ties to the lowest index.
inline const Peak* most_prominent(const std::vector<Peak>& peaks) {
  const Peak* best = nullptr;
  for (const auto& p : peaks) {
    if (!best || p.prominence > best->prominence) best = &p;
  }
  return best;
}

// As above, but on a mirrored curve an exact tie prefers an apex inside the
// source range: an isolated peak and its mirror twin always tie.
inline const Peak* most_prominent(const std::vector<Peak>& peaks, const FocalCurve& curve) {
  const int first = curve.mirror_offset;
  const int last = first + static_cast<int>(curve.source_length()) - 1;
  auto inside = [&](const Peak& p) { return p.index >= first && p.index <= last; };
  const Peak* best = nullptr;
  for (const auto& p : peaks) {
    if (!best || p.prominence > best->prominence ||
        (p.prominence == best->prominence && inside(p) && !inside(*best))) {
      best = &p;
    }
  }
  return best;
}

// Binary search on the prominence threshold until exactly one peak survives.
inline Peak bin_search_prominent_peak(const FocalCurve& curve) {
  const auto [lo_it, hi_it] = std::minmax_element(curve.values.begin(), curve.values.end());
  if (curve.size() < 3 || *lo_it == *hi_it) throw NoPeak("focal curve is flat");
  const auto all = find_peaks(curve, 0.0);
  if (all.empty()) throw NoPeak("focal curve has no local maximum");
  if (all.size() == 1) return all.front();
  const Peak best = *most_prominent(all, curve);

  const double range = *hi_it - *lo_it;
  double lo = 0.0;
  double hi = range;
  for (int iter = 0; iter < 64 && hi - lo >= 1e-12 * range; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const auto survivors = find_peaks(curve, mid);
    if (survivors.size() == 1) return survivors.front();
    // Exact ties never separate; stop once only tied peaks remain.
    if (!survivors.empty() && survivors.front().prominence == best.prominence &&
        std::all_of(survivors.begin(), survivors.end(),
                    [&](const Peak& p) { return p.prominence == best.prominence; })) {
      break;
    }
    if (survivors.empty()) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  // Only reachable when several peaks share the maximal prominence exactly.
  return best;
}

// Maps peak bases from the (possibly mirrored) curve back to source frame
// indices. Mirror samples adjacent to the original range are copies of the
// first/last frame, so an interval touching them clamps onto that frame.
inline Segment map_back(const Peak& peak, const FocalCurve& curve) {
  const long long n = static_cast<long long>(curve.source_length());
  const long long lo = static_cast<long long>(peak.left_base) - curve.mirror_offset;
  const long long hi = static_cast<long long>(peak.right_base) - curve.mirror_offset;
  if (hi < -1 || lo > n) {
    throw InvalidPeak("peak at " + std::to_string(peak.index) + " lies entirely inside a mirrored extension");
  }
  Segment s;
  s.start_frame = static_cast<int>(std::clamp(lo, 0LL, n - 1));
  s.end_frame = static_cast<int>(std::clamp(hi, 0LL, n - 1));
  s.start_z = static_cast<long long>(s.start_frame) * curve.source_stride;
  s.end_z = static_cast<long long>(s.end_frame) * curve.source_stride;
  s.degenerate = s.start_frame == s.end_frame;
  return s;
}

struct FastSearchResult {
  Segment segment;
  Peak peak;               // in extended-curve coordinates
  FocalCurve raw_curve;
  FocalCurve curve;        // smoothed and mirrored
  double runner_up_ratio = 0.0;  // second-highest prominence / highest
  bool ambiguous = false;        // runner-up above 80% of the winner
};

inline constexpr double kAmbiguousRunnerUp = 0.8;

// smooth_window <= 0 selects default_smooth_window.
inline FastSearchResult fast_search_detailed(const ZStack& stack, FMOperator op, int smooth_window = 0) {
  if (stack.size() < 3) throw InvalidArgument("fast_search needs at least 3 frames");
  FastSearchResult r;
  r.raw_curve = focal_curve(stack, op);
  const int window = smooth_window > 0 ? smooth_window : default_smooth_window(stack.size());
  r.curve = mirror_extend(smoothen(r.raw_curve, window));
  r.peak = bin_search_prominent_peak(r.curve);
  r.segment = map_back(r.peak, r.curve);

  // Mirror twins of real peaks are ignored: only apexes inside the source range count.
  const int first = r.curve.mirror_offset;
  const int last = first + static_cast<int>(r.curve.source_length()) - 1;
  double runner_up = 0.0;
  for (const auto& p : find_peaks(r.curve, 0.0)) {
    if (p.index != r.peak.index && p.index >= first && p.index <= last) {
      runner_up = std::max(runner_up, p.prominence);
    }
  }
  r.runner_up_ratio = r.peak.prominence > 0.0 ? runner_up / r.peak.prominence : 0.0;
  r.ambiguous = r.runner_up_ratio > kAmbiguousRunnerUp;
  return r;
}

inline Segment fast_search(const ZStack& stack, FMOperator op = FMOperator::VOLL4, int smooth_window = 0) {
  return fast_search_detailed(stack, op, smooth_window).segment;
}

}  // namespace zstack
