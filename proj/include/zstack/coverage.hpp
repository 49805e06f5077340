#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zstack/error.hpp"
#include "zstack/focus_measure.hpp"
#include "zstack/image.hpp"
#include "zstack/parallel.hpp"
#include "zstack/peak_search.hpp"

namespace zstack {

enum class CoverageMethod { Parts, Best3 };

inline std::string_view to_string(CoverageMethod m) { return m == CoverageMethod::Parts ? "parts" : "best3"; }

inline CoverageMethod parse_coverage_method(std::string_view name) {
  if (name == "parts" || name == "Parts") return CoverageMethod::Parts;
  if (name == "best3" || name == "Best3") return CoverageMethod::Best3;
  throw InvalidArgument("unknown coverage method '" + std::string(name) + "'");
}

struct CoverageConfig {
  SectorGrid grid{4, 4};
  FMOperator op = FMOperator::TENG;
  double dark_threshold = 0.04;
  double dup_mad_threshold = 0.02;
  double blur_ratio = 0.2;
  double dirt_prom_ratio = 0.3;
  double dirt_dist_ratio = 1.5;
  CoverageMethod method = CoverageMethod::Parts;

  void validate() const {
    auto unit = [](double v, const char* name) {
      if (!(v > 0.0 && v <= 1.0)) throw InvalidArgument(std::string(name) + " must lie in (0,1]");
    };
    if (!(dark_threshold > 0.0 && dark_threshold < 1.0)) throw InvalidArgument("dark_threshold must lie in (0,1)");
    unit(dup_mad_threshold, "dup_mad_threshold");
    unit(blur_ratio, "blur_ratio");
    unit(dirt_prom_ratio, "dirt_prom_ratio");
    if (!(dirt_dist_ratio > 0.0)) throw InvalidArgument("dirt_dist_ratio must be positive");
    if (grid.rows < 1 || grid.cols < 1) throw InvalidArgument("sector grid must be at least 1x1");
  }
};

enum class DropReason { Kept, Duplicate, Blurred, Dirt, Dark };

struct AuditEntry {
  int index = 0;
  DropReason reason = DropReason::Kept;
  int dup_of = -1;  // set when reason == Duplicate

  std::string reason_text() const {
    switch (reason) {
      case DropReason::Kept: return "kept";
      case DropReason::Duplicate: return "dup_of:" + std::to_string(dup_of);
      case DropReason::Blurred: return "blurred";
      case DropReason::Dirt: return "dirt";
      case DropReason::Dark: return "dark";
    }
    return "?";
  }
  friend bool operator==(const AuditEntry&, const AuditEntry&) = default;
};

inline AuditEntry parse_audit_reason(int index, const std::string& text) {
  if (text == "kept") return {index, DropReason::Kept, -1};
  if (text == "blurred") return {index, DropReason::Blurred, -1};
  if (text == "dirt") return {index, DropReason::Dirt, -1};
  if (text == "dark") return {index, DropReason::Dark, -1};
  if (text.rfind("dup_of:", 0) == 0) return {index, DropReason::Duplicate, std::stoi(text.substr(7))};
  throw InvalidArgument("unknown audit reason '" + text + "'");
}

// Per-sector winning frame, row-major; -1 marks a sector invalid in every frame.
struct SectorOwners {
  SectorGrid grid;
  std::vector<int> owner;

  int at(int r, int c) const { return owner[static_cast<std::size_t>(r) * grid.cols + c]; }
  friend bool operator==(const SectorOwners&, const SectorOwners&) = default;
};

struct Selection {
  std::vector<int> indices;
  SectorOwners sector_owner;
};

struct CoverageResult {
  std::vector<int> selected;
  std::vector<AuditEntry> audit;  // ordered by frame index
  SectorOwners sector_owner;

  friend bool operator==(const CoverageResult&, const CoverageResult&) = default;
};

// Sector focus maps of every frame, with the dark-corner validity mask applied.
inline std::vector<SectorFMMap> sector_maps(const ZStack& stack, const CoverageConfig& cfg) {
  validate_grid(cfg.grid, stack.width(), stack.height());
  std::vector<SectorFMMap> maps(stack.size());
  parallel_for(stack.size(), [&](std::size_t k) {
    maps[k] = sector_fm(stack[k], cfg.grid, cfg.op, dark_mask(stack[k], cfg.dark_threshold));
  });
  return maps;
}

namespace detail {

// argmax over frames per sector, restricted to `allowed` when given.
inline SectorOwners sector_argmax(const std::vector<SectorFMMap>& maps, const SectorGrid& grid,
                                  const std::vector<int>* allowed = nullptr) {
  SectorOwners owners{grid, std::vector<int>(static_cast<std::size_t>(grid.rows) * grid.cols, -1)};
  std::vector<int> all;
  if (!allowed) {
    all.resize(maps.size());
    for (std::size_t k = 0; k < maps.size(); ++k) all[k] = static_cast<int>(k);
    allowed = &all;
  }
  for (std::size_t s = 0; s < owners.owner.size(); ++s) {
    int best = -1;
    for (int k : *allowed) {
      const auto& m = maps[static_cast<std::size_t>(k)];
      if (!m.valid[s]) continue;
      if (best < 0 || m.values[s] > maps[static_cast<std::size_t>(best)].values[s]) best = k;
    }
    owners.owner[s] = best;
  }
  return owners;
}

inline std::vector<int> unique_owners(const SectorOwners& owners) {
  std::vector<int> out;
  for (int o : owners.owner) {
    if (o >= 0) out.push_back(o);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

// "Parts": every sector keeps the frame where it is sharpest.
inline Selection select_parts(const std::vector<SectorFMMap>& maps, const SectorGrid& grid) {
  if (maps.empty()) throw InvalidArgument("select_parts: empty stack");
  Selection sel;
  sel.sector_owner = detail::sector_argmax(maps, grid);
  sel.indices = detail::unique_owners(sel.sector_owner);
  if (sel.indices.empty()) throw EmptyCoverage("every sector is dark in every frame");
  return sel;
}

inline Selection select_parts(const ZStack& stack, const CoverageConfig& cfg) {
  if (stack.empty()) throw InvalidArgument("select_parts: empty stack");
  return select_parts(sector_maps(stack, cfg), cfg.grid);
}

// "Best3": each sector votes for its sharpest frame; the three most-voted
// frames are kept and sectors are re-owned among them.
inline Selection select_best3(const std::vector<SectorFMMap>& maps, const SectorGrid& grid) {
  if (maps.empty()) throw InvalidArgument("select_best3: empty stack");
  const SectorOwners votes = detail::sector_argmax(maps, grid);
  std::map<int, int> tally;
  for (int o : votes.owner) {
    if (o >= 0) ++tally[o];
  }
  if (tally.empty()) throw EmptyCoverage("every sector is dark in every frame");
  std::vector<std::pair<int, int>> ranked(tally.begin(), tally.end());  // (frame, votes)
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Selection sel;
  for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) sel.indices.push_back(ranked[i].first);
  std::sort(sel.indices.begin(), sel.indices.end());
  sel.sector_owner = detail::sector_argmax(maps, grid, &sel.indices);
  return sel;
}

inline Selection select_best3(const ZStack& stack, const CoverageConfig& cfg) {
  if (stack.empty()) throw InvalidArgument("select_best3: empty stack");
  return select_best3(sector_maps(stack, cfg), cfg.grid);
}

// Drops frames whose whole-frame focus is below blur_ratio * max(curve).
inline std::vector<int> drop_blurred(const std::vector<int>& indices, const FocalCurve& curve,
                                     const CoverageConfig& cfg, std::vector<AuditEntry>* audit = nullptr) {
  const double peak = *std::max_element(curve.values.begin(), curve.values.end());
  const double floor = cfg.blur_ratio * peak;
  std::vector<int> kept;
  for (int k : indices) {
    if (curve.values.at(static_cast<std::size_t>(k)) < floor) {
      if (audit) audit->push_back({k, DropReason::Blurred, -1});
    } else {
      kept.push_back(k);
    }
  }
  return kept;
}

inline std::vector<int> drop_blurred(const ZStack& stack, const std::vector<int>& indices,
                                     const FocalCurve& curve, const CoverageConfig& cfg) {
  if (curve.size() != stack.size()) throw DimensionMismatch("drop_blurred: curve length differs from stack");
  return drop_blurred(indices, curve, cfg);
}

// Frame indices lying under a small peak far from the main focal peak. A
// frame belongs to the most prominent peak whose base interval covers it, so
// noise ripples on the flank of a large peak do not taint it. The curve is
// mirror-extended first so a dirt layer in the first or last frame still
// forms a peak.
inline std::vector<bool> dirt_tainted(const FocalCurve& curve, const CoverageConfig& cfg) {
  const int n = static_cast<int>(curve.size());
  std::vector<bool> tainted(curve.size(), false);
  if (n < 2) return tainted;
  const FocalCurve ext = curve.mirror_offset == 0 ? mirror_extend(curve) : curve;
  const int offset = ext.mirror_offset;
  const auto peaks = find_peaks(ext, 0.0);
  const Peak* main = most_prominent(peaks, ext);
  if (!main) return tainted;
  const double max_prominence = cfg.dirt_prom_ratio * main->prominence;
  const double min_distance = cfg.dirt_dist_ratio * main->width();

  std::vector<const Peak*> owner(curve.size(), nullptr);
  for (const auto& q : peaks) {
    const int lo = std::max(0, q.left_base - offset);
    const int hi = std::min(n - 1, q.right_base - offset);
    for (int k = lo; k <= hi; ++k) {
      const Peak*& o = owner[static_cast<std::size_t>(k)];
      if (!o || q.prominence > o->prominence) o = &q;
    }
  }
  for (int k = 0; k < n; ++k) {
    const Peak* q = owner[static_cast<std::size_t>(k)];
    if (q && q != main && q->prominence < max_prominence && std::abs(q->index - main->index) > min_distance) {
      tainted[static_cast<std::size_t>(k)] = true;
    }
  }
  return tainted;
}

inline std::vector<int> drop_dirt(const FocalCurve& curve, const std::vector<int>& indices,
                                  const CoverageConfig& cfg, std::vector<AuditEntry>* audit = nullptr) {
  const auto tainted = dirt_tainted(curve, cfg);
  std::vector<int> kept;
  for (int k : indices) {
    if (tainted.at(static_cast<std::size_t>(k))) {
      if (audit) audit->push_back({k, DropReason::Dirt, -1});
    } else {
      kept.push_back(k);
    }
  }
  return kept;
}

// In index order, a frame within dup_mad_threshold of an already kept frame
// is merged with it; the one with the higher whole-frame focus survives.
inline std::vector<int> drop_duplicates(const ZStack& stack, const std::vector<int>& indices,
                                        const FocalCurve& curve, const CoverageConfig& cfg,
                                        std::vector<AuditEntry>* audit = nullptr) {
  std::vector<int> kept;
  for (int j : indices) {
    auto match = std::find_if(kept.begin(), kept.end(), [&](int k) {
      return frame_diff_mad(stack[static_cast<std::size_t>(j)], stack[static_cast<std::size_t>(k)]) <=
             cfg.dup_mad_threshold;
    });
    if (match == kept.end()) {
      kept.push_back(j);
      continue;
    }
    const int k = *match;
    if (curve.values[static_cast<std::size_t>(j)] > curve.values[static_cast<std::size_t>(k)]) {
      if (audit) {
        for (auto& e : *audit) {
          if (e.reason == DropReason::Duplicate && e.dup_of == k) e.dup_of = j;
        }
        audit->push_back({k, DropReason::Duplicate, j});
      }
      *match = j;
    } else if (audit) {
      audit->push_back({j, DropReason::Duplicate, k});
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

inline std::vector<int> drop_duplicates(const ZStack& stack, const std::vector<int>& indices,
                                        const CoverageConfig& cfg) {
  FocalCurve curve;
  curve.values.assign(stack.size(), 0.0);
  for (int k : indices) {
    curve.values[static_cast<std::size_t>(k)] = focus_measure(stack[static_cast<std::size_t>(k)], cfg.op);
  }
  return drop_duplicates(stack, indices, curve, cfg);
}

// Selection, then blur, dirt and duplicate filters, with an audit entry for
// every candidate and for frames whose sectors are all dark.
inline CoverageResult full_focus_coverage(const ZStack& stack, const CoverageConfig& cfg = {}) {
  cfg.validate();
  if (stack.empty()) throw InvalidArgument("full_focus_coverage: empty stack");
  const auto maps = sector_maps(stack, cfg);
  const FocalCurve curve = focal_curve(stack, cfg.op);

  std::vector<AuditEntry> audit;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    if (maps[k].valid_count() == 0) audit.push_back({static_cast<int>(k), DropReason::Dark, -1});
  }

  Selection sel = cfg.method == CoverageMethod::Parts ? select_parts(maps, cfg.grid) : select_best3(maps, cfg.grid);
  auto indices = drop_blurred(sel.indices, curve, cfg, &audit);
  indices = drop_dirt(curve, indices, cfg, &audit);
  indices = drop_duplicates(stack, indices, curve, cfg, &audit);
  if (indices.empty()) throw EmptyCoverage("every candidate frame was filtered out");
  for (int k : indices) audit.push_back({k, DropReason::Kept, -1});
  std::stable_sort(audit.begin(), audit.end(), [](const auto& a, const auto& b) { return a.index < b.index; });

  // Sectors whose winner was dropped as blurred or dirt move to the best
  // surviving frame; duplicate-dropped winners stay (their twin survives).
  std::vector<int> duplicates;
  for (const auto& e : audit) {
    if (e.reason == DropReason::Duplicate) duplicates.push_back(e.index);
  }
  SectorOwners owners = sel.sector_owner;
  const SectorOwners fallback = detail::sector_argmax(maps, cfg.grid, &indices);
  for (std::size_t s = 0; s < owners.owner.size(); ++s) {
    const int o = owners.owner[s];
    if (o < 0) continue;
    const bool survives = std::binary_search(indices.begin(), indices.end(), o) ||
                          std::find(duplicates.begin(), duplicates.end(), o) != duplicates.end();
    if (!survives) owners.owner[s] = fallback.owner[s];
  }
  return CoverageResult{std::move(indices), std::move(audit), std::move(owners)};
}

}  // namespace zstack
