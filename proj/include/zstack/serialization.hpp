#pragma once

// JSON mappings for specs, truths and results. Parse failures surface as
// ConfigError so callers can report them as domain errors.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "zstack/coverage.hpp"
#include "zstack/error.hpp"
#include "zstack/peak_search.hpp"
#include "zstack/simsynth.hpp"

namespace zstack {

using json = nlohmann::json;

inline void to_json(json& j, const Rect& r) { j = {{"x", r.x}, {"y", r.y}, {"width", r.width}, {"height", r.height}}; }
inline void from_json(const json& j, Rect& r) {
  j.at("x").get_to(r.x);
  j.at("y").get_to(r.y);
  j.at("width").get_to(r.width);
  j.at("height").get_to(r.height);
}

inline void to_json(json& j, const PlaneSpec& p) { j = {{"region", p.region}, {"z_index", p.z_index}}; }
inline void from_json(const json& j, PlaneSpec& p) {
  j.at("region").get_to(p.region);
  j.at("z_index").get_to(p.z_index);
}

inline void to_json(json& j, const DirtSpec& d) {
  j = {{"z_index", d.z_index}, {"blob_count", d.blob_count}, {"blob_radius", d.blob_radius}};
}
inline void from_json(const json& j, DirtSpec& d) {
  j.at("z_index").get_to(d.z_index);
  d.blob_count = j.value("blob_count", DirtSpec{}.blob_count);
  d.blob_radius = j.value("blob_radius", DirtSpec{}.blob_radius);
}

inline void to_json(json& j, const SceneSpec& s) {
  j = {{"width", s.width},
       {"height", s.height},
       {"planes", s.planes},
       {"n_frames", s.n_frames},
       {"blur_slope", s.blur_slope},
       {"dirt", s.dirt ? json(*s.dirt) : json(nullptr)},
       {"vignette_strength", s.vignette_strength},
       {"duplicates_per_frame", s.duplicates_per_frame},
       {"noise_sigma", s.noise_sigma},
       {"seed", s.seed},
       {"max_sigma", s.max_sigma}};
}

// Missing optional fields keep their SceneSpec defaults.
inline void from_json(const json& j, SceneSpec& s) {
  const SceneSpec d;
  s.width = j.value("width", d.width);
  s.height = j.value("height", d.height);
  j.at("planes").get_to(s.planes);
  s.n_frames = j.value("n_frames", d.n_frames);
  s.blur_slope = j.value("blur_slope", d.blur_slope);
  if (j.contains("dirt") && !j.at("dirt").is_null()) {
    s.dirt = j.at("dirt").get<DirtSpec>();
  } else {
    s.dirt.reset();
  }
  s.vignette_strength = j.value("vignette_strength", d.vignette_strength);
  s.duplicates_per_frame = j.value("duplicates_per_frame", d.duplicates_per_frame);
  s.noise_sigma = j.value("noise_sigma", d.noise_sigma);
  s.seed = j.value("seed", d.seed);
  s.max_sigma = j.value("max_sigma", d.max_sigma);
}

inline void to_json(json& j, const FrameInterval& f) { j = {{"first", f.first}, {"last", f.last}}; }
inline void from_json(const json& j, FrameInterval& f) {
  j.at("first").get_to(f.first);
  j.at("last").get_to(f.last);
}

// Metadata only; the all-in-focus image is written next to it as a file.
inline json truth_json(const SceneTruth& t) {
  return {{"plane_best", t.plane_best},
          {"focused_segment", t.focused_segment},
          {"dirt_frames", t.dirt_frames},
          {"group_size", t.group_size},
          {"stack_length", t.stack_length}};
}

inline void to_json(json& j, const Segment& s) {
  j = {{"start_frame", s.start_frame},
       {"end_frame", s.end_frame},
       {"start_z", s.start_z},
       {"end_z", s.end_z},
       {"degenerate", s.degenerate}};
}
inline void from_json(const json& j, Segment& s) {
  j.at("start_frame").get_to(s.start_frame);
  j.at("end_frame").get_to(s.end_frame);
  s.start_z = j.value("start_z", static_cast<long long>(s.start_frame));
  s.end_z = j.value("end_z", static_cast<long long>(s.end_frame));
  s.degenerate = j.value("degenerate", false);
}

inline void to_json(json& j, const Peak& p) {
  j = {{"index", p.index},
       {"height", p.height},
       {"prominence", p.prominence},
       {"left_base", p.left_base},
       {"right_base", p.right_base},
       {"width", p.width()}};
}
inline void from_json(const json& j, Peak& p) {
  j.at("index").get_to(p.index);
  j.at("height").get_to(p.height);
  j.at("prominence").get_to(p.prominence);
  j.at("left_base").get_to(p.left_base);
  j.at("right_base").get_to(p.right_base);
}

// "RxC", e.g. "4x4".
inline SectorGrid parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    SectorGrid g{std::stoi(text.substr(0, x), &used), 0};
    if (used != x) throw std::invalid_argument(text);
    g.cols = std::stoi(text.substr(x + 1), &used);
    if (used != text.size() - x - 1) throw std::invalid_argument(text);
    if (g.rows < 1 || g.cols < 1) throw std::invalid_argument(text);
    return g;
  } catch (const std::logic_error&) {
    throw InvalidArgument("grid must look like RxC with positive integers, got '" + text + "'");
  }
}

inline void to_json(json& j, const CoverageConfig& c) {
  j = {{"grid", std::to_string(c.grid.rows) + "x" + std::to_string(c.grid.cols)},
       {"op", std::string(to_string(c.op))},
       {"dark_threshold", c.dark_threshold},
       {"dup_mad_threshold", c.dup_mad_threshold},
       {"blur_ratio", c.blur_ratio},
       {"dirt_prom_ratio", c.dirt_prom_ratio},
       {"dirt_dist_ratio", c.dirt_dist_ratio},
       {"method", std::string(to_string(c.method))}};
}
inline void from_json(const json& j, CoverageConfig& c) {
  const CoverageConfig d;
  c.grid = j.contains("grid") ? parse_grid(j.at("grid").get<std::string>()) : d.grid;
  c.op = j.contains("op") ? parse_operator(j.at("op").get<std::string>()) : d.op;
  c.dark_threshold = j.value("dark_threshold", d.dark_threshold);
  c.dup_mad_threshold = j.value("dup_mad_threshold", d.dup_mad_threshold);
  c.blur_ratio = j.value("blur_ratio", d.blur_ratio);
  c.dirt_prom_ratio = j.value("dirt_prom_ratio", d.dirt_prom_ratio);
  c.dirt_dist_ratio = j.value("dirt_dist_ratio", d.dirt_dist_ratio);
  c.method = j.contains("method") ? parse_coverage_method(j.at("method").get<std::string>()) : d.method;
}

// {"selected":[..],"audit":[{"index":i,"reason":".."}],"sector_owner":[[..]]}
inline void to_json(json& j, const CoverageResult& r) {
  json audit = json::array();
  for (const auto& e : r.audit) audit.push_back({{"index", e.index}, {"reason", e.reason_text()}});
  json owners = json::array();
  for (int row = 0; row < r.sector_owner.grid.rows; ++row) {
    json line = json::array();
    for (int col = 0; col < r.sector_owner.grid.cols; ++col) line.push_back(r.sector_owner.at(row, col));
    owners.push_back(std::move(line));
  }
  j = {{"selected", r.selected}, {"audit", std::move(audit)}, {"sector_owner", std::move(owners)}};
}
inline void from_json(const json& j, CoverageResult& r) {
  j.at("selected").get_to(r.selected);
  r.audit.clear();
  for (const auto& e : j.at("audit")) {
    r.audit.push_back(parse_audit_reason(e.at("index").get<int>(), e.at("reason").get<std::string>()));
  }
  const auto& owners = j.at("sector_owner");
  r.sector_owner.grid = {static_cast<int>(owners.size()), owners.empty() ? 0 : static_cast<int>(owners[0].size())};
  r.sector_owner.owner.clear();
  for (const auto& line : owners) {
    if (static_cast<int>(line.size()) != r.sector_owner.grid.cols) throw ConfigError("ragged sector_owner rows");
    for (const auto& v : line) r.sector_owner.owner.push_back(v.get<int>());
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

// Converts nlohmann type/field errors into ConfigError with context.
template <typename T>
T parse_as(const json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("invalid " + what + ": " + e.what());
  }
}

}  // namespace zstack
