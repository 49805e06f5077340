#pragma once

// Pipes & filters composition: fast_search -> coverage -> stack. Each stage
// consumes the previous stage's frames; disabled stages pass them through.

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zstack/coverage.hpp"
#include "zstack/image_io.hpp"
#include "zstack/peak_search.hpp"
#include "zstack/serialization.hpp"
#include "zstack/stacker.hpp"

namespace zstack {

inline constexpr const char* kStageNames[] = {"fast_search", "coverage", "stack"};

struct StageConfig {
  std::string name;
  bool enabled = true;
  json params = json::object();

  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

struct IoConfig {
  std::string input_dir;
  std::string output_dir;
  std::string report_path;

  friend bool operator==(const IoConfig&, const IoConfig&) = default;
};

struct FastSearchParams {
  FMOperator op = FMOperator::VOLL4;
  int smooth = 0;  // 0 = default window
  int coarse_stride = 8;
};

struct StackStageParams {
  StackMethod method = StackMethod::WaveletBased;
  StackParams fusion;
  std::string output = "fused.png";
  bool label_map = false;
};

namespace detail {

inline int stage_rank(const std::string& name) {
  for (int i = 0; i < 3; ++i) {
    if (name == kStageNames[i]) return i;
  }
  return -1;
}

inline void reject_unknown_keys(const json& params, const std::string& stage, std::initializer_list<const char*> known) {
  if (!params.is_object()) throw ConfigError("parameters of stage '" + stage + "' must be an object");
  for (const auto& [key, _] : params.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown parameter '" + key + "' for stage '" + stage + "'");
  }
}

}  // namespace detail

inline FastSearchParams fast_search_params(const json& p) {
  detail::reject_unknown_keys(p, "fast_search", {"op", "smooth", "coarse_stride"});
  FastSearchParams f;
  try {
    if (p.contains("op")) f.op = parse_operator(p.at("op").get<std::string>());
    f.smooth = p.value("smooth", f.smooth);
    f.coarse_stride = p.value("coarse_stride", f.coarse_stride);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("fast_search parameters: ") + e.what());
  }
  if (f.smooth < 0 || (f.smooth > 0 && f.smooth % 2 == 0)) throw ConfigError("fast_search.smooth must be 0 or odd");
  if (f.coarse_stride < 1) throw ConfigError("fast_search.coarse_stride must be >= 1");
  return f;
}

inline CoverageConfig coverage_params(const json& p) {
  detail::reject_unknown_keys(p, "coverage", {"grid", "op", "dark_threshold", "dup_mad_threshold", "blur_ratio",
                                              "dirt_prom_ratio", "dirt_dist_ratio", "method"});
  CoverageConfig c = parse_as<CoverageConfig>(p, "coverage parameters");
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("coverage parameters: ") + e.what());
  }
  return c;
}

inline StackStageParams stack_params(const json& p) {
  detail::reject_unknown_keys(p, "stack", {"method", "pixel_window", "block", "median_window", "levels", "output",
                                           "label_map"});
  StackStageParams s;
  try {
    if (p.contains("method")) s.method = parse_stack_method(p.at("method").get<std::string>());
    s.fusion.pixel_window = p.value("pixel_window", s.fusion.pixel_window);
    s.fusion.block = p.value("block", s.fusion.block);
    s.fusion.median_window = p.value("median_window", s.fusion.median_window);
    s.fusion.levels = p.value("levels", s.fusion.levels);
    s.output = p.value("output", s.output);
    s.label_map = p.value("label_map", s.label_map);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("stack parameters: ") + e.what());
  }
  return s;
}

struct PipelineConfig {
  std::vector<StageConfig> stages;
  IoConfig io;

  // Known names, each at most once, in fast_search -> coverage -> stack order,
  // and parameters that parse.
  void validate() const {
    int last = -1;
    for (const auto& s : stages) {
      const int rank = detail::stage_rank(s.name);
      if (rank < 0) throw ConfigError("unknown stage '" + s.name + "'");
      if (rank <= last) {
        throw ConfigError("stage '" + s.name + "' out of order; expected fast_search -> coverage -> stack");
      }
      last = rank;
      if (s.name == "fast_search") fast_search_params(s.params);
      if (s.name == "coverage") coverage_params(s.params);
      if (s.name == "stack") stack_params(s.params);
    }
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

inline void to_json(json& j, const StageConfig& s) {
  j = {{"name", s.name}, {"enabled", s.enabled}, {"params", s.params}};
}
inline void from_json(const json& j, StageConfig& s) {
  j.at("name").get_to(s.name);
  s.enabled = j.value("enabled", true);
  s.params = j.value("params", json::object());
}

inline void to_json(json& j, const IoConfig& io) {
  j = {{"input_dir", io.input_dir}, {"output_dir", io.output_dir}, {"report_path", io.report_path}};
}
inline void from_json(const json& j, IoConfig& io) {
  io.input_dir = j.value("input_dir", std::string{});
  io.output_dir = j.value("output_dir", std::string{});
  io.report_path = j.value("report_path", std::string{});
}

inline void to_json(json& j, const PipelineConfig& c) { j = {{"stages", c.stages}, {"io", c.io}}; }
inline void from_json(const json& j, PipelineConfig& c) {
  j.at("stages").get_to(c.stages);
  c.io = j.value("io", IoConfig{});
}

// Relative paths inside a config file resolve against the file's directory.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  PipelineConfig cfg = parse_as<PipelineConfig>(read_json_file(path), "pipeline config");
  const auto base = path.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(cfg.io.input_dir);
  resolve(cfg.io.output_dir);
  resolve(cfg.io.report_path);
  cfg.validate();
  return cfg;
}

struct StageReport {
  std::string name;
  bool enabled = true;
  int input_frames = 0;
  int output_frames = 0;
  double wall_ms = 0.0;
  json details = json::object();

  friend bool operator==(const StageReport&, const StageReport&) = default;
};

struct RunReport {
  bool ok = true;
  std::string error_stage;
  std::string error;
  int input_frames = 0;
  std::vector<StageReport> stages;
  std::optional<Segment> segment;
  std::optional<CoverageResult> coverage;
  std::optional<std::string> stack_method;
  std::optional<std::string> output_path;
  std::vector<int> output_indices;  // surviving (or fused) frames as input-stack indices
  json metrics = json::object();

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

inline void to_json(json& j, const StageReport& s) {
  j = {{"name", s.name},
       {"enabled", s.enabled},
       {"input_frames", s.input_frames},
       {"output_frames", s.output_frames},
       {"wall_ms", s.wall_ms},
       {"details", s.details}};
}
inline void from_json(const json& j, StageReport& s) {
  j.at("name").get_to(s.name);
  j.at("enabled").get_to(s.enabled);
  j.at("input_frames").get_to(s.input_frames);
  j.at("output_frames").get_to(s.output_frames);
  j.at("wall_ms").get_to(s.wall_ms);
  s.details = j.value("details", json::object());
}

inline void to_json(json& j, const RunReport& r) {
  j = {{"ok", r.ok},
       {"input_frames", r.input_frames},
       {"stages", r.stages},
       {"output_indices", r.output_indices},
       {"metrics", r.metrics}};
  if (!r.ok) j["error"] = {{"stage", r.error_stage}, {"message", r.error}};
  if (r.segment) j["fast_search"] = {{"segment", *r.segment}};
  if (r.coverage) j["coverage"] = *r.coverage;
  if (r.stack_method) {
    j["stack"] = {{"method", *r.stack_method}, {"output_path", r.output_path ? json(*r.output_path) : json(nullptr)}};
  }
}
inline void from_json(const json& j, RunReport& r) {
  j.at("ok").get_to(r.ok);
  j.at("input_frames").get_to(r.input_frames);
  j.at("stages").get_to(r.stages);
  j.at("output_indices").get_to(r.output_indices);
  r.metrics = j.value("metrics", json::object());
  r.error_stage.clear();
  r.error.clear();
  if (j.contains("error")) {
    j.at("error").at("stage").get_to(r.error_stage);
    j.at("error").at("message").get_to(r.error);
  }
  r.segment.reset();
  if (j.contains("fast_search")) r.segment = j.at("fast_search").at("segment").get<Segment>();
  r.coverage.reset();
  if (j.contains("coverage")) r.coverage = j.at("coverage").get<CoverageResult>();
  r.stack_method.reset();
  r.output_path.reset();
  if (j.contains("stack")) {
    r.stack_method = j.at("stack").at("method").get<std::string>();
    if (!j.at("stack").at("output_path").is_null()) r.output_path = j.at("stack").at("output_path").get<std::string>();
  }
}

// Same report with every wall_ms zeroed, for determinism comparisons.
inline RunReport without_timings(RunReport r) {
  for (auto& s : r.stages) s.wall_ms = 0.0;
  return r;
}

// Runs the configured stages on `input`. Domain errors inside a stage stop
// the run and are recorded (ok = false) rather than thrown; configuration
// errors are thrown before anything runs.
inline RunReport run_pipeline(const PipelineConfig& cfg, const ZStack& input) {
  cfg.validate();
  RunReport report;
  report.input_frames = static_cast<int>(input.size());

  ZStack frames = input;
  std::vector<int> source(input.size());
  for (std::size_t i = 0; i < source.size(); ++i) source[i] = static_cast<int>(i);

  for (const auto& stage : cfg.stages) {
    StageReport sr;
    sr.name = stage.name;
    sr.enabled = stage.enabled;
    sr.input_frames = static_cast<int>(frames.size());
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (!stage.enabled) {
        sr.details = {{"passthrough", true}};
      } else if (stage.name == "fast_search") {
        const auto p = fast_search_params(stage.params);
        const ZStack coarse = frames.decimate(p.coarse_stride);
        const auto r = fast_search_detailed(coarse, p.op, p.smooth);
        // Coarse sample i sits at input frame i * coarse_stride.
        const int first = r.segment.start_frame * p.coarse_stride;
        const int last = std::min(static_cast<int>(frames.size()) - 1, r.segment.end_frame * p.coarse_stride);
        Segment seg;
        seg.start_frame = source[static_cast<std::size_t>(first)];
        seg.end_frame = source[static_cast<std::size_t>(last)];
        seg.start_z = r.segment.start_z;
        seg.end_z = static_cast<long long>(last) * frames.stride();
        seg.degenerate = r.segment.degenerate;
        report.segment = seg;
        sr.details = {{"op", std::string(to_string(p.op))},
                      {"coarse_stride", p.coarse_stride},
                      {"coarse_frames", coarse.size()},
                      {"smooth_window", r.curve.smooth_window},
                      {"peak", r.peak},
                      {"runner_up_ratio", r.runner_up_ratio},
                      {"ambiguous", r.ambiguous},
                      {"degenerate", r.segment.degenerate}};
        frames = frames.slice(static_cast<std::size_t>(first), static_cast<std::size_t>(last));
        source = std::vector<int>(source.begin() + first, source.begin() + last + 1);
      } else if (stage.name == "coverage") {
        const auto c = coverage_params(stage.params);
        CoverageResult r = full_focus_coverage(frames, c);
        // Report indices in terms of the pipeline input.
        for (auto& k : r.selected) k = source[static_cast<std::size_t>(k)];
        for (auto& e : r.audit) {
          e.index = source[static_cast<std::size_t>(e.index)];
          if (e.reason == DropReason::Duplicate) e.dup_of = source[static_cast<std::size_t>(e.dup_of)];
        }
        for (auto& o : r.sector_owner.owner) {
          if (o >= 0) o = source[static_cast<std::size_t>(o)];
        }
        sr.details = {{"method", std::string(to_string(c.method))}, {"selected", r.selected.size()}};
        std::vector<int> local;
        std::vector<int> kept;
        for (std::size_t i = 0; i < source.size(); ++i) {
          if (std::binary_search(r.selected.begin(), r.selected.end(), source[i])) {
            local.push_back(static_cast<int>(i));
            kept.push_back(source[i]);
          }
        }
        frames = frames.subset(local);
        source = std::move(kept);
        report.coverage = std::move(r);
      } else if (stage.name == "stack") {
        const auto p = stack_params(stage.params);
        if (frames.empty()) throw InvalidArgument("nothing to stack");
        Frame fused;
        std::vector<int> labels;
        if (frames.size() == 1) {
          fused = frames[0];  // a single covering frame is already all-in-focus
          sr.details["single_frame"] = true;
        } else {
          auto r = focus_stack(frames.frames(), p.method, p.fusion);
          fused = std::move(r.image);
          labels = std::move(r.label_map);
        }
        report.stack_method = std::string(to_string(p.method));
        if (!cfg.io.output_dir.empty()) {
          const auto out = std::filesystem::path(cfg.io.output_dir) / p.output;
          std::error_code ec;
          std::filesystem::create_directories(out.parent_path(), ec);
          if (ec) throw IoError("cannot create " + out.parent_path().string() + ": " + ec.message());
          write_image(out, fused);
          report.output_path = out.string();
          if (p.label_map && !labels.empty()) {
            const auto lm = std::filesystem::path(cfg.io.output_dir) / "labels.pgm";
            write_pgm(lm, label_image(labels, fused.width(), fused.height(), frames.size()));
            sr.details["label_map_path"] = lm.string();
          }
        }
        sr.details["method"] = *report.stack_method;
        frames = ZStack(std::vector<Frame>{std::move(fused)}, frames.stride(), frames.resolution_tag());
      }
    } catch (const Error& e) {
      sr.output_frames = sr.input_frames;
      sr.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      report.stages.push_back(std::move(sr));
      report.ok = false;
      report.error_stage = stage.name;
      report.error = e.what();
      report.output_indices = source;
      return report;
    }
    sr.output_frames = static_cast<int>(frames.size());
    sr.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    report.stages.push_back(std::move(sr));
  }
  report.output_indices = source;
  return report;
}

// Loads io.input_dir, runs, and writes the report to io.report_path when set.
// Errors loading the input are recorded under the pseudo-stage "load".
inline RunReport run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  RunReport report;
  try {
    if (cfg.io.input_dir.empty()) throw ConfigError("io.input_dir is required");
    const ZStack input = load_stack(cfg.io.input_dir);
    report = run_pipeline(cfg, input);
  } catch (const Error& e) {
    report = RunReport{};
    report.ok = false;
    report.error_stage = "load";
    report.error = e.what();
  }
  if (!cfg.io.report_path.empty()) write_json_file(cfg.io.report_path, report);
  return report;
}

}  // namespace zstack
