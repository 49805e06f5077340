// zstack command-line tool. Results are JSON on stdout (or --report PATH).
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zstack/zstack.hpp"

namespace fs = std::filesystem;
using namespace zstack;

namespace {

struct Output {
  std::string report_path;

  void emit(const json& j) const {
    if (report_path.empty()) {
      std::cout << j.dump(2) << "\n";
    } else {
      write_json_file(report_path, j);
    }
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

json operator_table(const std::vector<bench::OperatorTiming>& rows) {
  json table = json::array();
  for (const auto& r : rows) {
    json row = bench::to_json_value(r.stats);
    row["op"] = std::string(to_string(r.op));
    row["resolution"] = r.resolution.tag();
    table.push_back(std::move(row));
  }
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Z-stack focus search, coverage and stacking toolkit"};
  app.require_subcommand(1);
  Output out;
  int threads = 0;
  app.add_option("--report", out.report_path, "write the JSON result to PATH instead of stdout");
  app.add_option("--threads", threads, "worker threads (default: ZSTACK_THREADS or all cores)")->check(CLI::NonNegativeNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "render a synthetic scene into a stack directory");
  std::string spec_path, sim_out;
  sim->add_option("spec", spec_path, "scene spec JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("out_dir", sim_out, "output directory")->required();

  // fast-search
  auto* fs_cmd = app.add_subcommand("fast-search", "find the focused segment of a stack");
  std::string fs_dir, fs_op = "voll4";
  int fs_smooth = 0, fs_stride = 1;
  fs_cmd->add_option("stack_dir", fs_dir, "stack directory")->required();
  fs_cmd->add_option("--op", fs_op, "voll4|teng|lapm|lapv");
  fs_cmd->add_option("--smooth", fs_smooth, "odd smoothing window (0 = automatic)")->check(CLI::NonNegativeNumber);
  fs_cmd->add_option("--coarse-stride", fs_stride, "use every Nth frame as the coarse scan")->check(CLI::PositiveNumber);

  // coverage
  auto* cov = app.add_subcommand("coverage", "select a full focus coverage frame set");
  std::string cov_dir, cov_method = "parts", cov_grid = "4x4", cov_op = "teng";
  CoverageConfig cov_cfg;
  cov->add_option("stack_dir", cov_dir, "stack directory")->required();
  cov->add_option("--method", cov_method, "parts|best3");
  cov->add_option("--grid", cov_grid, "sector grid RxC");
  cov->add_option("--op", cov_op, "voll4|teng|lapm|lapv");
  cov->add_option("--dark-threshold", cov_cfg.dark_threshold);
  cov->add_option("--dup-threshold", cov_cfg.dup_mad_threshold);
  cov->add_option("--blur-ratio", cov_cfg.blur_ratio);
  cov->add_option("--dirt-prom-ratio", cov_cfg.dirt_prom_ratio);
  cov->add_option("--dirt-dist-ratio", cov_cfg.dirt_dist_ratio);

  // stack
  auto* stk = app.add_subcommand("stack", "fuse frames into one all-in-focus image");
  std::vector<std::string> stk_frames;
  std::string stk_method, stk_output, stk_labels;
  StackParams stk_params;
  stk->add_option("frames", stk_frames, "input images (or one stack directory)")->required();
  stk->add_option("--method", stk_method, "pixel|neighbor|wavelet")->required();
  stk->add_option("-o,--output", stk_output, "fused image path (.pgm or .png)")->required();
  stk->add_option("--label-map", stk_labels, "write the per-pixel source map as PGM");
  stk->add_option("--window", stk_params.pixel_window, "pixel method focus window");
  stk->add_option("--block", stk_params.block, "neighbor method tile size");
  stk->add_option("--median", stk_params.median_window, "neighbor method median window");
  stk->add_option("--levels", stk_params.levels, "wavelet levels");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "run a configured stage chain");
  std::string pipe_cfg;
  pipe->add_option("config", pipe_cfg, "pipeline config JSON")->required()->check(CLI::ExistingFile);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "timing and scan-strategy benchmarks");
  bench_cmd->require_subcommand(1);
  auto* b_ops = bench_cmd->add_subcommand("operators", "focus measure runtime per resolution");
  std::string b_res = "1920x1080,1280x720,640x480,320x240,160x120";
  int b_repeats = bench::kMinRepeats;
  b_ops->add_option("--resolutions", b_res, "comma separated WxH list");
  b_ops->add_option("--repeats", b_repeats)->check(CLI::Range(bench::kMinRepeats, 100000));
  auto* b_scan = bench_cmd->add_subcommand("scan", "two-pass scan frame counts on simulated scenes");
  int b_scenes = 30, b_stride = suites::kCoarseStride;
  std::uint64_t b_seed = 1000;
  b_scan->add_option("--scenes", b_scenes)->check(CLI::PositiveNumber);
  b_scan->add_option("--stride", b_stride)->check(CLI::Range(2, 1000));
  b_scan->add_option("--seed", b_seed, "first scene seed");
  auto* b_stk = bench_cmd->add_subcommand("stackers", "fusion runtime per method");
  std::string b_stk_res = "1024x768";
  int b_stk_frames = 3, b_stk_repeats = bench::kMinRepeats;
  b_stk->add_option("--resolution", b_stk_res);
  b_stk->add_option("--frames", b_stk_frames)->check(CLI::Range(2, 64));
  b_stk->add_option("--repeats", b_stk_repeats)->check(CLI::Range(bench::kMinRepeats, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (e.get_exit_code() != 0) std::cerr << app.help();
    return 2;
  }

  try {
    if (threads > 0) set_thread_count(threads);

    if (*sim) {
      const SceneSpec spec = parse_as<SceneSpec>(read_json_file(spec_path), "scene spec");
      const SceneTruth truth = generate_scene(spec);
      const ZStack stack = render_zstack(truth, spec);
      save_stack(sim_out, stack);
      fs::create_directories(fs::path(sim_out) / "truth");
      write_pgm(fs::path(sim_out) / "truth" / "all_in_focus.pgm", truth.all_in_focus);
      json truth_doc = truth_json(truth);
      truth_doc["spec"] = spec;
      write_json_file(fs::path(sim_out) / "truth" / "truth.json", truth_doc);
      out.emit({{"out_dir", sim_out}, {"frames", stack.size()}, {"truth", truth_json(truth)}});
    } else if (*fs_cmd) {
      const ZStack stack = load_stack(fs_dir);
      const ZStack coarse = fs_stride > 1 ? stack.decimate(fs_stride) : stack;
      const auto r = fast_search_detailed(coarse, parse_operator(fs_op), fs_smooth);
      Segment seg = r.segment;
      seg.start_frame *= fs_stride;
      seg.end_frame = std::min(static_cast<int>(stack.size()) - 1, seg.end_frame * fs_stride);
      seg.start_z = static_cast<long long>(seg.start_frame) * stack.stride();
      seg.end_z = static_cast<long long>(seg.end_frame) * stack.stride();
      out.emit({{"segment", seg},
                {"peak", r.peak},
                {"frames", stack.size()},
                {"coarse_frames", coarse.size()},
                {"smooth_window", r.curve.smooth_window},
                {"runner_up_ratio", r.runner_up_ratio},
                {"ambiguous", r.ambiguous}});
    } else if (*cov) {
      cov_cfg.method = parse_coverage_method(cov_method);
      cov_cfg.grid = parse_grid(cov_grid);
      cov_cfg.op = parse_operator(cov_op);
      const ZStack stack = load_stack(cov_dir);
      out.emit(json(full_focus_coverage(stack, cov_cfg)));
    } else if (*stk) {
      std::vector<Frame> frames;
      if (stk_frames.size() == 1 && fs::is_directory(stk_frames[0])) {
        frames = load_stack(stk_frames[0]).frames();
      } else {
        for (const auto& f : stk_frames) frames.push_back(read_image(f));
      }
      const StackMethod method = parse_stack_method(stk_method);
      const FusionResult r = focus_stack(frames, method, stk_params);
      write_image(stk_output, r.image);
      json doc = {{"method", std::string(to_string(method))}, {"frames", frames.size()}, {"output", stk_output}};
      if (!stk_labels.empty() && !r.label_map.empty()) {
        write_pgm(stk_labels, label_image(r.label_map, r.image.width(), r.image.height(), frames.size()));
        doc["label_map"] = stk_labels;
      }
      out.emit(doc);
    } else if (*pipe) {
      const PipelineConfig cfg = load_pipeline_config(pipe_cfg);
      const RunReport report = run_pipeline(cfg);
      if (cfg.io.report_path.empty() || !out.report_path.empty()) out.emit(json(report));
      if (!report.ok) {
        std::cerr << "pipeline failed in stage " << report.error_stage << ": " << report.error << "\n";
        return 1;
      }
    } else if (*bench_cmd) {
      if (threads == 0) set_thread_count(1);  // timing stability unless asked otherwise
      if (*b_ops) {
        std::vector<bench::Resolution> res;
        for (const auto& r : split_list(b_res)) res.push_back(bench::parse_resolution(r));
        if (res.empty()) throw InvalidArgument("no resolutions given");
        out.emit({{"bench", "operators"}, {"threads", thread_count()}, {"table", operator_table(bench::bench_operators(res, b_repeats))}});
      } else if (*b_scan) {
        json scenes = json::array();
        double sum = 0.0;
        for (int i = 0; i < b_scenes; ++i) {
          const auto spec = suites::fast_search_scene(b_seed + static_cast<std::uint64_t>(i));
          const auto s = bench::bench_scan_strategy(spec, b_stride);
          sum += s.reduction;
          json row = bench::to_json_value(s);
          row["seed"] = b_seed + static_cast<std::uint64_t>(i);
          scenes.push_back(std::move(row));
        }
        out.emit({{"bench", "scan"}, {"stride", b_stride}, {"mean_reduction", sum / b_scenes}, {"scenes", scenes}});
      } else if (*b_stk) {
        const auto res = bench::parse_resolution(b_stk_res);
        json table = json::array();
        for (const auto& r : bench::bench_stackers(res.width, res.height, b_stk_frames, b_stk_repeats)) {
          json row = bench::to_json_value(r.stats);
          row["method"] = std::string(to_string(r.method));
          table.push_back(std::move(row));
        }
        out.emit({{"bench", "stackers"}, {"resolution", res.tag()}, {"frames", b_stk_frames}, {"threads", thread_count()}, {"table", table}});
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
