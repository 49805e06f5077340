#include <fstream>

#include <gtest/gtest.h>

#include "support/temp_dir.hpp"
#include "zstack/zstack.hpp"

using namespace zstack;

namespace {

SceneSpec fixture_spec() {
  SceneSpec s;
  s.seed = 11;
  s.n_frames = 160;
  s.max_sigma = 8.0;
  s.noise_sigma = 0.005;
  s.vignette_strength = 0.3;
  s.planes = {{{0, 0, 96, 120}, 100}, {{96, 0, 64, 60}, 104}, {{96, 60, 64, 60}, 108}};
  s.dirt = DirtSpec{20, 3, 3.0};
  return s;
}

const ZStack& fixture_stack() {
  static const ZStack stack = [] {
    const SceneSpec s = fixture_spec();
    return render_zstack(generate_scene(s), s);
  }();
  return stack;
}

PipelineConfig full_config() {
  return json::parse(R"({
    "stages": [
      {"name": "fast_search", "params": {"op": "VOLL4", "coarse_stride": 8}},
      {"name": "coverage", "params": {"method": "parts", "grid": "4x4", "op": "TENG"}},
      {"name": "stack", "params": {"method": "wavelet", "levels": 4}}
    ]})")
      .get<PipelineConfig>();
}

}  // namespace

TEST(Pipeline, StageOrderValidated) {
  PipelineConfig c = full_config();
  std::swap(c.stages[1], c.stages[2]);
  EXPECT_THROW(c.validate(), ConfigError);
  c = full_config();
  c.stages.push_back(c.stages[0]);
  EXPECT_THROW(c.validate(), ConfigError);
  c = full_config();
  c.stages[0].name = "denoise";
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(full_config().validate());
}

TEST(Pipeline, UnknownOrInvalidParamsRejected) {
  PipelineConfig c = full_config();
  c.stages[0].params["coarse_strid"] = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = full_config();
  c.stages[1].params["blur_ratio"] = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = full_config();
  c.stages[2].params["method"] = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = full_config();
  c.stages[0].params["smooth"] = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(run_pipeline(c, fixture_stack()), ConfigError);
}

TEST(Pipeline, AllStagesDisabledPassThrough) {
  PipelineConfig c = full_config();
  for (auto& s : c.stages) s.enabled = false;
  const RunReport r = run_pipeline(c, fixture_stack());
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(r.output_indices.size(), fixture_stack().size());
  EXPECT_EQ(r.output_indices.front(), 0);
  for (const auto& s : r.stages) {
    EXPECT_EQ(s.input_frames, 160);
    EXPECT_EQ(s.output_frames, 160);
  }
  EXPECT_FALSE(r.segment.has_value());
}

TEST(Pipeline, FullRunOnFixture) {
  const RunReport r = run_pipeline(full_config(), fixture_stack());
  ASSERT_TRUE(r.ok) << r.error;
  ASSERT_TRUE(r.segment.has_value());
  EXPECT_LE(r.segment->start_frame, 100);
  EXPECT_GE(r.segment->end_frame, 108);
  EXPECT_LT(r.segment->length(), 60);
  ASSERT_TRUE(r.coverage.has_value());
  for (int k : r.coverage->selected) EXPECT_TRUE(k >= 99 && k <= 109) << k;
  ASSERT_EQ(r.stages.size(), 3u);
  EXPECT_EQ(r.stages[2].output_frames, 1);
  EXPECT_EQ(r.stack_method, "wavelet");
  EXPECT_FALSE(r.output_path.has_value());
}

TEST(Pipeline, DeterministicAndReportRoundTrips) {
  const RunReport a = run_pipeline(full_config(), fixture_stack());
  const RunReport b = run_pipeline(full_config(), fixture_stack());
  EXPECT_EQ(without_timings(a), without_timings(b));
  const RunReport back = json(a).get<RunReport>();
  EXPECT_EQ(back, a);
}

TEST(Pipeline, StageErrorIsRecordedNotThrown) {
  PipelineConfig c = full_config();
  c.stages.erase(c.stages.begin() + 1);
  const std::vector<Frame> dark(5, Frame::constant(20, 20, 0.0));
  const RunReport r = run_pipeline(c, ZStack(dark));
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.error_stage, "fast_search");
  EXPECT_FALSE(r.error.empty());
  const json j = r;
  EXPECT_EQ(j.at("error").at("stage"), "fast_search");
}

TEST(Pipeline, FilesystemRunWritesOutputs) {
  TempDir dir;
  const SceneSpec s = fixture_spec();
  save_stack(dir / "in", fixture_stack());
  json cfg = full_config();
  cfg["stages"][2]["params"]["label_map"] = true;
  cfg["stages"][2]["params"]["method"] = "pixel";
  cfg["io"] = {{"input_dir", "in"}, {"output_dir", "out/nested"}, {"report_path", "out/report.json"}};
  {
    std::ofstream(dir / "cfg.json") << cfg.dump();
  }
  const PipelineConfig c = load_pipeline_config(dir / "cfg.json");
  EXPECT_EQ(c.io.input_dir, (dir / "in").lexically_normal().string());
  const RunReport r = run_pipeline(c);
  ASSERT_TRUE(r.ok) << r.error;
  ASSERT_TRUE(r.output_path.has_value());
  EXPECT_TRUE(std::filesystem::exists(*r.output_path));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "report.json"));
  EXPECT_EQ(read_json_file(dir / "out" / "report.json").get<RunReport>(), r);
  (void)s;
}

TEST(Pipeline, LoadErrorRecordedUnderLoadStage) {
  TempDir dir;
  PipelineConfig c = full_config();
  c.io.input_dir = (dir / "nope").string();
  c.io.report_path = (dir / "r.json").string();
  const RunReport r = run_pipeline(c);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.error_stage, "load");
  EXPECT_TRUE(std::filesystem::exists(dir / "r.json"));
  c.io.input_dir.clear();
  EXPECT_EQ(run_pipeline(c).error_stage, "load");
}

TEST(Pipeline, ConfigFileErrors) {
  TempDir dir;
  EXPECT_THROW(load_pipeline_config(dir / "none.json"), IoError);
  std::ofstream(dir / "a.json") << R"({"stages": [{"params": {}}]})";
  EXPECT_THROW(load_pipeline_config(dir / "a.json"), ConfigError);
  std::ofstream(dir / "b.json") << R"({"stages": [{"name": "stack"}, {"name": "coverage"}]})";
  EXPECT_THROW(load_pipeline_config(dir / "b.json"), ConfigError);
}
