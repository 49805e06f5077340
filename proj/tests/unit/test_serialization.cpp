#include <fstream>

#include <gtest/gtest.h>

#include "support/temp_dir.hpp"
#include "zstack/zstack.hpp"

using namespace zstack;

TEST(Serialization, SceneSpecRoundTrip) {
  SceneSpec s = suites::fast_search_scene(1003);
  s.duplicates_per_frame = 2;
  const json j = s;
  const SceneSpec back = j.get<SceneSpec>();
  EXPECT_EQ(json(back), j);
  EXPECT_EQ(back.planes, s.planes);
  EXPECT_EQ(back.dirt, s.dirt);
  s.dirt.reset();
  EXPECT_FALSE(json(s).get<SceneSpec>().dirt.has_value());
}

TEST(Serialization, SceneSpecDefaultsForMissingFields) {
  const json j = json::parse(R"({"planes":[{"region":{"x":0,"y":0,"width":160,"height":120},"z_index":3}]})");
  const SceneSpec s = j.get<SceneSpec>();
  const SceneSpec d;
  EXPECT_EQ(s.width, d.width);
  EXPECT_EQ(s.n_frames, d.n_frames);
  EXPECT_EQ(s.blur_slope, d.blur_slope);
  EXPECT_NO_THROW(s.validate());
  EXPECT_THROW(parse_as<SceneSpec>(json::parse(R"({"width":10})"), "scene"), ConfigError);
  EXPECT_THROW(parse_as<SceneSpec>(json::parse(R"({"planes":"oops"})"), "scene"), ConfigError);
}

TEST(Serialization, SegmentAndPeakRoundTrip) {
  Segment s;
  s.start_frame = 3;
  s.end_frame = 9;
  s.start_z = 30;
  s.end_z = 90;
  const Segment b = json(s).get<Segment>();
  EXPECT_EQ(b.start_frame, 3);
  EXPECT_EQ(b.end_z, 90);
  Peak p;
  p.index = 4;
  p.height = 2.5;
  p.prominence = 1.25;
  p.left_base = 2;
  p.right_base = 7;
  const json pj = p;
  EXPECT_EQ(pj.at("width"), p.width());
  const Peak q = pj.get<Peak>();
  EXPECT_EQ(q.index, 4);
  EXPECT_EQ(q.prominence, 1.25);
  EXPECT_EQ(q.right_base, 7);
}

TEST(Serialization, CoverageConfigRoundTripAndDefaults) {
  CoverageConfig c;
  c.grid = {3, 5};
  c.op = FMOperator::LAPV;
  c.method = CoverageMethod::Best3;
  c.blur_ratio = 0.2;
  const json j = c;
  EXPECT_EQ(j.at("grid"), "3x5");
  EXPECT_EQ(json(j.get<CoverageConfig>()), j);
  EXPECT_EQ(json(json::object().get<CoverageConfig>()), json(CoverageConfig{}));
}

TEST(Serialization, ParseGrid) {
  EXPECT_EQ(parse_grid("4x4").rows, 4);
  const SectorGrid g = parse_grid("2X7");
  EXPECT_EQ(g.rows, 2);
  EXPECT_EQ(g.cols, 7);
  for (const char* bad : {"", "4", "x4", "4x", "0x3", "4x4x", "a x b", "-1x2"}) {
    EXPECT_THROW(parse_grid(bad), InvalidArgument) << bad;
  }
}

TEST(Serialization, CoverageResultRoundTrip) {
  SceneSpec s;
  s.seed = 9;
  s.n_frames = 30;
  s.duplicates_per_frame = 1;
  s.max_sigma = 8.0;
  s.planes = {{{0, 0, 80, 120}, 8}, {{80, 0, 80, 120}, 20}};
  const CoverageResult r = full_focus_coverage(render_zstack(generate_scene(s), s), CoverageConfig{});
  const json j = r;
  const CoverageResult back = j.get<CoverageResult>();
  EXPECT_EQ(back.selected, r.selected);
  EXPECT_EQ(back.sector_owner.owner, r.sector_owner.owner);
  EXPECT_EQ(back.sector_owner.grid.rows, r.sector_owner.grid.rows);
  EXPECT_EQ(json(back), j);
  json ragged = j;
  ragged["sector_owner"][0].push_back(1);
  EXPECT_THROW(ragged.get<CoverageResult>(), ConfigError);
}

TEST(Serialization, JsonFiles) {
  TempDir dir;
  const json j = {{"a", 1}, {"b", {1, 2, 3}}};
  write_json_file(dir / "sub" / "x.json", j);
  EXPECT_EQ(read_json_file(dir / "sub" / "x.json"), j);
  EXPECT_THROW(read_json_file(dir / "missing.json"), IoError);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(read_json_file(dir / "bad.json"), ConfigError);
}
