#include <gtest/gtest.h>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dupin/errors.hpp"
#include "dupin/io.hpp"
#include "dupin/pipeline.hpp"
#include "support.hpp"

using namespace dupin;
using namespace dupin::test;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("dupin_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int count_lines(const std::string& text, const std::string& prefix) {
  std::istringstream is(text);
  std::string line;
  int n = 0;
  while (std::getline(is, line)) n += line.rfind(prefix, 0) == 0;
  return n;
}

std::string doc(const json& steps, const json& seed = {{"name", "circle"}, {"params", json::object()}}) {
  return json{{"schema", kPipelineSchema}, {"seed", seed}, {"steps", steps}}.dump();
}

}  // namespace

TEST(Obj, TorusCounts) {
  const ImmersionSample s = torus(2.0, 1.0, torus_patch(11, 0.05));
  const std::string obj = sample_obj(s);
  EXPECT_EQ(count_lines(obj, "v "), 121);
  EXPECT_EQ(count_lines(obj, "f "), 100);
}

TEST(Obj, MaskedNodesDropFaces) {
  ImmersionSample s = torus(2.0, 1.0, torus_patch(11, 0.05));
  s.pos.set_mask(s.grid.index({5, 5}));
  const std::string obj = sample_obj(s);
  EXPECT_EQ(count_lines(obj, "v "), 121);
  EXPECT_EQ(count_lines(obj, "f "), 96);
}

TEST(Obj, SliceOfThreeManifold) {
  const ImmersionSample h = circle(1.0, box({11}, {0}, {1}), 3);
  const ImmersionSample t = generalized_cylinder(h, {1}, 0, box({5}, {-1}, {1}));
  const ImmersionSample c3 = umb_normal_form('a', {t, box({4}, {0}, {1}), std::nullopt});
  ASSERT_EQ(c3.grid.dims(), 3);
  const std::string obj = sample_obj(c3, {0, 2, {}});
  EXPECT_EQ(count_lines(obj, "v "), 11 * 4);
  EXPECT_EQ(count_lines(sample_csv(c3), "") - 1 - count_lines(sample_csv(c3), "#"), 11 * 5 * 4);
  EXPECT_THROW(sample_obj(c3, {1, 1, {}}), Error);
}

TEST(Ply, Header) {
  const std::string ply = sample_ply(torus(2.0, 1.0, torus_patch(5, 0.05)));
  EXPECT_EQ(ply.rfind("ply\n", 0), 0u);
  EXPECT_NE(ply.find("element vertex 25"), std::string::npos);
  EXPECT_NE(ply.find("element face 16"), std::string::npos);
}

TEST(Json, SampleRoundTrip) {
  ImmersionSample s = torus(2.0, 1.0, torus_patch(7, 0.05));
  s.pos.set_mask(3);
  const std::string a = sample_to_json(s, {"abc", {"T(1,0,0)"}});
  const ImmersionSample b = sample_from_json(a);
  EXPECT_EQ(b.grid, s.grid);
  EXPECT_EQ(b.ambient, 3);
  EXPECT_TRUE(b.masked(3));
  EXPECT_EQ(max_dist(b.pos, s.pos), 0.0);
  ASSERT_TRUE(b.triple.has_value());
  EXPECT_EQ(sample_to_json(b, {"abc", {"T(1,0,0)"}}), a);
  const json j = json::parse(a);
  EXPECT_EQ(j["provenance"]["spec_hash"], "abc");
}

TEST(Json, RejectsWrongSchema) {
  try {
    sample_from_json(R"({"schema": "other/1"})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(Json, ChainRoundTrip) {
  Vec u(3);
  u << 1, 2, 3;
  const std::vector<LTransform> c = {LTransform::translate(u), LTransform::homothety(-2), LTransform::inversion(),
                                     LTransform::parallel({0.1, 0.2}), LTransform::orthogonal(Mat::Identity(3, 3))};
  EXPECT_EQ(chain_json(chain_from_json(chain_json(c))), chain_json(c));
}

TEST(Pipeline, UnknownKeyRejected) {
  json j = json::parse(doc(json::array()));
  j["colour"] = "blue";
  try {
    parse_pipeline(j.dump());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  EXPECT_THROW(parse_pipeline(doc({{{"op", "verify"}, {"bogus", 1}}})), Error);
  EXPECT_THROW(parse_pipeline(doc({{{"op", "frobnicate"}}})), Error);
}

TEST(Pipeline, HashIsStable) {
  const PipelineSpec a = parse_pipeline(doc(json::array()));
  const PipelineSpec b = parse_pipeline(doc(json::array()));
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_EQ(a.hash.size(), 64u);
  EXPECT_NE(a.hash, parse_pipeline(doc({{{"op", "verify"}}})).hash);
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Pipeline, EmptyStepsWritesSeedOnly) {
  const fs::path d = scratch_dir("empty");
  RunOptions o;
  o.out_dir = d.string();
  const PipelineResult r = run_pipeline(parse_pipeline(doc(json::array())), o);
  EXPECT_EQ(r.status, 0);
  ASSERT_EQ(r.artifacts.size(), 1u);
  EXPECT_TRUE(fs::exists(d / "seed.json"));
}

TEST(Pipeline, BrokenTripleFailsAtValidation) {
  const fs::path d = scratch_dir("broken");
  RunOptions o;
  o.out_dir = d.string();
  const json seed = {{"name", "torus"}, {"params", {{"perturb", 1e-3}}}};
  try {
    run_pipeline(parse_pipeline(doc({{{"op", "validate_triple"}}}, seed)), o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StepFailure);
    EXPECT_NE(std::string(e.what()).find("validate_triple"), std::string::npos);
  }
}

TEST(Pipeline, CookbookCircleTube) {
  const fs::path d = scratch_dir("cookbook");
  RunOptions o;
  o.out_dir = d.string();
  const PipelineResult r =
      run_pipeline(parse_pipeline(read_text(std::string(DUPIN_COOKBOOK_DIR) + "/circle_tube_verify.json")), o);
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(fs::exists(d / "torus.obj"));
  EXPECT_TRUE(fs::exists(d / "torus_verify.json"));
  EXPECT_GT(count_lines(read_text((d / "torus.obj").string()), "f "), 0);
}

TEST(Pipeline, DeterministicOutputs) {
  const std::string spec =
      doc({{{"op", "tube"}, {"subbundle", {0, 1}}, {"radius", 0.3}}, {{"op", "export"}, {"format", "csv"}, {"path", "t.csv"}}});
  std::string texts[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path d = scratch_dir("det" + std::to_string(k));
    RunOptions o;
    o.out_dir = d.string();
    run_pipeline(parse_pipeline(spec), o);
    texts[k] = read_text((d / "t.csv").string());
  }
  EXPECT_EQ(texts[0], texts[1]);
  EXPECT_NE(texts[0].find(parse_pipeline(spec).hash), std::string::npos);
}

TEST(Pipeline, VerifyGateSetsStatus) {
  const fs::path d = scratch_dir("gate");
  RunOptions o;
  o.out_dir = d.string();
  const json seed = {{"name", "torus"}, {"params", json::object()}};
  const PipelineResult r = run_pipeline(parse_pipeline(doc({{{"op", "verify"}, {"expect_k", 3}}}, seed)), o);
  EXPECT_EQ(r.status, 1);
}
