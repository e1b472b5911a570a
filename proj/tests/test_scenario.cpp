#include <gtest/gtest.h>

#include "kkl/scenario.hpp"

namespace kkl {
namespace {

const char* kHarmonic = R"(schema: 1
name: h
seed: 7
model:
  name: harmonic
domain:
  box: {lower: [-1, -1], upper: [1, 1]}
  margins: {upsilon: 0.2, d: 0.5, u: 1.0}
design:
  mode: exact
  eigenvalues: [-1, [-1, 1], [-1, -1]]
grid:
  nodes_per_axis: 9
tolerances:
  quad: 1.0e-10
  horizon: auto
simulation:
  x0: [[0.5, 0.1]]
  t_end: 3
invert:
  z: [[-0.5, 0], [-0.2, 0.1], [-0.2, -0.1]]
output:
  dir: out/h
)";

TEST(Scenario, ParsesAFullConfig) {
  const Scenario s = parse_scenario(kHarmonic);
  EXPECT_EQ(s.name, "h");
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.model_name, "harmonic");
  EXPECT_EQ(s.domain.dim(), 2);
  EXPECT_DOUBLE_EQ(s.domain.margins().d, 0.5);
  ASSERT_TRUE(s.eigenvalues.has_value());
  ASSERT_EQ(s.eigenvalues->size(), 3u);
  EXPECT_EQ((*s.eigenvalues)[1], Complex(-1, 1));
  EXPECT_EQ(s.nodes_per_axis, 9);
  EXPECT_DOUBLE_EQ(s.quad_tol, 1e-10);
  EXPECT_FALSE(s.horizon.has_value());
  ASSERT_EQ(s.x0.size(), 1u);
  EXPECT_DOUBLE_EQ(s.x0[0][1], 0.1);
  ASSERT_TRUE(s.invert_z.has_value());
  EXPECT_EQ(s.invert_z->rows(), 3);
  EXPECT_EQ((*s.invert_z)(2, 0), Complex(-0.2, -0.1));
  EXPECT_EQ(s.output_dir, "out/h");
}

TEST(Scenario, HashFollowsTheText) {
  const std::string a = kHarmonic;
  std::string b = a;
  b.replace(b.find("seed: 7"), 7, "seed: 8");
  EXPECT_EQ(parse_scenario(a).config_hash, parse_scenario(a).config_hash);
  EXPECT_NE(parse_scenario(a).config_hash, parse_scenario(b).config_hash);
}

int error_line(const std::string& text) {
  try {
    parse_scenario(text, "t.yaml");
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("t.yaml:"), std::string::npos) << e.what();
    return e.line();
  }
  ADD_FAILURE() << "no ScenarioError";
  return -1;
}

TEST(Scenario, UnknownKeyReportsItsLine) {
  std::string t = kHarmonic;
  t.replace(t.find("  t_end: 3"), 10, "  t_end: 3\n  tend: 4");
  EXPECT_EQ(error_line(t), 20);
}

TEST(Scenario, Rejections) {
  std::string wrong_schema = kHarmonic;
  wrong_schema.replace(0, 9, "schema: 2");
  EXPECT_GT(error_line(wrong_schema), 0);

  std::string wrong_dim = kHarmonic;
  wrong_dim.replace(wrong_dim.find("[[0.5, 0.1]]"), 12, "[[0.5, 0.1, 0.2]]");
  EXPECT_GE(error_line(wrong_dim), 0);

  std::string rescaled_without_gamma = kHarmonic;
  rescaled_without_gamma.replace(rescaled_without_gamma.find("mode: exact"), 11, "mode: rescaled");
  EXPECT_GE(error_line(rescaled_without_gamma), 0);

  std::string few_nodes = kHarmonic;
  few_nodes.replace(few_nodes.find("nodes_per_axis: 9"), 17, "nodes_per_axis: 1");
  EXPECT_GE(error_line(few_nodes), 0);

  EXPECT_GE(error_line("schema: 1\nname: [unclosed\n"), 0);
}

TEST(Scenario, MissingFile) {
  EXPECT_THROW(load_scenario("/nonexistent/x.yaml"), ScenarioError);
}

}  // namespace
}  // namespace kkl
