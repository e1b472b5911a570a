#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "kkl/pipeline.hpp"
#include "kkl/util.hpp"

namespace fs = std::filesystem;

namespace kkl {
namespace {

const char* kConfig = R"(schema: 1
name: pipe
seed: 3
model:
  name: harmonic
domain:
  box: {lower: [-1, -1], upper: [1, 1]}
  margins: {upsilon: 0.2, d: 0.5, u: 1.0}
design:
  mode: exact
  eigenvalues: [-1, -2, [-1, 1], [-1, -1]]
grid:
  nodes_per_axis: 7
simulation:
  x0: [[0.3, -0.2]]
  t_end: 1
  sample_stride: 0.1
invert:
  z: [[-0.5, 0], [-0.2, 0], [-0.2, -0.1], [-0.2, 0.1]]
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kkl_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

TEST(Pipeline, ResolveDefaults) {
  Scenario sc = parse_scenario(kConfig);
  sc.eigenvalues.reset();
  const Plan plan = resolve(sc);
  EXPECT_EQ(plan.design.m(), 3);  // n + 1
  for (Eigen::Index i = 0; i < plan.design.eigenvalues.size(); ++i) {
    EXPECT_LE(plan.design.eigenvalues[i].real(), -1.0);
  }
  EXPECT_GT(plan.horizon, 0.0);
  EXPECT_EQ(initial_conditions(plan).size(), 1u);
}

TEST(Pipeline, InvertReusesTheSynthTable) {
  Plan plan = resolve(parse_scenario(kConfig));
  const State x{{0.3, -0.4}};
  plan.scenario.invert_z = exact_transform(plan)(x);
  const fs::path dir = scratch("reuse");
  const auto synth = run_command("synth", plan, dir.string(), {});
  ASSERT_EQ(synth.size(), 2u);
  const auto before = fs::last_write_time(dir / "table.bin");
  const auto inv = run_command("invert", plan, dir.string(), {});
  ASSERT_EQ(inv.size(), 1u);
  EXPECT_EQ(fs::last_write_time(dir / "table.bin"), before);

  const Json j = read_json(inv.front());
  EXPECT_EQ(j["config_hash"], hex_u64(plan.scenario.config_hash));
  EXPECT_NEAR(j["x_hat"][0].get<double>(), 0.3, 1e-6);
  EXPECT_NEAR(j["x_hat"][1].get<double>(), -0.4, 1e-6);
  fs::remove_all(dir);
}

TEST(Pipeline, ForeignTableIsRefused) {
  const Plan plan = resolve(parse_scenario(kConfig));
  const fs::path dir = scratch("foreign");
  run_command("synth", plan, dir.string(), {});
  std::string other_text = kConfig;
  other_text.replace(other_text.find("seed: 3"), 7, "seed: 4");
  const Plan other = resolve(parse_scenario(other_text));
  EXPECT_THROW(run_command("invert", other, dir.string(), {}), FingerprintMismatch);
  fs::remove_all(dir);
}

TEST(Pipeline, SerialAndParallelArtifactsMatch) {
  const Plan plan = resolve(parse_scenario(kConfig));
  const fs::path a = scratch("serial"), b = scratch("parallel");
  RunFlags serial;
  serial.exec = kernels::Exec::serial;
  run_command("simulate", plan, a.string(), serial);
  run_command("simulate", plan, b.string(), {});
  for (const char* f : {"table.bin", "trace_0.csv", "summary.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KKL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  const std::string data = KKL_TEST_DATA;
  EXPECT_EQ(run_cli("certify --config " + data + "/uncertifiable.yaml --out " + dir.string()), 2);
  EXPECT_TRUE(fs::exists(dir / "gain_cert.json"));
  const Json cert = read_json((dir / "gain_cert.json").string());
  EXPECT_FALSE(cert["satisfied"].get<bool>());
  EXPECT_EQ(run_cli("simulate --config " + data + "/uncertifiable.yaml --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("synth --config " + data + "/bad_key.yaml --out " + dir.string()), 1);
  EXPECT_NE(run_cli("synth --config " + data + "/missing.yaml"), 0);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace kkl
