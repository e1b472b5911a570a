// kkl: scenario-driven observer synthesis.
//
//   kkl <synth|certify|invert|simulate|bench> --config <path> [--seed N] [--out DIR]
//       [--override-cert] [--plot]
//
// Exit status: 0 success, 2 certification failure, 1 any other error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "kkl/acceptance.hpp"
#include "kkl/pipeline.hpp"
#include "kkl/util.hpp"

namespace fs = std::filesystem;

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool override_cert = false;
  bool plot = false;
  bool serial = false;
  std::vector<int> criteria;
  std::string against;
};

// Config hash recorded in an artifact, if it carries one.
std::optional<std::uint64_t> recorded_hash(const fs::path& file) {
  const std::string ext = file.extension().string();
  if (ext == ".bin") return kkl::load_table(file.string()).config_hash;
  if (ext == ".json") {
    const kkl::Json j = kkl::read_json(file.string());
    if (!j.contains("config_hash")) return std::nullopt;
    return std::stoull(j["config_hash"].get<std::string>(), nullptr, 16);
  }
  if (ext == ".csv") {
    std::ifstream is(file);
    std::string line;
    std::getline(is, line);
    const auto at = line.find("config_hash=");
    if (line.rfind("#", 0) != 0 || at == std::string::npos) return std::nullopt;
    return std::stoull(line.substr(at + 12), nullptr, 16);
  }
  return std::nullopt;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Regenerates the artifacts found in `against` and compares them byte for byte.
int compare_against(const kkl::Plan& plan, const Args& args, const fs::path& out,
                    kkl::Json& report) {
  const fs::path ref(args.against);
  if (!fs::is_directory(ref)) throw std::runtime_error("no such directory: " + args.against);
  std::vector<std::string> commands;
  for (const char* name : {"table.bin", "injectivity.json", "gain_cert.json", "invert.json",
                           "summary.json"}) {
    const fs::path f = ref / name;
    if (!fs::exists(f)) continue;
    const auto h = recorded_hash(f);
    if (!h || *h != plan.scenario.config_hash) {
      std::cerr << "kkl bench: refusing to compare " << f.string() << ": it was produced by config "
                << (h ? kkl::hex_u64(*h) : std::string("<none>")) << ", this config is "
                << kkl::hex_u64(plan.scenario.config_hash) << '\n';
      return 1;
    }
  }
  if (fs::exists(ref / "injectivity.json")) commands.push_back("synth");
  if (fs::exists(ref / "gain_cert.json") && !fs::exists(ref / "injectivity.json")) {
    commands.push_back("certify");
  }
  if (fs::exists(ref / "invert.json")) commands.push_back("invert");
  if (fs::exists(ref / "summary.json")) commands.push_back("simulate");

  const fs::path fresh = out / "regenerated";
  fs::remove_all(fresh);
  kkl::RunFlags flags;
  flags.override_cert = args.override_cert;
  flags.exec = args.serial ? kkl::kernels::Exec::serial : kkl::kernels::Exec::parallel;
  int differing = 0;
  kkl::Json files = kkl::Json::array();
  for (const auto& cmd : commands) {
    for (const auto& f : kkl::run_command(cmd, plan, fresh.string(), flags)) {
      const fs::path rel = fs::relative(f, fresh);
      const bool same = fs::exists(ref / rel) && slurp(ref / rel) == slurp(f);
      if (!same) ++differing;
      files.push_back({{"file", rel.string()}, {"identical", same}});
    }
  }
  report["comparison"] = {{"against", args.against}, {"files", files}, {"differing", differing}};
  std::printf("%s %zu artifacts regenerated, %d differ\n", differing ? "FAIL" : "PASS",
              files.size(), differing);
  return differing ? 1 : 0;
}

int bench(const kkl::Plan& plan, const Args& args, const fs::path& out) {
  fs::create_directories(out);
  kkl::AcceptanceOptions opt;
  opt.scenario_dir = fs::path(args.config).parent_path().string();
  if (opt.scenario_dir.empty()) opt.scenario_dir = ".";
  opt.work_dir = (out / "acceptance").string();
  opt.exec = args.serial ? kkl::kernels::Exec::serial : kkl::kernels::Exec::parallel;

  kkl::Json report = kkl::provenance(plan.scenario);
  int status = 0;
  if (!args.against.empty()) status = compare_against(plan, args, out, report);
  if (status == 0) {
    report["criteria"] = kkl::Json::array();
    for (const auto& r : kkl::run_acceptance(opt, args.criteria)) {
      std::printf("%s\n", kkl::format_result(r).c_str());
      std::fflush(stdout);
      report["criteria"].push_back(
          {{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
      if (!r.passed) status = 1;
    }
  }
  // Timings are left out so reruns produce the same file.
  kkl::write_json((out / "bench.json").string(), report);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observer synthesis via injective transforms"};
  app.require_subcommand(1, 1);
  Args args;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "Scenario file (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", args.seed, "Override the scenario seed");
    sub->add_option("--out", args.out, "Output directory (default: output.dir of the config)");
    sub->add_flag("--override-cert", args.override_cert,
                  "Simulate even when the gain certificate is not satisfied");
    sub->add_flag("--serial", args.serial, "Use the serial reference kernels");
  };
  std::vector<CLI::App*> subs;
  subs.push_back(app.add_subcommand("synth", "Tabulate T and write the injectivity report"));
  subs.push_back(app.add_subcommand("certify", "Certify the high-gain small-gain condition"));
  subs.push_back(app.add_subcommand("invert", "Invert T at invert.z"));
  auto* sim = app.add_subcommand("simulate", "Simulate plant and observer, write traces");
  subs.push_back(sim);
  auto* bn = app.add_subcommand("bench", "Run the acceptance suite");
  subs.push_back(bn);
  for (auto* s : subs) common(s);
  sim->add_flag("--plot", args.plot, "Also write gnuplot scripts next to the traces");
  bn->add_option("--criteria", args.criteria, "Subset of acceptance criteria (1-9)");
  bn->add_option("--against", args.against,
                 "Regenerate and byte-compare the artifacts in this directory first");

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    kkl::Scenario sc = kkl::load_scenario(args.config);
    if (args.seed) sc.seed = *args.seed;
    const fs::path out = args.out.empty() ? fs::path(sc.output_dir) : fs::path(args.out);
    const kkl::Plan plan = kkl::resolve(sc);
    if (command == "bench") return bench(plan, args, out);

    kkl::RunFlags flags;
    flags.override_cert = args.override_cert;
    flags.plot = args.plot;
    flags.exec = args.serial ? kkl::kernels::Exec::serial : kkl::kernels::Exec::parallel;
    for (const auto& f : kkl::run_command(command, plan, out.string(), flags)) {
      std::printf("wrote %s\n", f.c_str());
    }
    return 0;
  } catch (const kkl::CertificationError& e) {
    std::cerr << "kkl " << command << ": certification failed: " << e.what() << '\n';
    if (e.cert().k_required > 0.0) {
      std::cerr << "  N = " << e.cert().N << ", k* = " << e.cert().k_required << '\n';
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "kkl " << command << ": " << e.what() << '\n';
    return 1;
  }
}
