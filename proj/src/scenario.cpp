#include "kkl/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "kkl/util.hpp"

namespace kkl {

namespace {

std::string located(const std::string& source, int line, const std::string& what) {
  if (line <= 0) return source + ": " + what;
  return source + ":" + std::to_string(line) + ": " + what;
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    const int line = node.Mark().is_null() ? 0 : node.Mark().line + 1;
    throw ScenarioError(source_, line, what);
  }

  void expect_map(const YAML::Node& node, const std::string& path,
                  const std::set<std::string>& allowed) const {
    if (!node.IsMap()) fail(node, "'" + path + "' must be a mapping");
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + path + "." + key + "'");
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, "'" + path + "' must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + path + "' has the wrong type");
    }
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& path) const {
    if (!node.IsSequence()) fail(node, "'" + path + "' must be a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) {
      out.push_back(scalar<double>(node[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  State vector(const YAML::Node& node, const std::string& path) const {
    const auto v = numbers(node, path);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  std::vector<Complex> complex_list(const YAML::Node& node, const std::string& path) const {
    if (!node.IsSequence() || node.size() == 0) fail(node, "'" + path + "' must be a list");
    std::vector<Complex> out;
    for (std::size_t i = 0; i < node.size(); ++i) {
      const std::string item = path + "[" + std::to_string(i) + "]";
      const YAML::Node& e = node[i];
      if (e.IsScalar()) {
        out.emplace_back(scalar<double>(e, item), 0.0);
      } else {
        const auto v = numbers(e, item);
        if (v.size() != 2) fail(e, "'" + item + "' must be a number or [re, im]");
        out.emplace_back(v[0], v[1]);
      }
    }
    return out;
  }

 private:
  std::string source_;
};

}  // namespace

ScenarioError::ScenarioError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(located(source, line, what)), line_(line) {}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(source, e.mark.line + 1, e.msg);
  }
  const Reader r(source);
  Scenario sc;
  sc.config_hash = fnv1a64(text);

  r.expect_map(root, "config",
               {"schema", "name", "seed", "model", "domain", "design", "grid", "tolerances",
                "simulation", "invert", "output"});
  if (!root["schema"]) throw ScenarioError(source, 0, "missing 'schema'");
  const int schema = r.scalar<int>(root["schema"], "schema");
  if (schema != kScenarioSchema) {
    r.fail(root["schema"], "unsupported schema " + std::to_string(schema) + " (expected " +
                               std::to_string(kScenarioSchema) + ")");
  }
  if (root["name"]) sc.name = r.scalar<std::string>(root["name"], "name");
  if (root["seed"]) sc.seed = r.scalar<std::uint64_t>(root["seed"], "seed");

  const YAML::Node model = root["model"];
  if (!model) throw ScenarioError(source, 0, "missing 'model'");
  r.expect_map(model, "model", {"name", "params"});
  if (!model["name"]) r.fail(model, "missing 'model.name'");
  sc.model_name = r.scalar<std::string>(model["name"], "model.name");
  if (const YAML::Node params = model["params"]) {
    if (!params.IsMap()) r.fail(params, "'model.params' must be a mapping");
    for (const auto& kv : params) {
      const std::string key = kv.first.as<std::string>();
      sc.model_params[key] = r.scalar<double>(kv.second, "model.params." + key);
    }
  }
  SystemModel plant;
  try {
    plant = benchmark(sc.model_name, sc.model_params);
  } catch (const std::invalid_argument& e) {
    r.fail(model, e.what());
  }

  const YAML::Node dom = root["domain"];
  if (!dom) throw ScenarioError(source, 0, "missing 'domain'");
  r.expect_map(dom, "domain", {"box", "ball", "margins"});
  std::optional<Margins> margins;
  if (const YAML::Node mg = dom["margins"]) {
    r.expect_map(mg, "domain.margins", {"upsilon", "d", "u"});
    if (!mg["upsilon"] || !mg["d"] || !mg["u"]) {
      r.fail(mg, "'domain.margins' needs upsilon, d and u");
    }
    margins = Margins{r.scalar<double>(mg["upsilon"], "domain.margins.upsilon"),
                      r.scalar<double>(mg["d"], "domain.margins.d"),
                      r.scalar<double>(mg["u"], "domain.margins.u")};
  }
  try {
    if (dom["box"] && !dom["ball"]) {
      const YAML::Node b = dom["box"];
      r.expect_map(b, "domain.box", {"lower", "upper"});
      if (!b["lower"] || !b["upper"]) r.fail(b, "'domain.box' needs lower and upper");
      sc.domain = DomainSpec::box(r.vector(b["lower"], "domain.box.lower"),
                                  r.vector(b["upper"], "domain.box.upper"), margins);
    } else if (dom["ball"] && !dom["box"]) {
      const YAML::Node b = dom["ball"];
      r.expect_map(b, "domain.ball", {"center", "radius"});
      if (!b["center"] || !b["radius"]) r.fail(b, "'domain.ball' needs center and radius");
      sc.domain = DomainSpec::ball(r.vector(b["center"], "domain.ball.center"),
                                   r.scalar<double>(b["radius"], "domain.ball.radius"), margins);
    } else {
      r.fail(dom, "'domain' needs exactly one of box or ball");
    }
  } catch (const std::invalid_argument& e) {
    r.fail(dom, e.what());
  }
  if (sc.domain.dim() != plant.state_dim) {
    r.fail(dom, "domain dimension " + std::to_string(sc.domain.dim()) +
                    " does not match the model state dimension " +
                    std::to_string(plant.state_dim));
  }

  if (const YAML::Node d = root["design"]) {
    r.expect_map(d, "design",
                 {"mode", "ell", "eigenvalues", "conjugate_closed", "b", "m", "k_ladder",
                  "k_factor"});
    if (d["mode"]) {
      sc.mode = r.scalar<std::string>(d["mode"], "design.mode");
      if (sc.mode != "exact" && sc.mode != "highgain" && sc.mode != "rescaled") {
        r.fail(d["mode"], "design.mode must be exact, highgain or rescaled");
      }
    }
    if (d["ell"]) {
      sc.decay_bound = r.scalar<double>(d["ell"], "design.ell");
      if (!(sc.decay_bound < 0.0)) r.fail(d["ell"], "design.ell must be negative");
    }
    if (d["eigenvalues"]) sc.eigenvalues = r.complex_list(d["eigenvalues"], "design.eigenvalues");
    if (d["conjugate_closed"]) {
      sc.conjugate_closed = r.scalar<bool>(d["conjugate_closed"], "design.conjugate_closed");
    }
    if (d["b"]) {
      sc.output_map = r.scalar<std::string>(d["b"], "design.b");
      if (sc.output_map != "identity" && sc.output_map != "odd_cubic") {
        r.fail(d["b"], "design.b must be identity or odd_cubic");
      }
    }
    if (d["m"]) {
      sc.m = r.scalar<int>(d["m"], "design.m");
      if (*sc.m < 1) r.fail(d["m"], "design.m must be positive");
      if (sc.eigenvalues && static_cast<int>(sc.eigenvalues->size()) != *sc.m) {
        r.fail(d["m"], "design.m disagrees with the number of eigenvalues");
      }
    }
    if (d["k_ladder"]) {
      sc.k_ladder = r.numbers(d["k_ladder"], "design.k_ladder");
      for (double k : sc.k_ladder) {
        if (!(k > 0.0)) r.fail(d["k_ladder"], "design.k_ladder entries must be positive");
      }
    }
    if (d["k_factor"]) {
      sc.k_factor = r.scalar<double>(d["k_factor"], "design.k_factor");
      if (!(*sc.k_factor >= 1.0)) r.fail(d["k_factor"], "design.k_factor must be >= 1");
    }
  }
  if (sc.mode == "highgain" && !sc.m) sc.m = sc.eigenvalues ? static_cast<int>(sc.eigenvalues->size())
                                                            : plant.state_dim;

  if (const YAML::Node g = root["grid"]) {
    r.expect_map(g, "grid", {"nodes_per_axis", "max_pairs"});
    if (g["nodes_per_axis"]) {
      sc.nodes_per_axis = r.scalar<int>(g["nodes_per_axis"], "grid.nodes_per_axis");
      if (sc.nodes_per_axis < 2) r.fail(g["nodes_per_axis"], "grid.nodes_per_axis must be >= 2");
    }
    if (g["max_pairs"]) sc.max_pairs = r.scalar<std::size_t>(g["max_pairs"], "grid.max_pairs");
  }

  if (const YAML::Node t = root["tolerances"]) {
    r.expect_map(t, "tolerances", {"quad", "integrator", "inversion", "horizon"});
    auto positive = [&](const char* key, double& into) {
      if (!t[key]) return;
      into = r.scalar<double>(t[key], std::string("tolerances.") + key);
      if (!(into > 0.0)) r.fail(t[key], std::string("tolerances.") + key + " must be positive");
    };
    positive("quad", sc.quad_tol);
    positive("integrator", sc.integrator_tol);
    positive("inversion", sc.inversion_tol);
    if (t["horizon"] && !(t["horizon"].IsScalar() && t["horizon"].Scalar() == "auto")) {
      sc.horizon = r.scalar<double>(t["horizon"], "tolerances.horizon");
      if (!(*sc.horizon > 0.0)) r.fail(t["horizon"], "tolerances.horizon must be positive");
    }
  }

  if (const YAML::Node s = root["simulation"]) {
    r.expect_map(s, "simulation",
                 {"x0", "random_initial", "t_end", "sample_stride", "escape_norm",
                  "estimate_state", "per_step_lyapunov", "gamma"});
    if (const YAML::Node x0 = s["x0"]) {
      if (!x0.IsSequence()) r.fail(x0, "'simulation.x0' must be a list of states");
      for (std::size_t i = 0; i < x0.size(); ++i) {
        State x = r.vector(x0[i], "simulation.x0[" + std::to_string(i) + "]");
        if (x.size() != plant.state_dim) r.fail(x0[i], "initial state has the wrong dimension");
        sc.x0.push_back(std::move(x));
      }
    }
    if (s["random_initial"]) {
      sc.random_initial = r.scalar<int>(s["random_initial"], "simulation.random_initial");
      if (sc.random_initial < 0) r.fail(s["random_initial"], "must be non-negative");
    }
    if (s["t_end"]) sc.t_end = r.scalar<double>(s["t_end"], "simulation.t_end");
    if (s["sample_stride"]) {
      sc.sample_stride = r.scalar<double>(s["sample_stride"], "simulation.sample_stride");
      if (!(sc.sample_stride > 0.0)) r.fail(s["sample_stride"], "sample_stride must be positive");
    }
    if (s["escape_norm"]) sc.escape_norm = r.scalar<double>(s["escape_norm"], "simulation.escape_norm");
    if (s["estimate_state"]) {
      sc.estimate_state = r.scalar<bool>(s["estimate_state"], "simulation.estimate_state");
    }
    if (s["per_step_lyapunov"]) {
      sc.per_step_lyapunov = r.scalar<bool>(s["per_step_lyapunov"], "simulation.per_step_lyapunov");
    }
    if (s["gamma"]) sc.gamma = r.numbers(s["gamma"], "simulation.gamma");
  }
  if (sc.mode == "rescaled" && !sc.gamma) {
    throw ScenarioError(source, 0, "mode rescaled needs simulation.gamma");
  }

  if (const YAML::Node inv = root["invert"]) {
    r.expect_map(inv, "invert", {"z"});
    if (inv["z"]) {
      const auto entries = r.complex_list(inv["z"], "invert.z");
      const int p = plant.output_dim;
      if (entries.size() % static_cast<std::size_t>(p) != 0) {
        r.fail(inv["z"], "invert.z must hold m·p entries (row-major)");
      }
      const auto rows = static_cast<Eigen::Index>(entries.size() / p);
      ComplexMatrix z(rows, p);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) z(i, j) = entries[i * p + j];
      }
      sc.invert_z = z;
    }
  }

  if (const YAML::Node o = root["output"]) {
    r.expect_map(o, "output", {"dir"});
    if (o["dir"]) sc.output_dir = r.scalar<std::string>(o["dir"], "output.dir");
  }
  if (sc.name.empty()) sc.name = sc.model_name;
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ScenarioError(path, 0, "cannot open config file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str(), path);
}

}  // namespace kkl
