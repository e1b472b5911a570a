#include "kkl/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "kkl/util.hpp"

namespace kkl {

Plan resolve(const Scenario& sc) {
  Plan plan;
  plan.scenario = sc;
  plan.mode = parse_mode(sc.mode);
  plan.plant = benchmark(sc.model_name, sc.model_params);
  const int n = plan.plant.state_dim;

  plan.design.b = output_map(sc.output_map);
  plan.design.decay_bound = sc.decay_bound;
  if (sc.eigenvalues) {
    plan.design.eigenvalues = to_vector(*sc.eigenvalues);
  } else {
    const int m = sc.m ? *sc.m : (plan.mode == Mode::highgain ? n : n + 1);
    plan.design.eigenvalues =
        to_vector(sample_eigenvalues(m - 1, sc.decay_bound, sc.seed, sc.conjugate_closed));
  }
  require_hurwitz(plan.design.eigenvalues);

  SystemModel design_model = plan.plant;
  if (plan.mode == Mode::rescaled) {
    plan.gamma = polynomial_rescaling(*sc.gamma);
    design_model = rescale(plan.plant, *plan.gamma);
  }
  plan.sys = SaturatedSystem{design_model, sc.domain};
  plan.grid = GridSpec::uniform(sc.domain, sc.nodes_per_axis);
  if (plan.mode != Mode::highgain) {
    plan.horizon = sc.horizon ? *sc.horizon
                              : select_horizon(plan.design, amplitude_bound(plan.sys, plan.design),
                                               sc.quad_tol);
  }
  return plan;
}

std::vector<State> initial_conditions(const Plan& plan) {
  std::vector<State> out = plan.scenario.x0;
  const DomainSpec& dom = plan.scenario.domain;
  std::mt19937_64 rng(plan.scenario.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < plan.scenario.random_initial; ++i) {
    State x(dom.dim());
    do {
      for (int a = 0; a < dom.dim(); ++a) {
        x[a] = dom.lower()[a] + (dom.upper()[a] - dom.lower()[a]) * unit(rng);
      }
    } while (dom.distance(x) > 0.0);
    out.push_back(x);
  }
  return out;
}

namespace {

std::vector<Eigen::Index> domain_node_indices(const Plan& plan) {
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < plan.grid.size(); ++i) {
    if (plan.scenario.domain.distance(plan.grid.node(i)) <= 1e-12) {
      keep.push_back(static_cast<Eigen::Index>(i));
    }
  }
  return keep;
}

Eigen::MatrixXd domain_nodes(const Plan& plan) {
  const std::vector<Eigen::Index> keep = domain_node_indices(plan);
  Eigen::MatrixXd pts(plan.plant.state_dim, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    pts.col(static_cast<Eigen::Index>(i)) = plan.grid.node(static_cast<std::size_t>(keep[i]));
  }
  return pts;
}

}  // namespace

GainCert certify(const Plan& plan, kernels::Exec exec) {
  if (plan.mode != Mode::highgain) {
    throw std::invalid_argument("certify applies to highgain scenarios only");
  }
  const Scenario& sc = plan.scenario;
  GainCert cert = certify_gain(plan.plant, sc.domain, plan.design.eigenvalues, plan.design.b,
                               plan.design.m(), plan.grid,
                               sc.k_ladder.empty() ? default_k_ladder() : sc.k_ladder, exec,
                               sc.seed, sc.max_pairs);
  if (sc.k_factor) evaluate_gain(cert, *sc.k_factor * cert.k_required);
  return cert;
}

std::uint64_t highgain_fingerprint(const Plan& plan, double k) {
  const std::string text = "highgain;model=" + plan.plant.label +
                           ";domain=" + plan.scenario.domain.canonical() +
                           ";lambda=" + plan.design.canonical_eigenvalues() +
                           ";b=" + plan.design.b.label + ";k=" + hex_double(k);
  return fnv1a64(text);
}

Synthesis synthesize(const Plan& plan, kernels::Exec exec) {
  const Scenario& sc = plan.scenario;
  Synthesis out;
  if (plan.mode == Mode::highgain) {
    out.cert = certify(plan, exec);
    const double k = out.cert->k;
    out.approx = high_gain_transform(plan.plant, plan.design.eigenvalues, k, plan.design.b,
                                     plan.design.m());
    TransformTable& t = out.table;
    t.grid = plan.grid;
    t.n = plan.plant.state_dim;
    t.m = plan.design.m();
    t.p = plan.plant.output_dim;
    t.eigenvalues = out.approx->filter_eigenvalues;
    t.fingerprint = highgain_fingerprint(plan, k);
    t.values.assign(plan.grid.size(), ComplexMatrix());
    const TransformFn& Ta = out.approx->transform;
    kernels::map_indices(exec, plan.grid.size(),
                         [&](std::size_t i) { t.values[i] = Ta(plan.grid.node(i)); });
  } else {
    out.table = tabulate(plan.sys, plan.design, plan.grid, plan.horizon, sc.quad_tol, exec);
  }
  out.table.config_hash = sc.config_hash;
  out.table.seed = sc.seed;

  // Pairs with a node outside cl(O) say nothing about injectivity on O.
  const std::vector<Eigen::Index> keep = domain_node_indices(plan);
  const Eigen::MatrixXd values = out.table.value_matrix();
  Eigen::MatrixXd imgs(values.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    imgs.col(static_cast<Eigen::Index>(i)) = values.col(keep[i]);
  }
  out.injectivity = injectivity_modulus(domain_nodes(plan), imgs, sc.seed, exec, sc.max_pairs);
  return out;
}

TransformFn exact_transform(const Plan& plan) {
  const SaturatedSystem sys = plan.sys;
  const ObserverDesign design = plan.design;
  const double horizon = plan.horizon, tol = plan.scenario.quad_tol;
  return [sys, design, horizon, tol](const State& x) {
    return eval_T(sys, design, x, horizon, tol);
  };
}

std::shared_ptr<const Inverter> make_inverter(const Plan& plan, const Synthesis& synth) {
  InversionOptions opt;
  opt.tol = plan.scenario.inversion_tol;
  if (plan.mode == Mode::highgain) {
    return std::make_shared<const Inverter>(plan.grid.nodes(), synth.table.value_matrix(),
                                            synth.approx->transform, plan.scenario.domain,
                                            synth.table.m, synth.table.p, opt);
  }
  return std::make_shared<const Inverter>(
      Inverter::from_table(synth.table, plan.sys, plan.design, opt));
}

SimulationSetup make_setup(const Plan& plan, const Synthesis& synth) {
  auto inverter = make_inverter(plan, synth);
  switch (plan.mode) {
    case Mode::exact:
      return SimulationSetup::exact(plan.plant, plan.scenario.domain, plan.design,
                                    exact_transform(plan), inverter);
    case Mode::rescaled:
      return SimulationSetup::rescaled(plan.plant, plan.scenario.domain, plan.design,
                                       *plan.gamma, exact_transform(plan), inverter);
    case Mode::highgain:
    case Mode::approx:
      return SimulationSetup::approximate(plan.mode, plan.plant, plan.scenario.domain,
                                          plan.design.b, *synth.approx, inverter, synth.cert);
  }
  throw std::logic_error("unhandled mode");
}

SimOptions sim_options(const Plan& plan, bool override_cert) {
  const Scenario& sc = plan.scenario;
  SimOptions opt;
  opt.t_end = sc.t_end;
  opt.tol = sc.integrator_tol;
  opt.sample_stride = sc.sample_stride;
  opt.escape_norm = sc.escape_norm;
  opt.override_cert = override_cert;
  opt.estimate_state = sc.estimate_state;
  opt.per_step_lyapunov = sc.per_step_lyapunov;
  return opt;
}

namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

Json complex_json(const ComplexVector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
  return a;
}

// Row-major list of [re, im].
Json matrix_json(const ComplexMatrix& z) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      a.push_back({finite_or_null(z(i, j).real()), finite_or_null(z(i, j).imag())});
    }
  }
  return a;
}

Json design_json(const Plan& plan) {
  Json d;
  d["model"] = plan.plant.label;
  d["domain"] = plan.scenario.domain.canonical();
  d["mode"] = to_string(plan.mode);
  d["eigenvalues"] = complex_json(plan.design.eigenvalues);
  d["b"] = plan.design.b.label;
  return d;
}

}  // namespace

Json provenance(const Scenario& sc) {
  Json p;
  p["scenario"] = sc.name;
  p["config_hash"] = hex_u64(sc.config_hash);
  p["seed"] = sc.seed;
  return p;
}

Json injectivity_json(const Plan& plan, const Synthesis& synth) {
  const InjectivityReport& r = synth.injectivity;
  Json j = provenance(plan.scenario);
  j["design"] = design_json(plan);
  j["table_fingerprint"] = hex_u64(synth.table.fingerprint);
  j["horizon"] = synth.table.horizon;
  j["grid_nodes"] = synth.table.grid.size();
  j["modulus"] = r.modulus;
  j["injective_on_grid"] = r.modulus > 0.0 && r.collisions == 0;
  j["pair_count"] = r.pair_count;
  j["subsampled"] = r.subsampled;
  j["collisions"] = r.collisions;
  if (r.worst_first >= 0 && r.worst_second >= 0) {
    const Eigen::MatrixXd pts = domain_nodes(plan);
    j["worst_pair"] = {vec_json(pts.col(r.worst_first)), vec_json(pts.col(r.worst_second))};
  } else {
    j["worst_pair"] = nullptr;
  }
  j["rho"] = {{"valid", r.rho.valid}, {"knots", r.rho.knots}, {"values", r.rho.values}};
  return j;
}

Json cert_json(const Plan& plan, const GainCert& c) {
  Json j = provenance(plan.scenario);
  j["design"] = design_json(plan);
  j["m"] = c.m;
  j["L_empirical"] = c.L_empirical;
  j["L_analytic"] = c.L_analytic ? Json(*c.L_analytic) : Json(nullptr);
  j["L"] = c.L;
  j["N"] = c.N;
  j["N_empirical"] = c.N_empirical;
  j["B_norm"] = c.B_norm;
  j["S_inv_norm"] = c.S_inv_norm;
  j["min_abs_eigenvalue_pow_m"] = c.min_abs_eig_pow_m;
  j["k_required"] = c.k_required;
  j["k"] = c.k;
  j["filter_eigenvalues"] = complex_json(ComplexVector(c.k * c.eigenvalues));
  j["lambda_max_P"] = c.lambda_max;
  j["lambda_min_P"] = c.lambda_min;
  j["epsilon"] = c.epsilon;
  j["satisfied"] = c.satisfied;
  j["pair_count"] = c.pair_count;
  return j;
}

Json inverse_json(const Plan& plan, const InverseQuery& q) {
  Json j = provenance(plan.scenario);
  j["design"] = design_json(plan);
  j["z"] = matrix_json(q.z);
  j["x_hat"] = vec_json(q.x_hat);
  j["residual"] = q.residual;
  j["seed_residual"] = q.seed_residual;
  j["seed_node"] = q.seed_node;
  j["iterations"] = q.iterations;
  return j;
}

Json trace_summary_json(const SimTrace& tr, const State& x0) {
  Json j;
  j["x0"] = vec_json(x0);
  j["mode"] = to_string(tr.mode);
  j["stop_reason"] = tr.stop_reason;
  j["escaped"] = tr.escaped;
  j["escape_time"] = finite_or_null(tr.escape_time);
  j["final_time"] = tr.t.empty() ? Json(nullptr) : Json(tr.t.back());
  j["samples"] = tr.t.size();
  j["stayed_in_domain"] = tr.stayed_in_domain;
  j["observer_finite"] = tr.observer_finite;
  j["gamma_integral"] = tr.gamma_integral.empty() ? Json(nullptr) : Json(tr.gamma_integral.back());
  j["min_gamma"] = finite_or_null(tr.min_gamma);
  j["final_err_state"] = tr.err_state.empty() ? Json(nullptr) : finite_or_null(tr.err_state.back());
  j["final_err_transform"] =
      tr.err_transform.empty() ? Json(nullptr) : finite_or_null(tr.err_transform.back());
  if (!tr.err_transform.empty() && tr.t.size() >= 4) {
    const double t_end = tr.t.back();
    try {
      j["rate_second_half"] = estimate_rate(tr, 0.5 * t_end, t_end);
    } catch (const std::domain_error&) {
      j["rate_second_half"] = nullptr;  // error hit the floor
    }
    const LyapunovVerdict v = lyapunov_trace(tr, tr.filter_eigenvalues, 1e-9);
    j["lyapunov_monotone"] = v.monotone;
  }
  if (!tr.step_U.empty()) {
    j["lyapunov_monotone_per_step"] = lyapunov_series(tr.step_U, 1e-9).monotone;
  }
  j["warnings"] = tr.warnings;
  return j;
}

void write_json(const std::string& path, const Json& json) {
  std::ofstream os(path, std::ios::trunc | std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << json.dump(2) << '\n';
  if (!os) throw std::runtime_error("error while writing '" + path + "'");
}

Json read_json(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return Json::parse(is);
}

namespace {

namespace fs = std::filesystem;

std::string artifact(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string csv_comment(const Scenario& sc) {
  return "scenario=" + sc.name + " config_hash=" + hex_u64(sc.config_hash) +
         " seed=" + std::to_string(sc.seed);
}

// Reuses table.bin from an earlier synth when it matches this config,
// otherwise synthesizes and stores it.
Synthesis obtain_synthesis(const Plan& plan, const std::string& out_dir, const RunFlags& flags,
                           std::vector<std::string>& written) {
  if (plan.mode == Mode::highgain) return synthesize(plan, flags.exec);
  const std::string path = artifact(out_dir, "table.bin");
  if (fs::exists(path)) {
    Synthesis s;
    s.table = load_table(path);
    if (s.table.config_hash != plan.scenario.config_hash) {
      throw FingerprintMismatch(path + " was written for config " +
                                hex_u64(s.table.config_hash) + ", not " +
                                hex_u64(plan.scenario.config_hash));
    }
    check_fingerprint(s.table, plan.sys, plan.design);
    return s;
  }
  Synthesis s = synthesize(plan, flags.exec);
  save_table(path, s.table);
  written.push_back(path);
  return s;
}

}  // namespace

std::vector<std::string> run_command(const std::string& command, const Plan& plan,
                                     const std::string& out_dir, const RunFlags& flags) {
  const Scenario& sc = plan.scenario;
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  if (command == "synth") {
    const Synthesis s = synthesize(plan, flags.exec);
    const std::string table = artifact(out_dir, "table.bin");
    save_table(table, s.table);
    written.push_back(table);
    const std::string report = artifact(out_dir, "injectivity.json");
    write_json(report, injectivity_json(plan, s));
    written.push_back(report);
    if (s.cert) {
      const std::string cert = artifact(out_dir, "gain_cert.json");
      write_json(cert, cert_json(plan, *s.cert));
      written.push_back(cert);
    }
    return written;
  }

  if (command == "certify") {
    const std::string path = artifact(out_dir, "gain_cert.json");
    try {
      const GainCert cert = certify(plan, flags.exec);
      write_json(path, cert_json(plan, cert));
      written.push_back(path);
      if (!cert.satisfied) throw CertificationError("small-gain condition fails at the chosen k", cert);
    } catch (const CertificationError& e) {
      if (written.empty()) write_json(path, cert_json(plan, e.cert()));
      throw;
    }
    return written;
  }

  if (command == "invert") {
    if (!sc.invert_z) throw std::invalid_argument("invert needs invert.z in the config");
    const Synthesis s = obtain_synthesis(plan, out_dir, flags, written);
    const auto inverter = make_inverter(plan, s);
    const InverseQuery q = inverter->invert(*sc.invert_z);
    const std::string path = artifact(out_dir, "invert.json");
    write_json(path, inverse_json(plan, q));
    written.push_back(path);
    return written;
  }

  if (command == "simulate") {
    const Synthesis s = obtain_synthesis(plan, out_dir, flags, written);
    const SimulationSetup setup = make_setup(plan, s);
    const SimOptions opt = sim_options(plan, flags.override_cert);
    const std::vector<State> starts = initial_conditions(plan);
    if (starts.empty()) throw std::invalid_argument("simulate needs simulation.x0 or random_initial");
    Json summary = provenance(sc);
    summary["design"] = design_json(plan);
    if (s.cert) summary["gain_cert"] = cert_json(plan, *s.cert);
    summary["traces"] = Json::array();
    const ComplexMatrix z0 = ComplexMatrix::Zero(plan.design.m(), plan.plant.output_dim);
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const SimTrace tr = simulate(setup, starts[i], z0, opt);
      const std::string name = "trace_" + std::to_string(i) + ".csv";
      write_trace_csv(artifact(out_dir, name), tr, csv_comment(sc));
      written.push_back(artifact(out_dir, name));
      Json t = trace_summary_json(tr, starts[i]);
      t["file"] = name;
      summary["traces"].push_back(std::move(t));
      if (flags.plot) {
        const std::string script = "trace_" + std::to_string(i) + ".gp";
        write_plot_script(artifact(out_dir, script), name, plan.plant.state_dim,
                          plan.design.m(), plan.plant.output_dim);
        written.push_back(artifact(out_dir, script));
      }
    }
    const std::string path = artifact(out_dir, "summary.json");
    write_json(path, summary);
    written.push_back(path);
    return written;
  }

  throw std::invalid_argument("unknown command '" + command + "'");
}

}  // namespace kkl
