#include "kkl/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "kkl/highgain.hpp"
#include "kkl/injectivity.hpp"
#include "kkl/inversion.hpp"
#include "kkl/ode.hpp"
#include "kkl/pipeline.hpp"
#include "kkl/runtime.hpp"
#include "kkl/transform.hpp"

namespace kkl {

namespace {

namespace fs = std::filesystem;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

CriterionResult named(int id, const char* name) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  return r;
}

State uniform_in(const DomainSpec& dom, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  State x(dom.dim());
  do {
    for (int a = 0; a < dom.dim(); ++a) {
      x[a] = dom.lower()[a] + (dom.upper()[a] - dom.lower()[a]) * unit(rng);
    }
  } while (dom.distance(x) > 0.0);
  return x;
}

DomainSpec square(int n, double half, std::optional<Margins> margins = {}) {
  return DomainSpec::box(State::Constant(n, -half), State::Constant(n, half), margins);
}

ObserverDesign design_with(std::vector<Complex> eigs) {
  ObserverDesign d;
  d.eigenvalues = to_vector(eigs);
  return d;
}

double horizon_for(const SaturatedSystem& sys, const ObserverDesign& d, double tol) {
  return select_horizon(d, amplitude_bound(sys, d), tol);
}

TransformFn exact_T(const SaturatedSystem& sys, const ObserverDesign& d, double horizon,
                    double tol) {
  return [sys, d, horizon, tol](const State& x) { return eval_T(sys, d, x, horizon, tol); };
}

// Harmonic oscillator against the Sylvester solution of the linear EDF.
CriterionResult sylvester_oracle(const AcceptanceOptions& opt) {
  CriterionResult r = named(1, "sylvester-oracle");
  // Orbits through [-1,1]^2 have radius <= sqrt(2); δ_d = 0.5 keeps them where χ = 1.
  const SaturatedSystem sys{benchmark("harmonic"), square(2, 1.0, Margins{0.2, 0.5, 1.0})};
  const ObserverDesign d = design_with({{-1, 0}, {-2, 0}, {-1, 1}, {-1, -1}});
  const double tail = 1e-9;
  const double horizon = horizon_for(sys, d, tail);
  const GridSpec grid = GridSpec::uniform(sys.domain, 21);
  const TransformTable tab = tabulate(sys, d, grid, horizon, tail, opt.exec);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const State x = grid.node(i);
    for (Eigen::Index j = 0; j < d.m(); ++j) {
      const Complex l = d.eigenvalues[j];
      const Complex oracle = -(l * x[0] + x[1]) / (1.0 + l * l);
      worst = std::max(worst, std::abs(tab.values[i](j, 0) - oracle));
    }
  }
  r.passed = worst <= 1e-6;
  r.detail = "max |T - T_oracle| " + sci(worst) + " <= 1e-06 (horizon " + sci(horizon) +
             ", 441 nodes, 4 eigenvalues)";
  return r;
}

CriterionResult constant_oracle(const AcceptanceOptions& opt) {
  CriterionResult r = named(2, "constant-oracle");
  const SaturatedSystem sys{benchmark("constant"), square(1, 1.0)};
  const ObserverDesign d = design_with({{-2, 0}});
  const double tol = 1e-12;
  const GridSpec grid = GridSpec::uniform(sys.domain, 21);
  const TransformTable tab = tabulate(sys, d, grid, horizon_for(sys, d, tol), tol, opt.exec);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i)[0];
    worst = std::max(worst, std::abs(tab.values[i](0, 0) - Complex(-x / -2.0, 0.0)));
  }
  r.passed = worst <= 1e-9;
  r.detail = "max |T - x/2| " + sci(worst) + " <= 1e-09";
  return r;
}

SaturatedSystem van_der_pol_on_box() {
  return SaturatedSystem{benchmark("van_der_pol", {{"mu", 1.0}}), square(2, 3.0)};
}

CriterionResult edf_residual_check(const AcceptanceOptions&) {
  CriterionResult r = named(3, "edf-residual");
  const SaturatedSystem sys = van_der_pol_on_box();
  const ObserverDesign d = design_with(sample_eigenvalues(2, -1.0, 3, true));
  const double quad_tol = 1e-8, dt = 1e-4;
  const TransformFn T = exact_T(sys, d, horizon_for(sys, d, quad_tol), quad_tol);
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const State x = uniform_in(sys.domain, rng);
    worst = std::max(worst, edf_residual(sys, d, T, x, dt).norm());
  }
  r.passed = worst <= 1e-3;
  r.detail = "max EDF residual over 50 points " + sci(worst) + " <= 1e-03 (dt 1e-4, quad 1e-8)";
  return r;
}

// Slope fit over the latest window where |e| is still well above the noise floor.
double late_rate(const SimTrace& tr, double floor) {
  double t_to = 0.0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    if (tr.err_transform[i] >= floor) t_to = tr.t[i];
  }
  return estimate_rate(tr, 0.5 * t_to, t_to);
}

CriterionResult error_identity(const AcceptanceOptions&) {
  CriterionResult r = named(4, "error-identity");
  const SaturatedSystem sys = van_der_pol_on_box();
  const ObserverDesign d = design_with(sample_eigenvalues(2, -1.0, 4, true));
  const double tol = 1e-10;
  const TransformFn T = exact_T(sys, d, horizon_for(sys, d, tol), tol);
  const SimulationSetup setup = SimulationSetup::exact(sys.base, sys.domain, d, T, nullptr);
  SimOptions so;
  so.t_end = 10.0;
  so.tol = tol;
  so.sample_stride = 0.1;
  so.estimate_state = false;
  const State x0{{1.0, 0.0}};
  const SimTrace tr = simulate(setup, x0, ComplexMatrix::Zero(d.m(), 1), so);
  const ComplexMatrix e0 = tr.e.front();
  double dev = 0.0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    const ComplexVector decay = (d.eigenvalues * tr.t[i]).array().exp();
    dev = std::max(dev, (tr.e[i] - decay.asDiagonal() * e0).norm());
  }
  const double target = max_real(d.eigenvalues);
  const double rate = late_rate(tr, 1e-6);
  const bool rate_ok = std::abs(rate - target) <= 0.1 * std::abs(target);
  r.passed = dev <= 1e-6 && rate_ok && tr.stayed_in_domain;
  r.detail = "max |e - exp(At)e0| " + sci(dev) + " <= 1e-06; rate " + sci(rate) + " vs " +
             sci(target) + " (10%)";
  if (!tr.stayed_in_domain) r.detail += "; trajectory left O";
  return r;
}

CriterionResult injectivity_round_trip(const AcceptanceOptions& opt) {
  CriterionResult r = named(5, "injectivity-round-trip");
  const SaturatedSystem sys = van_der_pol_on_box();
  const double tol = 1e-8;
  const GridSpec grid = GridSpec::uniform(sys.domain, 11);
  int positive = 0;
  double smallest = std::numeric_limits<double>::infinity();
  TransformTable first;
  ObserverDesign first_design;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const ObserverDesign d = design_with(sample_eigenvalues(2, -1.0, seed, true));
    TransformTable tab = tabulate(sys, d, grid, horizon_for(sys, d, tol), tol, opt.exec);
    const InjectivityReport rep = injectivity_modulus(tab, seed, opt.exec);
    if (rep.modulus > 0.0 && rep.collisions == 0) ++positive;
    smallest = std::min(smallest, rep.modulus);
    if (seed == 1) {
      first = std::move(tab);
      first_design = d;
    }
  }

  // Round trip at cell centres, off the tabulated nodes.
  InversionOptions io;
  io.tol = 1e-10;
  const Inverter inv = Inverter::from_table(first, sys, first_design, io);
  std::vector<double> errors;
  const double h = grid.spacing();
  for (int a = 0; a < 10; a += 2) {
    for (int b = 0; b < 10; b += 2) {
      const State x{{-3.0 + (a + 0.5) * h, -3.0 + (b + 0.5) * h}};
      errors.push_back((inv.invert(inv.transform()(x)).x_hat - x).norm());
    }
  }
  std::sort(errors.begin(), errors.end());
  const double median = 0.5 * (errors[errors.size() / 2] + errors[(errors.size() - 1) / 2]);
  r.passed = positive >= 95 && median <= 1e-4;
  r.detail = "modulus > 0 for " + std::to_string(positive) + "/100 seeds (>= 95, min " +
             sci(smallest) + "); median round-trip error " + sci(median) + " <= 1e-04 over " +
             std::to_string(errors.size()) + " off-node points";
  return r;
}

CriterionResult high_gain(const AcceptanceOptions& opt) {
  CriterionResult r = named(6, "high-gain-certificate");
  const SystemModel plant = benchmark("duffing");
  const DomainSpec dom = square(2, 2.0);
  const ComplexVector lambda = to_vector(std::vector<Complex>{{-1, 0}, {-2, 0}});
  const GridSpec grid = GridSpec::uniform(dom, 21);
  GainCert cert =
      certify_gain(plant, dom, lambda, identity_map(), 2, grid, default_k_ladder(), opt.exec, 6);
  const bool L_ok = cert.L_empirical <= 11.0 && cert.L_analytic && *cert.L_analytic == 11.0;
  const bool finite_k = std::isfinite(cert.k_required) && cert.k_required > 0.0;
  const double k = 2.0 * cert.k_required;
  evaluate_gain(cert, k);

  const ApproximateTransform ta = high_gain_transform(plant, lambda, k, identity_map(), 2);
  Eigen::MatrixXd values(4, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values.col(static_cast<Eigen::Index>(i)) = flatten(ta.transform(grid.node(i)));
  }
  InversionOptions io;
  io.tol = 1e-12;
  auto inverter = std::make_shared<const Inverter>(grid.nodes(), values, ta.transform, dom, 2, 1, io);
  const SimulationSetup setup = SimulationSetup::approximate(Mode::highgain, plant, dom,
                                                             identity_map(), ta, inverter, cert);
  SimOptions so;
  so.t_end = 20.0;
  so.tol = 1e-10;
  so.sample_stride = 0.5;
  so.per_step_lyapunov = true;

  // Initial conditions whose plant trajectory stays in O up to t = 20.
  std::mt19937_64 rng(6);
  IntegratorOptions probe;
  probe.tol = 1e-10;
  std::vector<State> starts;
  int drawn = 0;
  while (starts.size() < 10 && drawn < 1000) {
    const State x = uniform_in(dom, rng);
    ++drawn;
    const Trajectory tr = integrate(autonomous(plant.drift), x, 0.0, so.t_end, probe);
    bool inside = tr.reason == StopReason::completed;
    for (const auto& s : tr.states) inside = inside && dom.contains(s);
    if (inside) starts.push_back(x);
  }

  int monotone = 0, converged = 0;
  double worst_terminal = 0.0;
  for (const State& x0 : starts) {
    const SimTrace tr = simulate(setup, x0, ComplexMatrix::Zero(2, 1), so);
    double zmax = 0.0;
    for (const auto& z : tr.z) zmax = std::max(zmax, z.norm());
    // Increments below what the integrator can resolve in e are not violations.
    const double resolution = 10.0 * so.tol * (1.0 + zmax);
    const double floor = cert.lambda_max * 2.0 * resolution * resolution;
    if (lyapunov_series(tr.step_U, so.tol, floor).monotone) ++monotone;
    const double terminal = tr.err_state.back();
    worst_terminal = std::max(worst_terminal, terminal);
    if (tr.stayed_in_domain && terminal <= 1e-2 && std::abs(tr.t.back() - so.t_end) < 1e-12) {
      ++converged;
    }
  }
  const int count = static_cast<int>(starts.size());
  r.passed = L_ok && finite_k && cert.satisfied && count == 10 && monotone == count &&
             converged == count;
  r.detail = "L_emp " + sci(cert.L_empirical) + " <= 11, k* " + sci(cert.k_required) +
             ", k = 2k*, eps " + sci(cert.epsilon) + "; U monotone " +
             std::to_string(monotone) + "/" + std::to_string(count) + ", |xhat - x|(20) max " +
             sci(worst_terminal) + " <= 1e-02";
  return r;
}

CriterionResult zero_error(const AcceptanceOptions& opt) {
  CriterionResult r = named(7, "zero-error-chain");
  const SystemModel plant = benchmark("integrator_chain", {{"order", 3.0}});
  const DomainSpec dom = square(3, 2.0);
  const ComplexVector lambda = to_vector(std::vector<Complex>{{-1, 0}, {-2, 0}, {-3, 0}});
  const GridSpec grid = GridSpec::uniform(dom, 7);
  GainCert cert =
      certify_gain(plant, dom, lambda, identity_map(), 3, grid, default_k_ladder(), opt.exec, 7);
  const double k = 4.0;
  evaluate_gain(cert, k);

  double err_max = 0.0, edf_max = 0.0;
  const ObserverDesign filt = design_with({{-k, 0}, {-2 * k, 0}, {-3 * k, 0}});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const State x = grid.node(i);
    err_max = std::max(err_max, approx_error(plant, lambda, k, identity_map(), 3, x).norm());
    const ComplexMatrix Ta = build_Ta(plant, lambda, k, identity_map(), 3, x);
    const ComplexMatrix lhs = lie_derivative_ta(plant, lambda, k, identity_map(), 3, x);
    const ComplexMatrix rhs = filt.apply_A(Ta) + filt.injection(plant.output(x));
    edf_max = std::max(edf_max, (lhs - rhs).norm());
  }

  const ApproximateTransform ta = high_gain_transform(plant, lambda, k, identity_map(), 3);
  Eigen::MatrixXd values(6, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values.col(static_cast<Eigen::Index>(i)) = flatten(ta.transform(grid.node(i)));
  }
  auto inverter = std::make_shared<const Inverter>(grid.nodes(), values, ta.transform, dom, 3, 1);
  const SimulationSetup setup = SimulationSetup::approximate(Mode::highgain, plant, dom,
                                                             identity_map(), ta, inverter, cert);
  SimOptions so;
  so.t_end = 3.0;
  so.tol = 1e-10;
  so.sample_stride = 0.05;
  so.estimate_state = false;
  const SimTrace tr = simulate(setup, State{{0.5, -0.3, 0.2}}, ComplexMatrix::Zero(3, 1), so);
  const double rate = estimate_rate(tr, 1.0, 3.0);
  const double target = k * max_real(lambda);
  const bool rate_ok = std::abs(rate - target) <= 0.1 * std::abs(target);
  r.passed = err_max == 0.0 && edf_max <= 1e-10 && rate_ok && cert.satisfied;
  r.detail = "max |E| " + sci(err_max) + " (== 0); EDF residual of T_a " + sci(edf_max) +
             " <= 1e-10; rate " + sci(rate) + " vs k max Re = " + sci(target) + " (10%)";
  return r;
}

CriterionResult rescaled(const AcceptanceOptions&) {
  CriterionResult r = named(8, "rescaled-observer");

  // γ ≡ 1 must reproduce the exact observer.
  const SaturatedSystem vdp = van_der_pol_on_box();
  const ObserverDesign d = design_with(sample_eigenvalues(2, -1.0, 8, true));
  SimOptions so;
  so.t_end = 10.0;
  so.sample_stride = 0.1;
  so.estimate_state = false;
  so.transform_error = false;
  const State x0{{1.0, 0.5}};
  const ComplexMatrix z0 = ComplexMatrix::Zero(d.m(), 1);
  const SimTrace ex = simulate(SimulationSetup::exact(vdp.base, vdp.domain, d, nullptr, nullptr),
                               x0, z0, so);
  const SimTrace rs = simulate(SimulationSetup::rescaled(vdp.base, vdp.domain, d,
                                                         polynomial_rescaling({1.0}), nullptr,
                                                         nullptr),
                               x0, z0, so);
  double gap = ex.t.size() == rs.t.size() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < std::min(ex.t.size(), rs.t.size()); ++i) {
    gap = std::max(gap, (ex.z[i] - rs.z[i]).norm());
    gap = std::max(gap, (ex.x[i] - rs.x[i]).norm());
  }

  // Finite escape: x' = 1 + x^2 from 0 blows up at π/2.
  const SystemModel esc = benchmark("escape1d");
  const ObserverDesign de = design_with(sample_eigenvalues(1, -1.0, 8, true));
  SimOptions se;
  se.t_end = 3.0;
  se.tol = 1e-10;
  se.escape_norm = 1e4;
  se.estimate_state = false;
  se.transform_error = false;
  const SimTrace tr = simulate(SimulationSetup::rescaled(esc, square(1, 1.0), de,
                                                         polynomial_rescaling({1.0, 0.0, 2.0}),
                                                         nullptr, nullptr),
                               State::Zero(1), ComplexMatrix::Zero(de.m(), 1), se);
  const double miss = std::abs(tr.escape_time - std::numbers::pi / 2.0);
  const double gamma_int = tr.gamma_integral.back();
  r.passed = gap <= 1e-10 && tr.escaped && miss <= 1e-3 && gamma_int > 1e3 && tr.observer_finite;
  r.detail = "gamma=1 vs exact " + sci(gap) + " <= 1e-10; escape at " + sci(tr.escape_time) +
             " (|t - pi/2| " + sci(miss) + " <= 1e-03), int gamma " + sci(gamma_int) +
             " > 1e3, observer " + (tr.observer_finite ? "finite" : "NOT finite");
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

CriterionResult determinism(const AcceptanceOptions& opt) {
  CriterionResult r = named(9, "determinism");
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs = {
      {"harmonic.yaml", {"synth", "invert", "simulate"}},
      {"duffing.yaml", {"synth", "certify", "simulate"}},
  };
  std::size_t files = 0, differing = 0;
  std::string first_diff;
  for (const auto& [file, commands] : runs) {
    const Plan plan = resolve(load_scenario((fs::path(opt.scenario_dir) / file).string()));
    std::vector<std::string> outputs[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = fs::path(opt.work_dir) / ("run" + std::to_string(rep)) / file;
      fs::remove_all(dir);
      RunFlags flags;
      flags.exec = opt.exec;
      for (const auto& cmd : commands) {
        for (auto& f : run_command(cmd, plan, dir.string(), flags)) {
          outputs[rep].push_back(fs::relative(f, dir).string());
        }
      }
    }
    if (outputs[0] != outputs[1]) {
      ++differing;
      if (first_diff.empty()) first_diff = file + " (file lists)";
      continue;
    }
    for (const auto& rel : outputs[0]) {
      ++files;
      const auto a = slurp(fs::path(opt.work_dir) / "run0" / file / rel);
      const auto b = slurp(fs::path(opt.work_dir) / "run1" / file / rel);
      if (a != b) {
        ++differing;
        if (first_diff.empty()) first_diff = file + "/" + rel;
      }
    }
  }
  r.passed = differing == 0 && files > 0;
  r.detail = std::to_string(files) + " artifacts compared, " + std::to_string(differing) +
             " differ" + (first_diff.empty() ? "" : " (first: " + first_diff + ")");
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& options) {
  using Fn = CriterionResult (*)(const AcceptanceOptions&);
  static const Fn table[kCriterionCount] = {sylvester_oracle, constant_oracle, edf_residual_check,
                                            error_identity,   injectivity_round_trip, high_gain,
                                            zero_error,       rescaled,       determinism};
  static const char* names[kCriterionCount] = {
      "sylvester-oracle",      "constant-oracle",  "edf-residual",
      "error-identity",        "injectivity-round-trip", "high-gain-certificate",
      "zero-error-chain",      "rescaled-observer", "determinism"};
  if (id < 1 || id > kCriterionCount) throw std::out_of_range("no acceptance criterion " + std::to_string(id));
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = table[id - 1](options);
  } catch (const std::exception& e) {
    r = named(id, names[id - 1]);
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::vector<int>& ids) {
  std::vector<int> which = ids;
  if (which.empty()) {
    for (int i = 1; i <= kCriterionCount; ++i) which.push_back(i);
  }
  std::vector<CriterionResult> out;
  for (int id : which) out.push_back(run_criterion(id, options));
  return out;
}

std::string format_result(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "%s %d %-24s", r.passed ? "PASS" : "FAIL", r.id,
                r.name.c_str());
  char tail[32];
  std::snprintf(tail, sizeof tail, "  (%.1f s)", r.seconds);
  return std::string(head) + r.detail + tail;
}

}  // namespace kkl
