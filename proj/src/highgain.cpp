#include "kkl/highgain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "kkl/ode.hpp"

namespace kkl {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Flow samples of the unmodified plant at the requested times (both signs).
std::map<double, State> flow_samples(const SystemModel& model, const State& x,
                                     std::vector<double> times, const LieOptions& opt) {
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<double> fwd, bwd;
  for (double t : times) (t >= 0.0 ? fwd : bwd).push_back(t);
  std::reverse(bwd.begin(), bwd.end());

  std::map<double, State> out;
  const Field f = autonomous(model.drift);
  auto run = [&](const std::vector<double>& ts) {
    if (ts.empty()) return;
    IntegratorOptions io;
    io.tol = 1e-13;
    io.sample_times = ts;
    const Trajectory traj = integrate(f, x, 0.0, ts.back(), io);
    if (traj.reason != StopReason::completed) {
      throw std::domain_error("lie_bundle: flow escaped inside the stencil");
    }
    for (std::size_t i = 0; i < traj.sample_times.size(); ++i) {
      out[traj.sample_times[i]] = traj.samples[i];
    }
    if (opt.domain) {
      const double du = opt.domain->margins().u;
      for (const auto& s : traj.states) {
        if (opt.domain->distance(s) > du) {
          throw std::domain_error("lie_bundle: flow leaves O+delta_u inside the stencil");
        }
      }
    }
  };
  run(fwd);
  run(bwd);
  return out;
}

LieBundle fd_bundle(const SystemModel& model, const OutputMap& b, int m, const State& x,
                    const LieOptions& opt) {
  const int p = model.output_dim;
  const double scale = 1.0 + x.norm();
  std::vector<double> steps(m + 1, 0.0);
  std::vector<double> times{0.0};
  for (int i = 1; i <= m; ++i) {
    // Widen the stencil with the order so roundoff (~1e-13 / h^i) stays below
    // the Richardson-corrected truncation error.
    steps[i] = scale * std::max(opt.fd_step, std::pow(1e-13, 1.0 / (i + 4)));
    for (double h : {steps[i], 0.5 * steps[i]}) {
      for (int k = 0; k <= i; ++k) times.push_back((0.5 * i - k) * h);
    }
  }
  const auto samples = flow_samples(model, x, times, opt);
  auto g = [&](double t) { return Output(b(model.output(samples.at(t)))); };

  LieBundle lb;
  lb.H.resize(m, p);
  Output row0 = b(model.output(x));
  auto diff = [&](int i, double h) {
    Output acc = Output::Zero(p);
    for (int k = 0; k <= i; ++k) {
      acc += ((k % 2) ? -1.0 : 1.0) * binomial(i, k) * g((0.5 * i - k) * h);
    }
    return Output(acc / std::pow(h, i));
  };
  for (int i = 0; i <= m; ++i) {
    Output v = i == 0 ? row0
                      : Output((4.0 * diff(i, 0.5 * steps[i]) - diff(i, steps[i])) / 3.0);
    if (i < m) lb.H.row(i) = v.transpose();
    else lb.top = v;
  }
  return lb;
}

ComplexMatrix weighted_rows(const ComplexVector& eigenvalues, double k, const Eigen::MatrixXd& H) {
  const Eigen::Index m = eigenvalues.size();
  ComplexMatrix out = ComplexMatrix::Zero(m, H.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Complex inv = 1.0 / (k * eigenvalues[i]);
    Complex w = inv;
    for (Eigen::Index j = 0; j < H.rows(); ++j) {
      out.row(i) -= w * H.row(j).cast<Complex>();
      w *= inv;
    }
  }
  return out;
}

// Bundle whose rows are L_f^1..L_f^m b(h): the Lie derivative of H.
LieBundle shifted(const LieBundle& lb) {
  LieBundle s;
  const Eigen::Index m = lb.H.rows();
  s.H.resize(m, lb.H.cols());
  if (m > 1) s.H.topRows(m - 1) = lb.H.bottomRows(m - 1);
  s.H.row(m - 1) = lb.top.transpose();
  return s;
}

State flow_at(const SystemModel& model, const State& x, double t) {
  IntegratorOptions io;
  io.tol = 1e-13;
  io.record_steps = false;
  const Trajectory traj = integrate(autonomous(model.drift), x, 0.0, t, io);
  if (traj.reason != StopReason::completed) throw std::domain_error("flow escaped");
  return traj.final_state;
}

}  // namespace

LieBundle lie_bundle(const SystemModel& model, const OutputMap& b, int m, const State& x,
                     const LieOptions& options) {
  if (m < 1) throw std::invalid_argument("lie_bundle: m must be >= 1");
  if (!options.force_finite_differences && b.is_identity() && model.has_lie(m)) {
    LieBundle lb;
    lb.H.resize(m, model.output_dim);
    for (int i = 0; i < m; ++i) lb.H.row(i) = model.lie(i, x).transpose();
    lb.top = model.lie(m, x);
    return lb;
  }
  return fd_bundle(model, b, m, x, options);
}

ComplexMatrix ta_from_bundle(const ComplexVector& eigenvalues, double k, const LieBundle& bundle) {
  return weighted_rows(eigenvalues, k, bundle.H);
}

ComplexMatrix ta_matrix_form(const ComplexVector& eigenvalues, double k, const LieBundle& bundle) {
  const GainMatrices g = gain_matrices(eigenvalues, k);
  const Eigen::VectorXd k_inv = g.K.cwiseInverse();
  return -(g.S * k_inv.cast<Complex>().asDiagonal() * bundle.H.cast<Complex>());
}

ComplexMatrix error_from_bundle(const ComplexVector& eigenvalues, double k,
                                const LieBundle& bundle) {
  const Eigen::Index m = eigenvalues.size();
  ComplexMatrix out(m, bundle.top.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Complex w = std::pow(k * eigenvalues[i], -static_cast<double>(m));
    out.row(i) = -w * bundle.top.transpose().cast<Complex>();
  }
  return out;
}

ComplexMatrix build_Ta(const SystemModel& model, const ComplexVector& eigenvalues, double k,
                       const OutputMap& b, int m, const State& x, const LieOptions& options) {
  return ta_from_bundle(eigenvalues, k, lie_bundle(model, b, m, x, options));
}

ComplexMatrix approx_error(const SystemModel& model, const ComplexVector& eigenvalues, double k,
                           const OutputMap& b, int m, const State& x, const LieOptions& options) {
  return error_from_bundle(eigenvalues, k, lie_bundle(model, b, m, x, options));
}

ComplexMatrix lie_derivative_ta(const SystemModel& model, const ComplexVector& eigenvalues,
                                double k, const OutputMap& b, int m, const State& x,
                                const LieOptions& options) {
  return ta_from_bundle(eigenvalues, k, shifted(lie_bundle(model, b, m, x, options)));
}

ComplexMatrix approx_error_fd(const SystemModel& model, const ComplexVector& eigenvalues, double k,
                              const OutputMap& b, int m, const State& x, double dt,
                              const LieOptions& options) {
  const State xp = flow_at(model, x, dt);
  const State xm = flow_at(model, x, -dt);
  const ComplexMatrix Tp = build_Ta(model, eigenvalues, k, b, m, xp, options);
  const ComplexMatrix Tm = build_Ta(model, eigenvalues, k, b, m, xm, options);
  const ComplexMatrix T0 = build_Ta(model, eigenvalues, k, b, m, x, options);
  ObserverDesign d{ComplexVector(k * eigenvalues), b};
  return (Tp - Tm) / (2.0 * dt) - (d.apply_A(T0) + d.injection(model.output(x)));
}

ComplexMatrix exactness_residual(const SystemModel& model, const ComplexVector& eigenvalues,
                                 double k, const OutputMap& b, int m, const State& x, double dt,
                                 const LieOptions& options) {
  const LieBundle lb = lie_bundle(model, b, m, x, options);
  const Eigen::MatrixXd Hp = lie_bundle(model, b, m, flow_at(model, x, dt), options).H;
  const Eigen::MatrixXd Hm = lie_bundle(model, b, m, flow_at(model, x, -dt), options).H;
  const Eigen::MatrixXd LfH = (Hp - Hm) / (2.0 * dt);

  const GainMatrices g = gain_matrices(eigenvalues, k);
  const ComplexMatrix M = g.S * g.K.cwiseInverse().cast<Complex>().asDiagonal();
  const ComplexVector kA = k * eigenvalues;
  ObserverDesign d{kA, b};
  ComplexMatrix top_term(m, lb.top.size());
  for (int i = 0; i < m; ++i) {
    top_term.row(i) = std::pow(kA[i], -static_cast<double>(m)) * lb.top.transpose().cast<Complex>();
  }
  return M * LfH.cast<Complex>() - d.apply_A(M * lb.H.cast<Complex>()) +
         d.injection(model.output(x)) - top_term;
}

std::vector<double> default_k_ladder() {
  std::vector<double> ks;
  for (int i = 0; i <= 15; ++i) ks.push_back(std::ldexp(1.0, i));
  return ks;
}

namespace {

kernels::PairDistances scan_pairs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                  kernels::Exec exec, std::uint64_t seed, std::size_t max_pairs) {
  const std::size_t count = static_cast<std::size_t>(X.cols());
  const std::size_t total = count < 2 ? 0 : count * (count - 1) / 2;
  if (total <= max_pairs) return kernels::all_pairs(exec, X, Y);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int32_t> pick(0, static_cast<std::int32_t>(count) - 1);
  std::vector<kernels::IndexPair> pairs;
  pairs.reserve(max_pairs);
  while (pairs.size() < max_pairs) {
    const std::int32_t i = pick(rng), j = pick(rng);
    if (i != j) pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  return kernels::listed_pairs(exec, X, Y, pairs);
}

double max_ratio(const kernels::PairDistances& d) {
  double r = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d.input[k] > 0.0) r = std::max(r, d.image[k] / d.input[k]);
  }
  return r;
}

}  // namespace

void evaluate_gain(GainCert& cert, double k) {
  cert.k = k;
  const LyapunovSolution lyap = solve_lyapunov(ComplexVector(k * cert.eigenvalues));
  cert.P = lyap.P;
  cert.lambda_max = lyap.lambda_max;
  cert.lambda_min = lyap.lambda_min;
  cert.satisfied = 2.0 * cert.N * cert.lambda_max < 1.0;
  cert.epsilon = cert.satisfied ? (1.0 - 2.0 * cert.N * cert.lambda_max) / cert.lambda_min : 0.0;
}

GainCert certify_gain(const SystemModel& model, const DomainSpec& domain,
                      const ComplexVector& eigenvalues, const OutputMap& b, int m,
                      const GridSpec& grid, const std::vector<double>& k_candidates,
                      kernels::Exec exec, std::uint64_t seed, std::size_t max_pairs) {
  require_hurwitz(eigenvalues);
  if (eigenvalues.size() != m) throw std::invalid_argument("certify_gain: need m eigenvalues");
  GainCert cert;
  cert.eigenvalues = eigenvalues;
  cert.m = m;

  std::vector<State> nodes;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    State x = grid.node(i);
    if (domain.distance(x) <= 1e-12) nodes.push_back(std::move(x));
  }
  const int p = model.output_dim;
  const auto count = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd Hs(m * p, count), tops(p, count);
  std::vector<LieBundle> bundles(nodes.size());
  LieOptions lo;
  lo.domain = &domain;
  kernels::map_indices(exec, nodes.size(), [&](std::size_t i) {
    bundles[i] = lie_bundle(model, b, m, nodes[i], lo);
  });
  for (Eigen::Index c = 0; c < count; ++c) {
    const auto& lb = bundles[static_cast<std::size_t>(c)];
    Hs.col(c) = Eigen::Map<const Eigen::VectorXd>(lb.H.data(), lb.H.size());
    tops.col(c) = lb.top;
  }
  const kernels::PairDistances dH = scan_pairs(Hs, tops, exec, seed, max_pairs);
  cert.pair_count = dH.size();
  cert.L_empirical = max_ratio(dH);
  if (b.is_identity() && model.lie_lipschitz) cert.L_analytic = model.lie_lipschitz(m, domain);
  cert.L = cert.L_analytic ? *cert.L_analytic : cert.L_empirical;

  const GainMatrices g = gain_matrices(eigenvalues, 1.0);
  cert.S_inv_norm = g.S_inv_norm;
  cert.B_norm = std::sqrt(static_cast<double>(m));
  double min_abs = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) min_abs = std::min(min_abs, std::abs(eigenvalues[i]));
  cert.min_abs_eig_pow_m = std::pow(min_abs, m);
  cert.N = cert.B_norm * cert.L * cert.S_inv_norm / cert.min_abs_eig_pow_m;
  const double decay = -max_real(eigenvalues);
  cert.k_required = cert.N / decay;

  std::vector<double> ladder = k_candidates;
  std::sort(ladder.begin(), ladder.end());
  const auto it = std::find_if(ladder.begin(), ladder.end(), [&](double k) {
    return k >= 1.0 && cert.N / (k * decay) < 1.0;
  });
  if (it == ladder.end()) {
    throw CertificationError("no gain candidate satisfies the small-gain bound; need k > " +
                                 std::to_string(cert.k_required),
                             cert);
  }
  evaluate_gain(cert, *it);

  // Sampled incremental constant of 𝔈 against T_a at the selected gain.
  Eigen::MatrixXd Ta(2 * m * p, count), Es(2 * m * p, count);
  for (Eigen::Index c = 0; c < count; ++c) {
    const auto& lb = bundles[static_cast<std::size_t>(c)];
    Ta.col(c) = flatten(ta_from_bundle(eigenvalues, cert.k, lb));
    Es.col(c) = flatten(error_from_bundle(eigenvalues, cert.k, lb));
  }
  cert.N_empirical = max_ratio(scan_pairs(Ta, Es, exec, seed, max_pairs));
  return cert;
}

ApproximateTransform high_gain_transform(const SystemModel& model,
                                         const ComplexVector& eigenvalues, double k,
                                         const OutputMap& b, int m, const LieOptions& options) {
  ApproximateTransform t;
  t.filter_eigenvalues = k * eigenvalues;
  t.m = m;
  t.p = model.output_dim;
  LieOptions lo = options;
  lo.domain = nullptr;  // stencils may leave the collar at runtime
  t.transform = [=](const State& x) { return build_Ta(model, eigenvalues, k, b, m, x, lo); };
  t.error = [=](const State& x) { return approx_error(model, eigenvalues, k, b, m, x, lo); };
  return t;
}

}  // namespace kkl
