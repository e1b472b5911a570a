#include "kkl/runtime.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "kkl/ode.hpp"

namespace kkl {

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::exact: return "exact";
    case Mode::approx: return "approx";
    case Mode::highgain: return "highgain";
    case Mode::rescaled: return "rescaled";
  }
  return "unknown";
}

Mode parse_mode(const std::string& text) {
  if (text == "exact") return Mode::exact;
  if (text == "approx") return Mode::approx;
  if (text == "highgain") return Mode::highgain;
  if (text == "rescaled") return Mode::rescaled;
  throw std::invalid_argument("unknown mode '" + text + "'");
}

SimulationSetup SimulationSetup::exact(SystemModel plant, DomainSpec domain, ObserverDesign design,
                                       TransformFn transform,
                                       std::shared_ptr<const Inverter> inverter) {
  SimulationSetup s;
  s.plant = std::move(plant);
  s.domain = std::move(domain);
  s.design = std::move(design);
  s.filter_eigenvalues = s.design.eigenvalues;
  s.transform = std::move(transform);
  s.inverter = std::move(inverter);
  return s;
}

SimulationSetup SimulationSetup::rescaled(SystemModel plant, DomainSpec domain,
                                          ObserverDesign design, Rescaling gamma,
                                          TransformFn transform,
                                          std::shared_ptr<const Inverter> inverter) {
  SimulationSetup s = exact(std::move(plant), std::move(domain), std::move(design),
                            std::move(transform), std::move(inverter));
  s.mode = Mode::rescaled;
  s.gamma = std::move(gamma);
  return s;
}

SimulationSetup SimulationSetup::approximate(Mode mode, SystemModel plant, DomainSpec domain,
                                             OutputMap b, const ApproximateTransform& approx,
                                             std::shared_ptr<const Inverter> inverter,
                                             std::optional<GainCert> cert) {
  if (mode != Mode::approx && mode != Mode::highgain) {
    throw std::invalid_argument("approximate setup needs mode approx or highgain");
  }
  SimulationSetup s;
  s.mode = mode;
  s.plant = std::move(plant);
  s.domain = std::move(domain);
  s.design.eigenvalues = approx.filter_eigenvalues;
  s.design.b = std::move(b);
  s.filter_eigenvalues = approx.filter_eigenvalues;
  s.transform = approx.transform;
  s.error = approx.error;
  s.inverter = std::move(inverter);
  s.cert = std::move(cert);
  return s;
}

double lyapunov_value(const ComplexVector& a, const ComplexMatrix& e) {
  double u = 0.0;
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    const double pii = -1.0 / (2.0 * a[i].real());
    u += pii * e.row(i).squaredNorm();
  }
  return u;
}

SimTrace simulate(const SimulationSetup& setup, const State& x0, const ComplexMatrix& z0,
                  const SimOptions& opt) {
  const bool approximate = setup.mode == Mode::approx || setup.mode == Mode::highgain;
  SimTrace tr;
  tr.mode = setup.mode;
  tr.filter_eigenvalues = setup.filter_eigenvalues;
  require_hurwitz(setup.filter_eigenvalues);
  tr.P = solve_lyapunov(setup.filter_eigenvalues).P;

  if (approximate) {
    if (!setup.error || !setup.inverter) {
      throw std::invalid_argument("approximate observer needs 𝔈 and an inverse of T_a");
    }
    const bool ok = setup.cert && setup.cert->satisfied;
    if (!ok) {
      if (!opt.override_cert) {
        throw CertificationError("approximate observer requires a satisfied gain certificate",
                                 setup.cert ? *setup.cert : GainCert{});
      }
      tr.warnings.push_back("gain certificate missing or unsatisfied; running anyway");
    }
  }
  if (setup.mode == Mode::rescaled) {
    tr.warnings.push_back("gamma is assumed to dominate 1 + gamma_f(h(x)); not verifiable here");
  }

  const int n = setup.plant.state_dim;
  const int m = static_cast<int>(setup.filter_eigenvalues.size());
  const int p = setup.plant.output_dim;
  if (x0.size() != n) throw std::invalid_argument("simulate: x0 has the wrong dimension");
  if (z0.rows() != m || z0.cols() != p) throw std::invalid_argument("simulate: z0 has wrong shape");
  if (!setup.domain.contains(x0)) tr.warnings.push_back("x0 lies outside O");

  const ComplexVector& A = setup.filter_eigenvalues;
  const Eigen::Index zoff = n, zlen = 2 * m * p, toff = n + zlen;

  Field field = [&](double, const Eigen::VectorXd& w, Eigen::VectorXd& dw) {
    dw.resize(w.size());
    const State x = w.head(n);
    const Output y = setup.plant.output(x);
    dw.head(n) = setup.plant.drift(x);
    ComplexMatrix z(m, p);
    unflatten_into(w.data() + zoff, z);
    ComplexMatrix dz = A.asDiagonal() * z + setup.design.injection(y);
    double g = 1.0;
    if (approximate) {
      dz += setup.error(setup.inverter->invert(z).x_hat);
    } else if (setup.gamma) {
      g = setup.gamma->gamma(y);
      dz *= g;
    }
    dw.segment(zoff, zlen) = flatten(dz);
    dw[toff] = g;
  };

  Eigen::VectorXd w0(n + zlen + 1);
  w0.head(n) = x0;
  w0.segment(zoff, zlen) = flatten(z0);
  w0[toff] = 0.0;

  IntegratorOptions io;
  io.tol = opt.tol;
  io.record_steps = false;
  // Escape is judged on the plant alone: ∫γ and z may legitimately grow large.
  bool plant_escaped = false;
  for (long k = 0;; ++k) {
    const double t = k * opt.sample_stride;
    if (t > opt.t_end * (1.0 + 1e-12)) break;
    io.sample_times.push_back(std::min(t, opt.t_end));
  }
  if (io.sample_times.back() < opt.t_end) io.sample_times.push_back(opt.t_end);

  io.stop_when = [&](double t, const Eigen::VectorXd& w) {
    const State x = w.head(n);
    if (!setup.domain.contains(x)) tr.stayed_in_domain = false;
    if (setup.gamma) tr.min_gamma = std::min(tr.min_gamma, setup.gamma->gamma(setup.plant.output(x)));
    if (opt.per_step_lyapunov && setup.transform) {
      ComplexMatrix z(m, p);
      unflatten_into(w.data() + zoff, z);
      tr.step_t.push_back(t);
      tr.step_U.push_back(lyapunov_value(A, setup.transform(x) - z));
    }
    if (x.lpNorm<Eigen::Infinity>() > opt.escape_norm) {
      plant_escaped = true;
      return true;
    }
    return false;
  };
  if (opt.per_step_lyapunov && setup.transform) {
    tr.step_t.push_back(0.0);
    tr.step_U.push_back(lyapunov_value(A, setup.transform(x0) - z0));
  }

  const Trajectory traj = integrate(field, w0, 0.0, opt.t_end, io);
  tr.escaped = traj.escaped || plant_escaped;
  tr.escape_time = plant_escaped ? traj.final_time : traj.escape_time;
  tr.stop_reason = to_string(traj.reason);
  if (traj.reason == StopReason::max_steps) {
    throw std::runtime_error("simulate: step budget exhausted");
  }

  auto record = [&](double t, const Eigen::VectorXd& w) {
    const State x = w.head(n);
    ComplexMatrix z(m, p);
    unflatten_into(w.data() + zoff, z);
    if (!z.allFinite()) tr.observer_finite = false;
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.z.push_back(z);
    tr.gamma_integral.push_back(w[toff]);
    if (setup.gamma) {
      tr.min_gamma = std::min(tr.min_gamma, setup.gamma->gamma(setup.plant.output(x)));
    }
    if (opt.estimate_state && setup.inverter) {
      const InverseQuery q = setup.inverter->invert(z);
      tr.x_hat.push_back(q.x_hat);
      tr.err_state.push_back((q.x_hat - x).norm());
    }
    if (opt.transform_error && setup.transform) {
      const ComplexMatrix e = setup.transform(x) - z;
      tr.e.push_back(e);
      tr.err_transform.push_back(e.norm());
      tr.U.push_back(lyapunov_value(A, e));
    }
  };
  for (std::size_t s = 0; s < traj.sample_times.size(); ++s) record(traj.sample_times[s], traj.samples[s]);
  // An early stop (escape) also gets the terminal state as a last sample.
  if (tr.t.empty() || traj.final_time > tr.t.back()) record(traj.final_time, traj.final_state);
  if (!traj.final_state.segment(zoff, zlen).allFinite()) tr.observer_finite = false;
  if (setup.gamma && tr.min_gamma < 1.0) {
    tr.warnings.push_back("gamma(y) < 1 observed along the trace");
  }
  return tr;
}

LyapunovVerdict lyapunov_series(const std::vector<double>& U, double tol, double floor) {
  LyapunovVerdict v;
  v.U = U;
  for (std::size_t j = 0; j + 1 < U.size(); ++j) {
    if (!(U[j] >= 0.0) || U[j + 1] > U[j] * (1.0 + 10.0 * tol) + floor) {
      v.monotone = false;
      v.first_violation = j + 1;
      break;
    }
  }
  return v;
}

LyapunovVerdict lyapunov_trace(const SimTrace& trace, const ComplexVector& a, double tol,
                               double floor) {
  std::vector<double> U;
  U.reserve(trace.e.size());
  for (const auto& e : trace.e) U.push_back(lyapunov_value(a, e));
  return lyapunov_series(U, tol, floor);
}

double estimate_rate(const SimTrace& trace, double t_from, double t_to) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < trace.t.size() && i < trace.err_transform.size(); ++i) {
    const double t = trace.t[i];
    if (t < t_from || t > t_to) continue;
    const double mag = trace.err_transform[i];
    if (!(mag >= 1e-13)) throw std::domain_error("estimate_rate: |e| below 1e-13 in window");
    const double y = std::log(mag);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++count;
  }
  if (count < 2) throw std::domain_error("estimate_rate: fewer than two samples in window");
  const double c = static_cast<double>(count);
  return (c * sty - st * sy) / (c * stt - st * st);
}

namespace {
void put(std::ofstream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}
}  // namespace

void write_trace_csv(const std::string& path, const SimTrace& tr, const std::string& comment) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  const Eigen::Index n = tr.x.empty() ? 0 : tr.x.front().size();
  const Eigen::Index m = tr.z.empty() ? 0 : tr.z.front().rows();
  const Eigen::Index p = tr.z.empty() ? 0 : tr.z.front().cols();
  if (!comment.empty()) os << "# " << comment << '\n';
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x_" << i;
  for (Eigen::Index i = 1; i <= m; ++i) {
    for (Eigen::Index j = 1; j <= p; ++j) os << ",re_z_" << i << j << ",im_z_" << i << j;
  }
  for (Eigen::Index i = 1; i <= n; ++i) os << ",xhat_" << i;
  os << ",err_state,err_transform,U\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t s = 0; s < tr.t.size(); ++s) {
    put(os, tr.t[s]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',', put(os, tr.x[s][i]);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        os << ',', put(os, tr.z[s](i, j).real());
        os << ',', put(os, tr.z[s](i, j).imag());
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ',', put(os, s < tr.x_hat.size() ? tr.x_hat[s][i] : nan);
    }
    os << ',', put(os, s < tr.err_state.size() ? tr.err_state[s] : nan);
    os << ',', put(os, s < tr.err_transform.size() ? tr.err_transform[s] : nan);
    os << ',', put(os, s < tr.U.size() ? tr.U[s] : nan);
    os << '\n';
  }
  if (!os) throw std::runtime_error("error while writing '" + path + "'");
}

void write_plot_script(const std::string& script_path, const std::string& csv_name, int n, int m,
                       int p) {
  std::ofstream os(script_path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + script_path + "' for writing");
  const int err_state_col = 1 + n + 2 * m * p + n + 1;
  os << "set datafile separator ','\n"
     << "set datafile commentschars '#'\n"
     << "set key autotitle columnhead\n"
     << "set logscale y\n"
     << "set xlabel 't'\n"
     << "plot '" << csv_name << "' using 1:" << err_state_col << " with lines, \\\n"
     << "     '" << csv_name << "' using 1:" << err_state_col + 1 << " with lines\n";
}

}  // namespace kkl
