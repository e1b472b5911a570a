#include "kkl/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kkl {

Field autonomous(std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f) {
  return [f = std::move(f)](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { dx = f(x); };
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::completed: return "completed";
    case StopReason::step_underflow: return "step_underflow";
    case StopReason::norm_bound: return "norm_bound";
    case StopReason::non_finite: return "non_finite";
    case StopReason::max_steps: return "max_steps";
    case StopReason::event: return "event";
  }
  return "unknown";
}

namespace {

// Dormand–Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (order 4).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double initial_step(const Field& f, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& fx,
                    double tol, double dir, double span, long& evals) {
  const Eigen::ArrayXd sc = tol * (1.0 + x.array().abs());
  const double d0 = std::sqrt((x.array() / sc).square().mean());
  const double d1n = std::sqrt((fx.array() / sc).square().mean());
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, span);
  Eigen::VectorXd x1 = x + dir * h0 * fx;
  Eigen::VectorXd f1(x.size());
  f(t + dir * h0, x1, f1);
  ++evals;
  const double d2 = std::sqrt(((f1 - fx).array() / sc).square().mean()) / h0;
  const double dm = std::max(d1n, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, span});
}

}  // namespace

Trajectory integrate(const Field& field, const Eigen::VectorXd& x0, double t0, double t1,
                     const IntegratorOptions& opt) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("integrate: tol must be positive");
  Trajectory traj;
  const Eigen::Index n = x0.size();
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);

  Eigen::VectorXd y = x0;
  double t = t0;
  if (opt.record_steps) {
    traj.times.push_back(t);
    traj.states.push_back(y);
  }
  std::size_t next_sample = 0;
  const auto& samples = opt.sample_times;
  auto emit_sample = [&](double ts, const Eigen::VectorXd& v) {
    traj.sample_times.push_back(ts);
    traj.samples.push_back(v);
  };
  while (next_sample < samples.size() && dir * (samples[next_sample] - t) <= 0.0) {
    emit_sample(samples[next_sample++], y);
  }

  auto finish = [&](StopReason reason) {
    traj.reason = reason;
    traj.final_time = t;
    traj.final_state = y;
    if (reason == StopReason::step_underflow || reason == StopReason::norm_bound ||
        reason == StopReason::non_finite) {
      traj.escaped = true;
      traj.escape_time = t;
    }
    return traj;
  };

  if (!finite(y)) return finish(StopReason::non_finite);
  if (span == 0.0) return finish(StopReason::completed);

  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n), err(n);
  field(t, y, k1);
  ++traj.evaluations;
  if (!finite(k1)) return finish(StopReason::non_finite);

  double h = opt.initial_step > 0.0
                 ? std::min(opt.initial_step, span)
                 : initial_step(field, t, y, k1, opt.tol, dir, span, traj.evaluations);
  bool last_rejected = false;

  while (dir * (t1 - t) > 0.0) {
    if (traj.steps + traj.rejected >= opt.max_steps) return finish(StopReason::max_steps);
    const double remaining = std::abs(t1 - t);
    if (h >= remaining) h = remaining;
    if (h < opt.min_step_rel * std::max(1.0, std::abs(t)) && h < remaining) {
      return finish(StopReason::step_underflow);
    }
    const double hs = dir * h;

    ytmp = y + hs * a21 * k1;
    field(t + c2 * hs, ytmp, k2);
    ytmp = y + hs * (a31 * k1 + a32 * k2);
    field(t + c3 * hs, ytmp, k3);
    ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    field(t + c4 * hs, ytmp, k4);
    ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    field(t + c5 * hs, ytmp, k5);
    ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    field(t + hs, ytmp, k6);
    y1 = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const double t_new = (h == remaining) ? t1 : t + hs;
    field(t_new, y1, k7);
    traj.evaluations += 6;

    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err_norm = std::numeric_limits<double>::infinity();
    if (finite(y1) && finite(k7) && finite(err)) {
      const Eigen::ArrayXd scale =
          opt.tol * (1.0 + y.array().abs().max(y1.array().abs()));
      err_norm = (err.array().abs() / scale).maxCoeff();
    }

    if (!(err_norm <= 1.0)) {
      ++traj.rejected;
      const double fac =
          std::isfinite(err_norm) ? std::max(0.2, 0.9 * std::pow(err_norm, -0.2)) : 0.2;
      h *= fac;
      last_rejected = true;
      continue;
    }

    if (y1.lpNorm<Eigen::Infinity>() > opt.escape_norm) return finish(StopReason::norm_bound);

    // Continuous extension coefficients for sample output.
    if (next_sample < samples.size() && dir * (samples[next_sample] - t_new) <= 0.0) {
      const Eigen::VectorXd ydiff = y1 - y;
      const Eigen::VectorXd bspl = hs * k1 - ydiff;
      const Eigen::VectorXd r4 = ydiff - hs * k7 - bspl;
      const Eigen::VectorXd r5 =
          hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      while (next_sample < samples.size() && dir * (samples[next_sample] - t_new) <= 0.0) {
        const double ts = samples[next_sample++];
        const double th = (ts - t) / hs;
        const double th1 = 1.0 - th;
        emit_sample(ts, y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5))));
      }
    }

    t = t_new;
    y = y1;
    k1 = k7;
    ++traj.steps;
    if (opt.record_steps) {
      traj.times.push_back(t);
      traj.states.push_back(y);
    }
    if (opt.stop_when && opt.stop_when(t, y)) return finish(StopReason::event);

    double fac = std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err_norm, 1e-10), -0.2)));
    if (last_rejected) fac = std::min(fac, 1.0);
    h *= fac;
    last_rejected = false;
  }
  return finish(StopReason::completed);
}

}  // namespace kkl
