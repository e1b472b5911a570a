#ifndef KKL_ODE_HPP_
#define KKL_ODE_HPP_

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kkl {

/// dx = F(t, x). Written into a caller-owned buffer to avoid allocation.
using Field = std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx)>;

/// Wraps an autonomous map x -> f(x).
Field autonomous(std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f);

enum class StopReason { completed, step_underflow, norm_bound, non_finite, max_steps, event };

const char* to_string(StopReason reason);

struct IntegratorOptions {
  double tol = 1e-9;
  double initial_step = 0.0;  // 0 picks a step from the field scale
  double min_step_rel = 1e-14;
  long max_steps = 50'000'000;
  double escape_norm = std::numeric_limits<double>::infinity();
  /// Store every accepted step.
  bool record_steps = true;
  /// Extra output times, served by the continuous extension. Must be
  /// ordered in the direction of integration.
  std::vector<double> sample_times;
  /// Optional terminal event: integration stops after the first accepted
  /// step whose end state satisfies it.
  std::function<bool(double, const Eigen::VectorXd&)> stop_when;
};

/// Solution samples of an initial value problem.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> sample_times;
  std::vector<Eigen::VectorXd> samples;

  StopReason reason = StopReason::completed;
  bool escaped = false;
  double escape_time = std::numeric_limits<double>::quiet_NaN();
  double final_time = 0.0;
  Eigen::VectorXd final_state;
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
};

/// Dormand–Prince 5(4) with step-size control on the mixed error
/// max_i |err_i| / (tol (1 + |x_i|)) and the 4th-order continuous extension.
/// t1 < t0 integrates backward. Escape (step underflow, norm bound, or a
/// non-finite state) stops the run and sets `escaped` with the last valid
/// time and state.
Trajectory integrate(const Field& field, const Eigen::VectorXd& x0, double t0, double t1,
                     const IntegratorOptions& options = {});

}  // namespace kkl

#endif  // KKL_ODE_HPP_
