#ifndef KKL_RUNTIME_HPP_
#define KKL_RUNTIME_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kkl/design.hpp"
#include "kkl/highgain.hpp"
#include "kkl/inversion.hpp"
#include "kkl/model.hpp"
#include "kkl/transform.hpp"

namespace kkl {

enum class Mode { exact, approx, highgain, rescaled };

const char* to_string(Mode mode);
Mode parse_mode(const std::string& text);

/// Everything a simulation needs besides the initial condition.
///
/// exact:    ż = A z + B(y),           e = T(x) − z
/// rescaled: ż = γ(y) [A z + B(y)],     T built for f/γ(h)
/// approx:   ż = A z + 𝔉(z) + B(y),    𝔉 = 𝔈 ∘ T_a*, e = T_a(x) − z
/// highgain: approx with A = k diag(λ) and T_a, 𝔈 from the Lie bundle
struct SimulationSetup {
  Mode mode = Mode::exact;
  SystemModel plant;
  DomainSpec domain;
  ObserverDesign design;                  // b, and λ for exact/rescaled
  ComplexVector filter_eigenvalues;       // A actually used by ż
  TransformFn transform;                  // T or T_a; enables e(t)
  TransformFn error;                      // 𝔈 (approx/highgain)
  std::shared_ptr<const Inverter> inverter;
  std::optional<Rescaling> gamma;
  std::optional<GainCert> cert;

  static SimulationSetup exact(SystemModel plant, DomainSpec domain, ObserverDesign design,
                               TransformFn transform, std::shared_ptr<const Inverter> inverter);
  static SimulationSetup rescaled(SystemModel plant, DomainSpec domain, ObserverDesign design,
                                  Rescaling gamma, TransformFn transform,
                                  std::shared_ptr<const Inverter> inverter);
  static SimulationSetup approximate(Mode mode, SystemModel plant, DomainSpec domain,
                                     OutputMap b, const ApproximateTransform& approx,
                                     std::shared_ptr<const Inverter> inverter,
                                     std::optional<GainCert> cert);
};

struct SimOptions {
  double t_end = 10.0;
  double tol = 1e-9;
  double sample_stride = 0.01;
  double escape_norm = 1e8;
  bool override_cert = false;
  bool estimate_state = true;        // run the inverse at every sample
  bool transform_error = true;       // evaluate T(x(t)) at every sample
  bool per_step_lyapunov = false;    // U at every accepted step (needs a cheap T)
};

struct SimTrace {
  Mode mode = Mode::exact;
  std::vector<double> t;
  std::vector<State> x;
  std::vector<ComplexMatrix> z;
  std::vector<State> x_hat;            // empty when estimation is off
  std::vector<double> err_state;       // |x̂ − x|
  std::vector<ComplexMatrix> e;        // transform-space error, empty when off
  std::vector<double> err_transform;   // |e|
  std::vector<double> U;
  std::vector<double> gamma_integral;  // ∫ γ(y) dt
  std::vector<double> step_t, step_U;  // per accepted step, when requested

  ComplexVector filter_eigenvalues;
  ComplexMatrix P;
  bool escaped = false;
  double escape_time = std::numeric_limits<double>::quiet_NaN();
  std::string stop_reason;
  bool stayed_in_domain = true;
  double min_gamma = std::numeric_limits<double>::infinity();
  bool observer_finite = true;
  std::vector<std::string> warnings;
};

/// Co-integrates plant and observer on one adaptive engine and samples the
/// estimate every `sample_stride`. Stops at t_end or at plant escape.
SimTrace simulate(const SimulationSetup& setup, const State& x0, const ComplexMatrix& z0,
                  const SimOptions& options);

/// U(e) = Σ_i conj(e_i)ᵀ P e_i over columns, for diagonal A.
double lyapunov_value(const ComplexVector& filter_eigenvalues, const ComplexMatrix& e);

struct LyapunovVerdict {
  std::vector<double> U;
  bool monotone = true;
  std::size_t first_violation = 0;
};

/// Recomputes U over the trace's samples; monotone iff
/// U(t_{j+1}) <= U(t_j)(1 + 10 tol) + floor for every consecutive pair.
/// `floor` absorbs increments below the resolution of the integrator.
LyapunovVerdict lyapunov_trace(const SimTrace& trace, const ComplexVector& filter_eigenvalues,
                               double tol, double floor = 0.0);

/// Same verdict over an explicit series.
LyapunovVerdict lyapunov_series(const std::vector<double>& U, double tol, double floor = 0.0);

/// Least-squares slope of log|e(t)| over [t_from, t_to]. Throws
/// std::domain_error when |e| < 1e-13 inside the window.
double estimate_rate(const SimTrace& trace, double t_from, double t_to);

/// CSV: optional comment line, then
/// t, x_1..x_n, re_z_11, im_z_11, ..., im_z_mp, xhat_1..xhat_n, err_state, err_transform, U
void write_trace_csv(const std::string& path, const SimTrace& trace,
                     const std::string& comment = {});

/// Gnuplot script plotting |e| and |x̂ − x| from a trace CSV.
void write_plot_script(const std::string& script_path, const std::string& csv_name, int n,
                       int m, int p);

}  // namespace kkl

#endif  // KKL_RUNTIME_HPP_
