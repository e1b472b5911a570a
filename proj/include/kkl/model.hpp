#ifndef KKL_MODEL_HPP_
#define KKL_MODEL_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kkl {

using State = Eigen::VectorXd;
using Output = Eigen::VectorXd;

class DomainSpec;

/// Autonomous plant x' = f(x), y = h(x).
///
/// `lie` optionally returns L_f^i h(x) in closed form for i <= lie_max_order.
/// `lie_lipschitz` optionally bounds the Lipschitz constant of L_f^m h with
/// respect to H = (h, L_f h, ..., L_f^{m-1} h) over a domain.
struct SystemModel {
  int state_dim = 0;
  int output_dim = 0;
  std::function<State(const State&)> drift;
  std::function<Output(const State&)> output;
  std::function<Output(int, const State&)> lie;
  int lie_max_order = -1;
  std::function<std::optional<double>(int, const DomainSpec&)> lie_lipschitz;
  std::string label;

  bool has_lie(int order) const { return lie && order <= lie_max_order; }
};

struct Margins {
  double upsilon = 0.0;  // δ_Υ
  double d = 0.0;        // δ_d
  double u = 0.0;        // δ_u
};

/// Operating region O: an axis-aligned box or a Euclidean ball, plus the
/// three collar widths used by the cutoff and distinguishability checks.
class DomainSpec {
 public:
  DomainSpec() = default;  // empty; only useful as an assignment target
  static DomainSpec box(State lower, State upper, std::optional<Margins> margins = {});
  static DomainSpec ball(State center, double radius, std::optional<Margins> margins = {});

  bool is_box() const { return is_box_; }
  int dim() const { return static_cast<int>(lower_.size()); }

  /// Euclidean distance from x to cl(O); zero inside.
  double distance(const State& x) const;
  /// Closest point of cl(O).
  State project(const State& x) const;
  bool contains(const State& x, double slack = 0.0) const { return distance(x) <= slack; }
  double diameter() const;

  // Bounding box of cl(O).
  const State& lower() const { return lower_; }
  const State& upper() const { return upper_; }
  const State& center() const { return center_; }
  double radius() const { return radius_; }
  const Margins& margins() const { return margins_; }

  /// Canonical text used in fingerprints and config hashes.
  std::string canonical() const;

 private:
  void set_margins(std::optional<Margins> margins);

  bool is_box_ = true;
  State lower_, upper_, center_;
  double radius_ = 0.0;
  Margins margins_;
};

/// χ(x): 1 on O+δ_d, 0 outside O+δ_u, C¹ smoothstep in between.
double cutoff(const State& x, const DomainSpec& domain);

/// The modified plant χ(x) f(x), frozen outside the collar O+δ_u.
struct SaturatedSystem {
  SystemModel base;
  DomainSpec domain;

  State field(const State& x) const;
};

State saturated_field(const SaturatedSystem& sys, const State& x);

using BenchmarkParams = std::map<std::string, double>;

/// Named benchmark plants: harmonic, constant, integrator_chain,
/// van_der_pol, duffing, escape1d. Throws std::invalid_argument on an
/// unknown name or parameter.
SystemModel benchmark(const std::string& name, const BenchmarkParams& params = {});
std::vector<std::string> benchmark_names();

/// Output-dependent time rescaling γ(y) >= 1.
struct Rescaling {
  std::function<double(const Output&)> gamma;
  std::string label;
};

/// Polynomial γ(y) = Σ c_i |y|^i.
Rescaling polynomial_rescaling(std::vector<double> coeffs);

/// Plant with drift f(x)/γ(h(x)); closed-form Lie data is dropped.
SystemModel rescale(const SystemModel& model, const Rescaling& gamma);

struct LipschitzCheck {
  double drift = 0.0;
  double output = 0.0;
  bool finite = true;
};

/// Largest sampled difference quotient of f and h over cl(O+δ_u) from
/// `pairs` seeded random pairs. Non-finite values flag a failure.
LipschitzCheck empirical_lipschitz(const SystemModel& model, const DomainSpec& domain,
                                   int pairs = 10000, std::uint64_t seed = 0);

/// Defaults δ_Υ = 0.05 diam, δ_d = 0.1 diam, δ_u = 0.2 diam.
Margins default_margins(double diameter);

}  // namespace kkl

#endif  // KKL_MODEL_HPP_
