#ifndef KKL_PIPELINE_HPP_
#define KKL_PIPELINE_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kkl/design.hpp"
#include "kkl/highgain.hpp"
#include "kkl/injectivity.hpp"
#include "kkl/inversion.hpp"
#include "kkl/kernels.hpp"
#include "kkl/runtime.hpp"
#include "kkl/scenario.hpp"
#include "kkl/transform.hpp"

namespace kkl {

using Json = nlohmann::ordered_json;

/// A scenario with its plant, filter and horizon resolved.
struct Plan {
  Scenario scenario;
  Mode mode = Mode::exact;
  SystemModel plant;          // what the simulation integrates
  SaturatedSystem sys;        // saturated design plant (f/γ(h) when rescaled)
  ObserverDesign design;      // λ (before any gain), b, ℓ
  std::optional<Rescaling> gamma;
  double horizon = 0.0;       // exact/rescaled only
  GridSpec grid;
};

Plan resolve(const Scenario& scenario);

/// Configured initial states followed by `random_initial` seeded draws in O.
std::vector<State> initial_conditions(const Plan& plan);

struct Synthesis {
  TransformTable table;            // T, or T_a at the certified gain
  InjectivityReport injectivity;
  std::optional<GainCert> cert;    // highgain only
  std::optional<ApproximateTransform> approx;
};

/// Throws CertificationError in highgain mode when no gain qualifies.
GainCert certify(const Plan& plan, kernels::Exec exec = kernels::Exec::parallel);
Synthesis synthesize(const Plan& plan, kernels::Exec exec = kernels::Exec::parallel);

/// T for exact/rescaled plans.
TransformFn exact_transform(const Plan& plan);
std::shared_ptr<const Inverter> make_inverter(const Plan& plan, const Synthesis& synth);
SimulationSetup make_setup(const Plan& plan, const Synthesis& synth);
SimOptions sim_options(const Plan& plan, bool override_cert);

/// Fingerprint stamped on T_a tables (they have no horizon or quadrature tol).
std::uint64_t highgain_fingerprint(const Plan& plan, double k);

Json provenance(const Scenario& scenario);
Json injectivity_json(const Plan& plan, const Synthesis& synth);
Json cert_json(const Plan& plan, const GainCert& cert);
Json inverse_json(const Plan& plan, const InverseQuery& q);
Json trace_summary_json(const SimTrace& trace, const State& x0);

struct RunFlags {
  bool override_cert = false;
  bool plot = false;
  kernels::Exec exec = kernels::Exec::parallel;
};

/// Runs synth, certify, invert or simulate and writes its artifacts under
/// `out_dir`. Returns the files written, in order. Throws
/// CertificationError when a gain certificate cannot be issued or is
/// required but unsatisfied.
std::vector<std::string> run_command(const std::string& command, const Plan& plan,
                                     const std::string& out_dir, const RunFlags& flags);

/// Pretty JSON plus a trailing newline; no timestamps, so reruns match.
void write_json(const std::string& path, const Json& json);
Json read_json(const std::string& path);

}  // namespace kkl

#endif  // KKL_PIPELINE_HPP_
