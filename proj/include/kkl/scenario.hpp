#ifndef KKL_SCENARIO_HPP_
#define KKL_SCENARIO_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kkl/linalg.hpp"
#include "kkl/model.hpp"

namespace kkl {

/// Config problem, with the 1-based line it was found on (0 if unknown).
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& source, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

inline constexpr int kScenarioSchema = 1;

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;  // fnv1a of the config file bytes

  std::string model_name;
  BenchmarkParams model_params;
  DomainSpec domain;

  std::string mode = "exact";  // exact | highgain | rescaled
  double decay_bound = -1.0;   // ℓ
  std::optional<std::vector<Complex>> eigenvalues;  // sampled from ℓ when absent
  bool conjugate_closed = true;
  std::string output_map = "identity";
  std::optional<int> m;
  std::vector<double> k_ladder;   // empty: powers of two
  std::optional<double> k_factor; // simulate at k_factor · k* instead of the ladder k

  int nodes_per_axis = 21;
  std::size_t max_pairs = 1'000'000;
  double quad_tol = 1e-9;
  double integrator_tol = 1e-9;
  double inversion_tol = 1e-10;
  std::optional<double> horizon;  // auto when absent

  std::vector<State> x0;
  int random_initial = 0;  // extra initial conditions drawn uniformly in O
  double t_end = 10.0;
  double sample_stride = 0.01;
  double escape_norm = 1e8;
  bool estimate_state = true;
  bool per_step_lyapunov = false;
  std::optional<std::vector<double>> gamma;  // γ(y) = Σ c_i |y|^i

  std::optional<ComplexMatrix> invert_z;

  std::string output_dir = "out";
};

/// Parses a YAML scenario. Unknown keys and schema mismatches are errors.
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::string& path);

}  // namespace kkl

#endif  // KKL_SCENARIO_HPP_
