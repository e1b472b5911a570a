#ifndef KKL_TRANSFORM_HPP_
#define KKL_TRANSFORM_HPP_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "kkl/design.hpp"
#include "kkl/kernels.hpp"
#include "kkl/linalg.hpp"
#include "kkl/model.hpp"

namespace kkl {

using TransformFn = std::function<ComplexMatrix(const State&)>;

/// Uniform tensor grid; the last axis varies fastest in the linear index.
struct GridSpec {
  std::vector<int> counts;
  State lower;
  State upper;

  static GridSpec uniform(const DomainSpec& domain, int nodes_per_axis);
  static GridSpec uniform(const State& lower, const State& upper, int nodes_per_axis);

  int dim() const { return static_cast<int>(counts.size()); }
  std::size_t size() const;
  State node(std::size_t index) const;
  /// Largest per-axis node spacing.
  double spacing() const;
  /// Node positions as columns.
  Eigen::MatrixXd nodes() const;
};

/// Values of T on a grid over cl(O) plus the metadata needed to reproduce them.
struct TransformTable {
  GridSpec grid;
  int n = 0, m = 0, p = 0;
  std::vector<ComplexMatrix> values;
  double horizon = 0.0;
  double tol = 0.0;
  ComplexVector eigenvalues;
  std::uint64_t fingerprint = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  /// Flattened values (interleaved re/im) as columns.
  Eigen::MatrixXd value_matrix() const;
};

class FingerprintMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// T(x) = ∫_{-horizon}^0 exp(−As) B(h(X̆(x,s))) ds along the saturated flow.
ComplexMatrix eval_T(const SaturatedSystem& sys, const ObserverDesign& design, const State& x,
                     double horizon, double tol);

/// Upper bound on |B(h(x))| sampled over cl(O+δ_u).
double amplitude_bound(const SaturatedSystem& sys, const ObserverDesign& design,
                       int nodes_per_axis = 21);

/// Horizon after which the exponentially weighted tail is below tol.
double select_horizon(const ObserverDesign& design, double amplitude, double tol);

std::uint64_t table_fingerprint(const SaturatedSystem& sys, const ObserverDesign& design,
                                double horizon, double tol);

/// Throws FingerprintMismatch unless the table was built for (sys, design).
void check_fingerprint(const TransformTable& table, const SaturatedSystem& sys,
                       const ObserverDesign& design);

TransformTable tabulate(const SaturatedSystem& sys, const ObserverDesign& design,
                        const GridSpec& grid, double horizon, double tol,
                        kernels::Exec exec = kernels::Exec::parallel);

/// [T(X(x,dt)) − T(X(x,−dt))]/(2dt) − [A T(x) + B(h(x))] with X the flow of
/// the unmodified plant. Throws std::domain_error if the flow leaves O+δ_d.
ComplexMatrix edf_residual(const SaturatedSystem& sys, const ObserverDesign& design,
                           const TransformFn& transform, const State& x, double dt);

void save_table(const std::string& path, const TransformTable& table);
TransformTable load_table(const std::string& path);

}  // namespace kkl

#endif  // KKL_TRANSFORM_HPP_
