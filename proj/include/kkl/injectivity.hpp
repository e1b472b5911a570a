#ifndef KKL_INJECTIVITY_HPP_
#define KKL_INJECTIVITY_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "kkl/kernels.hpp"
#include "kkl/linalg.hpp"
#include "kkl/model.hpp"
#include "kkl/transform.hpp"

namespace kkl {

/// Monotone piecewise-linear ρ with ρ(0) = 0, extended linearly past the
/// last knot.
struct RhoEnvelope {
  std::vector<double> knots;   // |ΔT| abscissae, knots[0] = 0
  std::vector<double> values;  // ρ(knots[i]), nondecreasing
  bool valid = false;          // false when a collision makes ρ unbounded

  double operator()(double s) const;
};

struct InjectivityReport {
  double modulus = 0.0;  // min |ΔT| / |Δx| over tested pairs
  RhoEnvelope rho;
  std::size_t pair_count = 0;
  bool subsampled = false;
  std::size_t collisions = 0;
  Eigen::Index worst_first = -1;
  Eigen::Index worst_second = -1;
  std::uint64_t seed = 0;
};

/// n+1 distinct eigenvalues with Re in [4ℓ, ℓ) and Im in [0, 3|ℓ|].
/// With `conjugate_closed` they come in conjugate pairs, plus one real value
/// when n+1 is odd.
std::vector<Complex> sample_eigenvalues(int n, double decay_bound, std::uint64_t seed,
                                        bool conjugate_closed);

/// Scans pairs of columns (all of them, or `max_pairs` seeded draws when
/// there are more) and fits ρ as the least monotone envelope of
/// (|ΔT|, |Δx|) inflated by 5%.
InjectivityReport injectivity_modulus(const Eigen::MatrixXd& points, const Eigen::MatrixXd& images,
                                      std::uint64_t seed = 0,
                                      kernels::Exec exec = kernels::Exec::parallel,
                                      std::size_t max_pairs = 1'000'000);

InjectivityReport injectivity_modulus(const TransformTable& table, std::uint64_t seed = 0,
                                      kernels::Exec exec = kernels::Exec::parallel,
                                      std::size_t max_pairs = 1'000'000);

/// Fits the envelope to an explicit scatter; exposed for testing.
RhoEnvelope fit_envelope(const std::vector<double>& image_dist,
                         const std::vector<double>& input_dist, int segments = 32,
                         double inflation = 1.05);

struct SeparationResult {
  double separation = 0.0;  // sup_t |h(X̆(x1,t)) − h(X̆(x2,t))| over [−horizon, 0]
  bool flagged = false;     // below threshold
};

std::vector<SeparationResult> distinguishability_check(
    const SaturatedSystem& sys, const std::vector<std::pair<State, State>>& pairs,
    double horizon, double threshold, int samples = 2001);

}  // namespace kkl

#endif  // KKL_INJECTIVITY_HPP_
