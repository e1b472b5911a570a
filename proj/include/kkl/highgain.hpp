#ifndef KKL_HIGHGAIN_HPP_
#define KKL_HIGHGAIN_HPP_

#include <optional>
#include <stdexcept>
#include <vector>

#include "kkl/design.hpp"
#include "kkl/kernels.hpp"
#include "kkl/linalg.hpp"
#include "kkl/model.hpp"
#include "kkl/transform.hpp"

namespace kkl {

/// H(x) = (b(h), L_f b(h), ..., L_f^{m−1} b(h)) as rows, plus L_f^m b(h).
struct LieBundle {
  Eigen::MatrixXd H;  // m × p
  Output top;         // p
};

struct LieOptions {
  double fd_step = 1e-3;
  /// When set, finite differencing fails if the stencil leaves O+δ_u.
  const DomainSpec* domain = nullptr;
  bool force_finite_differences = false;
};

/// Closed-form Lie derivatives when the model provides them (and b is the
/// identity); otherwise central differences of t ↦ b(h(X(x,t))) with one
/// Richardson step.
LieBundle lie_bundle(const SystemModel& model, const OutputMap& b, int m, const State& x,
                     const LieOptions& options = {});

/// T_a(x) = −Σ_{i=1}^m (kA)^{−i} B_1m L_f^{i−1} b(h(x)).
ComplexMatrix ta_from_bundle(const ComplexVector& eigenvalues, double k, const LieBundle& bundle);
/// The same map written as −S K⁻¹ H(x) with S, K from gain_matrices.
ComplexMatrix ta_matrix_form(const ComplexVector& eigenvalues, double k, const LieBundle& bundle);
/// 𝔈(x) = −(kA)^{−m} B_1m L_f^m b(h(x)).
ComplexMatrix error_from_bundle(const ComplexVector& eigenvalues, double k,
                                const LieBundle& bundle);

ComplexMatrix build_Ta(const SystemModel& model, const ComplexVector& eigenvalues, double k,
                       const OutputMap& b, int m, const State& x, const LieOptions& options = {});

ComplexMatrix approx_error(const SystemModel& model, const ComplexVector& eigenvalues, double k,
                           const OutputMap& b, int m, const State& x,
                           const LieOptions& options = {});

/// 𝔈 by its definition L_f T_a − [kA T_a + B_1m b(h)], with L_f T_a from a
/// central difference along the flow of width 2·dt.
ComplexMatrix approx_error_fd(const SystemModel& model, const ComplexVector& eigenvalues, double k,
                              const OutputMap& b, int m, const State& x, double dt,
                              const LieOptions& options = {});

/// Residual of  M L_f H − kA M H + B_1m b(h) − (kA)^{−m} B_1m L_f^m b(h)
/// with M = S K⁻¹ and L_f H by central differences along the flow.
ComplexMatrix exactness_residual(const SystemModel& model, const ComplexVector& eigenvalues,
                                 double k, const OutputMap& b, int m, const State& x, double dt,
                                 const LieOptions& options = {});

/// L_f T_a from the shifted bundle (exact when the Lie data is closed-form).
ComplexMatrix lie_derivative_ta(const SystemModel& model, const ComplexVector& eigenvalues,
                                double k, const OutputMap& b, int m, const State& x,
                                const LieOptions& options = {});

struct GainCert {
  double L_empirical = 0.0;
  std::optional<double> L_analytic;
  double L = 0.0;                // constant used in N
  double N = 0.0;                // analytic, k-independent
  double N_empirical = 0.0;      // sampled at the selected k
  double B_norm = 0.0;           // |B_1m| = √m
  double S_inv_norm = 0.0;
  double min_abs_eig_pow_m = 0.0;
  double k_required = 0.0;       // k* = N / (−max Re λ)
  double k = 0.0;                // selected gain
  double lambda_max = 0.0;       // of P(kA)
  double lambda_min = 0.0;
  ComplexMatrix P;
  double epsilon = 0.0;
  bool satisfied = false;
  ComplexVector eigenvalues;
  int m = 0;
  std::size_t pair_count = 0;
};

class CertificationError : public std::runtime_error {
 public:
  CertificationError(const std::string& what, GainCert cert)
      : std::runtime_error(what), cert_(std::move(cert)) {}
  const GainCert& cert() const { return cert_; }

 private:
  GainCert cert_;
};

/// {1, 2, 4, ..., 2^15}.
std::vector<double> default_k_ladder();

/// Estimates L over grid pairs, bounds N analytically, and picks the smallest
/// k in the ladder with N / (k (−max Re λ)) < 1. Throws CertificationError
/// (carrying the partial certificate and k*) when none qualifies.
GainCert certify_gain(const SystemModel& model, const DomainSpec& domain,
                      const ComplexVector& eigenvalues, const OutputMap& b, int m,
                      const GridSpec& grid, const std::vector<double>& k_candidates,
                      kernels::Exec exec = kernels::Exec::parallel, std::uint64_t seed = 0,
                      std::size_t max_pairs = 1'000'000);

/// Completes the certificate's Lyapunov quantities for gain k.
void evaluate_gain(GainCert& cert, double k);

/// T_a, 𝔈 and the filter eigenvalues kλ for the high-gain observer.
struct ApproximateTransform {
  ComplexVector filter_eigenvalues;
  TransformFn transform;
  TransformFn error;
  int m = 0, p = 0;
};

ApproximateTransform high_gain_transform(const SystemModel& model,
                                         const ComplexVector& eigenvalues, double k,
                                         const OutputMap& b, int m,
                                         const LieOptions& options = {});

}  // namespace kkl

#endif  // KKL_HIGHGAIN_HPP_
