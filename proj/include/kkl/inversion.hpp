#ifndef KKL_INVERSION_HPP_
#define KKL_INVERSION_HPP_

#include <cstdint>

#include "kkl/injectivity.hpp"
#include "kkl/kernels.hpp"
#include "kkl/transform.hpp"

namespace kkl {

struct InverseQuery {
  ComplexMatrix z;
  State x_hat;
  double residual = 0.0;       // |T(x̂) − z|
  double seed_residual = 0.0;  // |T(x_g) − z| at the seeding node
  std::size_t seed_node = 0;
  int iterations = 0;
};

struct InversionOptions {
  double tol = 1e-10;
  int max_iterations = 50;
  double fd_rel_step = 1e-5;
  kernels::Exec exec = kernels::Exec::serial;
};

/// Nearest-point left inverse of T over cl(O): seeds at the tabulated node
/// closest to z, then runs projected damped Gauss–Newton on |T(x) − z|²
/// with a monotone line search. x̂ always lies in cl(O).
class Inverter {
 public:
  Inverter(Eigen::MatrixXd nodes, Eigen::MatrixXd values, TransformFn transform,
           DomainSpec domain, int rows, int cols, InversionOptions options = {});

  /// Builds from a table after checking its fingerprint against (sys, design).
  static Inverter from_table(const TransformTable& table, const SaturatedSystem& sys,
                             const ObserverDesign& design, InversionOptions options = {});

  InverseQuery invert(const ComplexMatrix& z) const;
  const DomainSpec& domain() const { return domain_; }
  const InversionOptions& options() const { return options_; }
  const TransformFn& transform() const { return transform_; }

 private:
  Eigen::MatrixXd nodes_;
  Eigen::MatrixXd values_;
  TransformFn transform_;
  DomainSpec domain_;
  int rows_, cols_;
  InversionOptions options_;
};

InverseQuery invert(const TransformTable& table, const SaturatedSystem& sys,
                    const ObserverDesign& design, const ComplexMatrix& z, double tol);

struct ContinuityStats {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double violation_fraction = 0.0;
  double max_error = 0.0;     // max |x̂ − x|
  double max_excess = 0.0;    // max of |x̂ − x| − bound, may be negative
  bool codomain_ok = true;    // every x̂ in cl(O)
};

/// Draws x uniformly in cl(O) and z = T(x) + perturbation with
/// |perturbation| = `perturbation`; checks |x̂ − x| <= ρ(2|T(x) − z|) + spacing.
ContinuityStats check_uniform_continuity(const Inverter& inverter, const RhoEnvelope& rho,
                                         double grid_spacing, std::size_t samples,
                                         double perturbation, std::uint64_t seed);

}  // namespace kkl

#endif  // KKL_INVERSION_HPP_
