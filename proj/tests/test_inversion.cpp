#include <gtest/gtest.h>

#include "kkl/inversion.hpp"

namespace kkl {
namespace {

// Harmonic oscillator, λ = (−1, −2): T(x) = (−(λ x1 + x2)/(1 + λ²))_λ.
ComplexMatrix harmonic_T(const State& x) {
  ComplexMatrix T(2, 1);
  T(0, 0) = (x[0] - x[1]) / 2.0;
  T(1, 0) = (2.0 * x[0] - x[1]) / 5.0;
  return T;
}

Inverter harmonic_inverter(int nodes_per_axis = 11) {
  const DomainSpec dom = DomainSpec::box(State::Constant(2, -1), State::Constant(2, 1));
  const GridSpec g = GridSpec::uniform(dom, nodes_per_axis);
  Eigen::MatrixXd values(4, static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    values.col(static_cast<Eigen::Index>(i)) = flatten(harmonic_T(g.node(i)));
  }
  return Inverter(g.nodes(), values, harmonic_T, dom, 2, 1);
}

TEST(Invert, WorkedExample) {
  ComplexMatrix z(2, 1);
  z << 0.0, 0.2;
  const InverseQuery q = harmonic_inverter().invert(z);
  EXPECT_NEAR(q.x_hat[0], 1.0, 1e-9);
  EXPECT_NEAR(q.x_hat[1], 1.0, 1e-9);
  EXPECT_LT(q.residual, 1e-9);
}

// Property: T*(T(x)) = x for x in O, and x̂ always lands in cl(O).
TEST(Invert, RoundTripAndCodomain) {
  const Inverter inv = harmonic_inverter(7);
  for (double a = -0.95; a < 1.0; a += 0.23) {
    for (double b = -0.95; b < 1.0; b += 0.31) {
      const State x{{a, b}};
      EXPECT_LT((inv.invert(harmonic_T(x)).x_hat - x).norm(), 1e-8);
    }
  }
  ComplexMatrix far(2, 1);
  far << 40.0, -3.0;
  const InverseQuery q = inv.invert(far);
  EXPECT_LE(inv.domain().distance(q.x_hat), 1e-12);
  EXPECT_LE(q.residual, q.seed_residual);
}

TEST(Invert, RejectsWrongShape) {
  EXPECT_THROW(harmonic_inverter().invert(ComplexMatrix::Zero(3, 1)), std::invalid_argument);
}

TEST(Invert, FromTableChecksFingerprint) {
  const SaturatedSystem sys{benchmark("harmonic"),
                            DomainSpec::box(State::Constant(2, -1), State::Constant(2, 1),
                                            Margins{0.2, 0.5, 1.0})};
  ObserverDesign d;
  d.eigenvalues = to_vector({{-1, 0}, {-2, 0}});
  const TransformTable t = tabulate(sys, d, GridSpec::uniform(sys.domain, 9), 25.0, 1e-10);
  ComplexMatrix z(2, 1);
  z << 0.0, 0.2;
  const InverseQuery q = invert(t, sys, d, z, 1e-10);
  EXPECT_NEAR(q.x_hat[0], 1.0, 1e-7);
  EXPECT_NEAR(q.x_hat[1], 1.0, 1e-7);
  ObserverDesign other = d;
  other.eigenvalues[1] = -3.0;
  EXPECT_THROW(Inverter::from_table(t, sys, other), FingerprintMismatch);
}

TEST(Invert, UniformContinuityCheck) {
  const Inverter inv = harmonic_inverter(11);
  RhoEnvelope rho;
  rho.valid = true;
  rho.knots = {0.0, 1.0};
  rho.values = {0.0, 4.0};  // 1/σ_min ≈ 3.5 for this map
  const ContinuityStats st = check_uniform_continuity(inv, rho, 0.2, 200, 1e-3, 5);
  EXPECT_EQ(st.samples, 200u);
  EXPECT_EQ(st.violations, 0u);
  EXPECT_TRUE(st.codomain_ok);
  EXPECT_LT(st.max_error, 1e-2);
}

}  // namespace
}  // namespace kkl
