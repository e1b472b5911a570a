#include <gtest/gtest.h>

#include "kkl/linalg.hpp"

namespace kkl {
namespace {

TEST(Lyapunov, DiagonalClosedForm) {
  const ComplexVector a = to_vector({{-1, 0}, {-2, 3}, {-0.5, -1}});
  const LyapunovSolution s = solve_lyapunov(a);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(s.P(i, i).real(), -1.0 / (2.0 * a[i].real()), 1e-15);
  }
  EXPECT_NEAR(s.lambda_max, 1.0, 1e-15);
  EXPECT_NEAR(s.lambda_min, 0.25, 1e-15);
  EXPECT_LE(s.residual, 1e-14);
}

TEST(Lyapunov, RejectsNonHurwitz) {
  try {
    solve_lyapunov(to_vector({{-1, 0}, {0.0, 2.0}}));
    FAIL() << "expected NotHurwitzError";
  } catch (const NotHurwitzError& e) {
    EXPECT_EQ(e.index(), 1u);
    EXPECT_EQ(e.eigenvalue(), Complex(0.0, 2.0));
  }
}

TEST(GainMatrices, TwoByTwoExample) {
  const GainMatrices g = gain_matrices(to_vector({{-1, 0}, {-2, 0}}), 3.0);
  ComplexMatrix S(2, 2);
  S << -1.0, 1.0, -0.5, 0.25;
  EXPECT_TRUE(g.S.isApprox(S, 1e-15));
  ComplexMatrix Si(2, 2);
  Si << 1.0, -4.0, 2.0, -4.0;
  EXPECT_TRUE(g.S_inv.isApprox(Si, 1e-14));
  EXPECT_DOUBLE_EQ(g.K[0], 3.0);
  EXPECT_DOUBLE_EQ(g.K[1], 9.0);
  // ‖S⁻¹‖₂² is the top eigenvalue of [[5, −12], [−12, 32]].
  EXPECT_NEAR(g.S_inv_norm, std::sqrt((37.0 + std::sqrt(1305.0)) / 2.0), 1e-12);
}

TEST(GainMatrices, RejectsDegenerateInput) {
  EXPECT_THROW(gain_matrices(to_vector({{-1, 0}, {-1, 0}}), 1.0), std::invalid_argument);
  EXPECT_THROW(gain_matrices(to_vector({{0, 0}, {-1, 0}}), 1.0), std::invalid_argument);
  EXPECT_THROW(gain_matrices(to_vector({{-1, 0}}), 0.0), std::invalid_argument);
}

TEST(Flatten, RoundTripAndLayout) {
  ComplexMatrix z(2, 2);
  z << Complex(1, 2), Complex(3, 4), Complex(5, 6), Complex(7, 8);
  const Eigen::VectorXd v = flatten(z);
  ASSERT_EQ(v.size(), 8);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(v[i], i + 1.0);
  EXPECT_EQ(unflatten(v, 2, 2), z);
  ComplexMatrix w(2, 2);
  unflatten_into(v.data(), w);
  EXPECT_EQ(w, z);
}

TEST(Norms, SpectralNormAndMaxReal) {
  ComplexMatrix M = ComplexMatrix::Zero(2, 2);
  M(0, 0) = Complex(0, 3);
  M(1, 1) = 2.0;
  EXPECT_NEAR(spectral_norm(M), 3.0, 1e-15);
  EXPECT_EQ(max_real(to_vector({{-3, 1}, {-0.5, 0}, {-2, 0}})), -0.5);
}

}  // namespace
}  // namespace kkl
