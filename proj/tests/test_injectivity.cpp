#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "kkl/injectivity.hpp"

namespace kkl {
namespace {

TEST(SampleEigenvalues, RangesAndConjugateClosure) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (int n : {1, 2, 3}) {
      const auto eigs = sample_eigenvalues(n, -1.5, seed, true);
      ASSERT_EQ(eigs.size(), static_cast<std::size_t>(n + 1));
      for (const Complex& l : eigs) {
        EXPECT_GE(l.real(), -6.0);
        EXPECT_LT(l.real(), -1.5);
        EXPECT_LE(std::abs(l.imag()), 4.5);
        const bool has_conj = std::any_of(eigs.begin(), eigs.end(),
                                          [&](const Complex& c) { return c == std::conj(l); });
        EXPECT_TRUE(has_conj);
      }
      for (std::size_t i = 0; i < eigs.size(); ++i) {
        for (std::size_t j = i + 1; j < eigs.size(); ++j) EXPECT_GT(std::abs(eigs[i] - eigs[j]), 1e-3);
      }
    }
  }
  EXPECT_EQ(sample_eigenvalues(2, -1.0, 5, true), sample_eigenvalues(2, -1.0, 5, true));
  EXPECT_NE(sample_eigenvalues(2, -1.0, 5, true), sample_eigenvalues(2, -1.0, 6, true));
}

// For a linear map T(x) = M x the modulus is σ_min(M); grid pair
// directions approach it from above.
TEST(Modulus, LinearMapApproachesSmallestSingularValue) {
  Eigen::Matrix2d M;
  M << 0.5, -0.5, 0.4, -0.2;  // harmonic oscillator rows for λ = −1, −2
  const double sigma_min = Eigen::JacobiSVD<Eigen::Matrix2d>(M).singularValues()[1];
  const int n = 21;
  Eigen::MatrixXd X(2, n * n), Y(4, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Eigen::Vector2d x(-1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1));
      const Eigen::Vector2d y = M * x;
      X.col(i * n + j) = x;
      Y.col(i * n + j) << y[0], 0.0, y[1], 0.0;
    }
  }
  const InjectivityReport r = injectivity_modulus(X, Y, 1, kernels::Exec::parallel);
  EXPECT_GE(r.modulus, sigma_min * (1 - 1e-12));
  EXPECT_LE(r.modulus, sigma_min * 1.02);
  EXPECT_EQ(r.collisions, 0u);
  EXPECT_FALSE(r.subsampled);
  EXPECT_EQ(r.pair_count, static_cast<std::size_t>(n * n) * (n * n - 1) / 2);
  EXPECT_TRUE(r.rho.valid);

  const InjectivityReport s = injectivity_modulus(X, Y, 1, kernels::Exec::serial);
  EXPECT_EQ(s.modulus, r.modulus);
  EXPECT_EQ(s.rho.knots, r.rho.knots);
  EXPECT_EQ(s.rho.values, r.rho.values);
}

TEST(Modulus, CollisionIsReported) {
  Eigen::MatrixXd X(1, 3), Y(2, 3);
  X << 0.0, 1.0, 2.0;
  Y << 0.0, 1.0, 0.0, 0.0, 0.0, 0.0;  // x = 0 and x = 2 share an image
  const InjectivityReport r = injectivity_modulus(X, Y);
  EXPECT_EQ(r.modulus, 0.0);
  EXPECT_EQ(r.collisions, 1u);
  EXPECT_FALSE(r.rho.valid);
  EXPECT_TRUE(std::isinf(r.rho(0.5)));
}

TEST(Modulus, SubsamplesAboveThePairBudget) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(2, 200), Y = 3.0 * X;
  const InjectivityReport r = injectivity_modulus(X, Y, 7, kernels::Exec::parallel, 1000);
  EXPECT_TRUE(r.subsampled);
  EXPECT_EQ(r.pair_count, 1000u);
  EXPECT_NEAR(r.modulus, 3.0, 1e-12);
}

// Property: ρ(0) = 0, ρ nondecreasing, and ρ(|ΔT|) >= |Δx| on the fitted data.
TEST(Envelope, DominatesScatterAndIsMonotone) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> img, in;
  for (int i = 0; i < 5000; ++i) {
    const double dx = u(rng);
    img.push_back(dx * (0.2 + u(rng)) + 0.1 * dx * dx);
    in.push_back(dx);
  }
  const RhoEnvelope rho = fit_envelope(img, in);
  ASSERT_TRUE(rho.valid);
  EXPECT_EQ(rho.knots.front(), 0.0);
  EXPECT_EQ(rho(0.0), 0.0);
  for (std::size_t i = 0; i + 1 < rho.values.size(); ++i) EXPECT_LE(rho.values[i], rho.values[i + 1]);
  for (std::size_t i = 0; i < img.size(); ++i) ASSERT_GE(rho(img[i]), in[i]) << i;
  double prev = 0.0;
  for (double s = 0.0; s < 3.0; s += 0.01) {
    EXPECT_GE(rho(s), prev);
    prev = rho(s);
  }
}

TEST(Distinguishability, SeparatesDistinctHarmonicStates) {
  const SaturatedSystem sys{benchmark("harmonic"),
                            DomainSpec::box(State::Constant(2, -1), State::Constant(2, 1))};
  const auto res = distinguishability_check(
      sys, {{State{{0.5, 0.0}}, State{{0.0, 0.5}}}, {State{{0.2, 0.2}}, State{{0.2, 0.2}}}}, 7.0,
      1e-6);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_GT(res[0].separation, 0.3);
  EXPECT_FALSE(res[0].flagged);
  EXPECT_EQ(res[1].separation, 0.0);
  EXPECT_TRUE(res[1].flagged);
}

}  // namespace
}  // namespace kkl
