#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "kkl/transform.hpp"

namespace kkl {
namespace {

SaturatedSystem harmonic_system() {
  // Collar wide enough that orbits through the box never see χ < 1.
  return SaturatedSystem{benchmark("harmonic"),
                         DomainSpec::box(State::Constant(2, -1), State::Constant(2, 1),
                                         Margins{0.2, 0.5, 1.0})};
}

ObserverDesign design_of(std::vector<Complex> eigs) {
  ObserverDesign d;
  d.eigenvalues = to_vector(eigs);
  return d;
}

// For ẋ1 = x2, ẋ2 = −x1, y = x1 the transform solves λT + x1 = L_f T with
// T linear: T_λ(x) = −(λ x1 + x2)/(1 + λ²).
Complex sylvester(Complex l, const State& x) { return -(l * x[0] + x[1]) / (1.0 + l * l); }

TEST(EvalT, HarmonicMatchesSylvesterSolution) {
  const SaturatedSystem sys = harmonic_system();
  const ObserverDesign d = design_of({{-3, 0}, {-0.5, 2}});
  const double h = select_horizon(d, amplitude_bound(sys, d), 1e-10);
  for (const State& x : {State{{0.3, -0.7}}, State{{-1.0, 1.0}}, State{{0.0, 0.0}}}) {
    const ComplexMatrix T = eval_T(sys, d, x, h, 1e-10);
    for (int i = 0; i < 2; ++i) EXPECT_LT(std::abs(T(i, 0) - sylvester(d.eigenvalues[i], x)), 1e-8);
  }
}

TEST(EvalT, ConstantSystemIsAPlainIntegral) {
  const SaturatedSystem sys{benchmark("constant", {{"n", 2.0}}),
                            DomainSpec::box(State::Constant(2, -1), State::Constant(2, 1))};
  const ObserverDesign d = design_of({{-4, 0}});
  const State x{{0.25, -0.75}};
  const ComplexMatrix T = eval_T(sys, d, x, 20.0, 1e-12);
  ASSERT_EQ(T.rows(), 1);
  ASSERT_EQ(T.cols(), 2);
  EXPECT_NEAR(T(0, 0).real(), 0.25 / 4.0, 1e-10);
  EXPECT_NEAR(T(0, 1).real(), -0.75 / 4.0, 1e-10);
}

// Property: the truncation error shrinks as the horizon grows, and the
// automatic horizon meets its tail target.
TEST(EvalT, AutoHorizonBoundsTheTail) {
  const SaturatedSystem sys{benchmark("constant"),
                            DomainSpec::box(State::Constant(1, -1), State::Constant(1, 1))};
  const ObserverDesign d = design_of({{-1, 0}});
  const State x = State::Constant(1, 1.0);
  double previous = 1.0;
  for (double tol : {1e-3, 1e-6, 1e-9}) {
    const double h = select_horizon(d, amplitude_bound(sys, d), tol);
    const double err = std::abs(eval_T(sys, d, x, h, 1e-12)(0, 0) - Complex(1.0, 0.0));
    EXPECT_LE(err, tol);
    EXPECT_LT(err, previous);
    previous = err;
  }
}

TEST(Horizon, ClampedBelowByOneOverDecay) {
  const ObserverDesign d = design_of({{-2, 0}});
  EXPECT_DOUBLE_EQ(select_horizon(d, 1e-20, 1e-3), 0.5);
  EXPECT_NEAR(select_horizon(d, 1.0, 1e-6), std::log(1.0 / 2e-6) / 2.0, 1e-14);
}

TEST(Grid, LastAxisVariesFastest) {
  const GridSpec g = GridSpec::uniform(State{{0.0, 10.0}}, State{{1.0, 20.0}}, 3);
  ASSERT_EQ(g.size(), 9u);
  EXPECT_TRUE(g.node(0).isApprox(State{{0.0, 10.0}}));
  EXPECT_TRUE(g.node(1).isApprox(State{{0.0, 15.0}}));
  EXPECT_TRUE(g.node(3).isApprox(State{{0.5, 10.0}}));
  EXPECT_TRUE(g.node(8).isApprox(State{{1.0, 20.0}}));
  EXPECT_DOUBLE_EQ(g.spacing(), 5.0);
  EXPECT_EQ(g.nodes().cols(), 9);
}

TEST(Tabulate, SerialAndParallelAgreeBitwise) {
  const SaturatedSystem sys{benchmark("van_der_pol"),
                            DomainSpec::box(State::Constant(2, -3), State::Constant(2, 3))};
  const ObserverDesign d = design_of({{-1.5, 1}, {-1.5, -1}, {-2, 0}});
  const GridSpec g = GridSpec::uniform(sys.domain, 5);
  const TransformTable a = tabulate(sys, d, g, 15.0, 1e-8, kernels::Exec::serial);
  const TransformTable b = tabulate(sys, d, g, 15.0, 1e-8, kernels::Exec::parallel);
  EXPECT_EQ(a.value_matrix(), b.value_matrix());
  EXPECT_EQ(a.fingerprint, b.fingerprint);
}

TEST(Tabulate, FingerprintTracksDesign) {
  const SaturatedSystem sys = harmonic_system();
  const ObserverDesign d = design_of({{-1, 0}, {-2, 0}});
  const TransformTable t = tabulate(sys, d, GridSpec::uniform(sys.domain, 3), 10.0, 1e-8);
  EXPECT_NO_THROW(check_fingerprint(t, sys, d));
  EXPECT_THROW(check_fingerprint(t, sys, design_of({{-1, 0}, {-3, 0}})), FingerprintMismatch);
  const SaturatedSystem other{benchmark("duffing"), sys.domain};
  EXPECT_THROW(check_fingerprint(t, other, d), FingerprintMismatch);
}

TEST(TableIO, RoundTripPreservesEverything) {
  const SaturatedSystem sys = harmonic_system();
  const ObserverDesign d = design_of({{-1, 0.5}, {-1, -0.5}});
  TransformTable t = tabulate(sys, d, GridSpec::uniform(sys.domain, 4), 12.0, 1e-9);
  t.config_hash = 0x0123456789abcdefULL;
  t.seed = 99;
  const std::string path = (std::filesystem::temp_directory_path() / "kkl_table_io.bin").string();
  save_table(path, t);
  const TransformTable u = load_table(path);
  EXPECT_EQ(u.n, 2);
  EXPECT_EQ(u.m, 2);
  EXPECT_EQ(u.p, 1);
  EXPECT_EQ(u.fingerprint, t.fingerprint);
  EXPECT_EQ(u.config_hash, t.config_hash);
  EXPECT_EQ(u.seed, 99u);
  EXPECT_EQ(u.horizon, 12.0);
  EXPECT_EQ(u.tol, 1e-9);
  EXPECT_EQ(u.eigenvalues, t.eigenvalues);
  EXPECT_EQ(u.grid.counts, t.grid.counts);
  EXPECT_EQ(u.value_matrix(), t.value_matrix());
  // 8 magic + 4 version + 12 dims + 24 ids + 16 horizon/tol + 2·24 axes
  // + 2·16 eigenvalues + 8 count + 16·2·16 values.
  EXPECT_EQ(std::filesystem::file_size(path), 8u + 4 + 12 + 24 + 16 + 48 + 32 + 8 + 512);

  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.write("NOTATABL", 8);
  f.close();
  EXPECT_THROW(load_table(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(EdfResidual, SmallForHarmonicOracleAndQuadrature) {
  const SaturatedSystem sys = harmonic_system();
  const ObserverDesign d = design_of({{-1, 0}, {-2, 1}});
  const TransformFn oracle = [&](const State& x) {
    ComplexMatrix T(2, 1);
    for (int i = 0; i < 2; ++i) T(i, 0) = sylvester(d.eigenvalues[i], x);
    return T;
  };
  const double h = select_horizon(d, amplitude_bound(sys, d), 1e-11);
  const TransformFn quad = [&](const State& x) { return eval_T(sys, d, x, h, 1e-11); };
  const State x{{0.4, -0.2}};
  EXPECT_LT(edf_residual(sys, d, oracle, x, 1e-3).norm(), 1e-6);
  EXPECT_LT(edf_residual(sys, d, quad, x, 1e-3).norm(), 1e-5);
  // A wrong transform is caught.
  const TransformFn wrong = [&](const State& x) { return ComplexMatrix(2.0 * oracle(x)); };
  EXPECT_GT(edf_residual(sys, d, wrong, x, 1e-3).norm(), 1e-2);
}

}  // namespace
}  // namespace kkl
