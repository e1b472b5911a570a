#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "kkl/runtime.hpp"

namespace kkl {
namespace {

SaturatedSystem harmonic_system() {
  return SaturatedSystem{benchmark("harmonic"),
                         DomainSpec::box(State::Constant(2, -1), State::Constant(2, 1),
                                         Margins{0.2, 0.5, 1.0})};
}

ObserverDesign design_of(std::vector<Complex> eigs) {
  ObserverDesign d;
  d.eigenvalues = to_vector(eigs);
  return d;
}

TransformFn harmonic_oracle(const ObserverDesign& d) {
  return [d](const State& x) {
    ComplexMatrix T(d.m(), 1);
    for (int i = 0; i < d.m(); ++i) {
      const Complex l = d.eigenvalues[i];
      T(i, 0) = -(l * x[0] + x[1]) / (1.0 + l * l);
    }
    return T;
  };
}

TEST(Modes, ParseAndPrint) {
  for (Mode m : {Mode::exact, Mode::approx, Mode::highgain, Mode::rescaled}) {
    EXPECT_EQ(parse_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_mode("fast"), std::invalid_argument);
}

TEST(Lyapunov, ValueAndVerdict) {
  const ComplexVector a = to_vector({{-1, 0}, {-0.25, 2}});
  ComplexMatrix e(2, 1);
  e << Complex(1, 1), Complex(0, 1);
  EXPECT_DOUBLE_EQ(lyapunov_value(a, e), 0.5 * 2.0 + 2.0 * 1.0);

  EXPECT_TRUE(lyapunov_series({3.0, 2.0, 2.0, 1e-3}, 1e-9).monotone);
  const LyapunovVerdict v = lyapunov_series({3.0, 2.0, 2.5, 1.0}, 1e-9);
  EXPECT_FALSE(v.monotone);
  EXPECT_EQ(v.first_violation, 2u);
  EXPECT_TRUE(lyapunov_series({1e-20, 2e-20}, 1e-9, 1e-19).monotone);
}

// In exact mode e(t) = exp(At) e(0) holds along the whole run.
TEST(Simulate, ExactModeFollowsErrorIdentity) {
  const SaturatedSystem sys = harmonic_system();
  const ObserverDesign d = design_of({{-1, 0}, {-0.5, 1}});
  const SimulationSetup setup = SimulationSetup::exact(sys.base, sys.domain, d, harmonic_oracle(d), nullptr);
  SimOptions opt;
  opt.t_end = 6.0;
  opt.tol = 1e-11;
  opt.sample_stride = 0.25;
  opt.estimate_state = false;
  const SimTrace tr = simulate(setup, State{{0.6, 0.2}}, ComplexMatrix::Zero(2, 1), opt);
  ASSERT_EQ(tr.t.size(), 25u);
  const ComplexMatrix e0 = tr.e.front();
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    const ComplexVector decay = (d.eigenvalues * tr.t[i]).array().exp();
    EXPECT_LT((tr.e[i] - decay.asDiagonal() * e0).norm(), 1e-9);
  }
  EXPECT_NEAR(estimate_rate(tr, 3.0, 6.0), -0.5, 0.02);
  EXPECT_TRUE(lyapunov_trace(tr, d.eigenvalues, 1e-9).monotone);
  EXPECT_TRUE(tr.stayed_in_domain);
  EXPECT_FALSE(tr.escaped);
  EXPECT_EQ(tr.stop_reason, "completed");
  EXPECT_NEAR(tr.gamma_integral.back(), 6.0, 1e-12);
}

TEST(Simulate, HighGainNeedsACertificate) {
  const SystemModel m = benchmark("integrator_chain", {{"order", 2.0}});
  const DomainSpec dom = DomainSpec::box(State::Constant(2, -1), State::Constant(2, 1));
  const ComplexVector lam = to_vector({{-1, 0}, {-2, 0}});
  const ApproximateTransform ta = high_gain_transform(m, lam, 2.0, identity_map(), 2);
  const GridSpec g = GridSpec::uniform(dom, 5);
  Eigen::MatrixXd values(4, static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) values.col(static_cast<Eigen::Index>(i)) = flatten(ta.transform(g.node(i)));
  auto inv = std::make_shared<const Inverter>(g.nodes(), values, ta.transform, dom, 2, 1);
  const SimulationSetup setup =
      SimulationSetup::approximate(Mode::highgain, m, dom, identity_map(), ta, inv, std::nullopt);
  SimOptions opt;
  opt.t_end = 0.5;
  EXPECT_THROW(simulate(setup, State{{0.1, 0.1}}, ComplexMatrix::Zero(2, 1), opt), CertificationError);
  opt.override_cert = true;
  const SimTrace tr = simulate(setup, State{{0.1, 0.1}}, ComplexMatrix::Zero(2, 1), opt);
  EXPECT_FALSE(tr.warnings.empty());
  EXPECT_LT(tr.err_state.back(), 0.1);
}

TEST(Simulate, RescaledClockAndEscape) {
  const SystemModel esc = benchmark("escape1d");
  const DomainSpec dom = DomainSpec::box(State::Constant(1, -1), State::Constant(1, 1));
  const ObserverDesign d = design_of({{-1, 0}, {-2, 0}});
  SimOptions opt;
  opt.t_end = 2.0;
  opt.tol = 1e-10;
  opt.escape_norm = 1e3;
  opt.estimate_state = false;
  opt.transform_error = false;
  const SimTrace tr = simulate(
      SimulationSetup::rescaled(esc, dom, d, polynomial_rescaling({1.0, 0.0, 2.0}), nullptr, nullptr),
      State::Zero(1), ComplexMatrix::Zero(2, 1), opt);
  EXPECT_TRUE(tr.escaped);
  EXPECT_NEAR(tr.escape_time, std::atan(1e3), 1e-3);
  // ∫ 1 + 2 tan² = 2 tan t − t.
  const double t = tr.t.back();
  EXPECT_NEAR(tr.gamma_integral.back(), 2.0 * std::tan(t) - t, 1e-6 * std::tan(t));
  EXPECT_TRUE(tr.observer_finite);
  EXPECT_FALSE(tr.stayed_in_domain);
  EXPECT_GE(tr.min_gamma, 1.0);
}

TEST(TraceCsv, HeaderAndRows) {
  const SaturatedSystem sys = harmonic_system();
  const ObserverDesign d = design_of({{-1, 0}, {-2, 0}});
  SimOptions opt;
  opt.t_end = 0.1;
  opt.sample_stride = 0.05;
  opt.estimate_state = false;
  const SimTrace tr = simulate(SimulationSetup::exact(sys.base, sys.domain, d, harmonic_oracle(d), nullptr),
                               State{{0.1, 0.2}}, ComplexMatrix::Zero(2, 1), opt);
  const auto path = std::filesystem::temp_directory_path() / "kkl_trace.csv";
  write_trace_csv(path.string(), tr, "config_hash=0x1 seed=2");
  std::ifstream is(path);
  std::string comment, header, row;
  std::getline(is, comment);
  std::getline(is, header);
  EXPECT_EQ(comment, "# config_hash=0x1 seed=2");
  EXPECT_EQ(header,
            "t,x_1,x_2,re_z_11,im_z_11,re_z_21,im_z_21,xhat_1,xhat_2,err_state,err_transform,U");
  int rows = 0;
  while (std::getline(is, row)) ++rows;
  EXPECT_EQ(rows, 3);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace kkl
