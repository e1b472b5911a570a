#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "kkl/ode.hpp"

namespace kkl {
namespace {

Field linear(double a) {
  return [a](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { dx = a * x; };
}

TEST(Integrate, ExponentialDecayForwardAndBackward) {
  IntegratorOptions opt;
  opt.tol = 1e-12;
  const Trajectory fwd = integrate(linear(-2.0), Eigen::VectorXd::Ones(1), 0.0, 3.0, opt);
  EXPECT_EQ(fwd.reason, StopReason::completed);
  EXPECT_NEAR(fwd.final_state[0], std::exp(-6.0), 1e-12);
  EXPECT_DOUBLE_EQ(fwd.final_time, 3.0);
  const Trajectory back = integrate(linear(-2.0), Eigen::VectorXd::Ones(1), 0.0, -2.0, opt);
  EXPECT_NEAR(back.final_state[0] / std::exp(4.0), 1.0, 1e-11);
}

TEST(Integrate, DenseSamplesMatchTheSolution) {
  IntegratorOptions opt;
  opt.tol = 1e-10;
  opt.record_steps = false;
  for (int i = 0; i <= 100; ++i) opt.sample_times.push_back(0.05 * i);
  const Field rot = [](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx.resize(2);
    dx << x[1], -x[0];
  };
  const Trajectory tr = integrate(rot, Eigen::Vector2d(1.0, 0.0), 0.0, 5.0, opt);
  ASSERT_EQ(tr.samples.size(), 101u);
  EXPECT_TRUE(tr.states.empty());
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    const double t = tr.sample_times[i];
    EXPECT_NEAR(tr.samples[i][0], std::cos(t), 1e-8);
    EXPECT_NEAR(tr.samples[i][1], -std::sin(t), 1e-8);
  }
}

TEST(Integrate, DetectsFiniteEscape) {
  const Field f = [](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx = Eigen::VectorXd::Constant(1, 1.0 + x[0] * x[0]);
  };
  IntegratorOptions opt;
  opt.tol = 1e-10;
  const Trajectory tr = integrate(f, Eigen::VectorXd::Zero(1), 0.0, 3.0, opt);
  EXPECT_TRUE(tr.escaped);
  EXPECT_NE(tr.reason, StopReason::completed);
  EXPECT_NEAR(tr.escape_time, std::numbers::pi / 2.0, 1e-6);

  opt.escape_norm = 1e3;
  const Trajectory bounded = integrate(f, Eigen::VectorXd::Zero(1), 0.0, 3.0, opt);
  EXPECT_EQ(bounded.reason, StopReason::norm_bound);
  EXPECT_NEAR(bounded.escape_time, std::atan(1e3), 1e-3);
}

TEST(Integrate, StopEventEndsTheRun) {
  IntegratorOptions opt;
  opt.stop_when = [](double, const Eigen::VectorXd& x) { return x[0] < 0.5; };
  const Trajectory tr = integrate(linear(-1.0), Eigen::VectorXd::Ones(1), 0.0, 10.0, opt);
  EXPECT_EQ(tr.reason, StopReason::event);
  EXPECT_FALSE(tr.escaped);
  EXPECT_LT(tr.final_state[0], 0.5);
  EXPECT_LT(tr.final_time, 10.0);
}

TEST(Integrate, NonFiniteInitialStateIsAnEscape) {
  const Trajectory tr =
      integrate(linear(-1.0), Eigen::VectorXd::Constant(1, std::nan("")), 0.0, 1.0);
  EXPECT_EQ(tr.reason, StopReason::non_finite);
  EXPECT_TRUE(tr.escaped);
}

// Property: tightening tol does not increase the global error on a smooth
// problem by more than roundoff.
TEST(Integrate, ErrorShrinksWithTolerance) {
  double previous = 1.0;
  for (double tol : {1e-6, 1e-8, 1e-10, 1e-12}) {
    IntegratorOptions opt;
    opt.tol = tol;
    const Trajectory tr = integrate(linear(-1.0), Eigen::VectorXd::Ones(1), 0.0, 5.0, opt);
    const double err = std::abs(tr.final_state[0] - std::exp(-5.0));
    EXPECT_LE(err, previous * 1.01 + 1e-15);
    EXPECT_LE(err, 10 * tol);
    previous = err;
  }
}

}  // namespace
}  // namespace kkl
