#include <doctest.h>

#include "helpers.hpp"
#include "spinctl/optimizer.hpp"

using namespace spinctl;
using namespace testutil;

namespace {

struct Fixture {
  SpinSystem sys = build_spin_system(3);
  ControlParams params;
  FilterSpec filter = FilterSpec::for_params(ControlParams{});
  QuantumState psi0 = fiducial_state(sys);
};

// Smallest variance of a spin component perpendicular to the mean spin.
double min_transverse_variance(const SpinSystem& s, const QuantumState& st) {
  const CMatrix* ops[3] = {&s.fx(), &s.fy(), &s.fz()};
  Vec3 mean;
  for (int a = 0; a < 3; ++a) mean(a) = st.expectation(*ops[a]);
  Eigen::Matrix3d cov;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      cov(a, b) = 0.5 * st.expectation(*ops[a] * *ops[b] + *ops[b] * *ops[a]) - mean(a) * mean(b);
  const Vec3 n = mean.normalized(), u = n.unitOrthogonal(), v = n.cross(u);
  Eigen::Matrix2d c;
  c << u.dot(cov * u), u.dot(cov * v), v.dot(cov * u), v.dot(cov * v);
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(c).eigenvalues()(0);
}

} // namespace

TEST_CASE("config validation") {
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.fd_step == 1e-3);
  CHECK(c.line_search.initial_step == 0.5);
  CHECK(c.line_search.armijo == 1e-4);
  c.n_seeds = 0;
  CHECK_THROWS_AS(c.validate(), SpinError);
  c = {};
  c.fd_step = 0;
  CHECK_THROWS_AS(c.validate(), SpinError);
}

TEST_CASE("seed angles") {
  const auto a = random_seed_angles(1, 0, 30), b = random_seed_angles(1, 0, 30), c = random_seed_angles(1, 1, 30),
             d = random_seed_angles(2, 0, 30);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a != d);
  for (double x : a) CHECK((x >= -kPi && x < kPi));
}

TEST_CASE("exact stage-1 gradient") {
  Fixture fx;
  const Stage1Problem prob(fx.sys, fx.psi0, target_library("cat_z2", fx.sys), fx.params, fx.filter);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> phis = random_seed_angles(77, trial, fx.params.n_steps);
    Eigen::VectorXd g;
    const double val = prob.value_and_gradient(phis, g);
    CHECK(val == doctest::Approx(prob.objective(phis)).epsilon(1e-12));
    const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-3);
    for (int i = 0; i < fx.params.n_steps; ++i) {
      std::vector<double> up = phis, dn = phis;
      up[i] += h;
      dn[i] -= h;
      const double fd = (prob.objective(up) - prob.objective(dn)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g(i)) / scale);
    }
    if (trial == 0) {
      const Eigen::VectorXd again = stage1_gradient(prob, prob.waveform(phis));
      CHECK((again - g).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("gradient vanishes at a reachable target") {
  Fixture fx;
  const std::vector<double> phis = random_seed_angles(5, 0, fx.params.n_steps);
  const QuantumState reached =
      propagate_pure(fx.sys, fx.psi0, render_waveform(ControlWaveform{phis, fx.params}, fx.filter), fx.params);
  const Stage1Problem prob(fx.sys, fx.psi0, reached, fx.params, fx.filter);
  Eigen::VectorXd g;
  CHECK(prob.value_and_gradient(phis, g) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.norm() <= 1e-8);
}

TEST_CASE("objective is 2pi periodic in every angle") {
  Fixture fx;
  const Stage1Problem prob(fx.sys, fx.psi0, target_library("mx2", fx.sys), fx.params, fx.filter);
  std::vector<double> phis = random_seed_angles(9, 0, fx.params.n_steps);
  const double base = prob.objective(phis);
  for (int i : {0, 7, 29}) {
    std::vector<double> shifted = phis;
    shifted[i] += kTwoPi;
    CHECK(std::abs(prob.objective(shifted) - base) < 1e-10);
  }
}

TEST_CASE("ascent on a concave function") {
  // f(x) = -sum (x_i - i)^2 / (i + 1), maximum 0 at x_i = i
  const int n = 6;
  const auto f = [](const std::vector<double>& x) {
    double s = 0.0;
    for (int i = 0; i < static_cast<int>(x.size()); ++i) s -= (x[i] - i) * (x[i] - i) / (i + 1);
    return s;
  };
  const auto fg = [&](const std::vector<double>& x, Eigen::VectorXd& g) {
    g.resize(static_cast<Eigen::Index>(x.size()));
    for (int i = 0; i < static_cast<int>(x.size()); ++i) g(i) = -2 * (x[i] - i) / (i + 1);
    return f(x);
  };
  for (auto dir : {AscentDirection::lbfgs, AscentDirection::steepest}) {
    OptimizerConfig c;
    c.direction = dir;
    const AscentOutcome out = gradient_ascent(fg, f, std::vector<double>(n, 0.0), c, 5000);
    CHECK(out.converged);
    for (std::size_t i = 1; i < out.history.size(); ++i) CHECK(out.history[i] >= out.history[i - 1]);
    for (int i = 0; i < n; ++i) CHECK(out.x[i] == doctest::Approx(i).epsilon(1e-5));
    CHECK(out.history.back() == doctest::Approx(f(out.x)).epsilon(1e-15));
  }
}

TEST_CASE("stage 1 reaches high yield and records a monotone history") {
  Fixture fx;
  OptimizerConfig c;
  c.n_seeds = 1;

  SUBCASE("trivial target") {
    const Stage1Problem prob(fx.sys, fx.psi0, fx.psi0, fx.params, fx.filter);
    const OptimizationResult r = stage1_optimize(prob, c);
    CHECK(r.yield_pure_final >= 0.99);
  }

  SUBCASE("cat state, deterministic, with intermediate squeezing") {
    const Stage1Problem prob(fx.sys, fx.psi0, target_library("cat_z2", fx.sys), fx.params, fx.filter);
    const OptimizationResult r = stage1_optimize(prob, c);
    CHECK(r.yield_pure_final > 0.99);
    CHECK(r.converged);
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] >= r.history[i - 1]);
    CHECK(r.history.back() == r.yield_pure_final);
    CHECK(r.yield_pure_final == doctest::Approx(prob.objective(r.waveform.phis)).epsilon(1e-14));

    const OptimizationResult again = stage1_optimize(prob, c);
    CHECK(again.yield_pure_final == r.yield_pure_final);
    CHECK(again.waveform.phis == r.waveform.phis);

    // the coherent state squeezes before it wraps around the sphere
    Trajectory t = propagate_with_snapshots(fx.sys, fx.psi0, render_waveform(r.waveform, fx.filter), fx.params,
                                            NoiseModel::none(), 4);
    CHECK(min_transverse_variance(fx.sys, t.states[0]) == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(min_transverse_variance(fx.sys, t.states[1]) < 1.5);

    // closed-system stage 2 reproduces the square root and is stationary
    const Stage2Problem p2(fx.sys, fx.psi0, prob.target(), fx.params, fx.filter, NoiseModel::none());
    CHECK(std::abs(p2.objective(r.waveform.phis) - std::sqrt(r.yield_pure_final)) < 1e-9);
    OptimizerConfig c2 = c;
    c2.stage2_max_iters = 2;
    const OptimizationResult r2 = stage2_refine(p2, r.waveform, c2);
    CHECK(*r2.yield_mixed_final - r2.history.front() < 1e-4);
    CHECK(*r2.yield_mixed_final >= r2.history.front() - 1e-9);
  }
}

TEST_CASE("stage 2 with default noise never loses ground") {
  Fixture fx;
  const QuantumState target = target_library("ramp_y", fx.sys);
  const Stage2Problem p2(fx.sys, fx.psi0, target, fx.params, fx.filter, NoiseModel::defaults(fx.params));
  OptimizerConfig c;
  c.stage2_max_iters = 2;
  const ControlWaveform w0{random_seed_angles(3, 0, fx.params.n_steps), fx.params};
  const double start = p2.objective(w0.phis);
  const OptimizationResult r = stage2_refine(p2, w0, c);
  CHECK(r.history.front() == doctest::Approx(start).epsilon(1e-14));
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] >= r.history[i - 1]);
  CHECK(*r.yield_mixed_final >= start - 1e-9);
  CHECK(*r.yield_mixed_final > start);

  // the parallel finite-difference gradient agrees with a serial one
  const Eigen::VectorXd g = p2.fd_gradient(w0.phis, 1e-3);
  for (int i : {0, 15}) {
    std::vector<double> up = w0.phis, dn = w0.phis;
    up[i] += 1e-3;
    dn[i] -= 1e-3;
    CHECK(g(i) == doctest::Approx((p2.objective(up) - p2.objective(dn)) / 2e-3).epsilon(1e-12));
  }
}

TEST_CASE("problem construction errors") {
  Fixture fx;
  const QuantumState mixed = QuantumState::mixed(CMatrix::Identity(7, 7) / 7.0);
  CHECK_THROWS_AS(Stage1Problem(fx.sys, fx.psi0, mixed, fx.params, fx.filter), SpinError);
  CHECK_THROWS_AS(Stage1Problem(fx.sys, fx.psi0, fiducial_state(build_spin_system(1)), fx.params, fx.filter),
                  SpinError);
  DesignConfig dc;
  CHECK_THROWS_AS(design_control(fx.sys, mixed, dc), SpinError);
}
