#include <doctest.h>

#include <algorithm>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "helpers.hpp"
#include "spinctl/analysis.hpp"

using namespace spinctl;
using namespace testutil;

namespace {

// Exact mean yield of the displacement model for d = 7. Along psi the
// amplitude is 1 + delta_par, so U = |1 + delta_par|^2 / sigma^2 is
// noncentral chi^2_2(1/sigma^2); the orthogonal part gives S ~ chi^2_12.
// The yield is U / (U + S).
double analytic_mean_yield(double sigma) {
  using boost::math::quadrature::gauss_kronrod;
  const double lambda = 1.0 / (sigma * sigma);
  const boost::math::non_central_chi_squared nc(2.0, lambda);
  const boost::math::chi_squared cs(12.0);
  const auto inner = [&](double u) {
    return gauss_kronrod<double, 61>::integrate([&](double s) { return boost::math::pdf(cs, s) * u / (u + s); }, 0.0,
                                                120.0, 15, 1e-12);
  };
  const double mean = lambda + 2.0, sd = std::sqrt(4.0 * (lambda + 1.0));
  return gauss_kronrod<double, 61>::integrate([&](double u) { return boost::math::pdf(nc, u) * inner(u); },
                                              std::max(0.0, mean - 12 * sd), mean + 12 * sd, 15, 1e-10);
}

BatchInput entry(const std::string& label, const QuantumState& target, const QuantumState& predicted,
                 const QuantumState& measured) {
  return {label, target, predicted, measured};
}

} // namespace

TEST_CASE("rotation covering") {
  const auto cover = rotation_covering();
  CHECK(cover.size() == 1 + 256 * 8);
  CHECK(cover.front().angle == 0.0);
  // every rotation is within a modest geodesic distance of some covering point
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, kPi);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Matrix3d r = Rotation::about(random_axis(gen), u(gen)).matrix();
    double best = 10.0;
    for (const Rotation& c : cover) {
      const double tr = (c.matrix().transpose() * r).trace();
      best = std::min(best, std::acos(std::clamp((tr - 1) / 2, -1.0, 1.0)));
    }
    worst = std::max(worst, best);
  }
  CHECK(worst < 0.35);
}

TEST_CASE("rotation correction") {
  const SpinSystem s = build_spin_system(3);
  std::mt19937_64 gen(2);

  SUBCASE("identity when nothing to fix") {
    const QuantumState rho = QuantumState::mixed(random_density(7, gen));
    const RotationFit fit = optimize_rotation_overlap(s, rho, rho);
    CHECK(fit.rotation.angle == 0.0);
    CHECK(fit.fidelity_before == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.fidelity_after == fit.fidelity_before);
  }

  SUBCASE("isotropic state is untouched") {
    const QuantumState iso = QuantumState::mixed(CMatrix::Identity(7, 7) / 7.0);
    const QuantumState pred = target_library("cat_z2", s);
    const RotationFit fit = optimize_rotation_overlap(s, iso, pred);
    CHECK(fit.fidelity_after == fit.fidelity_before);
  }

  SUBCASE("planted rotations are recovered") {
    const QuantumState pure = target_library("mx2", s);
    const QuantumState mixed = prepare_initial(s, {target_library("ramp_y", s), 0.9});
    std::uniform_real_distribution<double> u(0.0, kPi);
    for (int trial = 0; trial < 6; ++trial) {
      const QuantumState& pred = trial % 2 == 0 ? pure : mixed;
      const CMatrix r0 = rotation_operator(s, random_axis(gen), u(gen));
      const QuantumState meas = QuantumState::mixed_hermitized(r0 * pred.density() * r0.adjoint());
      const RotationFit fit = optimize_rotation_overlap(s, meas, pred);
      CHECK(fit.fidelity_after >= 0.999);
      CHECK(fit.fidelity_after >= fit.fidelity_before);
      const CMatrix u_fit = rotation_operator(s, fit.rotation);
      CHECK(fidelity(pred, QuantumState::mixed_hermitized(u_fit * meas.density() * u_fit.adjoint())) ==
            doctest::Approx(fit.fidelity_after).epsilon(1e-12));
    }
  }
}

TEST_CASE("gaussian displacement model") {
  const SpinSystem s = build_spin_system(3);
  const QuantumState up = stretched_state(s, Vec3::UnitZ(), 3);

  CHECK(displace_state(up, 0.0, 1, 0).amplitudes() == up.amplitudes());
  CHECK(displace_state(up, 0.1, 1, 5).amplitudes() == displace_state(up, 0.1, 1, 5).amplitudes());
  CHECK(displace_state(up, 0.1, 1, 5).amplitudes() != displace_state(up, 0.1, 1, 6).amplitudes());
  CHECK(displace_state(up, 0.1, 1, 5).amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-14));

  const BiasEstimate zero = gaussian_displacement_bias(up, 0.0, 100, 1);
  CHECK(zero.mean_yield == 1.0);
  CHECK(zero.bias == 0.0);

  std::vector<BiasEstimate> est;
  for (double sigma : {0.02, 0.05, 0.1}) {
    const BiasEstimate b = gaussian_displacement_bias(up, sigma, 10000, 1);
    CHECK(b.bias == doctest::Approx(1.0 - b.mean_yield).epsilon(1e-15));
    // Monte Carlo against the exact integral
    const double exact = analytic_mean_yield(sigma);
    CHECK(std::abs(b.mean_yield - exact) < 4 * b.standard_error());
    est.push_back(b);
  }
  for (std::size_t i = 1; i < est.size(); ++i)
    CHECK(est[i].bias >= est[i - 1].bias - 2 * std::hypot(est[i].standard_error(), est[i - 1].standard_error()));

  const BiasEstimate again = gaussian_displacement_bias(up, 0.05, 10000, 1);
  CHECK(again.mean_yield == est[1].mean_yield);
  CHECK(again.yield_std == est[1].yield_std);

  // the bias depends on the state only through its norm
  const BiasEstimate other = gaussian_displacement_bias(target_library("cat_z2", s), 0.05, 10000, 1);
  CHECK(std::abs(other.mean_yield - est[1].mean_yield) < 4 * est[1].standard_error());

  CHECK_THROWS_AS(gaussian_displacement_bias(up, -1.0, 10, 1), SpinError);
  CHECK_THROWS_AS(gaussian_displacement_bias(up, 0.1, 0, 1), SpinError);
}

TEST_CASE("sigma for a ten percent bias") {
  const SpinSystem s = build_spin_system(3);
  const QuantumState up = stretched_state(s, Vec3::UnitZ(), 3);
  const double sigma = bias_sigma(up, 0.10, 10000, 1);
  CHECK(sigma == doctest::Approx(0.096387386322).epsilon(1e-5));
  CHECK(std::abs(1.0 - analytic_mean_yield(sigma) - 0.10) < 2e-3);
}

TEST_CASE("histograms") {
  const Histogram h = make_histogram({0.0, 0.05, 0.5, 0.999, 1.0, 1.5, -0.2}, 10);
  CHECK(h.edges.size() == 11);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == 1.0);
  CHECK(h.total() == 7);
  CHECK(h.counts[0] == 3);
  CHECK(h.counts[5] == 1);
  CHECK(h.counts[9] == 3);
  CHECK_THROWS_AS(make_histogram({}, 0), SpinError);
}

TEST_CASE("batch evaluation") {
  const SpinSystem s = build_spin_system(3);
  std::mt19937_64 gen(3);

  std::vector<BatchInput> same;
  for (int i = 0; i < 4; ++i) {
    const QuantumState t = QuantumState::pure(random_ket(7, gen));
    same.push_back(entry("e" + std::to_string(i), t, t, t));
  }
  const BatchRecord rec = batch_evaluate(s, same, 10);
  for (const auto& e : rec.entries) {
    CHECK(e.error.empty());
    CHECK(e.fidelity == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e.yield_pure == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(rec.fidelities.counts.back() == 4);
  CHECK(rec.yields.total() == 4);

  // order invariance of the histograms
  std::vector<BatchInput> mixed_inputs;
  for (int i = 0; i < 5; ++i) {
    const QuantumState t = QuantumState::pure(random_ket(7, gen));
    const QuantumState p = QuantumState::mixed(0.8 * t.density() + 0.2 * random_density(7, gen));
    const QuantumState m = QuantumState::mixed(0.7 * p.density() + 0.3 * random_density(7, gen));
    mixed_inputs.push_back(entry("m" + std::to_string(i), t, p, m));
  }
  const BatchRecord fwd = batch_evaluate(s, mixed_inputs);
  std::reverse(mixed_inputs.begin(), mixed_inputs.end());
  const BatchRecord rev = batch_evaluate(s, mixed_inputs);
  CHECK(fwd.yields.counts == rev.yields.counts);
  CHECK(fwd.corrected_fidelities.counts == rev.corrected_fidelities.counts);
  for (const auto& e : fwd.entries) {
    CHECK(e.corrected_fidelity >= e.fidelity - 1e-9);
    CHECK(e.yield_mixed == doctest::Approx(std::sqrt(e.yield_pure)).epsilon(1e-9));
  }

  // a bad entry is reported and the rest still evaluated
  std::vector<BatchInput> bad = same;
  bad.push_back(entry("bad", fiducial_state(build_spin_system(1)), same[0].predicted, same[0].measured));
  const BatchRecord br = batch_evaluate(s, bad);
  CHECK(!br.entries.back().error.empty());
  CHECK(br.yields.total() == 4);
}

TEST_CASE("synthetic batch") {
  const SpinSystem s = build_spin_system(3);
  SyntheticBatchConfig c;
  c.n_targets = 5;
  c.planted = {1};
  const auto inputs = synthetic_batch(s, c);
  REQUIRE(inputs.size() == 5);
  CHECK(inputs[0].label == "synthetic-01");
  CHECK(inputs[4].label == "synthetic-05");
  const auto again = synthetic_batch(s, c);
  CHECK(max_abs_diff(again[3].measured.density(), inputs[3].measured.density()) == 0.0);

  const BatchRecord rec = batch_evaluate(s, inputs);
  for (std::size_t i = 0; i < rec.entries.size(); ++i) {
    const BatchEntry& e = rec.entries[i];
    CAPTURE(i);
    CHECK(e.error.empty());
    CHECK(e.corrected_fidelity >= e.fidelity - 1e-9);
    if (i == 1) {
      CHECK(e.corrected_yield_mixed - e.yield_mixed > 0.05);
      CHECK(e.corrected_fidelity > 0.999);
    } else {
      CHECK(std::abs(e.corrected_yield_mixed - e.yield_mixed) < 1e-3);
    }
  }
  c.n_targets = 0;
  CHECK_THROWS_AS(synthetic_batch(s, c), SpinError);
}
