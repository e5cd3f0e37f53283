#include <doctest.h>

#include "helpers.hpp"
#include "spinctl/control_model.hpp"

using namespace spinctl;
using namespace testutil;

namespace {

ControlWaveform random_waveform(std::mt19937_64& gen, const ControlParams& p = {}) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  ControlWaveform w{std::vector<double>(p.n_steps), p};
  for (double& phi : w.phis) phi = u(gen);
  return w;
}

} // namespace

TEST_CASE("parameter validation") {
  const ControlParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.scattering_rate() * p.beta == doctest::Approx(p.nonlinear_rate).epsilon(1e-12));
  CHECK(p.scattering_rate() == doctest::Approx(kTwoPi * 500 / 8.2));
  for (auto mutate : std::vector<void (*)(ControlParams&)>{
           [](ControlParams& q) { q.larmor_rate = 0; }, [](ControlParams& q) { q.nonlinear_rate = -1; },
           [](ControlParams& q) { q.beta = 0; }, [](ControlParams& q) { q.duration = 0; },
           [](ControlParams& q) { q.n_steps = 0; }}) {
    ControlParams q;
    mutate(q);
    CHECK_THROWS_AS(q.validate(), SpinError);
  }
  FilterSpec f;
  f.cutoff_hz = 0;
  CHECK_THROWS_AS(f.validate(), SpinError);
  f = FilterSpec{};
  f.substeps_per_step = 0;
  CHECK_THROWS_AS(f.validate(), SpinError);
  ControlWaveform w{std::vector<double>(29, 0.0), p};
  CHECK_THROWS_AS(w.validate(), SpinError);
}

TEST_CASE("default substeps bound the per-substep rotation") {
  const ControlParams p;
  const int m = default_substeps(p);
  CHECK(m >= 32);
  CHECK(std::abs(p.larmor_rate) * p.step_duration() / m <= 0.05 + 1e-12);
  CHECK(std::abs(p.larmor_rate) * p.step_duration() / (m - 1) > 0.05);
  CHECK(FilterSpec::for_params(p).substeps_per_step == m);
  CHECK(FilterSpec::for_params(p).cutoff_hz == 100e3);
}

TEST_CASE("hamiltonian") {
  const SpinSystem s = build_spin_system(3);
  CHECK(max_abs_diff(hamiltonian_at(s, 2.5, 0.0, 1.0, 0.0), 2.5 * s.fx()) == 0.0);

  Eigen::SelfAdjointEigenSolver<CMatrix> es(hamiltonian_at(s, 1.0, 2.0, 0.0, 0.0));
  Eigen::VectorXd expect(7);
  expect << 0, 2, 2, 8, 8, 18, 18;
  CHECK((es.eigenvalues() - expect).cwiseAbs().maxCoeff() < 1e-12);

  const ControlParams p;
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int trial = 0; trial < 20; ++trial) {
    const double phi = u(gen);
    const CMatrix h = hamiltonian_at(s, p, std::cos(phi), std::sin(phi));
    CHECK(max_abs_diff(h, h.adjoint()) < 1e-12);
    const double norm = Eigen::SelfAdjointEigenSolver<CMatrix>(h).eigenvalues().cwiseAbs().maxCoeff();
    CHECK(norm <= p.larmor_rate * 3 + p.nonlinear_rate * 9 + 1e-9);
    const double a = 0.37;
    const CMatrix lin = hamiltonian_at(s, p, a * std::cos(phi), a * std::sin(phi)) - p.nonlinear_rate * s.fx2();
    CHECK(max_abs_diff(lin, a * (h - p.nonlinear_rate * s.fx2())) < 1e-9);
  }
}

TEST_CASE("filter rendering") {
  ControlParams p;
  const FilterSpec filt = FilterSpec::for_params(p);
  const int m = filt.substeps_per_step;

  ControlWaveform c{std::vector<double>(p.n_steps, 0.7), p};
  const RenderedDrive dc = render_waveform(c, filt);
  CHECK(dc.size() == static_cast<std::size_t>(p.n_steps * m));
  for (std::size_t k = 0; k < dc.size(); ++k) {
    CHECK(dc.bx[k] == doctest::Approx(std::cos(0.7)).epsilon(1e-14));
    CHECK(dc.by[k] == doctest::Approx(std::sin(0.7)).epsilon(1e-14));
  }
  CHECK(dc.duration() == doctest::Approx(p.duration).epsilon(1e-12));
  for (std::size_t k = 1; k < dc.size(); ++k)
    CHECK(dc.times[k] - dc.times[k - 1] == doctest::Approx(dc.dt).epsilon(1e-9));

  std::mt19937_64 gen(4);
  const ControlWaveform w = random_waveform(gen, p);
  const RenderedDrive id = render_waveform(w, FilterSpec::identity(m));
  for (std::size_t k = 0; k < id.size(); ++k) {
    CHECK(id.bx[k] == std::cos(w.phis[k / m]));
    CHECK(id.by[k] == std::sin(w.phis[k / m]));
  }
  const RenderedDrive rd = render_waveform(w, filt);
  for (std::size_t k = 0; k < rd.size(); ++k) CHECK(std::hypot(rd.bx[k], rd.by[k]) <= 1.0 + 1e-9);
}

TEST_CASE("single step relaxes with the first-order response") {
  ControlParams p;
  p.n_steps = 2;
  p.duration = 20e-6;
  FilterSpec filt;
  filt.substeps_per_step = 50;
  ControlWaveform w{{0.0, kPi / 2}, p};
  const RenderedDrive d = render_waveform(w, filt);
  const double t_step = p.step_duration();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double t = d.times[k];
    const double expect = t < t_step ? 0.0 : 1.0 - std::exp(-kTwoPi * filt.cutoff_hz * (t - t_step));
    CHECK(std::abs(d.by[k] - expect) < 1e-6);
  }
}

TEST_CASE("filter is linear before clamping") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> a(30), b(30), sum(30);
  for (int i = 0; i < 30; ++i) {
    a[i] = u(gen);
    b[i] = u(gen);
    sum[i] = a[i] + b[i];
  }
  const auto fa = lowpass_steps(a, 1e-5, 32, 100e3);
  const auto fb = lowpass_steps(b, 1e-5, 32, 100e3);
  const auto fs = lowpass_steps(sum, 1e-5, 32, 100e3);
  for (std::size_t k = 0; k < fs.size(); ++k) CHECK(std::abs(fs[k] - fa[k] - fb[k]) < 1e-10);
}

TEST_CASE("slew clamp limits component rates") {
  ControlParams p;
  FilterSpec filt = FilterSpec::identity(32);
  filt.slew_limit = 2e5;
  std::mt19937_64 gen(8);
  const RenderedDrive d = render_waveform(random_waveform(gen, p), filt);
  for (std::size_t k = 1; k < d.size(); ++k) {
    CHECK(std::abs(d.bx[k] - d.bx[k - 1]) <= filt.slew_limit * d.dt + 1e-12);
    CHECK(std::abs(d.by[k] - d.by[k - 1]) <= filt.slew_limit * d.dt + 1e-12);
  }
}

TEST_CASE("drive jacobian matches finite differences") {
  ControlParams p;
  p.n_steps = 6;
  p.duration = 100e-6;
  FilterSpec filt;
  filt.substeps_per_step = 8;
  filt.cutoff_hz = 30e3;
  std::mt19937_64 gen(10);
  ControlWaveform w = random_waveform(gen, p);
  DriveJacobian jac;
  const RenderedDrive d = render_waveform(w, filt, &jac);
  const double h = 1e-6;
  for (int i = 0; i < p.n_steps; ++i) {
    ControlWaveform wp = w, wm = w;
    wp.phis[i] += h;
    wm.phis[i] -= h;
    const RenderedDrive dp = render_waveform(wp, filt), dm = render_waveform(wm, filt);
    for (std::size_t k = 0; k < d.size(); ++k) {
      CHECK(std::abs((dp.bx[k] - dm.bx[k]) / (2 * h) - jac.dbx(k, i)) < 1e-7);
      CHECK(std::abs((dp.by[k] - dm.by[k]) / (2 * h) - jac.dby(k, i)) < 1e-7);
    }
  }
}

TEST_CASE("initial state preparation") {
  const SpinSystem s = build_spin_system(3);
  const QuantumState fid = fiducial_state(s);
  CHECK(fid.expectation(s.fy()) == doctest::Approx(3.0).epsilon(1e-12));

  const QuantumState p1 = prepare_initial(s, {fid, 1.0});
  CHECK(max_abs_diff(p1.density(), fid.density()) < 1e-14);

  const QuantumState p96 = prepare_initial(s, {fid, 0.96});
  // in the m_y basis
  CMatrix v(7, 7);
  for (int i = 0; i < 7; ++i) v.col(i) = stretched_state(s, Vec3::UnitY(), 3 - i).amplitudes();
  const CMatrix in_y = v.adjoint() * p96.density() * v;
  CHECK(std::abs(in_y(0, 0).real() - 0.96) < 1e-12);
  for (int i = 1; i < 7; ++i) CHECK(std::abs(in_y(i, i).real() - 0.04 / 6) < 1e-12);
  CMatrix off = in_y;
  off.diagonal().setZero();
  CHECK(off.cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 gen(12);
  for (double p : {1e-3, 0.2, 0.5, 0.9, 0.999}) {
    const QuantumState st = prepare_initial(s, {QuantumState::pure(random_ket(7, gen)), p});
    CHECK(st.density().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(Eigen::SelfAdjointEigenSolver<CMatrix>(st.density()).eigenvalues().minCoeff() >= -1e-12);
  }
  CHECK_THROWS_AS(prepare_initial(s, {fid, 0.0}), SpinError);
  CHECK_THROWS_AS(prepare_initial(s, {fid, 1.01}), SpinError);
}

TEST_CASE("target library") {
  const SpinSystem s = build_spin_system(3);
  const QuantumState cat = target_library("cat_z2", s);
  for (int i = 0; i < 7; ++i) {
    const double m = s.m_at(i);
    CHECK(std::abs(cat.amplitudes()(i) - cplx(std::abs(m) == 2 ? 1 / std::sqrt(2.0) : 0.0)) < 1e-15);
  }
  const QuantumState ramp = target_library("ramp_y", s);
  CHECK(ramp.amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-12));
  for (int j = 0; j < 7; ++j) {
    const double m = 3 - j;
    const cplx c = stretched_state(s, Vec3::UnitY(), m).amplitudes().dot(ramp.amplitudes());
    CHECK(std::norm(c) == doctest::Approx(m * m / 28.0).epsilon(1e-12));
  }
  const QuantumState mx2 = target_library("mx2", s);
  CVector z2 = CVector::Zero(7);
  z2(1) = 1.0;
  const CVector rotated = rotation_operator(s, Vec3::UnitY(), kPi / 2) * z2;
  CHECK(std::abs(std::abs(rotated.dot(mx2.amplitudes())) - 1.0) < 1e-10);
  for (const auto& name : target_names())
    CHECK(target_library(name, s).amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(target_names().size() == 3);
  CHECK_THROWS_AS(target_library("nope", s), SpinError);
}

TEST_CASE("drive jacobian with slew clamping matches finite differences") {
  ControlParams p;
  p.n_steps = 8;
  p.duration = 80e-6;
  FilterSpec filt = FilterSpec::identity(16);
  filt.slew_limit = 3e5;
  std::mt19937_64 gen(14);
  ControlWaveform w = random_waveform(gen, p);
  DriveJacobian jac;
  const RenderedDrive d = render_waveform(w, filt, &jac);
  const double h = 1e-7;
  for (int i = 0; i < p.n_steps; ++i) {
    ControlWaveform wp = w, wm = w;
    wp.phis[i] += h;
    wm.phis[i] -= h;
    const RenderedDrive dp = render_waveform(wp, filt), dm = render_waveform(wm, filt);
    for (std::size_t k = 0; k < d.size(); ++k) {
      CHECK(std::abs((dp.bx[k] - dm.bx[k]) / (2 * h) - jac.dbx(k, i)) < 1e-5);
      CHECK(std::abs((dp.by[k] - dm.by[k]) / (2 * h) - jac.dby(k, i)) < 1e-5);
    }
  }
}
