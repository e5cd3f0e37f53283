#include "spinctl/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/erf.hpp>

namespace spinctl {

NoiseModel NoiseModel::defaults(const ControlParams& params) {
  NoiseModel n;
  n.scattering_rate = params.scattering_rate();
  n.decoherence = Decoherence::depolarize;
  n.relative_sigma = 0.05;
  n.n_samples = 7;
  n.scheme = Scheme::gauss_hermite;
  return n;
}

void NoiseModel::validate() const {
  if (!(scattering_rate >= 0.0) || !std::isfinite(scattering_rate)) throw SpinError("scattering_rate must be >= 0");
  if (!(relative_sigma >= 0.0) || !std::isfinite(relative_sigma)) throw SpinError("relative_sigma must be >= 0");
  if (n_samples < 1) throw SpinError("inhomogeneity n_samples must be >= 1");
}

std::string to_string(NoiseModel::Decoherence d) { return d == NoiseModel::Decoherence::none ? "none" : "depolarize"; }
std::string to_string(NoiseModel::Scheme s) {
  return s == NoiseModel::Scheme::gauss_hermite ? "gauss-hermite" : "equal-weight";
}

NoiseModel::Decoherence decoherence_from_string(const std::string& s) {
  if (s == "none") return NoiseModel::Decoherence::none;
  if (s == "depolarize") return NoiseModel::Decoherence::depolarize;
  throw SpinError("unknown decoherence kind '" + s + "' (expected none|depolarize)");
}

NoiseModel::Scheme scheme_from_string(const std::string& s) {
  if (s == "gauss-hermite") return NoiseModel::Scheme::gauss_hermite;
  if (s == "equal-weight") return NoiseModel::Scheme::equal_weight;
  throw SpinError("unknown inhomogeneity scheme '" + s + "' (expected gauss-hermite|equal-weight)");
}

std::pair<std::vector<double>, std::vector<double>> gauss_hermite_normal(int k) {
  if (k < 1) throw SpinError("quadrature order must be >= 1");
  // Golub-Welsch on the probabilists' Hermite recurrence.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(k, k);
  for (int i = 1; i < k; ++i) jacobi(i - 1, i) = jacobi(i, i - 1) = std::sqrt(static_cast<double>(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  std::vector<double> nodes(k), weights(k);
  for (int i = 0; i < k; ++i) {
    nodes[i] = es.eigenvalues()(i);
    weights[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  }
  if (k % 2 == 1) nodes[k / 2] = 0.0;
  return {nodes, weights};
}

std::vector<std::pair<double, double>> NoiseModel::chi_samples(double chi) const {
  validate();
  std::vector<std::pair<double, double>> out;
  if (relative_sigma == 0.0 || n_samples == 1) {
    out.emplace_back(chi, 1.0);
    return out;
  }
  if (scheme == Scheme::gauss_hermite) {
    const auto [nodes, weights] = gauss_hermite_normal(n_samples);
    for (int i = 0; i < n_samples; ++i) out.emplace_back(chi * (1.0 + relative_sigma * nodes[i]), weights[i]);
  } else {
    for (int i = 0; i < n_samples; ++i) {
      const double p = (i + 0.5) / n_samples;
      const double z = std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0);
      out.emplace_back(chi * (1.0 + relative_sigma * z), 1.0 / n_samples);
    }
  }
  return out;
}

Eigensystem::Eigensystem(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  values = es.eigenvalues();
  vectors = es.eigenvectors();
}

CMatrix Eigensystem::propagator(double t) const {
  const CVector phases = (values * (-t)).unaryExpr([](double x) { return std::polar(1.0, x); });
  return vectors * phases.asDiagonal() * vectors.adjoint();
}

namespace {

// Walks the piecewise-constant drive, splitting substeps at the stop times.
template <class Step, class Record>
void walk_drive(const SpinSystem& sys, const RenderedDrive& drive, double larmor, double chi,
                const std::vector<double>& stops, Step&& step, Record&& record) {
  if (!(drive.dt > 0.0) || !std::isfinite(drive.dt)) throw SpinError("integrator step size is not positive and finite");
  std::size_t j = 0;
  while (j < stops.size() && stops[j] <= 0.0) record(j++);
  const std::size_t n = drive.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Eigensystem es(hamiltonian_at(sys, larmor, chi, drive.bx[k], drive.by[k]));
    const double t1 = drive.dt * static_cast<double>(k + 1);
    double cur = drive.dt * static_cast<double>(k);
    while (j < stops.size() && stops[j] <= t1 + 1e-9 * drive.dt) {
      const double stop = std::min(stops[j], t1);
      if (stop > cur) step(es, stop - cur);
      cur = stop;
      record(j++);
    }
    if (t1 > cur) step(es, t1 - cur);
  }
  while (j < stops.size()) record(j++);
}

void check_dims(const SpinSystem& sys, int dim) {
  if (dim != sys.dim())
    throw SpinError("dimension mismatch: state has " + std::to_string(dim) + ", spin system " + std::to_string(sys.dim()));
}

std::vector<CMatrix> evolve_density(const SpinSystem& sys, const CMatrix& rho0, const RenderedDrive& drive,
                                    double larmor, double chi, double gamma, const std::vector<double>& stops) {
  const int d = sys.dim();
  if (!(gamma >= 0.0) || !std::isfinite(gamma * drive.dt)) throw SpinError("integrator: decoherence step is not finite");
  CMatrix rho = rho0;
  std::vector<CMatrix> out;
  out.reserve(stops.size());
  walk_drive(
      sys, drive, larmor, chi, stops,
      [&](const Eigensystem& es, double tau) {
        const CMatrix u = es.propagator(tau);
        rho = u * rho * u.adjoint();
        if (gamma > 0.0) {
          // The depolarizing generator commutes with unitary conjugation, so
          // the exact channel over tau factorizes.
          const double keep = std::exp(-gamma * tau);
          const cplx tr = rho.trace();
          rho *= keep;
          rho.diagonal().array() += (1.0 - keep) * tr / static_cast<double>(d);
        }
      },
      [&](std::size_t) { out.push_back(rho); });
  return out;
}

std::vector<CVector> evolve_ket(const SpinSystem& sys, const CVector& psi0, const RenderedDrive& drive, double larmor,
                                double chi, const std::vector<double>& stops) {
  CVector psi = psi0;
  std::vector<CVector> out;
  out.reserve(stops.size());
  walk_drive(
      sys, drive, larmor, chi, stops, [&](const Eigensystem& es, double tau) { psi = es.propagator(tau) * psi; },
      [&](std::size_t) { out.push_back(psi); });
  return out;
}

std::vector<double> snapshot_times(double duration, int n) {
  std::vector<double> t(n);
  for (int j = 0; j < n; ++j) t[j] = duration * j / (n - 1);
  t.back() = duration;
  return t;
}

} // namespace

CVector propagate_ket(const SpinSystem& sys, const CVector& psi0, const RenderedDrive& drive, double larmor_rate,
                      double chi) {
  check_dims(sys, static_cast<int>(psi0.size()));
  return evolve_ket(sys, psi0, drive, larmor_rate, chi, {drive.duration()}).back();
}

CMatrix drive_unitary(const SpinSystem& sys, const RenderedDrive& drive, double larmor_rate, double chi) {
  CMatrix u = CMatrix::Identity(sys.dim(), sys.dim());
  walk_drive(
      sys, drive, larmor_rate, chi, {}, [&](const Eigensystem& es, double tau) { u = es.propagator(tau) * u; },
      [](std::size_t) {});
  return u;
}

QuantumState propagate_pure(const SpinSystem& sys, const QuantumState& psi0, const RenderedDrive& drive,
                            const ControlParams& params) {
  if (!psi0.is_pure()) throw SpinError("propagate_pure requires a pure state");
  CVector out = propagate_ket(sys, psi0.amplitudes(), drive, params.larmor_rate, params.nonlinear_rate);
  return QuantumState::pure(out / out.norm());
}

QuantumState propagate_master(const SpinSystem& sys, const QuantumState& rho0, const RenderedDrive& drive,
                              const ControlParams& params, const NoiseModel& noise) {
  const Trajectory traj = propagate_with_snapshots(sys, rho0, drive, params, noise, 2);
  const QuantumState& last = traj.states.back();
  if (last.is_pure()) return QuantumState::mixed_hermitized(last.density());
  return last;
}

Trajectory propagate_with_snapshots(const SpinSystem& sys, const QuantumState& state0, const RenderedDrive& drive,
                                    const ControlParams& params, const NoiseModel& noise, int n_snapshots) {
  if (n_snapshots < 2) throw SpinError("n_snapshots must be >= 2");
  check_dims(sys, state0.dim());
  noise.validate();
  Trajectory traj;
  traj.times = snapshot_times(drive.duration(), n_snapshots);
  const auto samples = noise.chi_samples(params.nonlinear_rate);

  if (state0.is_pure() && noise.is_closed() && samples.size() == 1) {
    const auto kets = evolve_ket(sys, state0.amplitudes(), drive, params.larmor_rate, samples[0].first, traj.times);
    for (const auto& k : kets) traj.states.push_back(QuantumState::pure(k / k.norm()));
    return traj;
  }

  const double gamma = noise.is_closed() ? 0.0 : noise.scattering_rate;
  const CMatrix rho0 = state0.density();
  std::vector<CMatrix> acc(n_snapshots, CMatrix::Zero(sys.dim(), sys.dim()));
  for (const auto& [chi, weight] : samples) {
    const auto rhos = evolve_density(sys, rho0, drive, params.larmor_rate, chi, gamma, traj.times);
    for (int j = 0; j < n_snapshots; ++j) acc[j] += weight * rhos[j];
  }
  for (auto& rho : acc) {
    rho /= rho.trace().real();
    traj.states.push_back(QuantumState::mixed_hermitized(rho));
  }
  return traj;
}

void add_spin_metrics(const SpinSystem& sys, Trajectory& traj) {
  const std::pair<const char*, const CMatrix*> comps[] = {{"fx", &sys.fx()}, {"fy", &sys.fy()}, {"fz", &sys.fz()}};
  for (const auto& [name, op] : comps) {
    auto& mean = traj.metrics[std::string(name) + "_mean"];
    auto& var = traj.metrics[std::string(name) + "_var"];
    for (const auto& s : traj.states) {
      mean.push_back(s.expectation(*op));
      var.push_back(s.variance(*op));
    }
  }
  auto& xi = traj.metrics["xi_normalized"];
  for (const auto& s : traj.states) {
    try {
      xi.push_back(squeezing_parameter(sys, s, Vec3::UnitX(), Vec3::UnitY()).xi_normalized);
    } catch (const UndefinedSqueezing&) {
      xi.push_back(std::nan(""));
    }
  }
}

GroundState ground_state_of(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const auto& ev = es.eigenvalues();
  const double gap = ev(1) - ev(0);
  const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  if (gap < 1e-9 * scale || scale == 0.0) throw DegenerateGroundState("degenerate ground state (gap " + std::to_string(gap) + ")");
  return {QuantumState::pure_normalized(es.eigenvectors().col(0)), gap};
}

GroundState instantaneous_ground_state(const SpinSystem& sys, const ControlParams& params, double bx, double by) {
  return ground_state_of(hamiltonian_at(sys, params, bx, by));
}

} // namespace spinctl
