#include "spinctl/squeezing.hpp"

#include <algorithm>
#include <cmath>

#include "spinctl/parallel.hpp"

namespace spinctl {

std::string to_string(RampShape s) { return s == RampShape::exponential ? "exponential" : "linear"; }

RampShape ramp_shape_from_string(const std::string& s) {
  if (s == "exponential") return RampShape::exponential;
  if (s == "linear") return RampShape::linear;
  throw SpinError("unknown ramp shape '" + s + "' (expected exponential|linear)");
}

void RampSpec::validate() const {
  if (!(omega_start > 0.0) || !std::isfinite(omega_start)) throw SpinError("ramp omega_start must be > 0");
  if (!(omega_end >= 0.0) || omega_end > omega_start) throw SpinError("ramp requires omega_start >= omega_end >= 0");
  if (shape == RampShape::exponential && !(omega_end > 0.0))
    throw SpinError("exponential ramp requires omega_end > 0");
  if (!(ramp_time >= 0.0) || !(hold_time >= 0.0)) throw SpinError("ramp and hold times must be >= 0");
  if ((omega_start > omega_end) != (ramp_time > 0.0))
    throw SpinError("ramp_time must be > 0 exactly when omega_start > omega_end");
}

double RampSpec::omega_at(double t) const {
  if (t >= ramp_time) return omega_end;
  if (shape == RampShape::exponential) return omega_start * std::pow(omega_end / omega_start, t / ramp_time);
  return omega_start + (omega_end - omega_start) * (t / ramp_time);
}

double RampSpec::time_to_reach(double omega) const {
  if (omega >= omega_start) return 0.0;
  if (!(ramp_time > 0.0)) throw SpinError("ramp has no time axis to extrapolate along");
  if (shape == RampShape::exponential) {
    if (!(omega > 0.0)) throw SpinError("exponential ramp never reaches omega <= 0");
    return ramp_time * std::log(omega_start / omega) / std::log(omega_start / omega_end);
  }
  return ramp_time * (omega_start - omega) / (omega_start - omega_end);
}

RampSpec RampSpec::truncated_at(double omega) const {
  if (!(omega >= 0.0) || omega > omega_start) throw SpinError("sweep endpoint must lie in [0, omega_start]");
  RampSpec r = *this;
  r.ramp_time = time_to_reach(omega);
  r.omega_end = omega;
  if (r.ramp_time == 0.0) r.omega_end = omega_start;
  return r;
}

double adiabatic_coupling(const SpinSystem& sys, double chi, double omega) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(omega * sys.fy() + chi * sys.fx2());
  const CVector g = es.eigenvectors().col(0);
  const CVector fyg = sys.fy() * g;
  double worst = 0.0;
  for (int n = 1; n < sys.dim(); ++n) {
    const double gap = es.eigenvalues()(n) - es.eigenvalues()(0);
    const double elem = std::abs(es.eigenvectors().col(n).dot(fyg));
    if (elem > 1e-12) worst = std::max(worst, elem / (gap * gap));
  }
  return worst;
}

double adiabatic_ramp_time(const SpinSystem& sys, double chi, double omega_start, double omega_end, RampShape shape,
                           double threshold) {
  if (!(omega_start > omega_end) || !(omega_end > 0.0)) throw SpinError("adiabatic_ramp_time: need omega_start > omega_end > 0");
  if (!(threshold > 0.0)) throw SpinError("adiabatic_ramp_time: threshold must be > 0");
  constexpr int kGrid = 400;
  double worst_exp = 0.0, worst_lin = 0.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double omega = omega_end * std::pow(omega_start / omega_end, static_cast<double>(i) / kGrid);
    const double c = adiabatic_coupling(sys, chi, omega);
    worst_exp = std::max(worst_exp, omega * c);
    worst_lin = std::max(worst_lin, c);
  }
  if (shape == RampShape::exponential) {
    // |dOmega/dt| = Omega / t_s
    const double time_constant = worst_exp / threshold;
    return time_constant * std::log(omega_start / omega_end);
  }
  return (omega_start - omega_end) * worst_lin / threshold;
}

RampSpec default_ramp(const SpinSystem& sys, const ControlParams& params) {
  RampSpec r;
  r.omega_start = std::abs(params.larmor_rate);
  r.omega_end = params.nonlinear_rate;
  r.shape = RampShape::exponential;
  r.ramp_time = adiabatic_ramp_time(sys, params.nonlinear_rate, r.omega_start, r.omega_end, r.shape);
  return r;
}

SqueezeReport squeeze_report(const SpinSystem& sys, const QuantumState& state, const QuantumState& ground) {
  const SqueezingValues sq = squeezing_parameter(sys, state, Vec3::UnitX(), Vec3::UnitY());
  SqueezeReport r;
  r.xi = sq.xi;
  r.xi_normalized = sq.xi_normalized;
  r.squeezing_db = sq.squeezing_db;
  r.mean_spin = state.expectation(sys.fy());
  r.anti_squeezing_db = 10.0 * std::log10(2.0 * std::max(0.0, state.variance(sys.fz())) / std::abs(r.mean_spin));
  r.ground_state_overlap = std::clamp(state.expectation(ground.density()), 0.0, 1.0);
  return r;
}

RenderedDrive ramp_drive(const RampSpec& ramp, const ControlParams& params, double max_angle) {
  ramp.validate();
  if (ramp.omega_start > std::abs(params.larmor_rate) * (1.0 + 1e-12))
    throw SpinError("ramp omega_start exceeds the maximum Larmor rate");
  const double total = ramp.total_time();
  RenderedDrive d;
  const double dt_max = max_angle / ramp.omega_start;
  const auto n = static_cast<std::size_t>(std::ceil(total / dt_max - 1e-9));
  if (n == 0) {
    d.dt = dt_max;
    return d;
  }
  d.dt = total / static_cast<double>(n);
  d.times.resize(n);
  d.bx.assign(n, 0.0);
  d.by.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    d.times[k] = (static_cast<double>(k) + 0.5) * d.dt;
    d.by[k] = ramp.omega_at(d.times[k]) / params.larmor_rate;
  }
  return d;
}

AdiabaticRun run_adiabatic(const SpinSystem& sys, const ControlParams& params, const NoiseModel& noise,
                           const RampSpec& ramp, int n_snapshots, double pumped_fraction) {
  const QuantumState start = stretched_state(sys, Vec3::UnitY(), -sys.f());
  const QuantumState initial =
      pumped_fraction < 1.0 ? prepare_initial(sys, InitialPrep{start, pumped_fraction}) : start;
  const RenderedDrive drive = ramp_drive(ramp, params);
  AdiabaticRun run;
  run.duration = ramp.total_time();
  run.trajectory = propagate_with_snapshots(sys, initial, drive, params, noise, n_snapshots);
  add_spin_metrics(sys, run.trajectory);
  const GroundState ground = ground_state_of(ramp.omega_end * sys.fy() + params.nonlinear_rate * sys.fx2());
  run.report = squeeze_report(sys, run.trajectory.states.back(), ground.state);
  return run;
}

std::vector<SweepRow> sweep_final_field(const SpinSystem& sys, const ControlParams& params, const NoiseModel& noise,
                                        const RampSpec& ramp_template, const std::vector<double>& omega_end_values,
                                        double pumped_fraction) {
  ramp_template.validate();
  std::vector<SweepRow> rows(omega_end_values.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    rows[i].omega_end = omega_end_values[i];
    try {
      const RampSpec r = ramp_template.truncated_at(omega_end_values[i]);
      rows[i].report = run_adiabatic(sys, params, noise, r, 2, pumped_fraction).report;
    } catch (const SpinError& e) {
      rows[i].error = e.what();
    }
  });
  return rows;
}

std::vector<double> default_sweep_values(const RampSpec& ramp, int n) {
  if (n < 2) throw SpinError("sweep needs at least two points");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = ramp.omega_start * std::pow(ramp.omega_end / ramp.omega_start, static_cast<double>(i) / (n - 1));
  v.back() = ramp.omega_end;
  return v;
}

std::vector<OracleRow> ground_state_xi(const SpinSystem& sys, double chi, const std::vector<double>& omegas) {
  if (!(chi > 0.0)) throw SpinError("ground_state_xi requires chi > 0");
  std::vector<OracleRow> rows;
  rows.reserve(omegas.size());
  for (double omega : omegas) {
    const GroundState g = ground_state_of(omega * sys.fy() + chi * sys.fx2());
    OracleRow row{omega, std::nullopt, g.gap};
    try {
      row.values = squeezing_parameter(sys, g.state, Vec3::UnitX(), Vec3::UnitY());
    } catch (const UndefinedSqueezing&) {
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace spinctl
