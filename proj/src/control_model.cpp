#include "spinctl/control_model.hpp"

#include <algorithm>
#include <cmath>

namespace spinctl {

void ControlParams::validate() const {
  if (!(std::abs(larmor_rate) > 0.0) || !std::isfinite(larmor_rate)) throw SpinError("larmor_rate must be nonzero");
  if (!(nonlinear_rate >= 0.0) || !std::isfinite(nonlinear_rate)) throw SpinError("nonlinear_rate must be >= 0");
  if (!(beta > 0.0)) throw SpinError("beta must be > 0");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw SpinError("duration must be > 0");
  if (n_steps < 1) throw SpinError("n_steps must be >= 1");
}

int default_substeps(const ControlParams& params, double max_angle) {
  const double per_step = std::abs(params.larmor_rate) * params.step_duration();
  return std::max(1, static_cast<int>(std::ceil(per_step / max_angle - 1e-12)));
}

FilterSpec FilterSpec::for_params(const ControlParams& params, double max_angle) {
  FilterSpec f;
  f.substeps_per_step = default_substeps(params, max_angle);
  return f;
}

FilterSpec FilterSpec::identity(int substeps_per_step) {
  FilterSpec f;
  f.cutoff_hz = std::numeric_limits<double>::infinity();
  f.substeps_per_step = substeps_per_step;
  return f;
}

void FilterSpec::validate() const {
  if (!(cutoff_hz > 0.0)) throw SpinError("filter cutoff must be > 0");
  if (!(slew_limit > 0.0)) throw SpinError("slew limit must be > 0");
  if (substeps_per_step < 1) throw SpinError("substeps_per_step must be >= 1");
}

void ControlWaveform::validate() const {
  params.validate();
  if (static_cast<int>(phis.size()) != params.n_steps)
    throw SpinError("waveform has " + std::to_string(phis.size()) + " angles, expected n_steps = " +
                    std::to_string(params.n_steps));
  for (double p : phis)
    if (!std::isfinite(p)) throw SpinError("waveform angle is not finite");
}

std::vector<double> lowpass_steps(std::span<const double> step_values, double step_duration, int substeps,
                                  double cutoff_hz) {
  const double dt = step_duration / substeps;
  const double rate = kTwoPi * cutoff_hz;
  const double decay_half = std::isinf(cutoff_hz) ? 0.0 : std::exp(-0.5 * rate * dt);
  const double decay_full = decay_half * decay_half;
  std::vector<double> out;
  out.reserve(step_values.size() * static_cast<std::size_t>(substeps));
  double y = step_values.empty() ? 0.0 : step_values.front();
  for (double u : step_values) {
    for (int s = 0; s < substeps; ++s) {
      out.push_back(u + (y - u) * decay_half);
      y = u + (y - u) * decay_full;
    }
  }
  return out;
}

RenderedDrive render_waveform(const ControlWaveform& w, const FilterSpec& filter) {
  return render_waveform(w, filter, nullptr);
}

RenderedDrive render_waveform(const ControlWaveform& w, const FilterSpec& filter, DriveJacobian* jac) {
  w.validate();
  filter.validate();
  const int n = w.params.n_steps;
  const int m = filter.substeps_per_step;
  const double step = w.params.step_duration();

  std::vector<double> ux(n), uy(n);
  for (int i = 0; i < n; ++i) {
    ux[i] = std::cos(w.phis[i]);
    uy[i] = std::sin(w.phis[i]);
  }

  RenderedDrive d;
  d.dt = step / m;
  d.bx = lowpass_steps(ux, step, m, filter.cutoff_hz);
  d.by = lowpass_steps(uy, step, m, filter.cutoff_hz);
  const std::size_t k_total = d.bx.size();
  d.times.resize(k_total);
  for (std::size_t k = 0; k < k_total; ++k) d.times[k] = (static_cast<double>(k) + 0.5) * d.dt;

  // Linear response of each sample to each step value.
  Eigen::MatrixXd gain;
  if (jac) {
    gain.resize(static_cast<Eigen::Index>(k_total), n);
    std::vector<double> unit(n, 0.0);
    for (int i = 0; i < n; ++i) {
      unit[i] = 1.0;
      const auto col = lowpass_steps(unit, step, m, filter.cutoff_hz);
      for (std::size_t k = 0; k < k_total; ++k) gain(static_cast<Eigen::Index>(k), i) = col[k];
      unit[i] = 0.0;
    }
    const Eigen::VectorXd dux = -Eigen::VectorXd::Map(uy.data(), n);
    const Eigen::VectorXd duy = Eigen::VectorXd::Map(ux.data(), n);
    jac->dbx = gain * dux.asDiagonal();
    jac->dby = gain * duy.asDiagonal();
  }

  const double max_delta = filter.slew_limit * d.dt;
  const bool slew = std::isfinite(max_delta);
  for (std::size_t k = 0; k < k_total; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (slew && k > 0) {
      for (auto* comp : {&d.bx, &d.by}) {
        const double prev = (*comp)[k - 1];
        const double delta = (*comp)[k] - prev;
        if (std::abs(delta) > max_delta) {
          (*comp)[k] = prev + std::copysign(max_delta, delta);
          if (jac) {
            auto& jm = comp == &d.bx ? jac->dbx : jac->dby;
            jm.row(kk) = jm.row(kk - 1);
          }
        }
      }
    }
    const double r = std::hypot(d.bx[k], d.by[k]);
    if (r > 1.0 && slew && k > 0) {
      // Shorten the step from the previous sample so the slew bound survives.
      const double px = d.bx[k - 1], py = d.by[k - 1];
      const double ex = d.bx[k] - px, ey = d.by[k] - py;
      const double a = ex * ex + ey * ey, b = px * ex + py * ey, c = px * px + py * py - 1.0;
      const double alpha = (-b + std::sqrt(std::max(0.0, b * b - a * c))) / a;
      const double qx = px + alpha * ex, qy = py + alpha * ey;
      if (jac) {
        const Eigen::RowVectorXd dpx = jac->dbx.row(kk - 1), dpy = jac->dby.row(kk - 1);
        const Eigen::RowVectorXd dex = jac->dbx.row(kk) - dpx, dey = jac->dby.row(kk) - dpy;
        const Eigen::RowVectorXd dalpha =
            -(qx * (dpx + alpha * dex) + qy * (dpy + alpha * dey)) / (qx * ex + qy * ey);
        jac->dbx.row(kk) = dpx + alpha * dex + ex * dalpha;
        jac->dby.row(kk) = dpy + alpha * dey + ey * dalpha;
      }
      d.bx[k] = qx;
      d.by[k] = qy;
    } else if (r > 1.0) {
      const double ex = d.bx[k] / r, ey = d.by[k] / r;
      if (jac) {
        const Eigen::RowVectorXd proj = ex * jac->dbx.row(kk) + ey * jac->dby.row(kk);
        jac->dbx.row(kk) = (jac->dbx.row(kk) - ex * proj) / r;
        jac->dby.row(kk) = (jac->dby.row(kk) - ey * proj) / r;
      }
      d.bx[k] = ex;
      d.by[k] = ey;
    }
  }
  return d;
}

CMatrix hamiltonian_at(const SpinSystem& sys, double larmor_rate, double chi, double bx, double by) {
  return larmor_rate * (bx * sys.fx() + by * sys.fy()) + chi * sys.fx2();
}

CMatrix hamiltonian_at(const SpinSystem& sys, const ControlParams& params, double bx, double by) {
  return hamiltonian_at(sys, params.larmor_rate, params.nonlinear_rate, bx, by);
}

QuantumState prepare_initial(const SpinSystem& sys, const InitialPrep& prep) {
  if (!(prep.pumped_fraction > 0.0 && prep.pumped_fraction <= 1.0))
    throw SpinError("pumped_fraction must lie in (0, 1]");
  if (prep.target.dim() != sys.dim()) throw SpinError("prepare_initial: dimension mismatch");
  const CMatrix proj = prep.target.density();
  const int d = sys.dim();
  const double p = prep.pumped_fraction;
  CMatrix rho = p * proj;
  if (p < 1.0) rho += (1.0 - p) / (d - 1) * (CMatrix::Identity(d, d) - proj);
  return QuantumState::mixed_hermitized(rho);
}

QuantumState fiducial_state(const SpinSystem& sys) { return stretched_state(sys, Vec3::UnitY(), sys.f()); }

std::vector<std::string> target_names() { return {"cat_z2", "mx2", "ramp_y"}; }

QuantumState target_library(std::string_view name, const SpinSystem& sys) {
  const int d = sys.dim();
  if (name == "cat_z2") {
    CVector psi = CVector::Zero(d);
    psi(sys.index_of(2.0)) = 1.0;
    psi(sys.index_of(-2.0)) = 1.0;
    return QuantumState::pure(psi / std::sqrt(2.0));
  }
  if (name == "mx2") return stretched_state(sys, Vec3::UnitX(), 2.0);
  if (name == "ramp_y") {
    CVector psi = CVector::Zero(d);
    for (int i = 0; i < d; ++i) {
      const double m = sys.m_at(i);
      if (m != 0.0) psi += m * stretched_state(sys, Vec3::UnitY(), m).amplitudes();
    }
    return QuantumState::pure(psi / psi.norm());
  }
  throw SpinError("unknown target '" + std::string(name) + "' (known: cat_z2, mx2, ramp_y)");
}

} // namespace spinctl
