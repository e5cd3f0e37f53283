#pragma once

// Control waveforms, the Larmor + tensor-light-shift Hamiltonian, coil
// filtering of the field direction onto a fine time grid, initial-state
// preparation and the library of named target states.

#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "spinctl/spin_core.hpp"

namespace spinctl {

/// Physical control parameters. Rates are angular frequencies in rad/s.
struct ControlParams {
  double larmor_rate = kTwoPi * 15e3;    // peak g_f mu_B B / hbar, signed
  double nonlinear_rate = kTwoPi * 500;  // chi = beta * gamma_s
  double beta = 8.2;
  double duration = 500e-6;              // seconds
  int n_steps = 30;

  static ControlParams defaults() { return {}; }
  double scattering_rate() const { return nonlinear_rate / beta; }
  double step_duration() const { return duration / n_steps; }
  void validate() const;
};

/// First-order low-pass plus optional slew clamp on the Cartesian field.
struct FilterSpec {
  double cutoff_hz = 100e3;
  double slew_limit = std::numeric_limits<double>::infinity();  // per second
  int substeps_per_step = 32;

  /// Defaults with the substep count chosen so |Omega_L| dt <= max_angle.
  static FilterSpec for_params(const ControlParams& params, double max_angle = 0.05);
  /// No bandwidth or slew limitation.
  static FilterSpec identity(int substeps_per_step);
  void validate() const;
};

int default_substeps(const ControlParams& params, double max_angle = 0.05);

struct ControlWaveform {
  std::vector<double> phis;  // radians, unwrapped
  ControlParams params;

  void validate() const;
};

/// Normalized field components sampled at substep midpoints.
struct RenderedDrive {
  double dt = 0.0;             // substep length (s)
  std::vector<double> times;   // midpoints (k + 1/2) dt
  std::vector<double> bx, by;

  std::size_t size() const { return bx.size(); }
  double duration() const { return dt * static_cast<double>(bx.size()); }
};

/// Sensitivity of every rendered sample to every control angle.
struct DriveJacobian {
  Eigen::MatrixXd dbx;  // samples x n_steps
  Eigen::MatrixXd dby;
};

/// Applies the low-pass to a piecewise-constant sequence (one value per step)
/// and returns midpoint samples, M per step. The first sample's input value is
/// the filter's initial condition; the response is exact for the step input.
std::vector<double> lowpass_steps(std::span<const double> step_values, double step_duration, int substeps,
                                  double cutoff_hz);

RenderedDrive render_waveform(const ControlWaveform& w, const FilterSpec& filter);
RenderedDrive render_waveform(const ControlWaveform& w, const FilterSpec& filter, DriveJacobian* jac);

/// H/hbar = Omega_L (bx fx + by fy) + chi fx^2.
CMatrix hamiltonian_at(const SpinSystem& sys, const ControlParams& params, double bx, double by);
CMatrix hamiltonian_at(const SpinSystem& sys, double larmor_rate, double chi, double bx, double by);

enum class ResidualRule { uniform_complement };

struct InitialPrep {
  QuantumState target;
  double pumped_fraction = 1.0;
  ResidualRule residual = ResidualRule::uniform_complement;
};

/// p |psi0><psi0| + (1-p) (I - |psi0><psi0|)/(d-1).
QuantumState prepare_initial(const SpinSystem& sys, const InitialPrep& prep);

/// The optically pumped fiducial state |m_y = +f>.
QuantumState fiducial_state(const SpinSystem& sys);

/// Named targets: cat_z2, mx2, ramp_y.
QuantumState target_library(std::string_view name, const SpinSystem& sys);
std::vector<std::string> target_names();

} // namespace spinctl
