#pragma once

// Adiabatic squeezing: the y field is ramped down over the constant F_x^2
// nonlinearity so |m_y=-f> follows the instantaneous ground state.

#include <optional>
#include <string>
#include <vector>

#include "spinctl/dynamics.hpp"

namespace spinctl {

enum class RampShape { exponential, linear };

std::string to_string(RampShape s);
RampShape ramp_shape_from_string(const std::string& s);

struct RampSpec {
  double omega_start = kTwoPi * 15e3;  // rad/s
  double omega_end = kTwoPi * 500;     // rad/s
  RampShape shape = RampShape::exponential;
  double ramp_time = 0.0;              // s, time to go from omega_start to omega_end
  double hold_time = 0.0;              // s, at omega_end

  void validate() const;
  /// Larmor rate at time t into the ramp (held at omega_end afterwards).
  double omega_at(double t) const;
  /// Time at which the ramp trajectory reaches omega (extrapolated beyond omega_end).
  double time_to_reach(double omega) const;
  /// Same trajectory, stopped when it reaches `omega` (hold time kept).
  RampSpec truncated_at(double omega) const;
  double total_time() const { return ramp_time + hold_time; }
};

/// Adiabaticity measure of H = Omega fy + chi fx^2 at one Omega:
/// max over excited n of |<n|fy|g>| / (E_n - E_0)^2.
double adiabatic_coupling(const SpinSystem& sys, double chi, double omega);

/// Shortest ramp time keeping max |<n|dH/dt|g>| / (E_n - E_0)^2 <= threshold.
double adiabatic_ramp_time(const SpinSystem& sys, double chi, double omega_start, double omega_end, RampShape shape,
                           double threshold = 0.05);

/// Default template: exponential from 2 pi 15 kHz down to Omega = chi, with
/// the ramp time from adiabatic_ramp_time.
RampSpec default_ramp(const SpinSystem& sys, const ControlParams& params);

struct SqueezeReport {
  double xi = 0.0;
  double xi_normalized = 0.0;
  double squeezing_db = 0.0;       // along x
  double anti_squeezing_db = 0.0;  // along z
  double mean_spin = 0.0;          // <F_y>
  double ground_state_overlap = 0.0;
};

/// Report for a final state; `ground` is the reference ground state.
SqueezeReport squeeze_report(const SpinSystem& sys, const QuantumState& state, const QuantumState& ground);

/// Uniform drive following the ramp, normalized by params.larmor_rate.
RenderedDrive ramp_drive(const RampSpec& ramp, const ControlParams& params, double max_angle = 0.05);

struct AdiabaticRun {
  Trajectory trajectory;
  SqueezeReport report;
  double duration = 0.0;
};

/// Starts from |m_y=-f> (mixed with the uniform complement when
/// pumped_fraction < 1) and propagates along the ramp.
AdiabaticRun run_adiabatic(const SpinSystem& sys, const ControlParams& params, const NoiseModel& noise,
                           const RampSpec& ramp, int n_snapshots, double pumped_fraction = 1.0);

struct SweepRow {
  double omega_end = 0.0;
  std::optional<SqueezeReport> report;
  std::string error;  // set when report is empty
};

std::vector<SweepRow> sweep_final_field(const SpinSystem& sys, const ControlParams& params, const NoiseModel& noise,
                                        const RampSpec& ramp_template, const std::vector<double>& omega_end_values,
                                        double pumped_fraction = 1.0);

/// n log-spaced endpoints from ramp.omega_start down to ramp.omega_end.
std::vector<double> default_sweep_values(const RampSpec& ramp, int n = 16);

struct OracleRow {
  double omega = 0.0;
  std::optional<SqueezingValues> values;  // empty when the mean spin vanishes
  double gap = 0.0;
};

/// Squeezing of the exact ground state of Omega fy + chi fx^2 for each Omega.
std::vector<OracleRow> ground_state_xi(const SpinSystem& sys, double chi, const std::vector<double>& omegas);

} // namespace spinctl
