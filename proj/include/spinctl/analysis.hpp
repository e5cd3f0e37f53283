#pragma once

// Post-hoc evaluation: rotation correction of measured states, the Gaussian
// displacement yield-bias model, and batch yield/fidelity statistics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spinctl/control_model.hpp"
#include "spinctl/dynamics.hpp"

namespace spinctl {

struct RotationFit {
  Rotation rotation;
  QuantumState corrected;
  double fidelity_before = 0.0;
  double fidelity_after = 0.0;
};

/// Identity followed by n_angles shells (angle pi k / n_angles) of rotations
/// about n_axes Fibonacci-sphere axes.
std::vector<Rotation> rotation_covering(int n_axes = 256, int n_angles = 8);

inline constexpr int kRotationStarts = 12;

/// Maximizes fidelity(predicted, R measured R^dag) over rotations. Local
/// ascent runs from the identity and the 11 best covering points; ties go to
/// the smallest rotation angle.
RotationFit optimize_rotation_overlap(const SpinSystem& sys, const QuantumState& measured,
                                      const QuantumState& predicted);

/// psi + delta, delta with independent N(0, sigma^2) real and imaginary parts
/// in every component, then normalized.
QuantumState displace_state(const QuantumState& psi, double sigma, std::uint64_t rng_seed, std::uint64_t counter);

struct BiasEstimate {
  double mean_yield = 1.0;
  double yield_std = 0.0;  // sample standard deviation of the yields
  double bias = 0.0;       // 1 - mean_yield
  double standard_error() const;
  int n_samples = 0;
};

BiasEstimate gaussian_displacement_bias(const QuantumState& state, double sigma, int n_samples, std::uint64_t rng_seed);

/// Sigma whose displacement bias equals target_bias, by bisection on [0, 1]
/// with common random numbers.
double bias_sigma(const QuantumState& state, double target_bias, int n_samples, std::uint64_t rng_seed,
                  double tolerance = 1e-6);

struct BatchInput {
  std::string label;
  QuantumState target;     // pure target chi_T
  QuantumState predicted;  // rho_P
  QuantumState measured;   // rho_M
};

struct BatchEntry {
  std::string label;
  double yield_pure = 0.0;   // <chi_T|rho_M|chi_T>
  double yield_mixed = 0.0;  // Uhlmann overlap of chi_T and rho_M
  double fidelity = 0.0;     // Uhlmann overlap of rho_P and rho_M
  double corrected_yield_pure = 0.0;
  double corrected_yield_mixed = 0.0;
  double corrected_fidelity = 0.0;
  Rotation rotation;
  std::string error;  // nonempty when this entry could not be evaluated
};

struct Histogram {
  std::vector<double> edges;  // n_bins + 1
  std::vector<int> counts;
  int total() const;
};

/// Fixed-range histogram; values outside [lo, hi] are clamped into the end bins.
Histogram make_histogram(const std::vector<double>& values, int n_bins = 20, double lo = 0.0, double hi = 1.0);

struct BatchRecord {
  std::vector<BatchEntry> entries;
  Histogram yields, fidelities, corrected_yields, corrected_fidelities;
};

BatchRecord batch_evaluate(const SpinSystem& sys, const std::vector<BatchInput>& inputs, int n_bins = 20);

struct SyntheticBatchConfig {
  int n_targets = 21;
  ControlParams params;
  FilterSpec filter = FilterSpec::for_params(ControlParams{});
  NoiseModel noise = NoiseModel::defaults(ControlParams{});
  double pumped_fraction = 0.96;
  double displacement_sigma = 0.01;
  std::vector<int> planted{3, 10, 17};  // entries that also receive a gross rotation
  double planted_angle = 0.6;   // rad
  std::uint64_t rng_seed = 1;
};

/// Synthetic stand-in for measured data, labelled "synthetic-NN": chi_T is a
/// random waveform's closed evolution of the fiducial state, rho_P the
/// dissipative evolution of the pumped state under the same waveform, and
/// rho_M is rho_P with its dominant eigenvector displaced (and, for planted
/// entries, the whole state rotated).
std::vector<BatchInput> synthetic_batch(const SpinSystem& sys, const SyntheticBatchConfig& config);

} // namespace spinctl
