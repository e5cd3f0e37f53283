#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spinctl/control_model.hpp"

namespace spinctl {

struct NoiseModel {
  enum class Decoherence { none, depolarize };
  enum class Scheme { gauss_hermite, equal_weight };

  double scattering_rate = 0.0;  // 1/s
  Decoherence decoherence = Decoherence::none;
  double relative_sigma = 0.0;   // fractional spread of chi
  int n_samples = 1;
  Scheme scheme = Scheme::gauss_hermite;

  /// Closed system, homogeneous chi.
  static NoiseModel none() { return {}; }
  /// Depolarization at gamma_s = chi/beta, 5% Gaussian spread of chi, 7 nodes.
  static NoiseModel defaults(const ControlParams& params);

  void validate() const;
  bool is_closed() const { return decoherence == Decoherence::none || scattering_rate == 0.0; }
  /// (chi_j, weight_j) pairs, weights summing to one.
  std::vector<std::pair<double, double>> chi_samples(double chi) const;
};

std::string to_string(NoiseModel::Decoherence d);
std::string to_string(NoiseModel::Scheme s);
NoiseModel::Decoherence decoherence_from_string(const std::string& s);
NoiseModel::Scheme scheme_from_string(const std::string& s);

/// Nodes and weights of the K-point Gauss-Hermite rule for a standard normal.
std::pair<std::vector<double>, std::vector<double>> gauss_hermite_normal(int k);

/// Eigendecomposition of one piecewise-constant Hamiltonian.
struct Eigensystem {
  Eigen::VectorXd values;
  CMatrix vectors;

  explicit Eigensystem(const CMatrix& h);
  CMatrix propagator(double t) const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<QuantumState> states;
  std::map<std::string, std::vector<double>> metrics;
};

/// Ordered product of substep propagators applied to a pure state.
QuantumState propagate_pure(const SpinSystem& sys, const QuantumState& psi0, const RenderedDrive& drive,
                            const ControlParams& params);
/// Same with chi replaced (one inhomogeneity sample).
CVector propagate_ket(const SpinSystem& sys, const CVector& psi0, const RenderedDrive& drive, double larmor_rate,
                      double chi);
/// Total unitary of the drive.
CMatrix drive_unitary(const SpinSystem& sys, const RenderedDrive& drive, double larmor_rate, double chi);

/// Ensemble-averaged Lindblad evolution, d rho/dt = -i[H, rho] + gamma_s D[rho]
/// with D[rho] = -(rho - Tr(rho) I/d).
QuantumState propagate_master(const SpinSystem& sys, const QuantumState& rho0, const RenderedDrive& drive,
                              const ControlParams& params, const NoiseModel& noise);

/// States at n_snapshots equally spaced times including both endpoints.
/// Pure input with a closed, homogeneous noise model stays pure.
Trajectory propagate_with_snapshots(const SpinSystem& sys, const QuantumState& state0, const RenderedDrive& drive,
                                    const ControlParams& params, const NoiseModel& noise, int n_snapshots);

/// Adds mean/variance channels for fx, fy, fz and, if defined, squeezing
/// along x relative to the mean spin along y.
void add_spin_metrics(const SpinSystem& sys, Trajectory& traj);

struct GroundState {
  QuantumState state;
  double gap = 0.0;  // rad/s
};

/// Lowest eigenvector of hamiltonian_at(...). Throws DegenerateGroundState
/// when the gap is below 1e-9 of the operator norm.
GroundState instantaneous_ground_state(const SpinSystem& sys, const ControlParams& params, double bx, double by);
GroundState ground_state_of(const CMatrix& h);

} // namespace spinctl
