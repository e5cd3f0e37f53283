#pragma once

// Two-stage waveform design. Stage 1 climbs the closed-system squared overlap
// with exact gradients; stage 2 refines against the ensemble master-equation
// Uhlmann overlap with central finite differences.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "spinctl/dynamics.hpp"

namespace spinctl {

struct LineSearch {
  double initial_step = 0.5;
  double shrink = 0.5;
  double armijo = 1e-4;
  int max_halvings = 40;
  /// Start each search from twice the previous accepted step (capped at
  /// initial_step * 1024) instead of from initial_step.
  bool adaptive = true;
};

enum class AscentDirection { steepest, lbfgs };

struct OptimizerConfig {
  int n_seeds = 10;
  int max_iters = 2000;         // stage 1
  int stage2_max_iters = 20;
  double grad_tolerance = 1e-6;
  int improvement_window = 20;
  double improvement_threshold = 1e-6;
  double fd_step = 1e-3;        // radians
  LineSearch line_search;
  AscentDirection direction = AscentDirection::lbfgs;
  int lbfgs_memory = 8;
  std::uint64_t rng_seed = 1;
  /// Stage 1 stops early once the objective reaches this value.
  double target_yield = 1.0;

  void validate() const;
};

struct OptimizationResult {
  ControlWaveform waveform;
  double yield_pure_final = 0.0;
  std::optional<double> yield_mixed_final;
  int iterations = 0;
  int seed_index = 0;
  bool converged = false;
  std::vector<double> history;
};

/// Closed-system transfer problem: maximize |<target|psi(T)>|^2.
class Stage1Problem {
public:
  Stage1Problem(SpinSystem sys, QuantumState initial, QuantumState target, ControlParams params, FilterSpec filter);

  double objective(const std::vector<double>& phis) const;
  /// Objective plus its exact gradient with respect to every angle.
  double value_and_gradient(const std::vector<double>& phis, Eigen::VectorXd& grad) const;

  const SpinSystem& system() const { return sys_; }
  const ControlParams& params() const { return params_; }
  const FilterSpec& filter() const { return filter_; }
  const QuantumState& initial() const { return initial_; }
  const QuantumState& target() const { return target_; }
  ControlWaveform waveform(std::vector<double> phis) const { return {std::move(phis), params_}; }

private:
  SpinSystem sys_;
  QuantumState initial_, target_;
  ControlParams params_;
  FilterSpec filter_;
};

Eigen::VectorXd stage1_gradient(const Stage1Problem& problem, const ControlWaveform& w);

/// Dissipative ensemble problem: maximize the Uhlmann overlap with the target.
class Stage2Problem {
public:
  Stage2Problem(SpinSystem sys, QuantumState initial, QuantumState target, ControlParams params, FilterSpec filter,
                NoiseModel noise);

  double objective(const std::vector<double>& phis) const;
  QuantumState final_state(const std::vector<double>& phis) const;
  /// Central differences with step h, evaluated in parallel.
  Eigen::VectorXd fd_gradient(const std::vector<double>& phis, double h) const;

  const ControlParams& params() const { return params_; }
  const QuantumState& target() const { return target_; }

private:
  SpinSystem sys_;
  QuantumState initial_, target_;
  ControlParams params_;
  FilterSpec filter_;
  NoiseModel noise_;
};

struct AscentOutcome {
  std::vector<double> x;
  std::vector<double> history;
  int iterations = 0;
  bool converged = false;
};

using ObjectiveWithGradient = std::function<double(const std::vector<double>&, Eigen::VectorXd&)>;
using Objective = std::function<double(const std::vector<double>&)>;

/// L-BFGS (or steepest) ascent with Armijo backtracking; the history never decreases.
AscentOutcome gradient_ascent(const ObjectiveWithGradient& fg, const Objective& f, std::vector<double> x0,
                              const OptimizerConfig& config, int max_iters);

/// i.i.d. uniform(-pi, pi) seed waveform for a given seed index.
std::vector<double> random_seed_angles(std::uint64_t rng_seed, int seed_index, int n);

OptimizationResult stage1_optimize(const Stage1Problem& problem, const OptimizerConfig& config);
OptimizationResult stage2_refine(const Stage2Problem& problem, const ControlWaveform& w0, const OptimizerConfig& config);

struct DesignConfig {
  ControlParams params;
  FilterSpec filter = FilterSpec::for_params(ControlParams{});
  NoiseModel noise = NoiseModel::defaults(ControlParams{});
  OptimizerConfig optimizer;
  double pumped_fraction = 1.0;
};

struct DesignResult {
  OptimizationResult stage1;
  OptimizationResult stage2;
};

DesignResult design_control(const SpinSystem& sys, const QuantumState& target, const DesignConfig& config);

} // namespace spinctl
