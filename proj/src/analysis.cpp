#include "spinctl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "spinctl/optimizer.hpp"
#include "spinctl/parallel.hpp"

namespace spinctl {

namespace {

std::mt19937_64 counter_rng(std::uint64_t seed, std::uint64_t counter, std::uint32_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(counter & 0xffffffffu), static_cast<std::uint32_t>(counter >> 32),
                    stream};
  return std::mt19937_64(seq);
}

double rotated_fidelity(const SpinSystem& sys, const CMatrix& measured, const QuantumState& predicted,
                        const Rotation& r) {
  const CMatrix u = rotation_operator(sys, r);
  return uhlmann_overlap(predicted.density(), u * measured * u.adjoint());
}

double folded_angle(const Rotation& r) {
  double a = std::fmod(std::abs(r.angle), kTwoPi);
  return a > kPi ? kTwoPi - a : a;
}

} // namespace

std::vector<Rotation> rotation_covering(int n_axes, int n_angles) {
  if (n_axes < 1 || n_angles < 1) throw SpinError("rotation covering needs n_axes, n_angles >= 1");
  std::vector<Rotation> out{Rotation::identity()};
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 1; k <= n_angles; ++k)
    for (int i = 0; i < n_axes; ++i) {
      // Fibonacci sphere
      const double z = 1.0 - (2.0 * i + 1.0) / n_axes;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      out.push_back(Rotation::about(Vec3(r * std::cos(golden * i), r * std::sin(golden * i), z), kPi * k / n_angles));
    }
  return out;
}

RotationFit optimize_rotation_overlap(const SpinSystem& sys, const QuantumState& measured,
                                      const QuantumState& predicted) {
  if (measured.dim() != predicted.dim() || measured.dim() != sys.dim())
    throw SpinError("rotation fit: state dimensions differ");
  const CMatrix rho_m = measured.density();
  const double before = fidelity(predicted, measured);

  struct Local {
    Rotation r;
    double value;
  };
  // 12 starts: the identity plus the 11 best points of a fixed covering
  std::vector<Rotation> starts{Rotation::identity()};
  {
    const std::vector<Rotation> cover = rotation_covering();
    std::vector<double> score(cover.size());
    parallel_for(cover.size(), [&](std::size_t i) { score[i] = rotated_fidelity(sys, rho_m, predicted, cover[i]); });
    std::vector<std::size_t> order(cover.size() - 1);
    std::iota(order.begin(), order.end(), 1);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return score[x] > score[y]; });
    for (std::size_t i = 0; i < std::min<std::size_t>(kRotationStarts - 1, order.size()); ++i)
      starts.push_back(cover[order[i]]);
  }
  std::vector<Local> results(starts.size());
  const Vec3 axes[3] = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  for (std::size_t s = 0; s < starts.size(); ++s) {
    Rotation r = starts[s];
    double v = s == 0 ? before : rotated_fidelity(sys, rho_m, predicted, r);
    for (double step = 0.25; step > 1e-7;) {
      bool moved = false;
      for (const Vec3& a : axes)
        for (double sign : {1.0, -1.0}) {
          const Rotation cand = r.then(Rotation::about(a, sign * step));
          const double cv = rotated_fidelity(sys, rho_m, predicted, cand);
          if (cv > v + 1e-12) {
            r = cand;
            v = cv;
            moved = true;
          }
        }
      // diagonal move along the local gradient; coordinate moves alone stall on ridges
      Vec3 g;
      for (int k = 0; k < 3; ++k)
        g(k) = rotated_fidelity(sys, rho_m, predicted, r.then(Rotation::about(axes[k], 1e-6))) -
               rotated_fidelity(sys, rho_m, predicted, r.then(Rotation::about(axes[k], -1e-6)));
      if (g.norm() > 0.0) {
        const Rotation cand = r.then(Rotation::about(g.normalized(), step));
        const double cv = rotated_fidelity(sys, rho_m, predicted, cand);
        if (cv > v + 1e-12) {
          r = cand;
          v = cv;
          moved = true;
        }
      }
      if (!moved) step *= 0.5;
    }
    results[s] = {r, v};
  }

  double best = before;
  for (const auto& l : results) best = std::max(best, l.value);
  RotationFit fit{Rotation::identity(), measured, before, before};
  if (before < best - 1e-10) {
    const Local* pick = nullptr;
    for (const auto& l : results)
      if (l.value >= best - 1e-10 && (!pick || folded_angle(l.r) < folded_angle(pick->r))) pick = &l;
    fit.rotation = pick->r;
    fit.fidelity_after = pick->value;
  }
  if (fit.rotation.angle != 0.0) {
    const CMatrix u = rotation_operator(sys, fit.rotation);
    fit.corrected = QuantumState::mixed_hermitized(u * rho_m * u.adjoint());
    if (measured.is_pure()) fit.corrected = QuantumState::pure(u * measured.amplitudes());
  }
  return fit;
}

QuantumState displace_state(const QuantumState& psi, double sigma, std::uint64_t rng_seed, std::uint64_t counter) {
  if (!psi.is_pure()) throw SpinError("displacement model needs a pure state");
  if (!(sigma >= 0.0)) throw SpinError("displacement sigma must be >= 0");
  if (sigma == 0.0) return psi;
  auto gen = counter_rng(rng_seed, counter);
  std::normal_distribution<double> n(0.0, sigma);
  CVector v = psi.amplitudes();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = n(gen);
    const double im = n(gen);
    v(i) += cplx(re, im);
  }
  return QuantumState::pure(v / v.norm());
}

double BiasEstimate::standard_error() const { return n_samples > 0 ? yield_std / std::sqrt(n_samples) : 0.0; }

BiasEstimate gaussian_displacement_bias(const QuantumState& state, double sigma, int n_samples, std::uint64_t rng_seed) {
  if (n_samples < 1) throw SpinError("displacement model needs n_samples >= 1");
  if (!(sigma >= 0.0)) throw SpinError("displacement sigma must be >= 0");
  std::vector<double> y(n_samples);
  parallel_for(y.size(), [&](std::size_t i) { y[i] = yield_pure(state, displace_state(state, sigma, rng_seed, i)); });
  BiasEstimate out;
  out.n_samples = n_samples;
  out.mean_yield = std::accumulate(y.begin(), y.end(), 0.0) / n_samples;
  double ss = 0.0;
  for (double v : y) ss += (v - out.mean_yield) * (v - out.mean_yield);
  out.yield_std = n_samples > 1 ? std::sqrt(ss / (n_samples - 1)) : 0.0;
  out.bias = 1.0 - out.mean_yield;
  return out;
}

double bias_sigma(const QuantumState& state, double target_bias, int n_samples, std::uint64_t rng_seed,
                  double tolerance) {
  if (!(target_bias > 0.0) || !(target_bias < 1.0)) throw SpinError("target bias must lie in (0, 1)");
  double lo = 0.0, hi = 1.0;
  if (gaussian_displacement_bias(state, hi, n_samples, rng_seed).bias < target_bias)
    throw SpinError("target bias not reached for sigma <= 1");
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (gaussian_displacement_bias(state, mid, n_samples, rng_seed).bias < target_bias ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

int Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

Histogram make_histogram(const std::vector<double>& values, int n_bins, double lo, double hi) {
  if (n_bins < 1 || !(hi > lo)) throw SpinError("histogram needs n_bins >= 1 and hi > lo");
  Histogram h;
  h.edges.resize(n_bins + 1);
  for (int i = 0; i <= n_bins; ++i) h.edges[i] = lo + (hi - lo) * i / n_bins;
  h.counts.assign(n_bins, 0);
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    const int bin = std::clamp(static_cast<int>(std::floor((v - lo) / (hi - lo) * n_bins)), 0, n_bins - 1);
    ++h.counts[bin];
  }
  return h;
}

BatchRecord batch_evaluate(const SpinSystem& sys, const std::vector<BatchInput>& inputs, int n_bins) {
  BatchRecord rec;
  rec.entries.resize(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t i) {
    const BatchInput& in = inputs[i];
    BatchEntry& e = rec.entries[i];
    e.label = in.label;
    try {
      if (!in.target.is_pure()) throw SpinError("target must be a pure state");
      if (in.target.dim() != sys.dim() || in.predicted.dim() != sys.dim() || in.measured.dim() != sys.dim())
        throw SpinError("state dimension does not match f");
      const CMatrix chi = in.target.density();
      e.yield_pure = in.measured.expectation(chi);
      e.yield_mixed = yield_mixed(in.target, in.measured);
      const RotationFit fit = optimize_rotation_overlap(sys, in.measured, in.predicted);
      e.fidelity = fit.fidelity_before;
      e.corrected_fidelity = fit.fidelity_after;
      e.rotation = fit.rotation;
      e.corrected_yield_pure = fit.corrected.expectation(chi);
      e.corrected_yield_mixed = yield_mixed(in.target, fit.corrected);
    } catch (const SpinError& err) {
      e.error = err.what();
    }
  });
  std::vector<double> y, f, cy, cf;
  for (const auto& e : rec.entries) {
    if (!e.error.empty()) continue;
    y.push_back(e.yield_mixed);
    f.push_back(e.fidelity);
    cy.push_back(e.corrected_yield_mixed);
    cf.push_back(e.corrected_fidelity);
  }
  rec.yields = make_histogram(y, n_bins);
  rec.fidelities = make_histogram(f, n_bins);
  rec.corrected_yields = make_histogram(cy, n_bins);
  rec.corrected_fidelities = make_histogram(cf, n_bins);
  return rec;
}

std::vector<BatchInput> synthetic_batch(const SpinSystem& sys, const SyntheticBatchConfig& config) {
  if (config.n_targets < 1) throw SpinError("synthetic batch needs at least one target");
  const QuantumState fid = fiducial_state(sys);
  const QuantumState pumped = prepare_initial(sys, InitialPrep{fid, config.pumped_fraction});
  std::vector<BatchInput> out(config.n_targets, BatchInput{"", fid, fid, fid});
  parallel_for(out.size(), [&](std::size_t i) {
    const ControlWaveform w{random_seed_angles(config.rng_seed, static_cast<int>(i), config.params.n_steps),
                            config.params};
    const RenderedDrive d = render_waveform(w, config.filter);
    const QuantumState target = propagate_pure(sys, fid, d, config.params);
    const QuantumState predicted = propagate_master(sys, pumped, d, config.params, config.noise);

    Eigen::SelfAdjointEigenSolver<CMatrix> es(predicted.density());
    const int top = sys.dim() - 1;
    const double lam = es.eigenvalues()(top);
    const CVector v = es.eigenvectors().col(top);
    const QuantumState moved = displace_state(QuantumState::pure(v), config.displacement_sigma, config.rng_seed,
                                              (static_cast<std::uint64_t>(1) << 32) + i);
    CMatrix rho = predicted.density() - lam * v * v.adjoint() +
                  lam * moved.amplitudes() * moved.amplitudes().adjoint();
    if (std::find(config.planted.begin(), config.planted.end(), static_cast<int>(i)) != config.planted.end()) {
      auto gen = counter_rng(config.rng_seed, i, 1);
      std::normal_distribution<double> n(0.0, 1.0);
      const Vec3 axis = Vec3(n(gen), n(gen), n(gen)).normalized();
      const CMatrix u = rotation_operator(sys, axis, config.planted_angle);
      rho = u * rho * u.adjoint();
    }
    char label[32];
    std::snprintf(label, sizeof label, "synthetic-%02zu", i + 1);
    out[i] = BatchInput{label, target, predicted, QuantumState::mixed_hermitized(rho)};
  });
  return out;
}

} // namespace spinctl
