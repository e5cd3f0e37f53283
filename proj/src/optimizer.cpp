#include "spinctl/optimizer.hpp"

#include <cmath>
#include <random>

#include "spinctl/parallel.hpp"

namespace spinctl {

void OptimizerConfig::validate() const {
  if (n_seeds < 1) throw SpinError("n_seeds must be >= 1");
  if (max_iters < 0 || stage2_max_iters < 0) throw SpinError("max_iters must be >= 0");
  if (!(fd_step > 0.0)) throw SpinError("fd_step must be > 0");
  if (improvement_window < 1) throw SpinError("improvement_window must be >= 1");
  if (!(line_search.initial_step > 0.0) || !(line_search.shrink > 0.0 && line_search.shrink < 1.0))
    throw SpinError("invalid line search parameters");
}

// --- stage 1 ------------------------------------------------------------------

Stage1Problem::Stage1Problem(SpinSystem sys, QuantumState initial, QuantumState target, ControlParams params,
                             FilterSpec filter)
    : sys_(std::move(sys)), initial_(std::move(initial)), target_(std::move(target)), params_(params), filter_(filter) {
  if (!initial_.is_pure() || !target_.is_pure()) throw SpinError("stage 1 requires pure initial and target states");
  if (initial_.dim() != sys_.dim() || target_.dim() != sys_.dim()) throw SpinError("stage 1: dimension mismatch");
  params_.validate();
  filter_.validate();
}

double Stage1Problem::objective(const std::vector<double>& phis) const {
  const RenderedDrive d = render_waveform(waveform(phis), filter_);
  const CVector psi = propagate_ket(sys_, initial_.amplitudes(), d, params_.larmor_rate, params_.nonlinear_rate);
  return std::norm(target_.amplitudes().dot(psi));
}

double Stage1Problem::value_and_gradient(const std::vector<double>& phis, Eigen::VectorXd& grad) const {
  DriveJacobian jac;
  const RenderedDrive d = render_waveform(waveform(phis), filter_, &jac);
  const std::size_t n = d.size();
  const double dt = d.dt;
  const double larmor = params_.larmor_rate;

  std::vector<Eigensystem> eig;
  eig.reserve(n);
  std::vector<CVector> before(n);  // state entering substep k
  CVector psi = initial_.amplitudes();
  std::vector<CVector> phases(n);
  for (std::size_t k = 0; k < n; ++k) {
    eig.emplace_back(hamiltonian_at(sys_, params_, d.bx[k], d.by[k]));
    before[k] = psi;
    phases[k] = (eig[k].values * (-dt)).unaryExpr([](double x) { return std::polar(1.0, x); });
    const CMatrix& v = eig[k].vectors;
    psi = v * phases[k].cwiseProduct(v.adjoint() * psi);
  }
  const CVector& target = target_.amplitudes();
  const cplx overlap = target.dot(psi);

  // Backward sweep. dU/dtheta in the eigenbasis is G o (V^dag dH V) with
  // G_jl = -i dt exp(-i ebar dt) sinc(delta dt / 2).
  Eigen::VectorXd dbx(static_cast<Eigen::Index>(n)), dby(static_cast<Eigen::Index>(n));
  CVector lambda = target;
  const int dim = sys_.dim();
  CMatrix g(dim, dim);
  for (std::size_t kk = n; kk-- > 0;) {
    const CMatrix& v = eig[kk].vectors;
    const auto& e = eig[kk].values;
    for (int j = 0; j < dim; ++j) {
      for (int l = 0; l < dim; ++l) {
        const double mean = 0.5 * (e(j) + e(l));
        const double half = 0.5 * (e(j) - e(l)) * dt;
        const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
        g(j, l) = cplx(0.0, -dt) * std::polar(1.0, -mean * dt) * sinc;
      }
    }
    const CVector a = v.adjoint() * lambda;
    const CVector b = v.adjoint() * before[kk];
    const CMatrix ax = v.adjoint() * sys_.fx() * v;
    const CMatrix ay = v.adjoint() * sys_.fy() * v;
    const CVector gb_x = g.cwiseProduct(ax) * b;
    const CVector gb_y = g.cwiseProduct(ay) * b;
    const cplx dx = larmor * a.dot(gb_x);
    const cplx dy = larmor * a.dot(gb_y);
    dbx(static_cast<Eigen::Index>(kk)) = 2.0 * (std::conj(overlap) * dx).real();
    dby(static_cast<Eigen::Index>(kk)) = 2.0 * (std::conj(overlap) * dy).real();
    // lambda <- U_k^dagger lambda
    lambda = v * phases[kk].conjugate().cwiseProduct(a);
  }
  grad = jac.dbx.transpose() * dbx + jac.dby.transpose() * dby;
  return std::norm(overlap);
}

Eigen::VectorXd stage1_gradient(const Stage1Problem& problem, const ControlWaveform& w) {
  Eigen::VectorXd g;
  problem.value_and_gradient(w.phis, g);
  return g;
}

// --- stage 2 ------------------------------------------------------------------

Stage2Problem::Stage2Problem(SpinSystem sys, QuantumState initial, QuantumState target, ControlParams params,
                             FilterSpec filter, NoiseModel noise)
    : sys_(std::move(sys)),
      initial_(std::move(initial)),
      target_(std::move(target)),
      params_(params),
      filter_(filter),
      noise_(noise) {
  if (initial_.dim() != sys_.dim() || target_.dim() != sys_.dim()) throw SpinError("stage 2: dimension mismatch");
  params_.validate();
  filter_.validate();
  noise_.validate();
}

QuantumState Stage2Problem::final_state(const std::vector<double>& phis) const {
  const RenderedDrive d = render_waveform(ControlWaveform{phis, params_}, filter_);
  return propagate_master(sys_, initial_, d, params_, noise_);
}

double Stage2Problem::objective(const std::vector<double>& phis) const {
  return yield_mixed(target_, final_state(phis));
}

Eigen::VectorXd Stage2Problem::fd_gradient(const std::vector<double>& phis, double h) const {
  const std::size_t n = phis.size();
  std::vector<double> values(2 * n);
  parallel_for(2 * n, [&](std::size_t idx) {
    std::vector<double> x = phis;
    x[idx / 2] += (idx % 2 == 0) ? h : -h;
    values[idx] = objective(x);
  });
  Eigen::VectorXd g(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) g(static_cast<Eigen::Index>(i)) = (values[2 * i] - values[2 * i + 1]) / (2 * h);
  return g;
}

// --- ascent -------------------------------------------------------------------

namespace {

// Two-loop recursion; returns the ascent direction for gradient g.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g, const std::vector<Eigen::VectorXd>& s_hist,
                                const std::vector<Eigen::VectorXd>& y_hist) {
  // Minimizing -f: descent gradient is -g, history pairs are (s, -dy).
  Eigen::VectorXd q = -g;
  const std::size_t m = s_hist.size();
  std::vector<double> alpha(m), rho(m);
  for (std::size_t i = m; i-- > 0;) {
    rho[i] = 1.0 / y_hist[i].dot(s_hist[i]);
    alpha[i] = rho[i] * s_hist[i].dot(q);
    q -= alpha[i] * y_hist[i];
  }
  if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
  for (std::size_t i = 0; i < m; ++i) {
    const double beta = rho[i] * y_hist[i].dot(q);
    q += (alpha[i] - beta) * s_hist[i];
  }
  return -q;
}

} // namespace

AscentOutcome gradient_ascent(const ObjectiveWithGradient& fg, const Objective& f, std::vector<double> x0,
                              const OptimizerConfig& config, int max_iters) {
  AscentOutcome out;
  out.x = std::move(x0);
  const auto n = static_cast<Eigen::Index>(out.x.size());
  Eigen::VectorXd grad;
  double value = fg(out.x, grad);
  out.history.push_back(value);
  const auto& ls = config.line_search;
  const bool quasi_newton = config.direction == AscentDirection::lbfgs;
  std::vector<Eigen::VectorXd> s_hist, y_hist;
  double last_step = ls.initial_step;
  std::vector<double> trial(out.x.size());
  for (int it = 0; it < max_iters; ++it) {
    if (value >= config.target_yield) {
      out.converged = true;
      break;
    }
    if (grad.norm() < config.grad_tolerance) {
      out.converged = true;
      break;
    }
    const std::size_t h = out.history.size();
    if (static_cast<int>(h) > config.improvement_window &&
        out.history.back() - out.history[h - 1 - config.improvement_window] < config.improvement_threshold) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd dir = quasi_newton ? lbfgs_direction(grad, s_hist, y_hist) : grad;
    double slope = grad.dot(dir);
    if (!(slope > 0.0)) {
      dir = grad;
      slope = grad.squaredNorm();
      s_hist.clear();
      y_hist.clear();
    }
    double step = quasi_newton ? 1.0 : (ls.adaptive ? std::min(2.0 * last_step, 1024.0 * ls.initial_step) : ls.initial_step);
    bool accepted = false;
    double trial_value = value;
    for (int k = 0; k <= ls.max_halvings; ++k, step *= ls.shrink) {
      for (Eigen::Index i = 0; i < n; ++i) trial[i] = out.x[i] + step * dir(i);
      trial_value = f(trial);
      if (trial_value >= value + ls.armijo * step * slope) {
        accepted = true;
        break;
      }
    }
    out.iterations = it + 1;
    if (!accepted) {
      // No ascent resolvable at this precision.
      out.converged = true;
      break;
    }
    last_step = step;
    const Eigen::VectorXd old_grad = grad;
    out.x = trial;
    value = fg(out.x, grad);
    out.history.push_back(value);
    if (quasi_newton) {
      const Eigen::VectorXd s = step * dir;
      const Eigen::VectorXd y = old_grad - grad;
      if (y.dot(s) > 1e-12 * s.norm() * y.norm()) {
        s_hist.push_back(s);
        y_hist.push_back(y);
        if (static_cast<int>(s_hist.size()) > config.lbfgs_memory) {
          s_hist.erase(s_hist.begin());
          y_hist.erase(y_hist.begin());
        }
      }
    }
  }
  return out;
}

std::vector<double> random_seed_angles(std::uint64_t rng_seed, int seed_index, int n) {
  std::seed_seq seq{static_cast<std::uint32_t>(rng_seed & 0xffffffffu), static_cast<std::uint32_t>(rng_seed >> 32),
                    static_cast<std::uint32_t>(seed_index)};
  std::mt19937_64 gen(seq);
  std::uniform_real_distribution<double> dist(-kPi, kPi);
  std::vector<double> x(n);
  for (auto& v : x) v = dist(gen);
  return x;
}

OptimizationResult stage1_optimize(const Stage1Problem& problem, const OptimizerConfig& config) {
  config.validate();
  const int n = problem.params().n_steps;
  std::vector<AscentOutcome> runs(config.n_seeds);
  parallel_for(static_cast<std::size_t>(config.n_seeds), [&](std::size_t s) {
    runs[s] = gradient_ascent(
        [&](const std::vector<double>& x, Eigen::VectorXd& g) { return problem.value_and_gradient(x, g); },
        [&](const std::vector<double>& x) { return problem.objective(x); },
        random_seed_angles(config.rng_seed, static_cast<int>(s), n), config, config.max_iters);
  });
  // Highest objective wins, ties to the lowest seed index.
  std::size_t best = 0;
  for (std::size_t s = 1; s < runs.size(); ++s)
    if (runs[s].history.back() > runs[best].history.back()) best = s;
  OptimizationResult r;
  r.waveform = problem.waveform(runs[best].x);
  r.yield_pure_final = runs[best].history.back();
  r.iterations = runs[best].iterations;
  r.seed_index = static_cast<int>(best);
  r.converged = runs[best].converged;
  r.history = runs[best].history;
  return r;
}

OptimizationResult stage2_refine(const Stage2Problem& problem, const ControlWaveform& w0, const OptimizerConfig& config) {
  config.validate();
  w0.validate();
  const auto fg = [&](const std::vector<double>& x, Eigen::VectorXd& g) {
    g = problem.fd_gradient(x, config.fd_step);
    return problem.objective(x);
  };
  const auto f = [&](const std::vector<double>& x) { return problem.objective(x); };
  OptimizerConfig c = config;
  c.target_yield = 1.0;
  const AscentOutcome run = gradient_ascent(fg, f, w0.phis, c, config.stage2_max_iters);
  OptimizationResult r;
  r.waveform = ControlWaveform{run.x, problem.params()};
  r.yield_mixed_final = run.history.back();
  r.iterations = run.iterations;
  r.converged = run.converged;
  r.history = run.history;
  return r;
}

DesignResult design_control(const SpinSystem& sys, const QuantumState& target, const DesignConfig& config) {
  if (!target.is_pure()) throw SpinError("design_control requires a pure target state");
  const QuantumState psi0 = fiducial_state(sys);
  const Stage1Problem p1(sys, psi0, target, config.params, config.filter);
  DesignResult out;
  out.stage1 = stage1_optimize(p1, config.optimizer);

  const QuantumState rho0 = prepare_initial(sys, InitialPrep{psi0, config.pumped_fraction});
  const Stage2Problem p2(sys, rho0, target, config.params, config.filter, config.noise);
  out.stage1.yield_mixed_final = p2.objective(out.stage1.waveform.phis);
  out.stage2 = stage2_refine(p2, out.stage1.waveform, config.optimizer);
  out.stage2.seed_index = out.stage1.seed_index;
  out.stage2.yield_pure_final = p1.objective(out.stage2.waveform.phis);
  return out;
}

} // namespace spinctl
