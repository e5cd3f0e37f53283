#include "spinctl/spin_core.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace spinctl {

Spin::Spin(int twice_f) : twice_f_(twice_f) {
  if (twice_f < 1) throw SpinError("spin quantum number must be positive, got 2f = " + std::to_string(twice_f));
}

Spin Spin::from_double(double f) {
  const double twice = 2.0 * f;
  const double rounded = std::round(twice);
  if (!std::isfinite(f) || f <= 0.0 || std::abs(twice - rounded) > 1e-9)
    throw SpinError("spin quantum number must be a positive integer or half-integer, got " + std::to_string(f));
  return Spin(static_cast<int>(rounded));
}

SpinSystem::SpinSystem(Spin spin) : spin_(spin) {
  const int d = spin.dim();
  const double f = spin.value();
  CMatrix jp = CMatrix::Zero(d, d);
  for (int i = 1; i < d; ++i) {
    const double m = f - i;
    jp(i - 1, i) = std::sqrt(f * (f + 1.0) - m * (m + 1.0));
  }
  const CMatrix jm = jp.adjoint();
  fx_ = 0.5 * (jp + jm);
  fy_ = (jp - jm) / cplx(0.0, 2.0);
  fz_ = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) fz_(i, i) = f - i;
  fx2_ = fx_ * fx_;
}

int SpinSystem::index_of(double m) const {
  const double idx = f() - m;
  const double rounded = std::round(idx);
  if (std::abs(idx - rounded) > 1e-9 || rounded < 0 || rounded > dim() - 1)
    throw SpinError("magnetic quantum number " + std::to_string(m) + " not allowed for f = " + std::to_string(f()));
  return static_cast<int>(rounded);
}

CMatrix SpinSystem::along(const Vec3& axis) const {
  return axis.x() * fx_ + axis.y() * fy_ + axis.z() * fz_;
}

SpinSystem build_spin_system(double f) { return SpinSystem(Spin::from_double(f)); }

SpinSystem spin_system_for_dim(int dim) {
  if (dim < 2) throw SpinError("state dimension must be at least 2, got " + std::to_string(dim));
  return SpinSystem(Spin(dim - 1));
}

// --- QuantumState -----------------------------------------------------------

QuantumState QuantumState::pure(CVector amplitudes) {
  if (amplitudes.size() < 1) throw SpinError("empty state vector");
  const double norm = amplitudes.norm();
  if (std::abs(norm - 1.0) > kNormTol)
    throw SpinError("pure state not normalized (norm = " + std::to_string(norm) + ")");
  return QuantumState(Kind::pure, std::move(amplitudes), CMatrix());
}

QuantumState QuantumState::pure_normalized(CVector amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0)) throw SpinError("cannot normalize a zero state vector");
  return pure(fix_global_phase(amplitudes / norm));
}

QuantumState QuantumState::mixed(CMatrix rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 1) throw SpinError("density matrix must be square");
  if (max_abs(rho - rho.adjoint()) > kHermTol) throw SpinError("density matrix is not Hermitian");
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > kTraceTol) throw SpinError("density matrix trace is " + std::to_string(tr) + ", expected 1");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kEigTol)
    throw SpinError("density matrix has a negative eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
  return QuantumState(Kind::mixed, CVector(), std::move(rho));
}

QuantumState QuantumState::mixed_hermitized(const CMatrix& rho) {
  CMatrix h = 0.5 * (rho + rho.adjoint());
  return mixed(std::move(h));
}

int QuantumState::dim() const {
  return static_cast<int>(is_pure() ? amps_.size() : rho_.rows());
}

const CVector& QuantumState::amplitudes() const {
  if (!is_pure()) throw SpinError("amplitudes requested from a mixed state");
  return amps_;
}

CMatrix QuantumState::density() const {
  if (is_pure()) return amps_ * amps_.adjoint();
  return rho_;
}

double QuantumState::expectation(const CMatrix& op) const {
  if (op.rows() != dim()) throw SpinError("operator dimension does not match state");
  if (is_pure()) return amps_.dot(op * amps_).real();
  return (rho_ * op).trace().real();
}

double QuantumState::variance(const CMatrix& op) const {
  const double mean = expectation(op);
  return expectation(op * op) - mean * mean;
}

// --- Rotation ---------------------------------------------------------------

Rotation Rotation::about(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw SpinError("rotation axis must be nonzero");
  return {axis / n, angle};
}

Rotation Rotation::from_euler_zyz(double alpha, double beta, double gamma) {
  const Eigen::Matrix3d r = (Eigen::AngleAxisd(alpha, Vec3::UnitZ()) * Eigen::AngleAxisd(beta, Vec3::UnitY()) *
                             Eigen::AngleAxisd(gamma, Vec3::UnitZ()))
                                .toRotationMatrix();
  return from_matrix(r);
}

Rotation Rotation::from_matrix(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  if (std::abs(aa.angle()) < 1e-15) return identity();
  return {aa.axis(), aa.angle()};
}

Eigen::Matrix3d Rotation::matrix() const { return Eigen::AngleAxisd(angle, axis).toRotationMatrix(); }

Rotation Rotation::then(const Rotation& next) const { return from_matrix(next.matrix() * matrix()); }

// --- states and metrics -----------------------------------------------------

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

CVector fix_global_phase(CVector psi) {
  Eigen::Index imax = 0;
  psi.cwiseAbs().maxCoeff(&imax);
  const cplx a = psi(imax);
  if (std::abs(a) > 0.0) psi *= std::conj(a) / std::abs(a);
  return psi;
}

QuantumState stretched_state(const SpinSystem& sys, const Vec3& axis, double m) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw SpinError("stretched_state: axis must be nonzero");
  sys.index_of(m);  // validates m
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sys.along(axis / n));
  // eigenvalues ascending: -f, ..., f
  const int col = static_cast<int>(std::lround(m + sys.f()));
  return QuantumState::pure_normalized(es.eigenvectors().col(col));
}

static void require_same_dim(const QuantumState& a, const QuantumState& b) {
  if (a.dim() != b.dim())
    throw SpinError("dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
}

double yield_pure(const QuantumState& target, const QuantumState& state) {
  require_same_dim(target, state);
  if (!target.is_pure() || !state.is_pure()) throw SpinError("yield_pure requires pure states");
  return std::min(1.0, std::norm(target.amplitudes().dot(state.amplitudes())));
}

CMatrix psd_sqrt(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

namespace {

constexpr double kClampTol = 1e-10;
constexpr double kSupportTol = 1e-14;

struct Support {
  Eigen::MatrixXcd vecs;   // columns span the support
  Eigen::VectorXd values;  // positive eigenvalues on the support
};

Support support_of(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  const auto& ev = es.eigenvalues();
  if (ev.minCoeff() < -kClampTol)
    throw SpinError("matrix is not positive semidefinite (eigenvalue " + std::to_string(ev.minCoeff()) + ")");
  std::vector<int> keep;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > kSupportTol) keep.push_back(i);
  Support s{CMatrix(a.rows(), static_cast<Eigen::Index>(keep.size())),
            Eigen::VectorXd(static_cast<Eigen::Index>(keep.size()))};
  for (std::size_t k = 0; k < keep.size(); ++k) {
    s.vecs.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]);
    s.values(static_cast<Eigen::Index>(k)) = ev(keep[k]);
  }
  return s;
}

} // namespace

double uhlmann_overlap(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.rows() != a.cols() || b.rows() != b.cols())
    throw SpinError("uhlmann_overlap: dimension mismatch");
  // Restrict to the support of the lower-rank argument; the functional is
  // symmetric, and a rank-1 support makes the pure case exact.
  Support sa = support_of(a);
  Support sb = support_of(b);
  const bool swap = sb.values.size() < sa.values.size();
  const Support& s = swap ? sb : sa;
  const CMatrix& other = swap ? a : b;
  if (s.values.size() == 0) return 0.0;
  const Eigen::VectorXd root = s.values.cwiseSqrt();
  CMatrix m = root.asDiagonal() * (s.vecs.adjoint() * other * s.vecs) * root.asDiagonal();
  m = 0.5 * (m + m.adjoint());
  double total = 0.0;
  if (m.rows() == 1) {
    total = std::sqrt(std::max(0.0, m(0, 0).real()));
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
    for (int i = 0; i < es.eigenvalues().size(); ++i) total += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  }
  return std::clamp(total, 0.0, 1.0);
}

double yield_mixed(const QuantumState& target, const QuantumState& state) {
  require_same_dim(target, state);
  return uhlmann_overlap(target.density(), state.density());
}

double fidelity(const QuantumState& predicted, const QuantumState& measured) {
  require_same_dim(predicted, measured);
  return uhlmann_overlap(predicted.density(), measured.density());
}

SqueezingValues squeezing_parameter(const SpinSystem& sys, const QuantumState& state, const Vec3& squeeze_axis,
                                    const Vec3& mean_axis) {
  if (state.dim() != sys.dim()) throw SpinError("squeezing_parameter: dimension mismatch");
  const CMatrix fs = sys.along(squeeze_axis.normalized());
  const double mean = state.expectation(sys.along(mean_axis.normalized()));
  if (std::abs(mean) <= 1e-9) throw UndefinedSqueezing("undefined squeezing: mean spin projection vanishes");
  const double var = std::max(0.0, state.variance(fs));
  SqueezingValues out;
  out.xi = std::sqrt(var) / std::abs(mean);
  out.xi_normalized = out.xi * std::sqrt(2.0 * sys.f());
  out.squeezing_db = 10.0 * std::log10(2.0 * var / std::abs(mean));
  return out;
}

int lie_closure_dimension(std::span<const CMatrix> generators) {
  if (generators.empty()) return 0;
  const Eigen::Index d = generators.front().rows();
  const Eigen::Index max_dim = d * d - 1;

  std::vector<CMatrix> basis;  // orthonormal in the Frobenius inner product
  double scale = 0.0;
  for (const auto& g : generators) {
    if (g.rows() != d || g.cols() != d) throw SpinError("lie_closure_dimension: generator dimension mismatch");
    if (max_abs(g - g.adjoint()) > 1e-12 * std::max(1.0, max_abs(g)))
      throw SpinError("lie_closure_dimension: generator is not Hermitian");
    scale = std::max(scale, g.norm());
  }
  const double tol = 1e-9 * std::max(scale, 1.0);

  auto try_add = [&](CMatrix x) {
    x.diagonal().array() -= x.trace() / static_cast<double>(d);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) x -= (b.conjugate().cwiseProduct(x)).sum().real() * b;
    // Real inner product Re Tr(b^dagger x) on anti-Hermitian matrices.
    const double n = x.norm();
    if (n > tol) basis.push_back(x / n);
  };

  for (const auto& g : generators) try_add(cplx(0.0, 1.0) * g);
  for (std::size_t i = 0; i < basis.size() && static_cast<Eigen::Index>(basis.size()) < max_dim; ++i) {
    for (std::size_t j = 0; j < i && static_cast<Eigen::Index>(basis.size()) < max_dim; ++j) {
      const CMatrix c = basis[i] * basis[j] - basis[j] * basis[i];
      if (c.norm() > tol) try_add(c);
    }
  }
  return static_cast<int>(basis.size());
}

CMatrix unitary_exp(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const CVector phases = (es.eigenvalues() * (-t)).unaryExpr([](double x) { return std::polar(1.0, x); });
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix rotation_operator(const SpinSystem& sys, const Vec3& axis, double angle) {
  const Rotation r = Rotation::about(axis, angle);
  return unitary_exp(sys.along(r.axis), r.angle);
}

CMatrix rotation_operator(const SpinSystem& sys, const Rotation& rot) { return rotation_operator(sys, rot.axis, rot.angle); }

} // namespace spinctl
