#pragma once

// Spin-F operator algebra, quantum states and the scalar figures of merit
// (yield, fidelity, squeezing, Lie closure).
//
// Basis convention: index 0 is m = f, index dim-1 is m = -f.

#include <span>
#include <vector>

#include "spinctl/types.hpp"

namespace spinctl {

/// Spin quantum number, stored as the integer 2f.
class Spin {
public:
  explicit Spin(int twice_f);
  /// Accepts positive integers and half-integers only.
  static Spin from_double(double f);

  int twice() const { return twice_f_; }
  double value() const { return 0.5 * twice_f_; }
  int dim() const { return twice_f_ + 1; }

private:
  int twice_f_;
};

class SpinSystem {
public:
  explicit SpinSystem(Spin spin);

  double f() const { return spin_.value(); }
  Spin spin() const { return spin_; }
  int dim() const { return spin_.dim(); }
  /// Magnetic quantum number of basis index i.
  double m_at(int i) const { return f() - i; }
  /// Basis index of magnetic quantum number m (throws when m is not allowed).
  int index_of(double m) const;

  const CMatrix& fx() const { return fx_; }
  const CMatrix& fy() const { return fy_; }
  const CMatrix& fz() const { return fz_; }
  const CMatrix& fx2() const { return fx2_; }
  /// axis . F for an arbitrary (not necessarily unit) axis.
  CMatrix along(const Vec3& axis) const;

private:
  Spin spin_;
  CMatrix fx_, fy_, fz_, fx2_;
};

SpinSystem build_spin_system(double f);
/// Spin system whose Hilbert space has dimension d = 2f+1.
SpinSystem spin_system_for_dim(int dim);

/// Pure ket or density matrix, validated on construction.
class QuantumState {
public:
  enum class Kind { pure, mixed };

  static constexpr double kNormTol = 1e-10;
  static constexpr double kHermTol = 1e-12;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kEigTol = 1e-10;

  static QuantumState pure(CVector amplitudes);
  /// Normalizes and fixes the global phase (largest amplitude real positive).
  static QuantumState pure_normalized(CVector amplitudes);
  static QuantumState mixed(CMatrix rho);
  /// Hermitizes before validating; for numerically propagated matrices.
  static QuantumState mixed_hermitized(const CMatrix& rho);

  Kind kind() const { return kind_; }
  bool is_pure() const { return kind_ == Kind::pure; }
  int dim() const;
  const CVector& amplitudes() const;
  CMatrix density() const;

  double expectation(const CMatrix& op) const;
  double variance(const CMatrix& op) const;

private:
  QuantumState(Kind kind, CVector amps, CMatrix rho)
      : kind_(kind), amps_(std::move(amps)), rho_(std::move(rho)) {}

  Kind kind_;
  CVector amps_;
  CMatrix rho_;
};

/// Rotation by `angle` radians about the unit vector `axis`.
struct Rotation {
  Vec3 axis{0.0, 0.0, 1.0};
  double angle = 0.0;

  static Rotation identity() { return {}; }
  static Rotation about(const Vec3& axis, double angle);
  /// z-y-z Euler angles: Rz(alpha) * Ry(beta) * Rz(gamma).
  static Rotation from_euler_zyz(double alpha, double beta, double gamma);
  static Rotation from_matrix(const Eigen::Matrix3d& r);

  Eigen::Matrix3d matrix() const;
  Rotation inverse() const { return {axis, -angle}; }
  Rotation then(const Rotation& next) const;
};

/// Largest-magnitude amplitude made real and positive.
CVector fix_global_phase(CVector psi);

QuantumState stretched_state(const SpinSystem& sys, const Vec3& axis, double m);

double yield_pure(const QuantumState& target, const QuantumState& state);

/// Uhlmann overlap Tr sqrt(sqrt(a) b sqrt(a)) of two density matrices.
double uhlmann_overlap(const CMatrix& a, const CMatrix& b);
double yield_mixed(const QuantumState& target, const QuantumState& state);
double fidelity(const QuantumState& predicted, const QuantumState& measured);

struct SqueezingValues {
  double xi = 0.0;
  double xi_normalized = 0.0;
  double squeezing_db = 0.0;
};

/// Wineland-type squeezing of `state` along `squeeze_axis` relative to the
/// mean spin along `mean_axis`. Throws UndefinedSqueezing when |<F_mean>| <= 1e-9.
SqueezingValues squeezing_parameter(const SpinSystem& sys, const QuantumState& state,
                                    const Vec3& squeeze_axis, const Vec3& mean_axis);

/// Dimension of the real Lie algebra generated by i*generators (traceless parts).
int lie_closure_dimension(std::span<const CMatrix> generators);

CMatrix rotation_operator(const SpinSystem& sys, const Rotation& rot);
CMatrix rotation_operator(const SpinSystem& sys, const Vec3& axis, double angle);

/// exp(-i H t) for Hermitian H via eigendecomposition.
CMatrix unitary_exp(const CMatrix& h, double t);

/// Principal square root of a positive semidefinite matrix (eigenvalues
/// below zero clamped).
CMatrix psd_sqrt(const CMatrix& a);

double max_abs(const CMatrix& m);

} // namespace spinctl
