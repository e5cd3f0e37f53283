#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spinctl {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Base class for every error raised by the toolkit.
class SpinError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Squeezing parameter requested for a state with (near) zero mean spin.
class UndefinedSqueezing : public SpinError {
public:
  using SpinError::SpinError;
};

/// Ground state requested for a Hamiltonian whose two lowest levels are degenerate.
class DegenerateGroundState : public SpinError {
public:
  using SpinError::SpinError;
};

} // namespace spinctl
