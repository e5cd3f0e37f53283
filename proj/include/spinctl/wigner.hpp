#pragma once

// Spherical Wigner functions of spin states.
//
// Convention: T_kq are the orthonormal spherical tensor operators
//   <f m|T_kq|f m'> = (-1)^(f-m') <f m; f -m'|k q>,   Tr(T_kq^dag T_k'q') = delta,
// rho_kq = Tr(rho T_kq^dag), and
//   W(theta, phi) = sqrt(d / 4 pi) * sum_kq rho_kq Y_kq(theta, phi),
// so the sphere integral of W is Tr(rho) and <F_z> = sqrt(f(f+1)) * int W cos(theta).

#include <iosfwd>
#include <string>
#include <vector>

#include "spinctl/spin_core.hpp"

namespace spinctl {

/// <j1 m1; j2 m2|J M>, all arguments given as twice their value.
double clebsch_gordan(int tj1, int tm1, int tj2, int tm2, int tJ, int tM);

/// Orthonormal tensor operator T_kq in the |f m> basis of `sys`.
CMatrix tensor_operator(const SpinSystem& sys, int k, int q);

class MultipoleDecomposition {
public:
  MultipoleDecomposition(int twice_f, std::vector<cplx> coeffs);

  int twice_f() const { return twice_f_; }
  int k_max() const { return twice_f_; }
  cplx operator()(int k, int q) const;
  /// sum_kq rho_kq T_kq
  CMatrix reconstruct() const;

private:
  static int index(int k, int q) { return k * k + k + q; }
  int twice_f_;
  std::vector<cplx> coeffs_;
};

MultipoleDecomposition multipole_decompose(const SpinSystem& sys, const QuantumState& rho);

/// Y_kq with the Condon-Shortley phase.
cplx spherical_harmonic(int k, int q, double theta, double phi);

/// W at one direction.
double wigner_value(const MultipoleDecomposition& m, double theta, double phi);

struct WignerGrid {
  std::vector<double> theta;  // n_theta Gauss-Legendre nodes in cos(theta)
  std::vector<double> phi;    // n_phi uniform
  Eigen::MatrixXd w;          // n_theta x n_phi
  Eigen::MatrixXd weights;    // quadrature weights, summing to 4 pi

  /// Quadrature of g(theta, phi) * W over the sphere.
  template <class G>
  double integrate(G&& g) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += weights(i, j) * w(i, j) * g(theta[i], phi[j]);
    return s;
  }
  double integral() const { return (w.array() * weights.array()).sum(); }
};

inline constexpr int kDefaultThetaPoints = 64;
inline constexpr int kDefaultPhiPoints = 128;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], nodes descending.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

WignerGrid wigner_grid(const SpinSystem& sys, const QuantumState& rho, int n_theta = kDefaultThetaPoints,
                       int n_phi = kDefaultPhiPoints);

/// CSV: '#' header lines (convention, resolution, caller extras), then
/// theta,phi,weight,w.
void write_wigner_csv(std::ostream& os, const WignerGrid& grid, const std::vector<std::string>& extra_header = {});

} // namespace spinctl
