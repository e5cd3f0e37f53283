#pragma once

#include <random>

#include "spinctl/spin_core.hpp"

namespace testutil {

using namespace spinctl;

inline CVector random_ket(int d, std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  CVector v(d);
  for (int i = 0; i < d; ++i) v(i) = cplx(n(gen), n(gen));
  return v / v.norm();
}

/// Full-rank random density matrix (Ginibre ensemble).
inline CMatrix random_density(int d, std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  CMatrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = cplx(n(gen), n(gen));
  CMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline Vec3 random_axis(std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  return Vec3(n(gen), n(gen), n(gen)).normalized();
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace testutil
