#include "spinctl/wigner.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "spinctl/parallel.hpp"

namespace spinctl {

namespace {

double factorial(int n) { return std::tgamma(static_cast<double>(n) + 1.0); }

// halves: every argument is even after the sums below
int half(int twice) { return twice / 2; }

} // namespace

double clebsch_gordan(int tj1, int tm1, int tj2, int tm2, int tJ, int tM) {
  if (tm1 + tm2 != tM) return 0.0;
  if (std::abs(tm1) > tj1 || std::abs(tm2) > tj2 || std::abs(tM) > tJ) return 0.0;
  if ((tj1 + tm1) % 2 || (tj2 + tm2) % 2 || (tJ + tM) % 2) return 0.0;
  if (tJ < std::abs(tj1 - tj2) || tJ > tj1 + tj2 || (tj1 + tj2 + tJ) % 2) return 0.0;

  // Racah's formula
  const double pre = std::sqrt((tJ + 1.0) * factorial(half(tj1 + tj2 - tJ)) * factorial(half(tj1 - tj2 + tJ)) *
                               factorial(half(-tj1 + tj2 + tJ)) / factorial(half(tj1 + tj2 + tJ) + 1)) *
                     std::sqrt(factorial(half(tj1 + tm1)) * factorial(half(tj1 - tm1)) * factorial(half(tj2 + tm2)) *
                               factorial(half(tj2 - tm2)) * factorial(half(tJ + tM)) * factorial(half(tJ - tM)));
  double sum = 0.0;
  for (int k = 0;; ++k) {
    const int a = half(tj1 + tj2 - tJ) - k;
    const int b = half(tj1 - tm1) - k;
    const int c = half(tj2 + tm2) - k;
    const int d = half(tJ - tj2 + tm1) + k;
    const int e = half(tJ - tj1 - tm2) + k;
    if (a < 0 || b < 0 || c < 0) break;
    if (d < 0 || e < 0) continue;
    const double term = 1.0 / (factorial(k) * factorial(a) * factorial(b) * factorial(c) * factorial(d) * factorial(e));
    sum += (k % 2 ? -term : term);
  }
  return pre * sum;
}

CMatrix tensor_operator(const SpinSystem& sys, int k, int q) {
  const int tf = sys.spin().twice();
  if (k < 0 || k > tf || std::abs(q) > k) throw SpinError("tensor operator rank/component out of range");
  const int d = sys.dim();
  CMatrix t = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const int tm = tf - 2 * i;
    for (int j = 0; j < d; ++j) {
      const int tmp = tf - 2 * j;
      const double cg = clebsch_gordan(tf, tm, tf, -tmp, 2 * k, 2 * q);
      if (cg == 0.0) continue;
      const int phase = half(tf - tmp);
      t(i, j) = (phase % 2 ? -cg : cg);
    }
  }
  return t;
}

MultipoleDecomposition::MultipoleDecomposition(int twice_f, std::vector<cplx> coeffs)
    : twice_f_(twice_f), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != static_cast<std::size_t>((twice_f_ + 1) * (twice_f_ + 1)))
    throw SpinError("multipole coefficient count does not match 2f");
}

cplx MultipoleDecomposition::operator()(int k, int q) const {
  if (k < 0 || k > twice_f_ || std::abs(q) > k) throw SpinError("multipole index out of range");
  return coeffs_[index(k, q)];
}

CMatrix MultipoleDecomposition::reconstruct() const {
  const SpinSystem sys{Spin(twice_f_)};
  CMatrix rho = CMatrix::Zero(sys.dim(), sys.dim());
  for (int k = 0; k <= twice_f_; ++k)
    for (int q = -k; q <= k; ++q) rho += coeffs_[index(k, q)] * tensor_operator(sys, k, q);
  return rho;
}

MultipoleDecomposition multipole_decompose(const SpinSystem& sys, const QuantumState& rho) {
  if (rho.dim() != sys.dim()) throw SpinError("state dimension does not match the spin system");
  const CMatrix r = rho.density();
  const int tf = sys.spin().twice();
  std::vector<cplx> c;
  c.reserve((tf + 1) * (tf + 1));
  for (int k = 0; k <= tf; ++k)
    for (int q = -k; q <= k; ++q) c.push_back((r * tensor_operator(sys, k, q).adjoint()).trace());
  return {tf, std::move(c)};
}

cplx spherical_harmonic(int k, int q, double theta, double phi) {
  const int aq = std::abs(q);
  const cplx y = std::sph_legendre(k, aq, theta) * std::polar(1.0, aq * phi);
  if (q >= 0) return y;
  return (aq % 2 ? -1.0 : 1.0) * std::conj(y);
}

double wigner_value(const MultipoleDecomposition& m, double theta, double phi) {
  cplx s = 0.0;
  for (int k = 0; k <= m.k_max(); ++k)
    for (int q = -k; q <= k; ++q) s += m(k, q) * spherical_harmonic(k, q, theta, phi);
  return std::sqrt((m.twice_f() + 1) / (4.0 * kPi)) * s.real();
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw SpinError("quadrature order must be >= 1");
  // Golub-Welsch
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) jacobi(i - 1, i) = jacobi(i, i - 1) = i / std::sqrt(4.0 * i * i - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(n - 1 - i);
    w[i] = 2.0 * es.eigenvectors()(0, n - 1 - i) * es.eigenvectors()(0, n - 1 - i);
  }
  return {x, w};
}

WignerGrid wigner_grid(const SpinSystem& sys, const QuantumState& rho, int n_theta, int n_phi) {
  if (n_theta < 2 || n_phi < 3) throw SpinError("wigner grid needs n_theta >= 2 and n_phi >= 3");
  const MultipoleDecomposition m = multipole_decompose(sys, rho);
  const auto [x, wx] = gauss_legendre(n_theta);
  WignerGrid g;
  g.theta.resize(n_theta);
  g.phi.resize(n_phi);
  for (int i = 0; i < n_theta; ++i) g.theta[i] = std::acos(x[i]);
  for (int j = 0; j < n_phi; ++j) g.phi[j] = kTwoPi * j / n_phi;
  g.w.resize(n_theta, n_phi);
  g.weights.resize(n_theta, n_phi);
  parallel_for(static_cast<std::size_t>(n_theta), [&](std::size_t i) {
    for (int j = 0; j < n_phi; ++j) {
      g.w(i, j) = wigner_value(m, g.theta[i], g.phi[j]);
      g.weights(i, j) = wx[i] * kTwoPi / n_phi;
    }
  });
  return g;
}

void write_wigner_csv(std::ostream& os, const WignerGrid& grid, const std::vector<std::string>& extra_header) {
  os << "# spinctl wigner grid\n"
     << "# convention: W = sqrt(d/(4 pi)) * sum_kq rho_kq Y_kq, orthonormal T_kq; sphere integral of W = Tr(rho)\n"
     << "# n_theta=" << grid.theta.size() << " n_phi=" << grid.phi.size()
     << " (Gauss-Legendre in cos(theta) x uniform phi; angles in rad; weights in sr)\n";
  for (const auto& line : extra_header) os << "# " << line << '\n';
  os << "theta,phi,weight,w\n" << std::setprecision(17);
  for (std::size_t i = 0; i < grid.theta.size(); ++i)
    for (std::size_t j = 0; j < grid.phi.size(); ++j)
      os << grid.theta[i] << ',' << grid.phi[j] << ',' << grid.weights(i, j) << ',' << grid.w(i, j) << '\n';
}

} // namespace spinctl
