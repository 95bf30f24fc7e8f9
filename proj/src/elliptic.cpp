#include "stacked/elliptic.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <sstream>

namespace stacked {

namespace {

constexpr int kMaxTerms = 4000;
// Terms are dropped only once they sit this far below series_tol * |sum|.
constexpr double kTailMargin = 1e-3;

void require_upper_half_plane(cplx tau) {
  if (!(tau.imag() > 0.0) || !std::isfinite(tau.real())) {
    std::ostringstream os;
    os << "lattice modulus must satisfy Im(tau) > 0, got " << tau;
    throw InputError(os.str());
  }
}

// Derivatives of pi*cot(pi*w): P_0(c) = c, P_{j+1}(c) = -P_j'(c) (1 + c^2),
// d^j/dw^j [pi cot(pi w)] = pi^{j+1} P_j(cot(pi w)).
std::vector<cplx> cot_derivatives(cplx w, int jmax) {
  const cplx c = std::cos(kPi * w) / std::sin(kPi * w);
  std::vector<cplx> out(jmax + 1);
  std::vector<double> poly{0.0, 1.0};
  double scale = kPi;
  for (int j = 0; j <= jmax; ++j) {
    cplx acc = 0.0;
    for (int i = static_cast<int>(poly.size()) - 1; i >= 0; --i) acc = acc * c + poly[i];
    out[j] = scale * acc;
    if (j == jmax) break;
    std::vector<double> next(poly.size() + 1, 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i) {
      const double d = static_cast<double>(i) * poly[i];
      next[i - 1] -= d;
      next[i + 1] -= d;
    }
    poly = std::move(next);
    scale *= kPi;
  }
  return out;
}

}  // namespace

Lattice::Lattice(cplx tau, KernelOptions opts) : tau_(tau), opts_(opts) {
  require_upper_half_plane(tau);
  nome_ = std::exp(kI * kPi * tau);
  const cplx x = nome_ * nome_;
  const double ax = std::abs(x);
  cplx xn = 1.0;
  cplx e2 = 0.0;
  for (int n = 1; n <= kMaxTerms; ++n) {
    xn *= x;
    const cplx c = xn / (1.0 - xn);
    lambert_.push_back(c);
    e2 += static_cast<double>(n) * c;
    if (n > 8 && std::pow(ax, 0.5 * n) * std::pow(static_cast<double>(n), 12) < 1e-32) break;
  }
  eta1_ = kPi * kPi / 3.0 * (1.0 - 24.0 * e2);
  eta2_ = eta1_ * tau_ - 2.0 * kPi * kI;
}

std::pair<double, double> Lattice::coords(cplx z) const {
  const double y = z.imag() / tau_.imag();
  const double x = z.real() - y * tau_.real();
  return {x, y};
}

cplx Lattice::centered(cplx z, int* n1, int* n2) const {
  const double m2 = std::nearbyint(coords(z).second);
  const cplx z1 = z - m2 * tau_;
  const double x1 = z1.real() - (z1.imag() / tau_.imag()) * tau_.real();
  const double m1 = std::nearbyint(x1);
  if (n1) *n1 = static_cast<int>(m1);
  if (n2) *n2 = static_cast<int>(m2);
  return z1 - m1;
}

double Lattice::lattice_distance(cplx z) const {
  const cplx w = centered(z);
  double best = std::abs(w);
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      best = std::min(best, std::abs(w - static_cast<double>(i) - static_cast<double>(j) * tau_));
    }
  }
  return best;
}

double Lattice::torus_distance(cplx a, cplx b) const { return lattice_distance(a - b); }

TorusPoint reduce(cplx z, const Lattice& lat) {
  auto [x, y] = lat.coords(z);
  double fy = y - std::floor(y);
  double fx = x - std::floor(x);
  if (fx >= 1.0) fx = 0.0;
  if (fy >= 1.0) fy = 0.0;
  return TorusPoint{lat.from_coords(fx, fy), fx, fy};
}

std::vector<cplx> zeta_derivatives(cplx z, const Lattice& lat, int jmax) {
  if (jmax < 0) throw InputError("zeta_derivatives: jmax must be non-negative");
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw PoleError("zeta: non-finite argument");
  }
  int n1 = 0;
  int n2 = 0;
  const cplx w = lat.centered(z, &n1, &n2);
  if (lat.lattice_distance(w) < lat.pole_radius()) {
    std::ostringstream os;
    os << "zeta: point " << z << " is within pole_radius of the lattice";
    throw PoleError(os.str());
  }

  std::vector<cplx> out = cot_derivatives(w, jmax);
  out[0] += lat.eta1() * w + static_cast<double>(n1) * lat.eta1() +
            static_cast<double>(n2) * lat.eta2();
  if (jmax >= 1) out[1] += lat.eta1();

  // 4 pi sum_n c_n sin(2 pi n w); d^j/dw^j sin(a w) = a^j sin(a w + j pi/2).
  const cplx e = std::exp(2.0 * kPi * kI * w);
  const cplx einv = 1.0 / e;
  cplx en = 1.0;
  cplx enm = 1.0;
  const auto& lam = lat.lambert();
  const double tol = lat.series_tol() * kTailMargin;
  const double im_gap = lat.tau().imag() - std::abs(w.imag());
  const double n_peak = jmax / (2.0 * kPi * std::max(im_gap, 1e-3)) + 2.0;
  std::vector<cplx> sums(jmax + 1, 0.0);
  for (std::size_t idx = 0; idx < lam.size(); ++idx) {
    const double n = static_cast<double>(idx + 1);
    en *= e;
    enm *= einv;
    const cplx s = (en - enm) / (2.0 * kI);
    const cplx c = (en + enm) / 2.0;
    const double a = 2.0 * kPi * n;
    double ap = 1.0;
    bool small = n > n_peak;
    for (int j = 0; j <= jmax; ++j) {
      cplx trig;
      switch (j % 4) {
        case 0: trig = s; break;
        case 1: trig = c; break;
        case 2: trig = -s; break;
        default: trig = -c; break;
      }
      const cplx term = lam[idx] * ap * trig;
      sums[j] += term;
      if (std::abs(term) > tol * (std::abs(sums[j]) + std::abs(out[j]) + 1e-300)) small = false;
      ap *= a;
    }
    if (small) break;
  }
  for (int j = 0; j <= jmax; ++j) out[j] += 4.0 * kPi * sums[j];
  return out;
}

std::vector<cplx> zeta_regular_taylor(const Lattice& lat, int jmax) {
  if (jmax < 0) throw InputError("zeta_regular_taylor: jmax must be non-negative");
  // eta1 w + [pi cot(pi w) - 1/w] + 4 pi sum_n c_n sin(2 pi n w), expanded termwise.
  std::vector<cplx> out(jmax + 1, 0.0);
  const auto& lam = lat.lambert();
  double fact = 1.0;
  for (int j = 1; j <= jmax; j += 2) {
    if (j > 1) fact *= static_cast<double>(j - 1) * j;
    cplx moment = 0.0;
    for (std::size_t idx = lam.size(); idx-- > 0;) moment += std::pow(static_cast<double>(idx + 1), j) * lam[idx];
    const double sign = ((j - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    out[j] = -2.0 * std::riemann_zeta(static_cast<double>(j + 1)) +
             4.0 * kPi * sign * std::pow(2.0 * kPi, j) / fact * moment;
  }
  if (jmax >= 1) out[1] += lat.eta1();
  return out;
}

cplx zeta(cplx z, const Lattice& lat) { return zeta_derivatives(z, lat, 0)[0]; }

cplx wp_eval(cplx z, const Lattice& lat, int order) {
  if (order != 0 && order != 1) throw InputError("wp_eval: order must be 0 or 1");
  const auto d = zeta_derivatives(z, lat, order + 1);
  return -d[order + 1];
}

cplx xi(const TorusPoint& p, const Lattice& lat) { return p.x * lat.eta1() + p.y * lat.eta2(); }

cplx xi_linear(cplx z, const Lattice& lat) {
  auto [x, y] = lat.coords(z);
  return x * lat.eta1() + y * lat.eta2();
}

EllipticKE elliptic_KE(double m) {
  if (!(m > 0.0 && m < 1.0)) {
    std::ostringstream os;
    os << "elliptic_KE: parameter must lie in (0, 1), got " << m;
    throw std::domain_error(os.str());
  }
  double a = 1.0;
  double b = std::sqrt(1.0 - m);
  double c = std::sqrt(m);
  double sum = 0.5 * c * c;
  double pow2 = 0.5;
  for (int i = 0; i < 64; ++i) {
    const double an = 0.5 * (a + b);
    const double bn = std::sqrt(a * b);
    c = 0.5 * (a - b);
    a = an;
    b = bn;
    pow2 *= 2.0;
    sum += pow2 * c * c;
    if (std::abs(c) < 1e-15 * a) break;
  }
  const double K = kPi / (2.0 * a);
  return {K, K * (1.0 - sum)};
}

double half_energy_parameter() {
  auto f = [](double m) {
    const auto ke = elliptic_KE(m);
    return 2.0 * ke.E - ke.K;
  };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t max_iter = 200;
  auto [lo, hi] = boost::math::tools::toms748_solve(f, 1e-6, 1.0 - 1e-9, tol, max_iter);
  return 0.5 * (lo + hi);
}

double theta_star() {
  const double m = half_energy_parameter();
  const double k = elliptic_KE(m).K;
  const double kp = elliptic_KE(1.0 - m).K;
  return 2.0 * std::atan(kp / k);
}

}  // namespace stacked
