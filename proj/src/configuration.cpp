#include "stacked/configuration.hpp"

#include <Eigen/SVD>
#include <boost/math/tools/roots.hpp>
#include <numeric>
#include <sstream>

#include "stacked/hecke.hpp"

namespace stacked {

namespace {

int pos_mod(int a, int m) { return ((a % m) + m) % m; }

}  // namespace

Configuration::Configuration(cplx tau, std::vector<cplx> window, std::vector<cplx> left_tail,
                             std::vector<cplx> right_tail)
    : tau_(tau), lat_(tau), window_(std::move(window)), left_(std::move(left_tail)), right_(std::move(right_tail)) {
  if (window_.empty() || window_.size() % 2 == 0) {
    throw InputError("configuration window must have odd length 2K+1");
  }
  if (left_.empty() || right_.empty()) throw InputError("configuration tails must be non-empty");
  K_ = static_cast<int>(window_.size() / 2);
  auto check = [&](const std::vector<cplx>& v, const char* part) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag()) ||
          lat_.lattice_distance(v[i]) < kMinSeparation) {
        std::ostringstream os;
        os << "configuration " << part << " entry " << i << " = " << v[i]
           << " is within " << kMinSeparation << " of the lattice";
        throw InputError(os.str());
      }
    }
  };
  check(window_, "window");
  check(left_, "left_tail");
  check(right_, "right_tail");
}

Configuration Configuration::from_rule(cplx tau, int K, const std::function<cplx(int)>& rule, int left_period,
                                       int right_period) {
  if (K < 0 || left_period < 1 || right_period < 1) throw InputError("from_rule: invalid sizes");
  std::vector<cplx> window;
  for (int k = -K; k <= K; ++k) window.push_back(rule(k));
  std::vector<cplx> right(right_period);
  for (int i = 0; i < right_period; ++i) right[i] = rule(K + 1 + i);
  std::vector<cplx> left(left_period);
  for (int k = -K - 1; k >= -K - left_period; --k) left[pos_mod(k + K + 1, left_period)] = rule(k);
  return Configuration(tau, std::move(window), std::move(left), std::move(right));
}

cplx Configuration::q(int k) const {
  if (k > K_) return right_[pos_mod(k - K_ - 1, static_cast<int>(right_.size()))];
  if (k < -K_) return left_[pos_mod(k + K_ + 1, static_cast<int>(left_.size()))];
  return window_[k + K_];
}

Configuration Configuration::shifted(int shift) const {
  return from_rule(tau_, K_, [&](int k) { return q(k + shift); }, static_cast<int>(left_.size()),
                   static_cast<int>(right_.size()));
}

Configuration Configuration::rewindowed(int K) const {
  return from_rule(tau_, K, [&](int k) { return q(k); }, static_cast<int>(left_.size()),
                   static_cast<int>(right_.size()));
}

double Configuration::separation() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto* v : {&window_, &left_, &right_}) {
    for (cplx x : *v) best = std::min(best, lat_.lattice_distance(x));
  }
  return best;
}

bool Configuration::is_periodic(int* period) const {
  const int full = std::lcm(static_cast<int>(left_.size()), static_cast<int>(right_.size()));
  for (int P = 1; P <= full; ++P) {
    if (full % P) continue;
    bool ok = true;
    for (int k = -K_ - full; k <= K_ + full && ok; ++k) ok = lat_.torus_distance(q(k), q(k + P)) < 1e-12;
    if (ok) {
      if (period) *period = P;
      return true;
    }
  }
  return false;
}

std::vector<TorusPoint> positions(const Configuration& cfg, const TorusPoint& p0) {
  const int K = cfg.K();
  const auto& lat = cfg.lattice();
  std::vector<cplx> p(2 * K + 1);
  p[K] = p0.z;
  for (int k = 1; k <= K; ++k) p[K + k] = p[K + k - 1] + cfg.q(k);
  for (int k = 0; k > -K; --k) p[K + k - 1] = p[K + k] - cfg.q(k);
  std::vector<TorusPoint> out;
  out.reserve(p.size());
  for (cplx z : p) out.push_back(reduce(z, lat));
  return out;
}

BalanceReport balance_report(const Configuration& cfg, const BalanceOptions& opts) {
  const int lo = -cfg.K() - static_cast<int>(cfg.left_tail().size());
  const int hi = cfg.K() + static_cast<int>(cfg.right_tail().size());
  BalanceReport rep;
  rep.k_first = lo;
  for (int k = lo; k <= hi; ++k) {
    try {
      rep.G_values.push_back(hecke_G(cfg.q(k), cfg.lattice()));
    } catch (const PoleError& e) {
      std::ostringstream os;
      os << "k=" << k << ": " << e.what();
      throw PoleError(os.str());
    }
  }
  for (std::size_t i = 0; i + 1 < rep.G_values.size(); ++i) {
    rep.forces.push_back(rep.G_values[i + 1] - rep.G_values[i]);
    rep.max_force = std::max(rep.max_force, std::abs(rep.forces.back()));
  }
  rep.balanced = rep.max_force < opts.balance_tol;
  return rep;
}

NondegeneracyReport nondegeneracy_check(const Configuration& cfg, const BalanceOptions& opts) {
  const int lo = -cfg.K() - static_cast<int>(cfg.left_tail().size());
  const int hi = cfg.K() + static_cast<int>(cfg.right_tail().size());
  NondegeneracyReport rep;
  rep.min_singular_value = std::numeric_limits<double>::infinity();
  for (int k = lo; k <= hi; ++k) {
    const auto J = hecke_jacobian(cfg.q(k), cfg.lattice());
    const double s = Eigen::JacobiSVD<Eigen::Matrix2d>(J.m).singularValues().minCoeff();
    if (s < rep.min_singular_value) {
      rep.min_singular_value = s;
      rep.worst_k = k;
    }
  }
  rep.nondegenerate = rep.min_singular_value > opts.nondeg_tol;
  return rep;
}

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names{"tP",        "oPa",   "oPb",       "oCLP'",     "rPD",
                                              "H",         "oDelta", "twin-rPD", "rPD-H",     "H-H-shift",
                                              "oPa-oCLP", "oCLP-rot-twin", "oPa-oDelta", "oH"};
  return names;
}

double rhombic_balanced_fraction(double theta) {
  const Lattice lat(std::polar(1.0, theta));
  const cplx u = 1.0 + lat.tau();
  // G(c u) * u is real on this line by the reflection symmetry of the rhombic lattice.
  auto f = [&](double c) { return (hecke_G(c * u, lat) * u).real(); };
  double lo = 0.05;
  double flo = f(lo);
  for (double c = 0.06; c < 0.4995; c += 0.005) {
    const double fc = f(c);
    if ((flo > 0) != (fc > 0)) {
      boost::math::tools::eps_tolerance<double> tol(50);
      std::uintmax_t it = 100;
      const auto [a, b] = boost::math::tools::toms748_solve(f, lo, c, flo, fc, tol, it);
      return 0.5 * (a + b);
    }
    lo = c;
    flo = fc;
  }
  std::ostringstream os;
  os << "no balanced c(1+tau) configuration for theta = " << theta << " (requires theta < theta*)";
  throw InputError(os.str());
}

Configuration catalog(const std::string& name, const CatalogParams& params) {
  const int K = params.K;
  const cplx rect(0.0, params.imag_tau);
  const cplx hex = std::polar(1.0, kPi / 3);
  const cplx third = (1.0 + hex) / 3.0;
  auto constant = [&](cplx tau, cplx q0) { return Configuration::from_rule(tau, K, [=](int) { return q0; }, 1, 1); };
  auto alternating = [&](cplx tau, cplx even, cplx odd) {
    return Configuration::from_rule(tau, K, [=](int k) { return k % 2 == 0 ? even : odd; }, 2, 2);
  };

  if (name == "tP") return constant(kI, (1.0 + kI) / 2.0);
  if (name == "oPa") return constant(rect, (1.0 + rect) / 2.0);
  if (name == "oPb") {
    const cplx tau = std::polar(1.0, params.theta.value_or(1.4));
    return constant(tau, (1.0 + tau) / 2.0);
  }
  if (name == "oCLP'") return constant(rect, 0.5);
  if (name == "rPD") return constant(hex, third);
  if (name == "H") return alternating(hex, third, -third);
  if (name == "oDelta") return alternating(rect, 0.5, rect / 2.0);
  if (name == "twin-rPD") {
    return Configuration::from_rule(hex, K, [=](int k) { return k < 0 ? third : -third; }, 1, 1);
  }
  if (name == "rPD-H") {
    return Configuration::from_rule(hex, K, [=](int k) { return (k < 0 && k % 2 == 0) ? third : -third; }, 2, 1);
  }
  if (name == "H-H-shift") {
    return Configuration::from_rule(
        hex, K, [=](int k) { return ((k < 0 && k % 2 == 0) || (k > 0 && k % 2 != 0)) ? third : -third; }, 2, 2);
  }
  if (name == "oPa-oCLP") {
    return Configuration::from_rule(rect, K, [=](int k) { return k < 0 ? cplx(0.5) : (1.0 + rect) / 2.0; }, 1, 1);
  }
  if (name == "oCLP-rot-twin") {
    return Configuration::from_rule(rect, K, [=](int k) { return k < 0 ? cplx(0.5) : rect / 2.0; }, 1, 1);
  }
  if (name == "oPa-oDelta") {
    return Configuration::from_rule(
        rect, K,
        [=](int k) {
          if (k >= 0) return (1.0 + rect) / 2.0;
          return k % 2 != 0 ? cplx(0.5) : rect / 2.0;
        },
        2, 1);
  }
  if (name == "oH") {
    const double theta = params.theta.value_or(1.1);
    const cplx tau = std::polar(1.0, theta);
    const cplx q0 = rhombic_balanced_fraction(theta) * (1.0 + tau);
    return alternating(tau, q0, -q0);
  }
  std::ostringstream os;
  os << "unknown catalog name '" << name << "'; valid names:";
  for (const auto& n : catalog_names()) os << ' ' << n;
  throw InputError(os.str());
}

}  // namespace stacked
