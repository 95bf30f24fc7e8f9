#include "stacked/node_opening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stacked/hecke.hpp"
#include "stacked/parallel.hpp"

namespace stacked {

namespace {

int pos_mod(int a, int m) { return ((a % m) + m) % m; }

cplx mirror_pow(int k, cplx x) { return (k % 2 == 0) ? x : -std::conj(x); }

}  // namespace

cplx TorusParams::b_hat() const { return b + a * xi_linear(v, Lattice(tau)); }

TorusParams TorusParams::from_b_hat(cplx a, cplx b_hat, cplx v, cplx tau) {
  return TorusParams{a, b_hat - a * xi_linear(v, Lattice(tau)), v, tau};
}

bool operator==(const TorusParams& x, const TorusParams& y) {
  return x.a == y.a && x.b == y.b && x.v == y.v && x.tau == y.tau;
}

// ---------------------------------------------------------------------------
// GluingState storage

int GluingState::slot_count() const {
  return static_cast<int>(window.size() + right_tail.size() + left_tail.size());
}

int GluingState::slot_of(int k) const {
  const int w = static_cast<int>(window.size());
  const int pr = static_cast<int>(right_tail.size());
  if (k > K) return w + pos_mod(k - K - 1, pr);
  if (k < -K) return w + pr + pos_mod(k + K + 1, static_cast<int>(left_tail.size()));
  return k + K;
}

int GluingState::k_of_slot(int s) const {
  const int w = static_cast<int>(window.size());
  const int pr = static_cast<int>(right_tail.size());
  const int pl = static_cast<int>(left_tail.size());
  if (s < w) return s - K;
  if (s < w + pr) return K + 1 + (s - w);
  const int i = s - w - pr;
  return -K - 1 + (i == 0 ? 0 : i - pl);
}

const TorusParams& GluingState::slot(int s) const {
  const int w = static_cast<int>(window.size());
  const int pr = static_cast<int>(right_tail.size());
  if (s < w) return window[s];
  if (s < w + pr) return right_tail[s - w];
  return left_tail[s - w - pr];
}

TorusParams& GluingState::slot(int s) { return const_cast<TorusParams&>(std::as_const(*this).slot(s)); }

const TorusParams& GluingState::at(int k) const { return slot(slot_of(k)); }
TorusParams& GluingState::at(int k) { return slot(slot_of(k)); }

int GluingState::slot_next(int s) const {
  const int w = static_cast<int>(window.size());
  const int pr = static_cast<int>(right_tail.size());
  const int pl = static_cast<int>(left_tail.size());
  if (s < w) return slot_of(s - K + 1);
  if (s < w + pr) return w + (s - w + 1) % pr;
  return w + pr + (s - w - pr + 1) % pl;
}

int GluingState::slot_prev(int s) const {
  const int w = static_cast<int>(window.size());
  const int pr = static_cast<int>(right_tail.size());
  const int pl = static_cast<int>(left_tail.size());
  if (s < w) return slot_of(s - K - 1);
  if (s < w + pr) return w + pos_mod(s - w - 1, pr);
  return w + pr + pos_mod(s - w - pr - 1, pl);
}

GluingState GluingState::central(const Configuration& cfg, double t) {
  GluingState st;
  st.t = t;
  st.K = cfg.K();
  st.tau0 = cfg.tau();
  st.hecke_q0 = hecke_G(cfg.q(0), cfg.lattice());
  int period = 0;
  if (cfg.is_periodic(&period)) st.period = period;
  const int pl = std::lcm(static_cast<int>(cfg.left_tail().size()), 2);
  const int pr = std::lcm(static_cast<int>(cfg.right_tail().size()), 2);
  auto record = [&](int k) {
    const cplx v = mirror_pow(k, cfg.q(k));
    const cplx tau = mirror_pow(k, cfg.tau());
    return TorusParams::from_b_hat(-0.5, 0.0, v, tau);
  };
  for (int k = -st.K; k <= st.K; ++k) st.window.push_back(record(k));
  st.right_tail.resize(pr);
  for (int i = 0; i < pr; ++i) st.right_tail[i] = record(st.K + 1 + i);
  st.left_tail.resize(pl);
  for (int k = -st.K - 1; k >= -st.K - pl; --k) st.left_tail[pos_mod(k + st.K + 1, pl)] = record(k);

  std::vector<TorusParams> all;
  for (int s = 0; s < st.slot_count(); ++s) all.push_back(st.slot(s));
  st.epsilon = chart_radius(all, cfg.separation());
  st.rho = st.epsilon / 4.0;
  if (t * t >= st.rho * st.epsilon) {
    std::ostringstream os;
    os << "gluing scale t = " << t << " outside the contraction regime t^2 < rho*eps = " << st.rho * st.epsilon;
    throw InputError(os.str());
  }
  return st;
}

double chart_radius(const std::vector<TorusParams>& tori, double separation) {
  double eps = 0.2 * separation;
  std::vector<TorusParams> seen;
  for (const auto& p : tori) {
    if (std::find(seen.begin(), seen.end(), p) != seen.end()) continue;
    seen.push_back(p);
    const Lattice lat(p.tau);
    // Critical points of g: zeta'(z) - zeta'(z - v) = 0.
    double crit = 0.0;
    const int n = 8;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        cplx z = lat.from_coords((i + 0.5) / n, (j + 0.5) / n);
        try {
          bool ok = false;
          for (int it = 0; it < 60; ++it) {
            const auto d0 = zeta_derivatives(z, lat, 2);
            const auto dv = zeta_derivatives(z - p.v, lat, 2);
            const cplx f = d0[1] - dv[1];
            const cplx fp = d0[2] - dv[2];
            const cplx step = f / fp;
            z -= step;
            if (std::abs(step) < 1e-14) {
              ok = true;
              break;
            }
          }
          if (!ok) continue;
          const cplx g = p.a * (zeta(z, lat) - zeta(z - p.v, lat)) + p.b;
          crit = std::max(crit, std::abs(g));
        } catch (const PoleError&) {
        }
      }
    }
    if (crit > 0.0) eps = std::min(eps, 1.0 / (2.0 * crit));
  }
  return eps;
}

// ---------------------------------------------------------------------------
// TorusForms

TorusForms::TorusForms(const TorusParams& p, double epsilon, const GluingOptions& opts, bool with_circles)
    : p_(p), lat_(p.tau), eps_(epsilon), n_max_(opts.n_max) {
  if (n_max_ < 2) throw InputError("n_max must be at least 2");
  xi_v_ = xi_linear(p_.v, lat_);
  build_second_kind();
  if (!with_circles) return;
  plus_circle_ = make_circle(+1, eps_, opts.contour_nodes);
  minus_circle_ = make_circle(-1, eps_, opts.contour_nodes);
  for (cplx z : plus_circle_.z) plus_basis_.push_back(basis(z));
  for (cplx z : minus_circle_.z) minus_basis_.push_back(basis(z));
  mu_plus_ = build_moments(plus_circle_, plus_basis_);
  mu_minus_ = build_moments(minus_circle_, minus_basis_);
}

void TorusForms::build_second_kind() {
  const int N = n_max_;
  const auto s = zeta_regular_taylor(lat_, N);
  const auto dv = zeta_derivatives(p_.v, lat_, N);
  // w * g(pole + w) = h_0 + h_1 w + ... ; plus pole at v, minus pole at 0.
  std::vector<cplx> hp(N), hm(N);
  hp[0] = -p_.a;
  hm[0] = p_.a;
  double fact = 1.0;
  for (int j = 0; j + 1 < N; ++j) {
    if (j > 0) fact *= j;
    const cplx zv = dv[j] / fact;
    const cplx zmv = ((j % 2 == 0) ? 1.0 : -1.0) * zv;  // zeta^{(j)}(-v) = (-1)^{j+1} zeta^{(j)}(v)
    hp[j + 1] = p_.a * zv - p_.a * s[j] + (j == 0 ? p_.b : 0.0);
    hm[j + 1] = p_.a * s[j] + p_.a * zmv + (j == 0 ? p_.b : 0.0);
  }
  auto build = [&](const std::vector<cplx>& h, std::vector<std::vector<cplx>>& P, std::vector<cplx>& C) {
    P.assign(N - 1, {});
    C.assign(N - 1, 0.0);
    std::vector<cplx> pw = h;  // h^{n-1}, truncated to degree N - 1
    for (int n = 2; n <= N; ++n) {
      if (n > 2) {
        std::vector<cplx> next(N, 0.0);
        for (int i = 0; i < N; ++i) {
          for (int j = 0; i + j < N; ++j) next[i + j] += pw[i] * h[j];
        }
        pw = std::move(next);
      }
      auto& row = P[n - 2];
      row.resize(n - 1);
      for (int m = 2; m <= n; ++m) row[m - 2] = (static_cast<double>(m - 1) / (n - 1)) * pw[n - m];
      C[n - 2] = row[0] * lat_.eta1();
    }
  };
  build(hp, principal_plus_, const_plus_);
  build(hm, principal_minus_, const_minus_);
}

const std::vector<cplx>& TorusForms::principal(int sign, int n) const {
  if (n < 2 || n > n_max_) throw InputError("second-kind order outside [2, n_max]");
  return sign > 0 ? principal_plus_[n - 2] : principal_minus_[n - 2];
}

cplx TorusForms::g(cplx z) const { return p_.a * (zeta(z, lat_) - zeta(z - p_.v, lat_)) + p_.b; }

cplx TorusForms::g_prime(cplx z) const {
  const auto d0 = zeta_derivatives(z, lat_, 1);
  const auto dv = zeta_derivatives(z - p_.v, lat_, 1);
  return p_.a * (d0[1] - dv[1]);
}

FormBasis TorusForms::basis(cplx z) const {
  const int J = std::max(n_max_ - 1, 1);
  const auto d0 = zeta_derivatives(z, lat_, J);
  const auto dv = zeta_derivatives(z - p_.v, lat_, J);
  FormBasis b;
  b.base = d0[0] - dv[0] - xi_v_;
  b.g = p_.a * (d0[0] - dv[0]) + p_.b;
  b.g_prime = p_.a * (d0[1] - dv[1]);
  b.plus.resize(n_max_ - 1);
  b.minus.resize(n_max_ - 1);
  // (-1)^{m-1} / (m-1)! zeta^{(m-1)} has principal part w^{-m}.
  std::vector<double> coef(n_max_ + 1, 0.0);
  double fact = 1.0;
  for (int m = 2; m <= n_max_; ++m) {
    fact *= (m - 1);
    coef[m] = ((m - 1) % 2 == 0 ? 1.0 : -1.0) / fact;
  }
  for (int n = 2; n <= n_max_; ++n) {
    const auto& pp = principal_plus_[n - 2];
    const auto& pm = principal_minus_[n - 2];
    cplx sp = const_plus_[n - 2];
    cplx sm = const_minus_[n - 2];
    for (int m = 2; m <= n; ++m) {
      sp += pp[m - 2] * coef[m] * dv[m - 1];
      sm += pm[m - 2] * coef[m] * d0[m - 1];
    }
    b.plus[n - 2] = sp;
    b.minus[n - 2] = sm;
  }
  return b;
}

cplx TorusForms::period_shift(int sign, int n, cplx c) const {
  const cplx lead = c * principal(sign, n)[0];
  return kI * (-2.0 * kPi * lead.imag() / lat_.tau().imag());
}

cplx TorusForms::second_kind(int sign, int n, cplx z, cplx c) const {
  if (n < 2 || n > n_max_) throw InputError("second-kind order outside [2, n_max]");
  const auto b = basis(z);
  return c * (sign > 0 ? b.plus[n - 2] : b.minus[n - 2]) + period_shift(sign, n, c);
}

cplx TorusForms::third_kind(cplx p, cplx q, cplx z) const {
  return zeta(z - p, lat_) - zeta(z - q, lat_) - xi_linear(q - p, lat_);
}

cplx TorusForms::chart_inverse(int sign, cplx s) const {
  const cplx pole0 = pole(sign);
  cplx z = pole0 + (sign > 0 ? -p_.a * s : p_.a * s);
  if (s == 0.0) return pole0;
  for (int it = 0; it < 60; ++it) {
    const auto d0 = zeta_derivatives(z, lat_, 1);
    const auto dv = zeta_derivatives(z - p_.v, lat_, 1);
    const cplx g = p_.a * (d0[0] - dv[0]) + p_.b;
    const cplx gp = p_.a * (d0[1] - dv[1]);
    const cplx f = 1.0 / g - s;
    const cplx step = f / (-gp / (g * g));
    z -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) break;
  }
  const cplx back = 1.0 / g(z);
  const double other = lat_.torus_distance(z, pole(-sign));
  const double own = lat_.torus_distance(z, pole0);
  if (std::abs(back - s) > 1e-11 * std::max(1.0, std::abs(s)) || own >= other) {
    std::ostringstream os;
    os << "chart inversion failed for chart coordinate " << s << " (sign " << sign << ")";
    throw ChartError(os.str());
  }
  return z;
}

ChartCircle TorusForms::make_circle(int sign, double radius, int nodes) const {
  ChartCircle c;
  c.radius = radius;
  c.s.resize(nodes);
  c.z.resize(nodes);
  c.weight.resize(nodes);
  for (int j = 0; j < nodes; ++j) {
    const cplx s = std::polar(radius, 2.0 * kPi * j / nodes);
    const cplx z = chart_inverse(sign, s);
    const cplx g = 1.0 / s;
    const cplx dz_ds = -g * g / g_prime(z);
    c.s[j] = s;
    c.z[j] = z;
    c.weight[j] = dz_ds * kI * s * (2.0 * kPi / nodes);
  }
  return c;
}

std::vector<std::vector<cplx>> TorusForms::build_moments(const ChartCircle& c, const std::vector<FormBasis>& b) const {
  const int N = n_max_;
  const int cols = 2 * N;
  std::vector<std::vector<cplx>> mu(N - 1, std::vector<cplx>(cols, 0.0));
  for (std::size_t j = 0; j < c.s.size(); ++j) {
    const cplx inv = 1.0 / c.s[j];
    cplx pw = inv;  // s^{1-n}, n = 2 first
    for (int n = 2; n <= N; ++n) {
      const cplx w = pw * c.weight[j];
      auto& row = mu[n - 2];
      row[0] += w * b[j].base;
      row[2 * N - 1] += w;
      for (int m = 2; m <= N; ++m) {
        row[1 + m - 2] += w * b[j].plus[m - 2];
        row[N + m - 2] += w * b[j].minus[m - 2];
      }
      pw *= inv;
    }
  }
  const cplx scale = -1.0 / (2.0 * kPi * kI);
  for (auto& row : mu) {
    for (auto& x : row) x *= scale;
  }
  return mu;
}

// ---------------------------------------------------------------------------
// OpenedSurface and the fixed point

OpenedSurface::OpenedSurface(const GluingState& st, const GluingOptions& opts, const OpenedSurface* previous)
    : st_(st), opts_(opts) {
  const int n = st_.slot_count();
  forms_.resize(n);
  std::vector<int> todo;
  for (int s = 0; s < n; ++s) {
    if (previous && previous->opts_.n_max == opts_.n_max && previous->opts_.contour_nodes == opts_.contour_nodes &&
        previous->st_.epsilon == st_.epsilon) {
      for (int q = 0; q < previous->st_.slot_count(); ++q) {
        if (previous->st_.slot(q) == st_.slot(s)) {
          forms_[s] = previous->forms_[q];
          break;
        }
      }
    }
    if (!forms_[s]) {
      for (int q = 0; q < s; ++q) {
        if (st_.slot(q) == st_.slot(s) && forms_[q]) {
          forms_[s] = forms_[q];
          break;
        }
      }
    }
    if (!forms_[s]) todo.push_back(s);
  }
  // Identical records share one object; build each distinct record once.
  std::vector<int> unique;
  for (int s : todo) {
    bool dup = false;
    for (int u : unique) dup = dup || st_.slot(u) == st_.slot(s);
    if (!dup) unique.push_back(s);
  }
  std::vector<std::shared_ptr<const TorusForms>> built(unique.size());
  parallel_for(unique.size(), [&](std::size_t i) {
    built[i] = std::make_shared<const TorusForms>(st_.slot(unique[i]), st_.epsilon, opts_);
  });
  for (int s : todo) {
    for (std::size_t i = 0; i < unique.size(); ++i) {
      if (st_.slot(unique[i]) == st_.slot(s)) forms_[s] = built[i];
    }
  }
}

namespace {

cplx apply_row(const std::vector<cplx>& mu_row, const std::vector<cplx>& lp, const std::vector<cplx>& lm, cplx shift,
               double rho, int N) {
  cplx acc = mu_row[0] + shift * mu_row[2 * N - 1];
  double rp = rho;
  for (int m = 2; m <= N; ++m) {
    acc += rp * (lp[m - 2] * mu_row[1 + m - 2] + lm[m - 2] * mu_row[N + m - 2]);
    rp *= rho;
  }
  return acc;
}

}  // namespace

OmegaSeries apply_L(const OpenedSurface& surf, const OmegaSeries& lambda) {
  const auto& st = surf.state();
  const int N = surf.options().n_max;
  const int S = st.slot_count();
  OmegaSeries out = lambda;
  const double q = st.t * st.t / st.rho;
  for (int s = 0; s < S; ++s) {
    const int nx = st.slot_next(s);
    const int pv = st.slot_prev(s);
    const auto& mu_next = surf.slot_forms(nx).moments(-1);
    const auto& mu_prev = surf.slot_forms(pv).moments(+1);
    const cplx shift_next = omega_shift(surf.slot_forms(nx), lambda, nx, st.rho);
    const cplx shift_prev = omega_shift(surf.slot_forms(pv), lambda, pv, st.rho);
    double qn = q;
    for (int n = 2; n <= N; ++n) {
      out.plus[s][n - 2] = qn * apply_row(mu_next[n - 2], lambda.plus[nx], lambda.minus[nx], shift_next, st.rho, N);
      out.minus[s][n - 2] = qn * apply_row(mu_prev[n - 2], lambda.plus[pv], lambda.minus[pv], shift_prev, st.rho, N);
      qn *= q;
    }
  }
  return out;
}

OmegaSeries fix_omega(const OpenedSurface& surf) {
  const auto& st = surf.state();
  const int N = surf.options().n_max;
  const int S = st.slot_count();
  OmegaSeries lam;
  lam.n_max = N;
  lam.plus.assign(S, std::vector<cplx>(N - 1, 0.0));
  lam.minus.assign(S, std::vector<cplx>(N - 1, 0.0));

  // l-infinity bound for the real-linear part: |c mu_H + shift(c) mu_1| <= |c| (|mu_H| + 2 pi |P_2| |mu_1| / Im tau).
  const double q = st.t * st.t / st.rho;
  double norm = 0.0;
  for (int s = 0; s < S; ++s) {
    for (int side : {+1, -1}) {
      const auto& f = side > 0 ? surf.slot_forms(st.slot_next(s)) : surf.slot_forms(st.slot_prev(s));
      const auto& mu = f.moments(side > 0 ? -1 : +1);
      const double shift_scale = 2.0 * kPi / f.lattice().tau().imag();
      double qn = q;
      for (int n = 2; n <= N; ++n) {
        double row = 0.0;
        double rp = st.rho;
        for (int m = 2; m <= N; ++m) {
          const double one = std::abs(mu[n - 2][2 * N - 1]) * shift_scale;
          row += rp * (std::abs(mu[n - 2][1 + m - 2]) + one * std::abs(f.principal(+1, m)[0]) +
                       std::abs(mu[n - 2][N + m - 2]) + one * std::abs(f.principal(-1, m)[0]));
          rp *= st.rho;
        }
        norm = std::max(norm, qn * row);
        qn *= q;
      }
    }
  }
  lam.contraction_estimate = norm;
  if (norm >= 1.0) {
    std::ostringstream os;
    os << "fix_omega: map is not contracting (norm " << norm << ") at t = " << st.t;
    throw ConvergenceError(os.str());
  }

  double prev_update = 0.0;
  for (int it = 1; it <= surf.options().max_fix_iter; ++it) {
    OmegaSeries next = apply_L(surf, lam);
    double update = 0.0;
    for (int s = 0; s < S; ++s) {
      for (int n = 0; n < N - 1; ++n) {
        update = std::max(update, std::abs(next.plus[s][n] - lam.plus[s][n]));
        update = std::max(update, std::abs(next.minus[s][n] - lam.minus[s][n]));
      }
    }
    next.iterations = it;
    next.contraction_estimate = norm;
    next.empirical_ratio = prev_update > 0.0 ? update / prev_update : 0.0;
    lam = std::move(next);
    if (prev_update > 0.0 && update > prev_update && update > surf.options().fix_tol) {
      throw ConvergenceError("fix_omega: update norm increased; the map is not contracting at this t");
    }
    prev_update = update;
    if (update < surf.options().fix_tol) {
      lam.converged = true;
      break;
    }
  }
  if (!lam.converged) throw ConvergenceError("fix_omega: iteration limit reached");
  const OmegaSeries check = apply_L(surf, lam);
  double res = 0.0;
  for (int s = 0; s < S; ++s) {
    for (int n = 0; n < N - 1; ++n) {
      res = std::max(res, std::abs(check.plus[s][n] - lam.plus[s][n]));
      res = std::max(res, std::abs(check.minus[s][n] - lam.minus[s][n]));
    }
  }
  lam.residual = res;
  return lam;
}

OmegaSeries fix_omega(const GluingState& st, const GluingOptions& opts) {
  return fix_omega(OpenedSurface(st, opts));
}

cplx omega_shift(const TorusForms& f, const OmegaSeries& series, int slot, double rho) {
  cplx acc = 0.0;
  double rp = rho;
  const auto& lp = series.plus[slot];
  const auto& lm = series.minus[slot];
  for (std::size_t i = 0; i < lp.size(); ++i) {
    const int n = static_cast<int>(i) + 2;
    acc += f.period_shift(+1, n, rp * lp[i]) + f.period_shift(-1, n, rp * lm[i]);
    rp *= rho;
  }
  return acc;
}

cplx omega_from_basis(const TorusForms& f, const FormBasis& b, const OmegaSeries& series, int slot, double rho) {
  cplx acc = b.base + omega_shift(f, series, slot, rho);
  double rp = rho;
  const auto& lp = series.plus[slot];
  const auto& lm = series.minus[slot];
  for (std::size_t i = 0; i < lp.size(); ++i) {
    acc += rp * (lp[i] * b.plus[i] + lm[i] * b.minus[i]);
    rp *= rho;
  }
  return acc;
}

cplx omega_eval(const OpenedSurface& surf, const OmegaSeries& series, int k, cplx z) {
  const auto& st = surf.state();
  const auto& f = surf.forms(k);
  const double inner = st.t * st.t / st.epsilon;
  for (int sign : {+1, -1}) {
    if (f.lattice().torus_distance(z, f.pole(sign)) < 4.0 * std::abs(f.params().a) * st.epsilon) {
      const double r = std::abs(1.0 / f.g(z));
      if (r <= inner) {
        std::ostringstream os;
        os << "omega_eval: point " << z << " of torus " << k << " lies in a removed disk";
        throw ChartError(os.str());
      }
    }
  }
  return omega_from_basis(f, f.basis(z), series, st.slot_of(k), st.rho);
}

// ---------------------------------------------------------------------------
// Pointwise wrappers

cplx gauss_component(int k, cplx z, const GluingState& st) {
  const auto& p = st.at(k);
  const Lattice lat(p.tau);
  return p.a * (zeta(z, lat) - zeta(z - p.v, lat)) + p.b;
}

cplx neck_coordinate(int k, int sign, cplx z, const GluingState& st) {
  const auto& p = st.at(k);
  const Lattice lat(p.tau);
  const cplx s = 1.0 / gauss_component(k, z, st);
  const cplx own = sign > 0 ? p.v : cplx(0.0);
  const cplx other = sign > 0 ? cplx(0.0) : p.v;
  if (std::abs(s) >= 2.0 * st.epsilon || lat.torus_distance(z, own) >= lat.torus_distance(z, other)) {
    std::ostringstream os;
    os << "point " << z << " is outside the chart of sign " << sign << " on torus " << k;
    throw ChartError(os.str());
  }
  return s;
}

cplx third_kind_form(int k, cplx p, cplx q, cplx z, const GluingState& st) {
  const Lattice lat(st.at(k).tau);
  return zeta(z - p, lat) - zeta(z - q, lat) - xi_linear(q - p, lat);
}

cplx second_kind_form(int k, int sign, int n, cplx z, const GluingState& st, const GluingOptions& opts) {
  GluingOptions o = opts;
  o.n_max = std::max(o.n_max, n);
  return TorusForms(st.at(k), st.epsilon, o, false).second_kind(sign, n, z);
}

// ---------------------------------------------------------------------------
// Laurent data in the neck charts

LaurentTable laurent_coeffs(const OpenedSurface& surf, const OmegaSeries& series, int k, int max_n) {
  const auto& st = surf.state();
  const auto& here = surf.forms(k);
  const auto& there = surf.forms(k + 1);
  const auto& cp = here.circle(+1);
  const auto& bp = here.circle_basis(+1);
  const auto& cm = there.circle(-1);
  const auto& bm = there.circle_basis(-1);
  const int sk = st.slot_of(k);
  const int sk1 = st.slot_of(k + 1);
  LaurentTable tab;
  tab.plus.assign(max_n, 0.0);
  tab.minus.assign(max_n, 0.0);
  const cplx inv2pii = 1.0 / (2.0 * kPi * kI);
  for (std::size_t j = 0; j < cp.s.size(); ++j) {
    const cplx w = omega_from_basis(here, bp[j], series, sk, st.rho) * cp.weight[j] * inv2pii;
    tab.residue += w;
    const cplx inv = 1.0 / cp.s[j];
    cplx pw = inv;
    for (int n = 1; n <= max_n; ++n) {
      tab.plus[n - 1] += w * pw;
      pw *= inv;
    }
  }
  for (std::size_t j = 0; j < cm.s.size(); ++j) {
    const cplx w = -omega_from_basis(there, bm[j], series, sk1, st.rho) * cm.weight[j] * inv2pii;
    const cplx inv = 1.0 / cm.s[j];
    cplx pw = inv;
    for (int n = 1; n <= max_n; ++n) {
      tab.minus[n - 1] += w * pw;
      pw *= inv;
    }
  }
  return tab;
}

cplx laurent_eval(const LaurentTable& tab, double t, cplx s) {
  cplx acc = tab.residue / s;
  cplx pw = 1.0;
  for (cplx c : tab.plus) {
    acc += c * pw;
    pw *= s;
  }
  const cplx q = t * t / s;
  cplx qn = q / s;  // t^2 / s^2
  for (cplx c : tab.minus) {
    acc += c * qn;
    qn *= q;
  }
  return acc;
}

}  // namespace stacked
