#include "stacked/surface_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <queue>
#include <sstream>

#include "stacked/parallel.hpp"

namespace stacked {

namespace {

using Rule = boost::math::quadrature::gauss<double, 20>;

template <class F>
auto segment_integral(F&& f, cplx a, cplx b, int panels) -> decltype(f(a)) {
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  const cplx d = b - a;
  decltype(f(a)) acc = f(a) * 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) / panels;
    const double half = 0.5 / panels;
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += (w[i] * half) * (f(a + d * (mid + half * x[i])) + f(a + d * (mid - half * x[i])));
    }
  }
  return acc * d;
}

template <class F>
auto cell_integral(F&& f, cplx origin, cplx tau, int panels) -> decltype(f(origin)) {
  const cplx c0 = origin;
  const cplx c1 = origin + 1.0;
  const cplx c2 = origin + 1.0 + tau;
  const cplx c3 = origin + tau;
  return segment_integral(f, c0, c1, panels) + segment_integral(f, c1, c2, panels) +
         segment_integral(f, c2, c3, panels) + segment_integral(f, c3, c0, panels);
}

// Midpoint of the widest gap between points on the unit circle R / Z.
double gap_midpoint(std::vector<double> c) {
  for (double& v : c) v -= std::floor(v);
  std::sort(c.begin(), c.end());
  double best = c.front() + 1.0 - c.back();
  double mid = c.back() + 0.5 * best;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i] - c[i - 1] > best) {
      best = c[i] - c[i - 1];
      mid = c[i - 1] + 0.5 * best;
    }
  }
  return mid - std::floor(mid);
}

cplx representative(const Lattice& lat, cplx z, cplx origin) {
  auto [x, y] = lat.coords(z - origin);
  return z - std::floor(x) - std::floor(y) * lat.tau();
}

struct GaussValue {
  cplx g;
  cplx g_prime;
};

GaussValue gauss_value(const TorusParams& p, const Lattice& lat, cplx z) {
  const auto d0 = zeta_derivatives(z, lat, 1);
  const auto dv = zeta_derivatives(z - p.v, lat, 1);
  return {p.a * (d0[0] - dv[0]) + p.b, p.a * (d0[1] - dv[1])};
}

}  // namespace

cplx cell_origin(const TorusParams& p, const std::vector<cplx>& avoid) {
  const Lattice lat(p.tau);
  std::vector<double> xs{0.0};
  std::vector<double> ys{0.0};
  auto add = [&](cplx z) {
    auto [x, y] = lat.coords(z);
    xs.push_back(x);
    ys.push_back(y);
  };
  add(p.v);
  for (cplx z : avoid) add(z);
  return lat.from_coords(gap_midpoint(xs), gap_midpoint(ys));
}

std::vector<cplx> gauss_zeros(const TorusParams& p) {
  const Lattice lat(p.tau);
  std::vector<cplx> out;
  const int n = 4;
  for (int i = 0; i < n && out.size() < 2; ++i) {
    for (int j = 0; j < n && out.size() < 2; ++j) {
      cplx z = lat.from_coords((i + 0.5) / n, (j + 0.5) / n);
      try {
        // Near-double zeros only resolve to about sqrt(machine epsilon); placement needs far less.
        double last = 1.0;
        for (int it = 0; it < 80 && last >= 1e-13; ++it) {
          const auto gv = gauss_value(p, lat, z);
          cplx step = gv.g / gv.g_prime;
          if (std::abs(step) > 0.1) step *= 0.1 / std::abs(step);
          z -= step;
          last = std::abs(step);
        }
        if (last > 1e-7) continue;
        const cplx r = reduce(z, lat).z;
        bool dup = false;
        for (cplx w : out) dup = dup || lat.torus_distance(w, r) < 1e-7;
        if (!dup) out.push_back(r);
      } catch (const PoleError&) {
      }
    }
  }
  return out;
}

namespace {

ZeroSums zero_sums(int k, const TorusParams& p, const std::vector<cplx>& zeros, const ContourOptions& opts) {
  const Lattice lat(p.tau);
  const cplx origin = cell_origin(p, zeros);
  double min_g = INFINITY;
  const Eigen::Vector3cd I = cell_integral(
                                 [&](cplx z) {
                                   const auto gv = gauss_value(p, lat, z);
                                   min_g = std::min(min_g, std::abs(gv.g));
                                   const cplx q = gv.g_prime / gv.g;
                                   return Eigen::Vector3cd(q, z * q, z * z * q);
                                 },
                                 origin, p.tau, opts.panels) /
                             (2.0 * kPi * kI);
  if (min_g < opts.zero_guard) {
    std::ostringstream os;
    os << "zeros_symmetric: g_" << k << " nearly vanishes on the cell boundary (|g| = " << min_g << ")";
    throw ContourError(os.str());
  }
  const cplx r0 = representative(lat, 0.0, origin);
  const cplx rv = representative(lat, p.v, origin);
  ZeroSums out;
  out.cell_origin = origin;
  out.count = I(0).real() + 2.0;
  out.s1 = I(1) + r0 + rv;
  const cplx squares = I(2) + r0 * r0 + rv * rv;
  out.s2 = 0.5 * (out.s1 * out.s1 - squares);
  return out;
}

cplx residual_E_impl(const OpenedSurface& surf, const OmegaSeries& series, int k, const std::vector<cplx>& zeros,
                     const ContourOptions& opts) {
  const auto& st = surf.state();
  const auto& f = surf.forms(k);
  const int slot = st.slot_of(k);
  const auto zs = zero_sums(k, f.params(), zeros, opts);
  auto F = [&](cplx z, const FormBasis& b) {
    const cplx w = omega_from_basis(f, b, series, slot, st.rho);
    return (2.0 * z - zs.s1) * w / (z * z - zs.s1 * z + zs.s2);
  };
  cplx total = cell_integral([&](cplx z) { return F(z, f.basis(z)); }, zs.cell_origin, f.params().tau, opts.panels);
  for (int sign : {+1, -1}) {
    const auto& c = f.circle(sign);
    const auto& b = f.circle_basis(sign);
    const cplx move = representative(f.lattice(), f.pole(sign), zs.cell_origin) - f.pole(sign);
    for (std::size_t j = 0; j < c.z.size(); ++j) total -= F(c.z[j] + move, b[j]) * c.weight[j];
  }
  return total / (2.0 * kPi * kI);
}

std::pair<cplx, cplx> residual_P_impl(const OpenedSurface& surf, const OmegaSeries& series, int k,
                                      const std::vector<cplx>& zeros, const ContourOptions& opts) {
  const auto& st = surf.state();
  const auto& f = surf.forms(k);
  const auto& p = f.params();
  const int slot = st.slot_of(k);
  const cplx origin = cell_origin(p, zeros);
  const double t2 = st.t * st.t;
  const bool even = (k % 2 == 0);
  // (integral of g^{-1} dh, integral of g dh) with g = (t g_k)^{-1} for even k and t g_k for odd k.
  auto integrals = [&](cplx a, cplx b) {
    const Eigen::Vector2cd v = segment_integral(
        [&](cplx z) {
          const auto bs = f.basis(z);
          const cplx w = omega_from_basis(f, bs, series, slot, st.rho);
          return Eigen::Vector2cd(bs.g * w, w / bs.g);
        },
        a, b, opts.panels);
    return even ? std::make_pair(t2 * v(0), v(1)) : std::make_pair(v(1), t2 * v(0));
  };
  const auto [Aa, Ba] = integrals(origin, origin + 1.0);
  const auto [Ab, Bb] = integrals(origin, origin + p.tau);
  const double sgn = even ? 1.0 : -1.0;
  return {std::conj(Aa) - Ba - 2.0 * sgn, std::conj(Ab) - Bb - 2.0 * st.tau0};
}

}  // namespace

ZeroSums zeros_symmetric(int k, const GluingState& st, const ContourOptions& opts) {
  const auto& p = st.at(k);
  return zero_sums(k, p, gauss_zeros(p), opts);
}

cplx residual_E(const OpenedSurface& surf, const OmegaSeries& series, int k, const ContourOptions& opts) {
  return residual_E_impl(surf, series, k, gauss_zeros(surf.forms(k).params()), opts);
}

std::pair<cplx, cplx> residual_P(const OpenedSurface& surf, const OmegaSeries& series, int k,
                                 const ContourOptions& opts) {
  return residual_P_impl(surf, series, k, gauss_zeros(surf.forms(k).params()), opts);
}

cplx balance_integral(const OpenedSurface& surf, const OmegaSeries& series, int k) {
  const auto& st = surf.state();
  const auto& f = surf.forms(k);
  const int slot = st.slot_of(k);
  const auto& c = f.circle(-1);
  const auto& b = f.circle_basis(-1);
  cplx acc = 0.0;
  for (std::size_t j = 0; j < c.z.size(); ++j) {
    acc += omega_from_basis(f, b[j], series, slot, st.rho) / c.s[j] * c.weight[j];
  }
  return (k % 2 == 0) ? acc : std::conj(acc);
}

cplx residual_Gbal(const OpenedSurface& surf, const OmegaSeries& series, int k) {
  return balance_integral(surf, series, k) + 2.0 * kPi * kI * surf.state().hecke_q0;
}

double SlotResidual::sup() const {
  return std::max({std::abs(E), std::abs(P1), std::abs(P2), std::abs(Gbal)});
}

namespace {

SlotResidual slot_residual(const OpenedSurface& surf, const OmegaSeries& series, int slot,
                           const ContourOptions& copts) {
  const int k = surf.state().k_of_slot(slot);
  SlotResidual r;
  const auto zeros = gauss_zeros(surf.forms(k).params());
  r.E = residual_E_impl(surf, series, k, zeros, copts);
  std::tie(r.P1, r.P2) = residual_P_impl(surf, series, k, zeros, copts);
  r.Gbal = residual_Gbal(surf, series, k);
  return r;
}

std::vector<SlotResidual> rows(const OpenedSurface& surf, const OmegaSeries& series, const std::vector<int>& slots,
                               const ContourOptions& copts) {
  std::vector<SlotResidual> out(slots.size());
  parallel_for(slots.size(), [&](std::size_t i) { out[i] = slot_residual(surf, series, slots[i], copts); });
  return out;
}

void pack(const SlotResidual& r, double* out) {
  const cplx v[4] = {r.E, r.P1, r.P2, r.Gbal};
  for (int i = 0; i < 4; ++i) {
    out[2 * i] = v[i].real();
    out[2 * i + 1] = v[i].imag();
  }
}

}  // namespace

ResidualVector residuals(const GluingState& st, const GluingOptions& gopts, const ContourOptions& copts) {
  const OpenedSurface surf(st, gopts);
  const auto series = fix_omega(surf);
  std::vector<int> slots(st.slot_count());
  for (int s = 0; s < st.slot_count(); ++s) slots[s] = s;
  ResidualVector out;
  out.K = st.K;
  out.values = rows(surf, series, slots, copts);
  for (int s : slots) {
    out.k.push_back(st.k_of_slot(s));
    out.sup_norm = std::max(out.sup_norm, out.values[s].sup());
  }
  return out;
}

std::array<double, 8> slot_unknowns(const TorusParams& p) {
  const cplx bh = p.b_hat();
  return {bh.real(), bh.imag(), p.a.real(), p.a.imag(), p.tau.real(), p.tau.imag(), p.v.real(), p.v.imag()};
}

TorusParams slot_from_unknowns(const std::array<double, 8>& x) {
  return TorusParams::from_b_hat(cplx(x[2], x[3]), cplx(x[0], x[1]), cplx(x[6], x[7]), cplx(x[4], x[5]));
}

Eigen::Matrix<double, 8, 8> slot_jacobian(const GluingState& st, int slot, int col_slot, const SolverOptions& opts) {
  const OpenedSurface base(st, opts.gluing);
  Eigen::Matrix<double, 8, 8> J;
  const auto x0 = slot_unknowns(st.slot(col_slot));
  for (int c = 0; c < 8; ++c) {
    double out[2][8];
    for (int side = 0; side < 2; ++side) {
      GluingState pert = st;
      auto x = x0;
      x[c] += side == 0 ? opts.fd_step : -opts.fd_step;
      pert.slot(col_slot) = slot_from_unknowns(x);
      const OpenedSurface surf(pert, opts.gluing, &base);
      const auto series = fix_omega(surf);
      pack(slot_residual(surf, series, slot, opts.contour), out[side]);
    }
    for (int r = 0; r < 8; ++r) J(r, c) = (out[0][r] - out[1][r]) / (2.0 * opts.fd_step);
  }
  return J;
}

namespace {

std::vector<std::vector<int>> slot_distances(const GluingState& st) {
  const int n = st.slot_count();
  std::vector<std::vector<int>> d(n, std::vector<int>(n, 1 << 20));
  for (int s = 0; s < n; ++s) {
    std::queue<int> q;
    q.push(s);
    d[s][s] = 0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int w : {st.slot_next(u), st.slot_prev(u)}) {
        if (d[s][w] > d[s][u] + 1) {
          d[s][w] = d[s][u] + 1;
          q.push(w);
        }
      }
    }
  }
  return d;
}

struct Evaluation {
  std::unique_ptr<OpenedSurface> surf;
  Eigen::VectorXd r;
  double norm = 0.0;
};

Evaluation evaluate(const GluingState& st, const std::vector<int>& active, const SolverOptions& opts,
                    const OpenedSurface* previous) {
  Evaluation e;
  e.surf = std::make_unique<OpenedSurface>(st, opts.gluing, previous);
  const auto series = fix_omega(*e.surf);
  const auto vals = rows(*e.surf, series, active, opts.contour);
  e.r.resize(8 * static_cast<int>(active.size()));
  for (std::size_t i = 0; i < active.size(); ++i) {
    pack(vals[i], e.r.data() + 8 * i);
    e.norm = std::max(e.norm, vals[i].sup());
  }
  return e;
}

GluingState with_step(const GluingState& st, const std::vector<int>& active, const Eigen::VectorXd& dx, double scale) {
  GluingState out = st;
  for (std::size_t i = 0; i < active.size(); ++i) {
    auto x = slot_unknowns(st.slot(active[i]));
    for (int c = 0; c < 8; ++c) x[c] += scale * dx(8 * i + c);
    out.slot(active[i]) = slot_from_unknowns(x);
  }
  return out;
}

Eigen::MatrixXd fd_jacobian(const GluingState& st, const std::vector<int>& active, const SolverOptions& opts,
                            const OpenedSurface& base, const Eigen::VectorXd& base_r) {
  const int m = static_cast<int>(active.size());
  const auto dist = slot_distances(st);
  const bool dense = m <= 5;
  std::vector<int> color(m, -1);
  int colors = 0;
  for (int i = 0; i < m; ++i) {
    if (dense) {
      color[i] = colors++;
      continue;
    }
    for (int c = 0;; ++c) {
      bool free = true;
      for (int j = 0; j < i && free; ++j) free = !(color[j] == c && dist[active[i]][active[j]] <= 4);
      if (free) {
        color[i] = c;
        colors = std::max(colors, c + 1);
        break;
      }
    }
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(8 * m, 8 * m);
  for (int c = 0; c < colors; ++c) {
    std::vector<int> members;
    for (int i = 0; i < m; ++i) {
      if (color[i] == c) members.push_back(i);
    }
    for (int comp = 0; comp < 8; ++comp) {
      Eigen::VectorXd dx = Eigen::VectorXd::Zero(8 * m);
      for (int i : members) dx(8 * i + comp) = 1.0;
      const Eigen::VectorXd up = evaluate(with_step(st, active, dx, opts.fd_step), active, opts, &base).r;
      Eigen::VectorXd diff;
      if (opts.central_differences) {
        const Eigen::VectorXd down = evaluate(with_step(st, active, dx, -opts.fd_step), active, opts, &base).r;
        diff = (up - down) / (2.0 * opts.fd_step);
      } else {
        diff = (up - base_r) / opts.fd_step;
      }
      for (int row = 0; row < m; ++row) {
        int owner = -1;
        for (int i : members) {
          if (dense || dist[active[row]][active[i]] <= 2) owner = i;
        }
        if (owner >= 0) J.block(8 * row, 8 * owner + comp, 8, 1) = diff.segment(8 * row, 8);
      }
    }
  }
  return J;
}

int newton(GluingState& st, const std::vector<int>& active, const SolverOptions& opts, std::vector<double>& history) {
  if (active.empty()) return 0;
  Evaluation cur = evaluate(st, active, opts, nullptr);
  history.push_back(cur.norm);
  int it = 0;
  while (cur.norm >= opts.tol && it < opts.max_iter) {
    const Eigen::MatrixXd J = fd_jacobian(st, active, opts, *cur.surf, cur.r);
    const Eigen::VectorXd dx = J.colPivHouseholderQr().solve(-cur.r);
    bool accepted = false;
    double scale = 1.0;
    for (int h = 0; h < 30 && !accepted; ++h, scale *= 0.5) {
      try {
        GluingState trial = with_step(st, active, dx, scale);
        Evaluation e = evaluate(trial, active, opts, cur.surf.get());
        if (e.norm < cur.norm) {
          st = std::move(trial);
          cur = std::move(e);
          accepted = true;
        }
      } catch (const ConvergenceError&) {
      } catch (const InputError&) {
      } catch (const PoleError&) {
      } catch (const ChartError&) {
      } catch (const ContourError&) {
      }
    }
    if (!accepted) break;
    ++it;
    history.push_back(cur.norm);
    if (opts.progress) opts.progress(st.t, it, cur.norm);
  }
  if (cur.norm >= opts.accept) {
    std::ostringstream os;
    os << "Newton failed at t = " << st.t << " (residual " << cur.norm << " after " << it
       << " iterations); retry with a smaller t-step";
    throw ConvergenceError(os.str());
  }
  return it;
}

}  // namespace

SolveReport solve_at(GluingState st, const SolverOptions& opts) {
  SolveReport rep;
  rep.t_schedule.push_back(st.t);
  std::vector<double> history;
  const int w = static_cast<int>(st.window.size());
  const int pr = static_cast<int>(st.right_tail.size());
  const int pl = static_cast<int>(st.left_tail.size());
  std::vector<int> right, left, window;
  for (int i = 0; i < pr; ++i) right.push_back(w + i);
  for (int i = 0; i < pl; ++i) left.push_back(w + pr + i);
  for (int i = 0; i < w; ++i) window.push_back(i);
  int iters = 0;
  if (opts.symmetry && st.period > 0) {
    iters += newton(st, right, opts, history);
    for (int s = 0; s < w + pr + pl; ++s) {
      if (s >= w && s < w + pr) continue;
      st.slot(s) = st.slot(st.slot_of(st.K + 1 + (((st.k_of_slot(s) - st.K - 1) % pr) + pr) % pr));
    }
  } else {
    iters += newton(st, right, opts, history);
    iters += newton(st, left, opts, history);
    iters += newton(st, window, opts, history);
  }
  rep.iterations.push_back(iters);
  rep.residual_history.push_back(history);
  rep.final_residual = residuals(st, opts.gluing, opts.contour).sup_norm;
  rep.state = std::move(st);
  return rep;
}

SolveReport newton_continuation(const Configuration& cfg, double t_target, std::vector<double> schedule,
                                const SolverOptions& opts) {
  if (!(t_target >= 0.0)) throw InputError("t must be non-negative");
  GluingState st = GluingState::central(cfg, t_target);
  SolveReport rep;
  if (t_target == 0.0) {
    rep.t_schedule = {0.0};
    rep.iterations = {0};
    rep.final_residual = residuals(st, opts.gluing, opts.contour).sup_norm;
    rep.residual_history = {{rep.final_residual}};
    rep.state = std::move(st);
    return rep;
  }
  if (schedule.empty()) schedule = {t_target / 4.0, t_target / 2.0, t_target};
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0) || (i > 0 && schedule[i] <= schedule[i - 1])) {
      throw InputError("t schedule must be positive and strictly increasing");
    }
  }
  if (std::abs(schedule.back() - t_target) > 1e-15 * t_target) {
    throw InputError("t schedule must end at the target t");
  }
  for (double t : schedule) {
    st.t = t;
    auto step = solve_at(st, opts);
    rep.t_schedule.push_back(t);
    rep.iterations.push_back(step.iterations.front());
    rep.residual_history.push_back(step.residual_history.front());
    rep.final_residual = step.final_residual;
    st = std::move(step.state);
  }
  rep.state = std::move(st);
  return rep;
}

}  // namespace stacked
