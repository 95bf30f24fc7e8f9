#include "stacked/immersion.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "stacked/parallel.hpp"
#include "stacked/surface_solver.hpp"

namespace stacked {

namespace {

using EdgeRule = boost::math::quadrature::gauss<double, 6>;
using PathRule = boost::math::quadrature::gauss<double, 20>;

int parity_of(int k) { return ((k % 2) + 2) % 2; }

// g^{-1} dh and g dh per dz, from omega / dz and g_k.
std::pair<cplx, cplx> gauss_pair(int parity, double t, cplx omega, cplx gk) {
  const cplx big = t * t * gk * omega;
  const cplx small = omega / gk;
  return parity == 0 ? std::make_pair(big, small) : std::make_pair(small, big);
}

void require_outside_disks(const TorusForms& f, const GluingState& st, int k, cplx z) {
  const double inner = st.t * st.t / st.epsilon;
  for (int sign : {+1, -1}) {
    if (f.lattice().torus_distance(z, f.pole(sign)) < 4.0 * std::abs(f.params().a) * st.epsilon &&
        std::abs(1.0 / f.g(z)) <= inner) {
      std::ostringstream os;
      os << "point " << z << " of torus " << k << " lies in a removed disk";
      throw ChartError(os.str());
    }
  }
}

// Re of (Phi1, Phi2, Phi3) per dz.
Eigen::Vector3cd phi_from(int parity, double t, cplx omega, cplx gk) {
  const auto [inv_dh, g_dh] = gauss_pair(parity, t, omega, gk);
  return Eigen::Vector3cd(0.5 * (inv_dh - g_dh), 0.5 * kI * (inv_dh + g_dh), t * omega);
}

Eigen::Vector3d real_part(const Eigen::Vector3cd& v) { return Eigen::Vector3d(v[0].real(), v[1].real(), v[2].real()); }

cplx horizontal(const Eigen::Vector3d& x) { return cplx(x[0], x[1]); }

template <class F>
auto segment_integral(F&& f, cplx a, cplx b, int panels) -> decltype(f(a)) {
  const auto& x = PathRule::abscissa();
  const auto& w = PathRule::weights();
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

// Triangles between two closed rings ordered by increasing angle.
void zipper(const std::vector<int>& a, const std::vector<double>& angle_a, const std::vector<int>& b,
            const std::vector<double>& angle_b, std::vector<std::array<int, 3>>& faces) {
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  auto start_of = [](const std::vector<double>& ang) {
    int best = 0;
    double lo = 1e300;
    for (std::size_t i = 0; i < ang.size(); ++i) {
      const double v = std::remainder(ang[i], 2.0 * kPi);
      if (v < lo) {
        lo = v;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  const int sa = start_of(angle_a);
  const int sb = start_of(angle_b);
  // Unwrapped angles along each ring from its start.
  auto unwrap = [](const std::vector<double>& ang, int s) {
    const int n = static_cast<int>(ang.size());
    std::vector<double> out(n + 1);
    out[0] = std::remainder(ang[s], 2.0 * kPi);
    for (int i = 1; i <= n; ++i) {
      const double d = std::remainder(ang[(s + i) % n] - ang[(s + i - 1) % n], 2.0 * kPi);
      out[i] = out[i - 1] + d;
    }
    return out;
  };
  const auto ua = unwrap(angle_a, sa);
  const auto ub = unwrap(angle_b, sb);
  int i = 0;
  int j = 0;
  while (i < na || j < nb) {
    const bool advance_a = j >= nb || (i < na && ua[i + 1] <= ub[j + 1]);
    const int ai = a[(sa + i) % na];
    const int bj = b[(sb + j) % nb];
    if (advance_a) {
      faces.push_back({ai, a[(sa + i + 1) % na], bj});
      ++i;
    } else {
      faces.push_back({ai, b[(sb + j + 1) % nb], bj});
      ++j;
    }
  }
}

}  // namespace

std::array<cplx, 3> weierstrass_phi(const OpenedSurface& surf, const OmegaSeries& series, int k, cplx z) {
  const auto& st = surf.state();
  const auto& f = surf.forms(k);
  require_outside_disks(f, st, k, z);
  const FormBasis b = f.basis(z);
  const cplx omega = omega_from_basis(f, b, series, st.slot_of(k), st.rho);
  const auto phi = phi_from(parity_of(k), st.t, omega, b.g);
  return {phi[0], phi[1], phi[2]};
}

cplx layer_base_point(const TorusParams& p) { return cell_origin(p) + kI * (0.0061 * p.tau.imag()); }

LayerField integrate_layer(const OpenedSurface& surf, const OmegaSeries& series, int k, const MeshOptions& opts) {
  const auto& st = surf.state();
  const auto& f = surf.forms(k);
  const auto& p = f.params();
  const int n = opts.grid_res;
  if (n < 4) throw InputError("integrate_layer: grid_res must be at least 4");
  const int parity = parity_of(k);
  const int slot = st.slot_of(k);
  const double cut = opts.cut_factor * st.epsilon;
  const int side = n + 1;
  auto id = [side](int i, int j) { return i + side * j; };

  LayerField L;
  L.k = k;
  L.n = n;
  L.origin = layer_base_point(p);
  L.z.resize(side * side);
  L.kept.assign(side * side, 1);
  const double near = 4.0 * std::abs(p.a) * st.epsilon;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const cplx z = L.origin + static_cast<double>(i) / n + (static_cast<double>(j) / n) * p.tau;
      L.z[id(i, j)] = z;
      for (int which = 0; which < 2; ++which) {
        const int sign = which == 0 ? +1 : -1;
        if (f.lattice().torus_distance(z, f.pole(sign)) < near && std::abs(1.0 / f.g(z)) < cut) {
          L.kept[id(i, j)] = 0;
          if (i == 0 || j == 0 || i == n || j == n) {
            throw ChartError("integrate_layer: a chart disk meets the grid cell boundary");
          }
        }
      }
    }
  }

  // Edges between kept neighbours: right, up and the quad diagonal.
  struct Edge {
    int a;
    int b;
    Eigen::Vector3d dX;
  };
  std::vector<Edge> edges;
  std::map<std::pair<int, int>, int> edge_index;
  const auto& gx = EdgeRule::abscissa();
  const auto& gw = EdgeRule::weights();
  auto phi_at = [&](cplx z) {
    const FormBasis b = f.basis(z);
    return phi_from(parity, st.t, omega_from_basis(f, b, series, slot, st.rho), b.g);
  };
  const cplx flat_factor = parity == 0 ? cplx(1.0) : cplx(-1.0);
  auto add_edge = [&](int a, int b) {
    if (!L.kept[a] || !L.kept[b]) return;
    const cplx za = L.z[a];
    const cplx d = L.z[b] - za;
    Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
    for (std::size_t q = 0; q < gx.size(); ++q) {
      const double u = gx[q];
      if (u == 0.0) {
        acc += gw[q] * phi_at(za + 0.5 * d);
      } else {
        acc += gw[q] * (phi_at(za + 0.5 * (1.0 + u) * d) + phi_at(za + 0.5 * (1.0 - u) * d));
      }
    }
    const Eigen::Vector3d dX = real_part(acc * (0.5 * d));
    const cplx flat = parity == 0 ? d : flat_factor * std::conj(d);
    L.max_flatness_error = std::max(L.max_flatness_error, std::abs(horizontal(dX) - flat) / std::abs(d));
    edge_index[{a, b}] = static_cast<int>(edges.size());
    edges.push_back({a, b, dX});
  };
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      if (i < n) add_edge(id(i, j), id(i + 1, j));
      if (j < n) add_edge(id(i, j), id(i, j + 1));
      if (i < n && j < n) add_edge(id(i, j), id(i + 1, j + 1));
    }
  }
  auto signed_dX = [&](int a, int b) -> Eigen::Vector3d {
    auto it = edge_index.find({a, b});
    if (it != edge_index.end()) return edges[it->second].dX;
    return -edges[edge_index.at({b, a})].dX;
  };

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v11 = id(i + 1, j + 1), v01 = id(i, j + 1);
      for (const std::array<int, 3>& tri : {std::array<int, 3>{v00, v10, v11}, std::array<int, 3>{v00, v11, v01}}) {
        if (!L.kept[tri[0]] || !L.kept[tri[1]] || !L.kept[tri[2]]) continue;
        L.faces.push_back(tri);
        const Eigen::Vector3d loop = signed_dX(tri[0], tri[1]) + signed_dX(tri[1], tri[2]) + signed_dX(tri[2], tri[0]);
        L.max_loop_residual = std::max(L.max_loop_residual, loop.norm());
      }
    }
  }
  if (L.max_loop_residual > opts.loop_tol) {
    std::ostringstream os;
    os << "integrate_layer: contractible loop residual " << L.max_loop_residual << " on layer " << k;
    throw ConvergenceError(os.str());
  }

  // Spanning tree from the base point.
  std::vector<std::vector<int>> adj(side * side);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[edges[e].a].push_back(static_cast<int>(e));
    adj[edges[e].b].push_back(static_cast<int>(e));
  }
  L.X.assign(side * side, Eigen::Vector3d::Zero());
  std::vector<char> seen(side * side, 0);
  std::queue<int> bfs;
  bfs.push(0);
  seen[0] = 1;
  while (!bfs.empty()) {
    const int v = bfs.front();
    bfs.pop();
    for (int e : adj[v]) {
      const auto& E = edges[e];
      const int w = E.a == v ? E.b : E.a;
      if (seen[w]) continue;
      seen[w] = 1;
      L.X[w] = L.X[v] + (E.a == v ? E.dX : Eigen::Vector3d(-E.dX));
      bfs.push(w);
    }
  }
  for (int v = 0; v < side * side; ++v) {
    if (L.kept[v] && !seen[v]) throw ContourError("integrate_layer: layer grid is disconnected");
  }

  const Eigen::Vector3d alpha(parity == 0 ? 1.0 : -1.0, 0.0, 0.0);
  const Eigen::Vector3d beta(st.tau0.real(), st.tau0.imag(), 0.0);
  for (int j = 0; j <= n; ++j) {
    if (L.kept[id(0, j)] && L.kept[id(n, j)]) {
      L.alpha_period_error = std::max(L.alpha_period_error, (L.X[id(n, j)] - L.X[id(0, j)] - alpha).norm());
    }
  }
  for (int i = 0; i <= n; ++i) {
    if (L.kept[id(i, 0)] && L.kept[id(i, n)]) {
      L.beta_period_error = std::max(L.beta_period_error, (L.X[id(i, n)] - L.X[id(i, 0)] - beta).norm());
    }
  }

  // Hole boundaries: face edges used once, away from the cell border.
  std::map<std::pair<int, int>, int> use;
  for (const auto& tri : L.faces) {
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e], b = tri[(e + 1) % 3];
      ++use[{std::min(a, b), std::max(a, b)}];
    }
  }
  auto on_border = [&](int v) {
    const int i = v % side, j = v / side;
    return i == 0 || j == 0 || i == n || j == n;
  };
  std::map<int, std::vector<int>> bnd;
  for (const auto& [e, c] : use) {
    if (c != 1 || (on_border(e.first) && on_border(e.second))) continue;
    bnd[e.first].push_back(e.second);
    bnd[e.second].push_back(e.first);
  }
  std::set<std::pair<int, int>> used_edges;
  std::vector<std::vector<int>> loops;
  for (const auto& [start, nb] : bnd) {
    bool fresh = true;
    for (int w : nb) fresh = fresh && !used_edges.count({std::min(start, w), std::max(start, w)});
    if (!fresh) continue;
    std::vector<int> loop{start};
    int prev = -1;
    int cur = start;
    for (std::size_t guard = 0; guard <= bnd.size(); ++guard) {
      int next = -1;
      for (int w : bnd.at(cur)) {
        if (w != prev && !used_edges.count({std::min(cur, w), std::max(cur, w)})) {
          next = w;
          break;
        }
      }
      if (next < 0) break;
      used_edges.insert({std::min(cur, next), std::max(cur, next)});
      if (next == start) break;
      loop.push_back(next);
      prev = cur;
      cur = next;
    }
    loops.push_back(std::move(loop));
  }
  if (loops.size() != 2) {
    std::ostringstream os;
    os << "integrate_layer: expected two hole boundaries on layer " << k << ", found " << loops.size();
    throw ContourError(os.str());
  }
  for (auto& loop : loops) {
    const cplx z0 = L.z[loop.front()];
    const int which = f.lattice().torus_distance(z0, f.pole(+1)) < f.lattice().torus_distance(z0, f.pole(-1)) ? 0 : 1;
    std::vector<cplx> s(loop.size());
    for (std::size_t i = 0; i < loop.size(); ++i) s[i] = 1.0 / f.g(L.z[loop[i]]);
    double turn = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) turn += std::arg(s[(i + 1) % s.size()] / s[i]);
    if (turn < 0.0) {
      std::reverse(loop.begin(), loop.end());
      std::reverse(s.begin(), s.end());
    }
    if (!L.loops[which].empty()) throw ContourError("integrate_layer: both boundaries surround the same pole");
    L.loops[which] = loop;
    L.loop_chart[which] = s;
  }
  return L;
}

NeckPrimitive::NeckPrimitive(const OpenedSurface& surf, const OmegaSeries& series, int k, int terms)
    : tab_(laurent_coeffs(surf, series, k, terms)), t_(surf.state().t), parity_(parity_of(k)) {
  // Coefficients come from circles of radius epsilon; terms below round-off there carry no information.
  const double eps = surf.state().epsilon;
  double scale = std::abs(tab_.residue);
  for (int n = 1; n <= terms; ++n) {
    const double w = std::pow(eps, n);
    scale = std::max({scale, std::abs(tab_.plus[n - 1]) * w, std::abs(tab_.minus[n - 1]) * w});
  }
  const double floor = 1e-14 * scale;
  auto significant = [&](const std::vector<cplx>& c) {
    int last = 0;
    for (int n = 1; n <= terms; ++n) {
      if (std::abs(c[n - 1]) * std::pow(eps, n) > floor) last = n;
    }
    return last;
  };
  plus_terms_ = significant(tab_.plus);
  minus_terms_ = significant(tab_.minus);
}

std::array<cplx, 3> NeckPrimitive::primitives(cplx s) const {
  const cplx log_s = std::log(s);
  const cplx R = tab_.residue;
  cplx F_omega = R * log_s;
  cplx F_s_omega = R * s;
  cplx F_omega_s = -R / s;
  cplx sn = s;  // s^n
  for (int i = 0; i < plus_terms_; ++i) {
    const double n = static_cast<double>(i + 1);
    const cplx c = tab_.plus[i];
    F_omega += c * sn / n;
    F_s_omega += c * sn * s / (n + 1.0);
    F_omega_s += i == 0 ? c * log_s : c * (sn / s) / (n - 1.0);
    sn *= s;
  }
  const cplx q = t_ * t_ / s;
  cplx qn = q;  // t^{2n} s^{-n}
  for (int i = 0; i < minus_terms_; ++i) {
    const double n = static_cast<double>(i + 1);
    const cplx c = tab_.minus[i];
    F_omega -= c * qn / n;
    F_s_omega += i == 0 ? c * t_ * t_ * log_s : c * qn * s / (1.0 - n);
    F_omega_s -= c * qn / s / (n + 1.0);
    qn *= q;
  }
  return {F_omega, F_s_omega, F_omega_s};
}

Eigen::Vector3d NeckPrimitive::displacement(cplx s0, cplx s) const {
  const auto a = primitives(s0);
  const auto b = primitives(s);
  const cplx d_omega = b[0] - a[0];
  const cplx d_s_omega = b[1] - a[1];
  const cplx d_omega_s = b[2] - a[2];
  // Even layers: g = s / t, so g^{-1} dh = t^2 omega / s and g dh = s omega; odd layers swap them.
  const cplx inv_dh = parity_ == 0 ? t_ * t_ * d_omega_s : d_s_omega;
  const cplx g_dh = parity_ == 0 ? d_s_omega : t_ * t_ * d_omega_s;
  const cplx X = 0.5 * std::conj(inv_dh) - 0.5 * g_dh;
  return Eigen::Vector3d(X.real(), X.imag(), (t_ * d_omega).real());
}

double NeckPrimitive::tail_estimate(double r_inner, double r_outer) const {
  // First dropped term of each series on the annulus r_inner <= |s| <= r_outer.
  const int N = static_cast<int>(tab_.plus.size());
  if (N == 0) return 0.0;
  const int np = std::min(plus_terms_ + 1, N);
  const int nm = std::min(minus_terms_ + 1, N);
  const double plus = std::abs(tab_.plus[np - 1]) * std::pow(r_outer, np - 1);
  const double minus = std::abs(tab_.minus[nm - 1]) * std::pow(t_ * t_ / r_inner, nm) / r_inner;
  return std::max(plus, minus) * std::max(r_outer, 1.0);
}

NeckField integrate_neck(const OpenedSurface& surf, const OmegaSeries& series, int k, const LayerField& lower,
                         const std::vector<Eigen::Vector3d>& lower_X, const LayerField& upper,
                         const MeshOptions& opts) {
  if (lower.k != k || upper.k != k + 1) throw InputError("integrate_neck: layers do not bound this neck");
  const double t = surf.state().t;
  const NeckPrimitive prim(surf, series, k, opts.laurent_terms);
  NeckField N;
  N.k = k;
  const auto& outer = lower.loops[0];
  const auto& outer_s = lower.loop_chart[0];
  N.n_outer = static_cast<int>(outer.size());
  // Upper minus chart s^- maps to z_k^+ = t^2 / s^-, which reverses the angular order.
  std::vector<cplx> inner_s(upper.loop_chart[1].rbegin(), upper.loop_chart[1].rend());
  for (cplx& s : inner_s) s = t * t / s;
  N.n_inner = static_cast<int>(inner_s.size());
  N.s = outer_s;
  N.s.insert(N.s.end(), inner_s.begin(), inner_s.end());

  double r_out_min = 1e300, r_out_max = 0.0, r_in_max = 0.0, r_in_min = 1e300;
  for (cplx s : outer_s) {
    r_out_min = std::min(r_out_min, std::abs(s));
    r_out_max = std::max(r_out_max, std::abs(s));
  }
  for (cplx s : inner_s) {
    r_in_max = std::max(r_in_max, std::abs(s));
    r_in_min = std::min(r_in_min, std::abs(s));
  }
  N.tail_estimate = prim.tail_estimate(r_in_min, r_out_max);
  if (N.tail_estimate > opts.tail_tol) {
    std::ostringstream os;
    os << "integrate_neck: Laurent tail estimate " << N.tail_estimate << " on neck " << k;
    throw ConvergenceError(os.str());
  }

  const int R = std::max(opts.rings, 2);
  const int M = std::max(opts.spokes, 3);
  const double r_top = 0.95 * r_out_min;
  const double r_bottom = 1.05 * r_in_max;
  if (!(r_top > t && r_bottom < t)) throw InputError("integrate_neck: chart cut does not enclose the waist");
  std::vector<double> radii;
  for (int m = 0; m < R; ++m) radii.push_back(std::exp(std::log(r_top) + m * (std::log(t) - std::log(r_top)) / (R - 1)));
  for (int m = 1; m < R; ++m) radii.push_back(std::exp(std::log(t) + m * (std::log(r_bottom) - std::log(t)) / (R - 1)));
  const int first_ring = static_cast<int>(N.s.size());
  std::vector<double> spoke_angle(M);
  for (int j = 0; j < M; ++j) spoke_angle[j] = 2.0 * kPi * (j + 0.5) / M;
  for (double r : radii) {
    for (int j = 0; j < M; ++j) N.s.push_back(std::polar(r, spoke_angle[j]));
  }
  auto ring = [&](int m) {
    std::vector<int> idx(M);
    for (int j = 0; j < M; ++j) idx[j] = first_ring + m * M + j;
    return idx;
  };
  N.waist = ring(R - 1);

  std::vector<int> outer_local(N.n_outer), inner_local(N.n_inner);
  std::vector<double> outer_angle(N.n_outer), inner_angle(N.n_inner);
  for (int i = 0; i < N.n_outer; ++i) {
    outer_local[i] = i;
    outer_angle[i] = std::arg(outer_s[i]);
  }
  for (int i = 0; i < N.n_inner; ++i) {
    inner_local[i] = N.n_outer + i;
    inner_angle[i] = std::arg(inner_s[i]);
  }
  zipper(outer_local, outer_angle, ring(0), spoke_angle, N.faces);
  const int rings = static_cast<int>(radii.size());
  for (int m = 0; m + 1 < rings; ++m) {
    const auto a = ring(m);
    const auto b = ring(m + 1);
    for (int j = 0; j < M; ++j) {
      const int j1 = (j + 1) % M;
      N.faces.push_back({a[j], a[j1], b[j1]});
      N.faces.push_back({a[j], b[j1], b[j]});
    }
  }
  zipper(ring(rings - 1), spoke_angle, inner_local, inner_angle, N.faces);

  N.anchor = 0;
  for (int i = 1; i < N.n_outer; ++i) {
    if (std::abs(outer_s[i]) < std::abs(outer_s[N.anchor])) N.anchor = i;
  }
  const cplx s0 = outer_s[N.anchor];
  const Eigen::Vector3d X0 = lower_X[outer[N.anchor]];
  N.X.resize(N.s.size());
  for (std::size_t v = 0; v < N.s.size(); ++v) N.X[v] = X0 + prim.displacement(s0, N.s[v]);
  for (int i = 0; i < N.n_outer; ++i) {
    N.outer_stitch_error = std::max(N.outer_stitch_error, (N.X[i] - lower_X[outer[i]]).norm());
  }
  return N;
}

std::vector<SpacingRow> spacing_report(const OpenedSurface& surf, const OmegaSeries& series, int k_first, int k_last,
                                       int laurent_terms) {
  if (k_last < k_first) throw InputError("spacing_report: empty layer range");
  const auto& st = surf.state();
  const double t = st.t;
  auto omega_segment = [&](int k, cplx a, cplx b) {
    return segment_integral([&](cplx z) { return omega_eval(surf, series, k, z); }, a, b, 8);
  };
  auto nearest = [](const Lattice& lat, cplx z, cplx to) { return to + lat.centered(z - to); };
  std::vector<SpacingRow> rows;
  rows.push_back({k_first, 0.0, 0.0, 0.0});
  for (int k = k_first + 1; k <= k_last; ++k) {
    const auto& lo = surf.forms(k - 1);
    const auto& hi = surf.forms(k);
    const cplx O_lo = layer_base_point(lo.params());
    const cplx O_hi = layer_base_point(hi.params());
    const cplx P_lo = nearest(lo.lattice(), lo.chart_inverse(+1, st.epsilon), O_lo);
    const cplx P_hi = nearest(hi.lattice(), hi.chart_inverse(-1, st.epsilon), O_hi);
    const NeckPrimitive prim(surf, series, k - 1, laurent_terms);
    const double neck = prim.displacement(st.epsilon, t * t / st.epsilon)[2];
    const double spacing =
        (t * (omega_segment(k - 1, O_lo, P_lo) + omega_segment(k, P_hi, O_hi))).real() + neck;
    SpacingRow row;
    row.k = k;
    row.spacing = spacing;
    row.height = rows.back().height + spacing;
    row.ratio = t > 0.0 ? spacing / (-2.0 * t * std::log(t)) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

Eigen::Vector3d SurfaceMesh::reduced(int v) const {
  const Eigen::Vector3d& x = vertices[v];
  double y = x[1] / period_beta.imag();
  double xr = x[0] - y * period_beta.real();
  y -= std::floor(y);
  xr -= std::floor(xr);
  const cplx h = xr + y * period_beta;
  return Eigen::Vector3d(h.real(), h.imag(), x[2]);
}

SurfaceMesh build_mesh(const OpenedSurface& surf, const OmegaSeries& series, const MeshOptions& opts) {
  if (opts.k_last < opts.k_first) throw InputError("build_mesh: empty layer range");
  const auto& st = surf.state();
  const int count = opts.k_last - opts.k_first + 1;
  std::vector<LayerField> layers(count);
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    layers[i] = integrate_layer(surf, series, opts.k_first + static_cast<int>(i), opts);
  });

  SurfaceMesh mesh;
  mesh.t = st.t;
  mesh.period_beta = st.tau0;
  std::vector<std::vector<int>> global(count);
  std::vector<std::vector<Eigen::Vector3d>> absolute(count);
  auto add_layer = [&](int i, const Eigen::Vector3d& offset) {
    const auto& L = layers[i];
    absolute[i].resize(L.X.size());
    global[i].assign(L.X.size(), -1);
    for (std::size_t v = 0; v < L.X.size(); ++v) {
      absolute[i][v] = L.X[v] + offset;
      if (!L.kept[v]) continue;
      global[i][v] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(absolute[i][v]);
      mesh.tags.push_back({VertexTag::Layer, L.k, 0, static_cast<int>(v)});
    }
    for (const auto& f : L.faces) mesh.faces.push_back({global[i][f[0]], global[i][f[1]], global[i][f[2]]});
    mesh.frames.push_back({L.k, L.origin, absolute[i][0]});
  };
  add_layer(0, Eigen::Vector3d::Zero());
  std::vector<std::vector<int>> waists;
  for (int i = 0; i + 1 < count; ++i) {
    const auto& lower = layers[i];
    const auto& upper = layers[i + 1];
    const NeckField N = integrate_neck(surf, series, lower.k, lower, absolute[i], upper, opts);
    const auto& inner = upper.loops[1];
    const int ni = N.n_inner;
    // Inner loop local index n_outer + m holds upper loop vertex inner[ni - 1 - m].
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();
    for (int m = 0; m < ni; ++m) offset += N.X[N.n_outer + m] - upper.X[inner[ni - 1 - m]];
    offset /= ni;
    double inner_error = 0.0;
    for (int m = 0; m < ni; ++m) {
      inner_error = std::max(inner_error, (N.X[N.n_outer + m] - upper.X[inner[ni - 1 - m]] - offset).norm());
    }
    add_layer(i + 1, offset);
    std::vector<int> map(N.s.size(), -1);
    for (int m = 0; m < N.n_outer; ++m) map[m] = global[i][lower.loops[0][m]];
    for (int m = 0; m < ni; ++m) map[N.n_outer + m] = global[i + 1][inner[ni - 1 - m]];
    const int first_ring = N.n_outer + ni;
    const int waist_begin = N.waist.front();
    const int waist_end = N.waist.back();
    for (int v = first_ring; v < static_cast<int>(N.s.size()); ++v) {
      map[v] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(N.X[v]);
      const int chart = v < waist_begin ? +1 : (v <= waist_end ? 0 : -1);
      mesh.tags.push_back({VertexTag::Neck, N.k, chart, v});
    }
    for (const auto& f : N.faces) mesh.faces.push_back({map[f[0]], map[f[1]], map[f[2]]});
    NeckSummary ns;
    ns.k = N.k;
    for (int w : N.waist) {
      ns.center += horizontal(N.X[w]);
      ns.waist_height += N.X[w][2];
    }
    ns.center /= static_cast<double>(N.waist.size());
    ns.waist_height /= static_cast<double>(N.waist.size());
    ns.stitch_error = std::max(N.outer_stitch_error, inner_error);
    mesh.necks.push_back(ns);
  }

  Eigen::Vector3d shift(0.0, 0.0, -mesh.frames.front().position[2]);
  for (const auto& ns : mesh.necks) {
    if (ns.k == 0) {
      shift[0] = -ns.center.real();
      shift[1] = -ns.center.imag();
    }
  }
  for (auto& v : mesh.vertices) v += shift;
  for (auto& fr : mesh.frames) fr.position += shift;
  for (auto& ns : mesh.necks) {
    ns.center += cplx(shift[0], shift[1]);
    ns.waist_height += shift[2];
  }
  for (int i = 0; i < count; ++i) {
    const auto& L = layers[i];
    LayerSummary ls;
    ls.k = L.k;
    ls.min_height = 1e300;
    ls.max_height = -1e300;
    for (std::size_t v = 0; v < L.X.size(); ++v) {
      if (!L.kept[v]) continue;
      const double h = mesh.vertices[global[i][v]][2];
      ls.min_height = std::min(ls.min_height, h);
      ls.max_height = std::max(ls.max_height, h);
    }
    ls.max_loop_residual = L.max_loop_residual;
    ls.alpha_period_error = L.alpha_period_error;
    ls.beta_period_error = L.beta_period_error;
    mesh.layers.push_back(ls);
  }
  return mesh;
}

}  // namespace stacked
