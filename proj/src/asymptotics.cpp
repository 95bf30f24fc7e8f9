#include "stacked/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "stacked/parallel.hpp"

namespace stacked {

namespace {

int pos_mod(int a, int m) { return ((a % m) + m) % m; }

constexpr double kNoiseFloor = 1e-14;

struct LayerVertices {
  std::map<int, std::map<int, int>> by_layer;  // k -> grid index -> vertex
};

LayerVertices layer_vertices(const SurfaceMesh& mesh) {
  LayerVertices out;
  for (std::size_t v = 0; v < mesh.tags.size(); ++v) {
    const auto& tag = mesh.tags[v];
    if (tag.kind == VertexTag::Layer) out.by_layer[tag.k][tag.index] = static_cast<int>(v);
  }
  return out;
}

const LayerFrame& frame_of(const SurfaceMesh& mesh, int k) {
  for (const auto& f : mesh.frames) {
    if (f.k == k) return f;
  }
  std::ostringstream os;
  os << "mesh has no layer " << k;
  throw InputError(os.str());
}

}  // namespace

Configuration periodic_extension(const Configuration& cfg, TailSide side) {
  const auto& tail = side == TailSide::Right ? cfg.right_tail() : cfg.left_tail();
  const int P = static_cast<int>(tail.size());
  const int K = cfg.K();
  auto rule = [&](int k) {
    return side == TailSide::Right ? tail[pos_mod(k - K - 1, P)] : tail[pos_mod(k + K + 1, P)];
  };
  return Configuration::from_rule(cfg.tau(), K, rule, P, P);
}

PairSolution pair_solve(const Configuration& cfg, const Configuration& cfg_defect, double t, const PairOptions& opts) {
  int period = 0;
  if (!cfg.is_periodic(&period)) throw InputError("pair_solve: reference configuration is not periodic");
  if (std::abs(cfg.tau() - cfg_defect.tau()) > 1e-14) throw InputError("pair_solve: configurations differ in tau");
  const Configuration defect = cfg_defect.K() == cfg.K() ? cfg_defect : cfg_defect.rewindowed(cfg.K());
  const int reach = cfg.K() + 2 * std::max<int>(period, static_cast<int>(defect.right_tail().size()));
  for (int k = 0; k <= reach; ++k) {
    if (cfg.lattice().torus_distance(cfg.q(k), defect.q(k)) > 1e-12) {
      std::ostringstream os;
      os << "pair_solve: configurations differ at k = " << k << " >= 0";
      throw InputError(os.str());
    }
  }
  for (const Configuration* c : {&cfg, &defect}) {
    if (!balance_report(*c).balanced) throw InputError("pair_solve: configuration is not balanced");
    if (!nondegeneracy_check(*c).nondegenerate) throw InputError("pair_solve: configuration is degenerate");
  }

  SolveReport reports[2];
  const Configuration* jobs[2] = {&cfg, &defect};
  parallel_for(2, [&](std::size_t i) { reports[i] = newton_continuation(*jobs[i], t, opts.schedule, opts.solver); });

  PairSolution out;
  out.periodic = std::move(reports[0].state);
  out.defect = std::move(reports[1].state);
  out.period = period % 2 == 0 ? period : 2 * period;
  out.periodic_residual = reports[0].final_residual;
  out.defect_residual = reports[1].final_residual;
  return out;
}

double parameter_distance(const TorusParams& x, const TorusParams& y) {
  const Lattice lat(x.tau);
  return std::max({std::abs(x.a - y.a), std::abs(x.b - y.b), lat.torus_distance(x.v, y.v), std::abs(x.tau - y.tau)});
}

double form_distance(const OpenedSurface& a, const OmegaSeries& sa, const OpenedSurface& b, const OmegaSeries& sb,
                     int k, const DecayOptions& opts) {
  const TorusParams& pa = a.state().at(k);
  const TorusParams& pb = b.state().at(k);
  const Lattice la(pa.tau);
  const Lattice lb(pb.tau);
  const double ra = opts.disk_factor * std::abs(pa.a) * a.state().epsilon;
  const double rb = opts.disk_factor * std::abs(pb.a) * b.state().epsilon;
  double worst = 0.0;
  for (int i = 0; i < opts.grid; ++i) {
    for (int j = 0; j < opts.grid; ++j) {
      const double x = (i + 0.5) / opts.grid;
      const double y = (j + 0.5) / opts.grid;
      const cplx za = x + y * pa.tau;
      const cplx zb = x + y * pb.tau;
      if (la.torus_distance(za, 0.0) < ra || la.torus_distance(za, pa.v) < ra) continue;
      if (lb.torus_distance(zb, 0.0) < rb || lb.torus_distance(zb, pb.v) < rb) continue;
      const cplx wa = omega_eval(a, sa, k, za);
      const cplx wb = omega_eval(b, sb, k, zb);
      worst = std::max({worst, std::abs(wa - wb), std::abs(wa * pa.tau - wb * pb.tau)});
    }
  }
  return worst;
}

LogLinearFit log_linear_fit(const std::vector<int>& k, const std::vector<double>& values, int first, int last) {
  std::vector<double> xs;
  std::vector<double> ys;
  bool above_floor = false;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] < first || k[i] > last) continue;
    above_floor = above_floor || values[i] >= kNoiseFloor;
    if (values[i] <= 0.0) continue;
    xs.push_back(k[i]);
    ys.push_back(std::log(values[i]));
  }
  if (!above_floor || xs.size() < 2) {
    std::ostringstream os;
    os << "decay fit over k in [" << first << ", " << last << "]: all differences below " << kNoiseFloor;
    throw DegenerateFitError(os.str());
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  LogLinearFit fit;
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.intercept = my - slope * mx;
  fit.points = static_cast<int>(xs.size());
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

DecayReport decay_fit(const PairSolution& pair, const DecayOptions& opts) {
  const int K = pair.defect.K;
  if (K < 6) throw InputError("decay_fit: window half-width K must be at least 6");
  if (pair.periodic.K != K) throw InputError("decay_fit: states have different windows");
  const OpenedSurface sa(pair.periodic);
  const OpenedSurface sb(pair.defect);
  const OmegaSeries wa = fix_omega(sa);
  const OmegaSeries wb = fix_omega(sb);

  DecayReport rep;
  for (int k = -K; k <= K; ++k) {
    rep.k.push_back(k);
    rep.d.push_back(parameter_distance(pair.periodic.at(k), pair.defect.at(k)));
    rep.w.push_back(form_distance(sa, wa, sb, wb, k, opts));
  }
  rep.fit_first = 1;
  rep.fit_last = K - 2;
  const auto fit = log_linear_fit(rep.k, rep.d, rep.fit_first, rep.fit_last);
  rep.rate = fit.rate;
  rep.r_squared = fit.r_squared;
  try {
    const auto wfit = log_linear_fit(rep.k, rep.w, rep.fit_first, rep.fit_last);
    rep.w_rate = wfit.rate;
    rep.w_r_squared = wfit.r_squared;
  } catch (const DegenerateFitError&) {
    rep.w_rate = std::numeric_limits<double>::quiet_NaN();
    rep.w_r_squared = std::numeric_limits<double>::quiet_NaN();
  }
  rep.monotone = true;
  for (int k = rep.fit_first + 1; k <= rep.fit_last; ++k) {
    rep.monotone = rep.monotone && rep.d[k + K] < rep.d[k - 1 + K];
  }
  return rep;
}

Eigen::Vector3d period_vector(const SurfaceMesh& periodic, int period) {
  for (const auto& f : periodic.frames) {
    for (const auto& g : periodic.frames) {
      if (g.k == f.k + period) return g.position - f.position;
    }
  }
  throw InputError("period_vector: mesh spans less than one period");
}

double tpms_comparison(const SurfaceMesh& periodic, const SurfaceMesh& defect, int period, int ell, int k_first,
                       int k_last) {
  int top = std::numeric_limits<int>::min();
  for (const auto& f : periodic.frames) {
    for (const auto& g : defect.frames) {
      if (f.k == g.k) top = std::max(top, f.k);
    }
  }
  if (top == std::numeric_limits<int>::min()) throw InputError("tpms_comparison: meshes share no layer");
  Eigen::Vector3d shift = frame_of(periodic, top).position - frame_of(defect, top).position;
  if (ell != 0) shift -= ell * period_vector(periodic, period);
  const Lattice lat(periodic.period_beta);
  auto distance = [&](const Eigen::Vector3d& p, const Eigen::Vector3d& q) {
    const Eigen::Vector3d d = q + shift - p;
    const double h = lat.torus_distance(cplx(d[0], d[1]), 0.0);
    return std::hypot(h, d[2]);
  };
  const auto pv = layer_vertices(periodic);
  const auto dv = layer_vertices(defect);
  double worst = 0.0;
  for (int k = k_first; k <= k_last; ++k) {
    const int kd = k + ell * period;
    const auto ip = pv.by_layer.find(k);
    const auto id = dv.by_layer.find(kd);
    if (ip == pv.by_layer.end() || id == dv.by_layer.end()) {
      std::ostringstream os;
      os << "tpms_comparison: layers " << k << " / " << kd << " missing from the meshes";
      throw InputError(os.str());
    }
    const bool same_grid = std::abs(frame_of(periodic, k).base_point - frame_of(defect, kd).base_point) < 1e-6;
    if (same_grid) {
      for (const auto& [index, v] : ip->second) {
        const auto match = id->second.find(index);
        if (match == id->second.end()) continue;
        worst = std::max(worst, distance(periodic.vertices[v], defect.vertices[match->second]));
      }
      continue;
    }
    auto one_sided = [&](const std::map<int, int>& from, const SurfaceMesh& mf, const std::map<int, int>& to,
                         const SurfaceMesh& mt, bool from_periodic) {
      double sup = 0.0;
      for (const auto& [i, v] : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [j, w] : to) {
          const double d = from_periodic ? distance(mf.vertices[v], mt.vertices[w])
                                         : distance(mt.vertices[w], mf.vertices[v]);
          best = std::min(best, d);
        }
        sup = std::max(sup, best);
      }
      return sup;
    };
    worst = std::max({worst, one_sided(ip->second, periodic, id->second, defect, true),
                      one_sided(id->second, defect, ip->second, periodic, false)});
  }
  return worst;
}

std::vector<double> tpms_distances(const PairSolution& pair, int ell_max, const MeshOptions& mesh) {
  if (ell_max < 0) throw InputError("tpms_distances: ell_max must be non-negative");
  const int N = pair.period;
  MeshOptions mo = mesh;
  mo.k_first = -N;
  mo.k_last = -1 + ell_max * N;
  SurfaceMesh meshes[2];
  const GluingState* states[2] = {&pair.periodic, &pair.defect};
  for (int i = 0; i < 2; ++i) {
    const OpenedSurface surf(*states[i]);
    meshes[i] = build_mesh(surf, fix_omega(surf), mo);
  }
  std::vector<double> out;
  for (int ell = 0; ell <= ell_max; ++ell) out.push_back(tpms_comparison(meshes[0], meshes[1], N, ell, -N, -1));
  return out;
}

}  // namespace stacked
