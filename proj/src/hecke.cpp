#include "stacked/hecke.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

#include "stacked/parallel.hpp"

namespace stacked {

cplx hecke_G(cplx z, const Lattice& lat) {
  const cplx w = lat.centered(z);
  return zeta(w, lat) - xi_linear(w, lat);
}

cplx hecke_G(const TorusPoint& q, const Lattice& lat) { return hecke_G(q.z, lat); }

std::pair<cplx, cplx> hecke_wirtinger(cplx z, const Lattice& lat) {
  const double s = kPi / lat.tau().imag();
  const cplx wp = wp_eval(lat.centered(z), lat, 0);
  return {-wp - lat.eta1() + s, cplx(-s, 0.0)};
}

HeckeJacobian hecke_jacobian(cplx z, const Lattice& lat) {
  const auto [A, B] = hecke_wirtinger(z, lat);
  const cplx gx = A + B;
  const cplx gy = kI * (A - B);
  HeckeJacobian J;
  J.m << gx.real(), gy.real(), gx.imag(), gy.imag();
  J.det = std::norm(A) - std::norm(B);
  return J;
}

namespace {

std::optional<cplx> newton_root(const Lattice& lat, cplx C, cplx z, const HeckeOptions& opts) {
  for (int it = 0; it < opts.max_newton; ++it) {
    const cplx r = hecke_G(z, lat) - C;
    const auto J = hecke_jacobian(z, lat);
    if (std::abs(J.det) < 1e-300) return std::nullopt;
    const Eigen::Vector2d step = J.m.partialPivLu().solve(Eigen::Vector2d(r.real(), r.imag()));
    double scale = 1.0;
    const double len = step.norm();
    if (len > 0.25) scale = 0.25 / len;
    z = lat.centered(z - scale * cplx(step(0), step(1)));
    if (lat.lattice_distance(z) < 10.0 * lat.pole_radius()) return std::nullopt;
    if (len * scale < 1e-15 * (1.0 + std::abs(z))) break;
  }
  if (std::abs(hecke_G(z, lat) - C) < opts.root_tol) return z;
  return std::nullopt;
}

}  // namespace

SolutionSet solve_G_equals_C(const Lattice& lat, cplx C, const HeckeOptions& opts) {
  const int n = opts.grid;
  std::vector<std::optional<cplx>> found(static_cast<std::size_t>(n) * n);
  parallel_for(found.size(), [&](std::size_t idx) {
    const int i = static_cast<int>(idx) / n;
    const int j = static_cast<int>(idx) % n;
    const cplx seed = lat.from_coords((i + 0.5) / n, (j + 0.5) / n);
    if (lat.lattice_distance(seed) < lat.pole_radius()) return;
    try {
      found[idx] = newton_root(lat, C, seed, opts);
    } catch (const PoleError&) {
      found[idx] = std::nullopt;
    }
  });

  SolutionSet out;
  out.C = C;
  for (std::size_t idx = 0; idx < found.size(); ++idx) {
    if (!found[idx]) {
      out.diverged.emplace_back(static_cast<int>(idx) / n, static_cast<int>(idx) % n);
      continue;
    }
    const cplx z = *found[idx];
    bool dup = false;
    for (const auto& r : out.roots) {
      if (lat.torus_distance(r.z, z) < opts.dedup_radius) {
        dup = true;
        break;
      }
    }
    if (!dup) out.roots.push_back(reduce(z, lat));
  }
  for (const auto& r : out.roots) out.jacobians.push_back(hecke_jacobian(r.z, lat));
  out.count = static_cast<int>(out.roots.size());
  return out;
}

std::optional<TorusPoint> antiholomorphic_iterate(const Lattice& lat, cplx C, cplx z0, int max_iter,
                                                  const HeckeOptions& opts) {
  const double b = -kPi / lat.tau().imag();
  cplx z = lat.centered(z0);
  try {
    for (int it = 0; it < max_iter; ++it) {
      const cplx next = lat.centered(z - (std::conj(hecke_G(z, lat)) - std::conj(C)) / b);
      const double move = lat.torus_distance(next, z);
      z = next;
      if (move < 1e-14) {
        if (std::abs(hecke_G(z, lat) - C) < opts.root_tol) return reduce(z, lat);
        return std::nullopt;
      }
    }
  } catch (const PoleError&) {
    return std::nullopt;
  }
  return std::nullopt;
}

cplx half_period(const Lattice& lat, int which) {
  switch (which) {
    case 1: return 0.5;
    case 2: return lat.tau() / 2.0;
    case 3: return (1.0 + lat.tau()) / 2.0;
    default: {
      std::ostringstream os;
      os << "half_period: selector must be 1, 2 or 3, got " << which;
      throw InputError(os.str());
    }
  }
}

DegeneracyResult degeneracy_2division(const Lattice& lat, int which, const HeckeOptions& opts) {
  const cplx w = half_period(lat, which);
  const cplx p = wp_eval(w, lat, 0);
  const cplx q = (lat.tau() * p + lat.eta2()) / (p + lat.eta1());
  return {q, std::abs(q.imag()) < opts.degeneracy_tol};
}

}  // namespace stacked
