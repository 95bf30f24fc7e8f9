#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "stacked/elliptic.hpp"

namespace stacked {

struct HeckeOptions {
  double root_tol = 1e-10;
  double dedup_radius = 1e-6;
  double degeneracy_tol = 1e-9;
  int grid = 32;
  int max_newton = 60;
};

/// Real 2x2 differential of G in Cartesian coordinates (Re z, Im z).
struct HeckeJacobian {
  Eigen::Matrix2d m;
  double det = 0.0;
};

struct SolutionSet {
  std::vector<TorusPoint> roots;
  std::vector<HeckeJacobian> jacobians;
  cplx C;
  int count = 0;
  /// Seed cells (i, j) from which Newton did not converge.
  std::vector<std::pair<int, int>> diverged;
};

/// G(q) = zeta(q) - xi(q); lattice periodic, not meromorphic.
cplx hecke_G(const TorusPoint& q, const Lattice& lat);
/// Same value from any unreduced representative.
cplx hecke_G(cplx z, const Lattice& lat);

/// dG/dz and dG/dzbar at z.
std::pair<cplx, cplx> hecke_wirtinger(cplx z, const Lattice& lat);
HeckeJacobian hecke_jacobian(cplx z, const Lattice& lat);

/// All solutions of G(q) = C from seeded Newton on the real 2-system.
SolutionSet solve_G_equals_C(const Lattice& lat, cplx C, const HeckeOptions& opts = {});

/// Fixed point of z -> z - (conj(G(z)) - conj(C)) / b with b = -pi / Im(tau).
/// Returns nothing if the iteration does not settle within max_iter steps.
std::optional<TorusPoint> antiholomorphic_iterate(const Lattice& lat, cplx C, cplx z0, int max_iter,
                                                  const HeckeOptions& opts = {});

struct DegeneracyResult {
  cplx quotient;
  bool degenerate = false;
};

/// Half period selected by which = 1, 2, 3: 1/2, tau/2, (1 + tau)/2.
cplx half_period(const Lattice& lat, int which);

/// Quotient (tau*p(w) + eta2) / (p(w) + eta1) at a half period w; degenerate when real.
DegeneracyResult degeneracy_2division(const Lattice& lat, int which, const HeckeOptions& opts = {});

}  // namespace stacked
