#pragma once

#include <utility>
#include <vector>

#include "stacked/types.hpp"

namespace stacked {

struct KernelOptions {
  double series_tol = 1e-13;
  double pole_radius = 1e-6;
};

/// Flat torus C / (Z + tau Z) with its quasi-periods and nome.
///
/// eta1 comes from the weight-2 Eisenstein q-expansion; eta2 is then fixed by
/// eta1*tau - eta2 = 2*pi*i.
class Lattice {
 public:
  explicit Lattice(cplx tau, KernelOptions opts = {});

  cplx tau() const { return tau_; }
  cplx eta1() const { return eta1_; }
  cplx eta2() const { return eta2_; }
  cplx nome() const { return nome_; }
  double series_tol() const { return opts_.series_tol; }
  double pole_radius() const { return opts_.pole_radius; }
  const KernelOptions& options() const { return opts_; }

  /// Real coordinates (x, y) with z = x + y*tau, no reduction.
  std::pair<double, double> coords(cplx z) const;
  cplx from_coords(double x, double y) const { return x + y * tau_; }

  /// Distance from z to the nearest lattice point.
  double lattice_distance(cplx z) const;
  /// Distance between two points of the torus.
  double torus_distance(cplx a, cplx b) const;
  /// Representative of z with coordinates in [-1/2, 1/2], ties to even.
  cplx centered(cplx z, int* n1 = nullptr, int* n2 = nullptr) const;

  /// Coefficients x^n / (1 - x^n), x = nome^2, n = 1, 2, ...
  const std::vector<cplx>& lambert() const { return lambert_; }

 private:
  cplx tau_;
  KernelOptions opts_;
  cplx nome_;
  cplx eta1_;
  cplx eta2_;
  std::vector<cplx> lambert_;
};

struct TorusPoint {
  cplx z;
  double x = 0.0;
  double y = 0.0;
};

/// Reduce z to the fundamental domain, x, y in [0, 1).
TorusPoint reduce(cplx z, const Lattice& lat);

cplx zeta(cplx z, const Lattice& lat);

/// order 0 returns the Weierstrass p-function, order 1 its derivative.
cplx wp_eval(cplx z, const Lattice& lat, int order);

/// Derivatives zeta^(j)(z) for j = 0..jmax.
std::vector<cplx> zeta_derivatives(cplx z, const Lattice& lat, int jmax);

/// Taylor coefficients s_0..s_jmax of zeta(w) - 1/w at w = 0.
std::vector<cplx> zeta_regular_taylor(const Lattice& lat, int jmax);

/// x*eta1 + y*eta2 for a reduced point.
cplx xi(const TorusPoint& p, const Lattice& lat);

/// Same combination with unreduced real coordinates of the representative z.
/// zeta(z) - xi_linear(z) is lattice periodic.
cplx xi_linear(cplx z, const Lattice& lat);

struct EllipticKE {
  double K;
  double E;
};

/// Complete elliptic integrals of the first and second kind, parameter m.
EllipticKE elliptic_KE(double m);

/// Parameter m in (0, 1) with 2 E(m) = K(m).
double half_energy_parameter();

/// 2 * atan(K(1 - m) / K(m)) at the parameter above.
double theta_star();

}  // namespace stacked
