#pragma once

#include <memory>
#include <vector>

#include "stacked/configuration.hpp"
#include "stacked/elliptic.hpp"

namespace stacked {

/// Parameters of one torus T_k: g_k = a (zeta(z) - zeta(z - v)) + b on C / (Z + tau Z).
struct TorusParams {
  cplx a;
  cplx b;
  cplx v;
  cplx tau;

  /// b + a xi(v), the part of b not fixed by regularity at t = 0.
  cplx b_hat() const;
  static TorusParams from_b_hat(cplx a, cplx b_hat, cplx v, cplx tau);
};

bool operator==(const TorusParams& x, const TorusParams& y);

/// Per-torus parameters for a window k in [-K, K] plus periodic tails, and the gluing scale.
///
/// Records beyond the window repeat with the tail periods, using the same index rule as
/// Configuration. Tail periods are even so that the parity of k is preserved.
struct GluingState {
  double t = 0.0;
  double epsilon = 0.0;
  double rho = 0.0;
  int K = 0;
  /// Modulus of the configuration and G(q_0; tau), the targets of the period and balance equations.
  cplx tau0;
  cplx hecke_q0;
  /// Period of the underlying configuration, 0 if it is not periodic.
  int period = 0;
  std::vector<TorusParams> window;
  std::vector<TorusParams> left_tail;
  std::vector<TorusParams> right_tail;

  const TorusParams& at(int k) const;
  TorusParams& at(int k);

  /// Storage slots: window first, then right tail, then left tail.
  int slot_count() const;
  int slot_of(int k) const;
  /// A representative index k for a slot.
  int k_of_slot(int slot) const;
  const TorusParams& slot(int s) const;
  TorusParams& slot(int s);
  /// Neighbouring slots; tails are closed cycles, the window reads into the tails.
  int slot_next(int s) const;
  int slot_prev(int s) const;

  /// Explicit t = 0 solution for a configuration; epsilon and rho from the chart rule.
  static GluingState central(const Configuration& cfg, double t = 0.0);
};

/// Largest neck radius with disjoint univalent charts |1/g| < 2 eps, capped at 0.2 * separation.
double chart_radius(const std::vector<TorusParams>& tori, double separation);

struct GluingOptions {
  int n_max = 8;
  int contour_nodes = 256;
  double fix_tol = 1e-12;
  int max_fix_iter = 200;
};

/// One boundary circle |z^{+-}| = r of a chart disk with trapezoid weights for dz.
struct ChartCircle {
  double radius = 0.0;
  std::vector<cplx> s;       // chart coordinate
  std::vector<cplx> z;       // torus point
  std::vector<cplx> weight;  // dz = weight for the trapezoid rule
};

/// Values of the building blocks of omega at one point of T_k.
struct FormBasis {
  cplx base;                // third-kind form with poles 0, v
  std::vector<cplx> plus;   // meromorphic part of the second-kind forms at v, n = 2..n_max
  std::vector<cplx> minus;  // same at 0
  cplx g;
  cplx g_prime;
};

/// Precomputed analytic data of one torus: charts, second-kind forms, circle moments.
class TorusForms {
 public:
  /// Without circles only the pointwise evaluations are available.
  TorusForms(const TorusParams& p, double epsilon, const GluingOptions& opts, bool with_circles = true);

  const TorusParams& params() const { return p_; }
  const Lattice& lattice() const { return lat_; }
  int n_max() const { return n_max_; }
  double epsilon() const { return eps_; }

  cplx g(cplx z) const;
  cplx g_prime(cplx z) const;
  FormBasis basis(cplx z) const;

  /// Torus point with 1/g = s near the pole v (sign +1) or 0 (sign -1).
  cplx chart_inverse(int sign, cplx s) const;
  /// Pole position of the chart, v or 0.
  cplx pole(int sign) const { return sign > 0 ? p_.v : cplx(0.0); }

  /// Principal-part coefficients P_m, m = 2..n, of the second-kind form of order n.
  const std::vector<cplx>& principal(int sign, int n) const;
  /// Second-kind form with principal part c dz^{sign} / (z^{sign})^n and imaginary periods.
  /// The normalization is only real-linear in c.
  cplx second_kind(int sign, int n, cplx z, cplx c = 1.0) const;
  /// Constant that makes c times the meromorphic part of order n have imaginary periods.
  cplx period_shift(int sign, int n, cplx c) const;
  cplx third_kind(cplx p, cplx q, cplx z) const;

  /// Chart circle |z^{sign}| = epsilon with its node data.
  const ChartCircle& circle(int sign) const { return sign > 0 ? plus_circle_ : minus_circle_; }
  /// Basis values at the circle nodes.
  const std::vector<FormBasis>& circle_basis(int sign) const { return sign > 0 ? plus_basis_ : minus_basis_; }

  /// mu[n-2][c] = -(1/2 pi i) sum_j s_j^{1-n} B_c(z_j) dz_j on the circle of the given sign.
  /// Column c = 0 is the third-kind form, 1 + (m-2) the plus form of order m, n_max + (m-2) the minus form,
  /// 2 n_max - 1 the constant form dz.
  const std::vector<std::vector<cplx>>& moments(int sign) const { return sign > 0 ? mu_plus_ : mu_minus_; }

  ChartCircle make_circle(int sign, double radius, int nodes) const;

 private:
  TorusParams p_;
  Lattice lat_;
  double eps_;
  int n_max_;
  cplx xi_v_;
  // principal_[sign][n-2] = P_2..P_n
  std::vector<std::vector<cplx>> principal_plus_, principal_minus_;
  std::vector<cplx> const_plus_, const_minus_;
  ChartCircle plus_circle_, minus_circle_;
  std::vector<FormBasis> plus_basis_, minus_basis_;
  std::vector<std::vector<cplx>> mu_plus_, mu_minus_;

  void build_second_kind();
  std::vector<std::vector<cplx>> build_moments(const ChartCircle& c, const std::vector<FormBasis>& b) const;
};

/// Forms for every storage slot of a gluing state.
class OpenedSurface {
 public:
  /// Reuses forms from `previous` for slots whose parameters did not change.
  OpenedSurface(const GluingState& st, const GluingOptions& opts = {}, const OpenedSurface* previous = nullptr);

  const GluingState& state() const { return st_; }
  const GluingOptions& options() const { return opts_; }
  const TorusForms& forms(int k) const { return *forms_[st_.slot_of(k)]; }
  const TorusForms& slot_forms(int s) const { return *forms_[s]; }

 private:
  GluingState st_;
  GluingOptions opts_;
  std::vector<std::shared_ptr<const TorusForms>> forms_;
};

/// Coefficients lambda^{+-}_{k,n}, n = 2..n_max, stored by slot.
struct OmegaSeries {
  int n_max = 0;
  std::vector<std::vector<cplx>> plus;
  std::vector<std::vector<cplx>> minus;
  bool converged = false;
  /// l-infinity norm of the linear part of lambda -> L(lambda).
  double contraction_estimate = 0.0;
  /// Ratio of the last two update norms of the iteration.
  double empirical_ratio = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Fixed point of lambda -> L(t, x, lambda) by iteration from lambda = 0.
OmegaSeries fix_omega(const OpenedSurface& surf);
OmegaSeries fix_omega(const GluingState& st, const GluingOptions& opts = {});

/// One application of L, for residual checks.
OmegaSeries apply_L(const OpenedSurface& surf, const OmegaSeries& lambda);

/// omega / dz at a point of T_k from the truncated series.
cplx omega_eval(const OpenedSurface& surf, const OmegaSeries& series, int k, cplx z);
cplx omega_from_basis(const TorusForms& f, const FormBasis& b, const OmegaSeries& series, int slot, double rho);
/// z-independent part of omega / dz on a slot coming from the period normalization.
cplx omega_shift(const TorusForms& f, const OmegaSeries& series, int slot, double rho);

/// Pointwise evaluations that need no circle data.
cplx gauss_component(int k, cplx z, const GluingState& st);
cplx neck_coordinate(int k, int sign, cplx z, const GluingState& st);
cplx third_kind_form(int k, cplx p, cplx q, cplx z, const GluingState& st);
cplx second_kind_form(int k, int sign, int n, cplx z, const GluingState& st, const GluingOptions& opts = {});

/// Laurent data of omega in the z_k^+ chart:
/// omega = residue dz/z + sum_n plus[n-1] z^{n-1} dz + sum_n t^{2n} minus[n-1] dz / z^{n+1}.
struct LaurentTable {
  cplx residue;
  std::vector<cplx> plus;
  std::vector<cplx> minus;
};

LaurentTable laurent_coeffs(const OpenedSurface& surf, const OmegaSeries& series, int k, int max_n);

/// omega / dz^+ at chart coordinate s in the annulus of neck k, from a Laurent table.
cplx laurent_eval(const LaurentTable& tab, double t, cplx s);

}  // namespace stacked
