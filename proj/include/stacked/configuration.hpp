#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stacked/elliptic.hpp"

namespace stacked {

/// Bi-infinite stacking sequence q_k stored as a window k in [-K, K] plus periodic tails.
///
/// For k > K the value is right_tail[(k - K - 1) mod P_R]; for k < -K it is
/// left_tail[(k + K + 1) mod P_L].
class Configuration {
 public:
  static constexpr double kMinSeparation = 1e-3;

  Configuration(cplx tau, std::vector<cplx> window, std::vector<cplx> left_tail, std::vector<cplx> right_tail);

  /// Window of half-width K sampled from a rule, tails of the given periods continuing it.
  static Configuration from_rule(cplx tau, int K, const std::function<cplx(int)>& rule, int left_period,
                                 int right_period);

  cplx tau() const { return tau_; }
  int K() const { return K_; }
  const std::vector<cplx>& window() const { return window_; }
  const std::vector<cplx>& left_tail() const { return left_; }
  const std::vector<cplx>& right_tail() const { return right_; }
  const Lattice& lattice() const { return lat_; }

  cplx q(int k) const;
  /// Same sequence relabeled so that the new q_k is the old q_{k + shift}, same K.
  Configuration shifted(int shift) const;
  /// Same sequence with a different window half-width.
  Configuration rewindowed(int K) const;
  /// Smallest torus distance from any stored q to the lattice.
  double separation() const;
  /// True when window and both tails describe one global period.
  bool is_periodic(int* period = nullptr) const;

 private:
  cplx tau_;
  Lattice lat_;
  int K_;
  std::vector<cplx> window_;
  std::vector<cplx> left_;
  std::vector<cplx> right_;
};

/// p_k = p0 + q_1 + ... + q_k for k in [-K, K], torus reduced; entry i holds k = i - K.
std::vector<TorusPoint> positions(const Configuration& cfg, const TorusPoint& p0);

struct BalanceOptions {
  double balance_tol = 1e-10;
  double nondeg_tol = 1e-8;
};

struct BalanceReport {
  int k_first = 0;
  /// G(q_k) for k = k_first, k_first + 1, ...
  std::vector<cplx> G_values;
  /// F_k = G_{k+1} - G_k, same indexing.
  std::vector<cplx> forces;
  double max_force = 0.0;
  bool balanced = false;
};

/// G on the window plus one tail period on each side.
BalanceReport balance_report(const Configuration& cfg, const BalanceOptions& opts = {});

struct NondegeneracyReport {
  double min_singular_value = 0.0;
  int worst_k = 0;
  bool nondegenerate = false;
};

/// Smallest singular value over the diagonal 2x2 blocks dG_k/dq_k.
NondegeneracyReport nondegeneracy_check(const Configuration& cfg, const BalanceOptions& opts = {});

struct CatalogParams {
  /// Im(tau) for the Re(tau) = 0 families.
  double imag_tau = 1.3;
  /// Argument of tau for the |tau| = 1 families; unset picks 1.4 for oPb and 1.1 for oH.
  std::optional<double> theta;
  /// Window half-width.
  int K = 8;
};

const std::vector<std::string>& catalog_names();
Configuration catalog(const std::string& name, const CatalogParams& params = {});

/// Experimental: c in (0, 1/2) with G(c(1 + tau)) = 0 on tau = exp(i theta), theta < theta*.
double rhombic_balanced_fraction(double theta);

}  // namespace stacked
