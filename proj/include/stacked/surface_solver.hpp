#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <vector>

#include "stacked/configuration.hpp"
#include "stacked/node_opening.hpp"

namespace stacked {

struct ContourOptions {
  int panels = 8;  // Gauss-Legendre panels per cell edge or cycle
  double zero_guard = 1e-8;
};

/// Elementary symmetric functions of the two zeros of g_k, with the cell used for the contour.
struct ZeroSums {
  cplx s1;
  cplx s2;
  double count = 0.0;  // zeros minus poles inside the cell, plus the two poles
  cplx cell_origin;
};

ZeroSums zeros_symmetric(int k, const GluingState& st, const ContourOptions& opts = {});

/// Origin of a period cell whose edges sit at the mid-gap coordinates of 0, v and `avoid`.
cplx cell_origin(const TorusParams& p, const std::vector<cplx>& avoid = {});

/// Zeros of g_k found by seeded Newton; used to place contours away from them.
std::vector<cplx> gauss_zeros(const TorusParams& p);

cplx residual_E(const OpenedSurface& surf, const OmegaSeries& series, int k, const ContourOptions& opts = {});
std::pair<cplx, cplx> residual_P(const OpenedSurface& surf, const OmegaSeries& series, int k,
                                 const ContourOptions& opts = {});
cplx balance_integral(const OpenedSurface& surf, const OmegaSeries& series, int k);
cplx residual_Gbal(const OpenedSurface& surf, const OmegaSeries& series, int k);

struct SlotResidual {
  cplx E;
  cplx P1;
  cplx P2;
  cplx Gbal;
  double sup() const;
};

struct ResidualVector {
  int K = 0;
  std::vector<int> k;  // torus index of each entry
  std::vector<SlotResidual> values;
  double sup_norm = 0.0;
};

/// Residuals of every storage slot of the state.
ResidualVector residuals(const GluingState& st, const GluingOptions& gopts = {}, const ContourOptions& copts = {});

struct SolverOptions {
  GluingOptions gluing;
  ContourOptions contour;
  double tol = 1e-11;     // stop once the residual sup-norm is below this
  double accept = 1e-9;   // a stalled iteration is still accepted below this
  int max_iter = 40;
  double fd_step = 1e-6;
  bool central_differences = false;  // Newton Jacobian; slot_jacobian always uses central differences
  bool symmetry = true;   // periodic configurations are solved on one cyclic period
  /// Called after every accepted Newton step with (t, iteration, residual sup-norm).
  std::function<void(double, int, double)> progress;
};

struct SolveReport {
  std::vector<double> t_schedule;
  std::vector<int> iterations;
  std::vector<std::vector<double>> residual_history;
  GluingState state;
  double final_residual = 0.0;
};

/// Real unknowns of one slot: b_hat, a, tau, v as (Re, Im) pairs.
std::array<double, 8> slot_unknowns(const TorusParams& p);
TorusParams slot_from_unknowns(const std::array<double, 8>& x);

/// Finite-difference Jacobian of the residual of `slot` with respect to the unknowns of `col_slot`.
/// Rows: (E, P1, P2, Gbal) as (Re, Im) pairs.
Eigen::Matrix<double, 8, 8> slot_jacobian(const GluingState& st, int slot, int col_slot, const SolverOptions& opts = {});

/// Damped Newton at fixed t over all unknowns, tails first.
SolveReport solve_at(GluingState st, const SolverOptions& opts = {});

/// Continuation from the central state along an increasing schedule ending at t_target.
/// An empty schedule means {t/4, t/2, t}.
SolveReport newton_continuation(const Configuration& cfg, double t_target, std::vector<double> schedule = {},
                                const SolverOptions& opts = {});

}  // namespace stacked
