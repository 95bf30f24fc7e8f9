#pragma once

#include <Eigen/Core>
#include <vector>

#include "stacked/configuration.hpp"
#include "stacked/immersion.hpp"
#include "stacked/surface_solver.hpp"

namespace stacked {

/// Raised when every difference in a fit range is below the noise floor.
class DegenerateFitError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

enum class TailSide { Left, Right };

/// Periodic configuration repeating one tail of `cfg` over the whole line, same tau and K.
Configuration periodic_extension(const Configuration& cfg, TailSide side);

struct PairOptions {
  SolverOptions solver;
  /// Continuation schedule shared by both solves; empty means {t/4, t/2, t}.
  std::vector<double> schedule;
};

struct PairSolution {
  GluingState periodic;
  GluingState defect;
  int period = 0;
  double periodic_residual = 0.0;
  double defect_residual = 0.0;
};

/// Solves a periodic configuration and a defect that agrees with it for k >= 0 at the same t.
/// Throws InputError when the preconditions fail.
PairSolution pair_solve(const Configuration& cfg, const Configuration& cfg_defect, double t,
                        const PairOptions& opts = {});

/// Sup over (a, b, v, tau) of the differences, v compared on the torus.
double parameter_distance(const TorusParams& x, const TorusParams& y);

struct DecayOptions {
  int grid = 32;             // lattice-coordinate samples per direction on each layer
  double disk_factor = 2.0;  // samples within disk_factor * |a| * epsilon of a pole are skipped
};

/// Sup over layer k, minus the chart disks of both tori, of the difference of the pulled-back forms
/// omega(x + y tau) (dx + tau dy) in lattice coordinates (x, y).
double form_distance(const OpenedSurface& a, const OmegaSeries& sa, const OpenedSurface& b, const OmegaSeries& sb,
                     int k, const DecayOptions& opts = {});

struct LogLinearFit {
  double rate = 0.0;  // log d_k ~ intercept - rate k
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

/// Least squares of log(values) against k over first <= k <= last; zero values are skipped.
/// Throws DegenerateFitError when every value in range is below 1e-14.
LogLinearFit log_linear_fit(const std::vector<int>& k, const std::vector<double>& values, int first, int last);

struct DecayReport {
  std::vector<int> k;
  std::vector<double> d;  // parameter differences
  std::vector<double> w;  // form differences
  int fit_first = 0;
  int fit_last = 0;
  double rate = 0.0;
  double r_squared = 0.0;
  double w_rate = 0.0;
  double w_r_squared = 0.0;
  /// d_k strictly decreasing over the fit range.
  bool monotone = false;
};

/// Differences for k in [-K, K] and log-linear fits over k in [1, K - 2]. Requires K >= 6.
DecayReport decay_fit(const PairSolution& pair, const DecayOptions& opts = {});

/// f(O_{k + N}) - f(O_k) on a mesh of a periodic state of period N.
Eigen::Vector3d period_vector(const SurfaceMesh& periodic, int period);

/// Sup over layers k in [k_first, k_last] of the distance between periodic layer k and defect layer k + ell N
/// translated by -ell times the period vector, after aligning the meshes at their top base point.
/// Horizontal differences are taken modulo the lattice. Matching grids are compared vertex by vertex,
/// others by the symmetric Hausdorff distance of the vertex sets.
double tpms_comparison(const SurfaceMesh& periodic, const SurfaceMesh& defect, int period, int ell, int k_first,
                       int k_last);

/// tpms_comparison for ell = 0..ell_max on the last period before the interface, k in [-N, -1].
std::vector<double> tpms_distances(const PairSolution& pair, int ell_max, const MeshOptions& mesh = {});

}  // namespace stacked
