#pragma once

#include <Eigen/Core>
#include <array>
#include <limits>
#include <string>
#include <vector>

#include "stacked/node_opening.hpp"

namespace stacked {

/// Weierstrass data (Phi1, Phi2, Phi3) / dz at a point of T_k, with g = (t g_k)^{(-1)^{k+1}} and dh = t omega.
std::array<cplx, 3> weierstrass_phi(const OpenedSurface& surf, const OmegaSeries& series, int k, cplx z);

/// Base point O_k of layer k: the mid-gap cell corner, nudged off the lattice of special points.
cplx layer_base_point(const TorusParams& p);

struct MeshOptions {
  int grid_res = 64;
  int rings = 16;   // per neck half
  int spokes = 64;
  double cut_factor = 1.0;  // layers stop at |z^{+-}| = cut_factor * epsilon
  int k_first = -1;
  int k_last = 1;
  int laurent_terms = 64;
  double tail_tol = 1e-7;
  double loop_tol = 1e-8;
};

/// Integrated positions over one layer grid; positions are relative to the base point.
struct LayerField {
  int k = 0;
  int n = 0;
  cplx origin;                         // grid vertex (0, 0) is the base point
  std::vector<cplx> z;                 // (n + 1)^2 grid points, index i + (n + 1) j
  std::vector<char> kept;
  std::vector<Eigen::Vector3d> X;
  std::vector<std::array<int, 3>> faces;
  std::array<std::vector<int>, 2> loops;  // boundary loops around v (0) and 0 (1), increasing chart angle
  std::array<std::vector<cplx>, 2> loop_chart;  // chart coordinates of the loop vertices
  double max_loop_residual = 0.0;      // contractible face loops
  double alpha_period_error = 0.0;     // |X(n, j) - X(0, j) - ((-1)^k, 0, 0)|
  double beta_period_error = 0.0;      // |X(i, n) - X(i, 0) - (Re tau, Im tau, 0)|
  double max_flatness_error = 0.0;     // sup |dX - (-conj)^k dz| / |dz| over grid edges
};

/// Path integration of Re Phi along a spanning tree of a torus grid with both chart disks removed.
/// Throws ConvergenceError when a contractible loop residual exceeds opts.loop_tol.
LayerField integrate_layer(const OpenedSurface& surf, const OmegaSeries& series, int k, const MeshOptions& opts = {});

/// Term-by-term primitives of omega, s omega and omega / s in the z_k^+ chart of neck k.
class NeckPrimitive {
 public:
  NeckPrimitive(const OpenedSurface& surf, const OmegaSeries& series, int k, int terms);

  const LaurentTable& table() const { return tab_; }
  int parity() const { return parity_; }
  double t() const { return t_; }
  /// Position difference X(s) - X(s0) in R^3 along a path in the neck annulus (principal logarithms).
  Eigen::Vector3d displacement(cplx s0, cplx s) const;
  /// Terms kept after dropping those below round-off on the coefficient circles.
  int plus_terms() const { return plus_terms_; }
  int minus_terms() const { return minus_terms_; }
  /// Size of the first dropped Laurent term on r_inner <= |s| <= r_outer.
  double tail_estimate(double r_inner, double r_outer) const;

 private:
  LaurentTable tab_;
  double t_;
  int parity_;
  int plus_terms_ = 0;
  int minus_terms_ = 0;
  std::array<cplx, 3> primitives(cplx s) const;
};

/// Neck mesh between layer k (plus chart) and layer k + 1 (minus chart).
///
/// Local vertex indices: [0, n_outer) are the outer loop, [n_outer, n_outer + n_inner) the inner loop,
/// then the ring vertices.
struct NeckField {
  int k = 0;
  int n_outer = 0;
  int n_inner = 0;
  std::vector<cplx> s;               // z_k^+ chart coordinates of every local vertex
  std::vector<Eigen::Vector3d> X;    // positions, anchored at outer loop vertex `anchor`
  std::vector<std::array<int, 3>> faces;
  std::vector<int> waist;            // local indices of the ring |z^+| = t
  int anchor = 0;
  double outer_stitch_error = 0.0;   // against the layer positions of the outer loop
  double tail_estimate = 0.0;
};

/// Integrates neck k from the outer loop of `lower` (with absolute positions `lower_X`) to the inner loop of `upper`.
/// Throws ConvergenceError when the Laurent tail estimate exceeds opts.tail_tol.
NeckField integrate_neck(const OpenedSurface& surf, const OmegaSeries& series, int k, const LayerField& lower,
                         const std::vector<Eigen::Vector3d>& lower_X, const LayerField& upper,
                         const MeshOptions& opts = {});

struct SpacingRow {
  int k = 0;
  double height = 0.0;   // h(O_k), with h(O_{k_first}) = 0
  double spacing = 0.0;  // h(O_k) - h(O_{k-1})
  double ratio = 0.0;    // spacing / (-2 t log t)
};

/// Heights of the base points along paths through the necks, k = k_first..k_last.
std::vector<SpacingRow> spacing_report(const OpenedSurface& surf, const OmegaSeries& series, int k_first, int k_last,
                                       int laurent_terms = 64);

struct VertexTag {
  enum Kind { Layer = 0, Neck = 1 };
  Kind kind = Layer;
  int k = 0;
  int chart = 0;  // neck vertices: +1 on the lower half, -1 on the upper half, 0 on the waist
  int index = -1; // layer grid index i + (n + 1) j, or the local neck index
};

struct LayerFrame {
  int k = 0;
  cplx base_point;
  Eigen::Vector3d position;
};

struct NeckSummary {
  int k = 0;
  cplx center;         // mean horizontal position of the waist ring
  double waist_height = 0.0;
  double stitch_error = 0.0;  // worst mismatch with either layer boundary
};

struct LayerSummary {
  int k = 0;
  double min_height = 0.0;
  double max_height = 0.0;
  double max_loop_residual = 0.0;
  double alpha_period_error = 0.0;
  double beta_period_error = 0.0;
};

struct SurfaceMesh {
  std::vector<Eigen::Vector3d> vertices;  // horizontal coordinates unwrapped within one cell
  std::vector<std::array<int, 3>> faces;
  std::vector<VertexTag> tags;
  std::vector<LayerFrame> frames;
  std::vector<LayerSummary> layers;
  std::vector<NeckSummary> necks;
  double t = 0.0;
  cplx period_beta;  // horizontal lattice is Z + period_beta Z

  /// Horizontal coordinates reduced to the fundamental parallelogram.
  Eigen::Vector3d reduced(int v) const;
};

/// Layers k_first..k_last joined by the necks between them.
/// Normalized so that the centre of neck 0 (if present) sits at the origin and h(O_{k_first}) = 0.
SurfaceMesh build_mesh(const OpenedSurface& surf, const OmegaSeries& series, const MeshOptions& opts = {});

struct DiagnosticOptions {
  double graph_min = 0.1;  // smallest admissible |n_3| on layer faces
  /// Slice heights h(O_k) +- t c; NaN picks, per neck, heights between the layer extremes and the waist.
  double slice_c = std::numeric_limits<double>::quiet_NaN();
};

struct SliceResult {
  int k = 0;
  double height = 0.0;
  int curves = 0;
  bool simple = false;
  bool convex = false;
};

struct EmbeddednessReport {
  bool graph_ok = false;
  double min_layer_normal = 0.0;
  bool slices_ok = false;
  std::vector<SliceResult> slices;
  bool intersections_ok = false;
  int intersecting_pairs = 0;
  bool ok() const { return graph_ok && slices_ok && intersections_ok; }
};

EmbeddednessReport embeddedness_diagnostics(const SurfaceMesh& mesh, const DiagnosticOptions& opts = {});

/// Closed polylines where the mesh meets the plane x_3 = height.
std::vector<std::vector<Eigen::Vector2d>> mesh_slice(const SurfaceMesh& mesh, double height);

}  // namespace stacked
