#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <map>
#include <memory>

#include "oracles.hpp"
#include "stacked/immersion.hpp"
#include "stacked/surface_solver.hpp"

using namespace stacked;

namespace {

struct Solved {
  Configuration cfg;
  GluingState state;
  std::unique_ptr<OpenedSurface> surf;
  OmegaSeries series;
};

const Solved& solved(const std::string& name, double t) {
  static std::map<std::pair<std::string, double>, std::unique_ptr<Solved>> cache;
  auto& slot = cache[{name, t}];
  if (!slot) {
    CatalogParams p;
    p.K = 2;
    auto cfg = catalog(name, p);
    auto rep = newton_continuation(cfg, t);
    slot = std::make_unique<Solved>(Solved{cfg, rep.state, nullptr, {}});
    slot->surf = std::make_unique<OpenedSurface>(slot->state);
    slot->series = fix_omega(*slot->surf);
  }
  return *slot;
}

const SurfaceMesh& mesh_of(const std::string& name, double t, int k_first, int k_last) {
  static std::map<std::tuple<std::string, double, int, int>, SurfaceMesh> cache;
  const auto key = std::make_tuple(name, t, k_first, k_last);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const auto& s = solved(name, t);
    MeshOptions mo;
    mo.k_first = k_first;
    mo.k_last = k_last;
    it = cache.emplace(key, build_mesh(*s.surf, s.series, mo)).first;
  }
  return it->second;
}

double neck_drift(const Solved& s, const SurfaceMesh& mesh) {
  const auto pos = positions(s.cfg, TorusPoint{});
  const Lattice lat(s.cfg.tau());
  const int K = s.cfg.K();
  double worst = 0.0;
  for (const auto& n : mesh.necks) {
    worst = std::max(worst, lat.torus_distance(n.center, pos[n.k + K].z - pos[K].z));
  }
  return worst;
}

// Two pyramids over the unit square, apexes at heights +-1.
SurfaceMesh octahedron() {
  SurfaceMesh m;
  m.vertices = {{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int i = 0; i < 4; ++i) {
    m.faces.push_back({i, (i + 1) % 4, 4});
    m.faces.push_back({(i + 1) % 4, i, 5});
  }
  m.period_beta = cplx(0.0, 1.0);
  return m;
}

}  // namespace

TEST(WeierstrassPhi, NullCurveIdentity) {
  const auto& s = solved("rPD", 0.01);
  const Lattice lat(s.state.at(0).tau);
  for (int k : {0, 1}) {
    for (int i = 0; i < 5; ++i) {
      const cplx z = lat.from_coords(0.13 + 0.17 * i, 0.71 - 0.11 * i);
      const auto phi = weierstrass_phi(*s.surf, s.series, k, z);
      const double scale = std::norm(phi[0]) + std::norm(phi[1]) + std::norm(phi[2]);
      EXPECT_LT(std::abs(phi[0] * phi[0] + phi[1] * phi[1] + phi[2] * phi[2]), 1e-10 * scale) << k << ' ' << i;
    }
  }
}

TEST(WeierstrassPhi, HeightDifferentialIsScaledOmega) {
  const auto& s = solved("rPD", 0.01);
  const Lattice lat(s.state.at(0).tau);
  for (int k : {-1, 0, 1}) {
    const cplx z = lat.from_coords(0.31, 0.42);
    const auto phi = weierstrass_phi(*s.surf, s.series, k, z);
    EXPECT_LT(std::abs(phi[2] - s.state.t * omega_eval(*s.surf, s.series, k, z)), 1e-14);
  }
}

TEST(WeierstrassPhi, RegularAtGaussZeros) {
  const auto& s = solved("rPD", 0.01);
  for (int k : {0, 1}) {
    const auto zeros = gauss_zeros(s.state.at(k));
    ASSERT_FALSE(zeros.empty());
    for (cplx z0 : zeros) {
      auto horizontal = [&](double r) {
        const auto phi = weierstrass_phi(*s.surf, s.series, k, z0 + std::polar(r, 0.7));
        return std::norm(phi[0]) + std::norm(phi[1]);
      };
      const double near = horizontal(1e-5);
      const double nearer = horizontal(1e-6);
      EXPECT_TRUE(std::isfinite(nearer));
      EXPECT_GT(nearer, 1e-3);
      EXPECT_NEAR(nearer / near, 1.0, 1e-3);
    }
  }
}

TEST(Layer, LoopResidualsAndPeriods) {
  const auto& s = solved("rPD", 0.01);
  for (int k : {0, 1}) {
    const auto layer = integrate_layer(*s.surf, s.series, k);
    EXPECT_LT(layer.max_loop_residual, 1e-8);
    EXPECT_LT(layer.alpha_period_error, 1e-8);
    EXPECT_LT(layer.beta_period_error, 1e-8);
    EXPECT_EQ(layer.loops[0].size(), layer.loop_chart[0].size());
    EXPECT_GT(layer.loops[0].size(), 8u);
    EXPECT_GT(layer.loops[1].size(), 8u);
    for (int w = 0; w < 2; ++w) {
      for (cplx c : layer.loop_chart[w]) {
        EXPECT_GE(std::abs(c), s.state.epsilon);
        EXPECT_LT(std::abs(c), 1.5 * s.state.epsilon);
      }
    }
  }
}

TEST(Layer, AlphaStepAgreesWithDirectQuadrature) {
  const auto& s = solved("rPD", 0.01);
  const int k = 1;
  const auto layer = integrate_layer(*s.surf, s.series, k);
  const int n = layer.n;
  const cplx a = layer.z[0];
  const cplx b = layer.z[n];
  auto re_phi = [&](int c) {
    return oracle::line_integral([&](cplx z) { return weierstrass_phi(*s.surf, s.series, k, z)[c]; }, a, b, 32).real();
  };
  const Eigen::Vector3d direct(re_phi(0), re_phi(1), re_phi(2));
  EXPECT_LT((layer.X[n] - layer.X[0] - direct).norm(), 1e-10);
}

TEST(Layer, FlatnessImprovesAsNecksShrink) {
  std::vector<double> flat;
  for (double t : {0.02, 0.01, 0.005}) {
    const auto& s = solved("rPD", t);
    flat.push_back(integrate_layer(*s.surf, s.series, 0).max_flatness_error);
  }
  EXPECT_GT(flat[0], flat[1]);
  EXPECT_GT(flat[1], flat[2]);
  // Deviation is quadratic in t.
  EXPECT_NEAR(std::log(flat[0] / flat[2]) / std::log(4.0), 2.0, 0.1);
}

TEST(Neck, StitchesToBothLayers) {
  const auto& s = solved("rPD", 0.01);
  const auto lower = integrate_layer(*s.surf, s.series, 0);
  const auto upper = integrate_layer(*s.surf, s.series, 1);
  const auto neck = integrate_neck(*s.surf, s.series, 0, lower, lower.X, upper);
  EXPECT_LT(neck.outer_stitch_error, 1e-8);
  EXPECT_LT(neck.tail_estimate, 1e-7);
  EXPECT_EQ(neck.n_outer, static_cast<int>(lower.loops[0].size()));
  EXPECT_EQ(neck.n_inner, static_cast<int>(upper.loops[1].size()));
  for (int w : neck.waist) EXPECT_NEAR(std::abs(neck.s[w]), s.state.t, 1e-14);
}

TEST(Neck, HalfNeckRiseIsLogarithmic) {
  const auto& s = solved("rPD", 0.01);
  const double t = s.state.t;
  const double eps = s.state.epsilon;
  const NeckPrimitive prim(*s.surf, s.series, 0, 64);
  EXPECT_NEAR(prim.table().residue.real(), -1.0, 1e-6);
  double mean = 0.0;
  for (int j = 0; j < 16; ++j) {
    const double th = 2.0 * kPi * j / 16;
    mean += prim.displacement(std::polar(eps, th), std::polar(t, th))[2] / 16;
  }
  EXPECT_NEAR(mean / (t * std::log(eps / t)), 1.0, 1e-3);
}

TEST(Neck, DisplacementMatchesDirectIntegration) {
  const auto& s = solved("rPD", 0.01);
  const int k = 0;
  const NeckPrimitive prim(*s.surf, s.series, k, 64);
  const auto& forms = s.surf->forms(k);
  const double eps = s.state.epsilon;
  const cplx s0 = std::polar(eps, 0.3);
  const cplx s1 = std::polar(0.8 * eps, 1.1);
  const cplx z0 = forms.chart_inverse(+1, s0);
  const cplx z1 = forms.chart_inverse(+1, s1);
  auto re_phi = [&](int c) {
    return oracle::line_integral([&](cplx z) { return weierstrass_phi(*s.surf, s.series, k, z)[c]; }, z0, z1, 32).real();
  };
  const Eigen::Vector3d direct(re_phi(0), re_phi(1), re_phi(2));
  EXPECT_LT((prim.displacement(s0, s1) - direct).norm(), 1e-9);
}

TEST(Spacing, PeriodicStateHasUniformSpacing) {
  const auto& s = solved("rPD", 0.01);
  const auto rows = spacing_report(*s.surf, s.series, -2, 2);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].height, 0.0);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GT(rows[i].height, rows[i - 1].height);
    EXPECT_NEAR(rows[i].spacing, rows[1].spacing, 1e-9);
  }
}

TEST(Spacing, RatiosApproachOne) {
  std::vector<double> ratio;
  for (double t : {0.02, 0.01, 0.005}) {
    const auto& s = solved("rPD", t);
    const auto rows = spacing_report(*s.surf, s.series, 0, 1);
    ratio.push_back(rows[1].ratio);
  }
  EXPECT_LT(std::abs(1.0 - ratio[1]), std::abs(1.0 - ratio[0]));
  EXPECT_LT(std::abs(1.0 - ratio[2]), std::abs(1.0 - ratio[1]));
}

TEST(Mesh, LayersStackAndNecksStitch) {
  const auto& mesh = mesh_of("rPD", 0.01, -1, 1);
  ASSERT_EQ(mesh.frames.size(), 3u);
  ASSERT_EQ(mesh.necks.size(), 2u);
  for (std::size_t i = 1; i < mesh.frames.size(); ++i) {
    EXPECT_GT(mesh.frames[i].position[2], mesh.frames[i - 1].position[2]);
  }
  for (const auto& n : mesh.necks) EXPECT_LT(n.stitch_error, 1e-8);
  EXPECT_EQ(mesh.tags.size(), mesh.vertices.size());
  for (const auto& f : mesh.faces) {
    const Eigen::Vector3d e1 = mesh.vertices[f[1]] - mesh.vertices[f[0]];
    const Eigen::Vector3d e2 = mesh.vertices[f[2]] - mesh.vertices[f[0]];
    ASSERT_GT(e1.cross(e2).norm(), 0.0);
  }
  // Layer k lies between the waists of necks k - 1 and k.
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (mesh.tags[v].kind != VertexTag::Layer) continue;
    const int k = mesh.tags[v].k;
    const double h = mesh.vertices[v][2];
    for (const auto& n : mesh.necks) {
      if (n.k == k - 1) EXPECT_GT(h, n.waist_height);
      if (n.k == k) EXPECT_LT(h, n.waist_height);
    }
  }
}

TEST(Mesh, ReducedCoordinatesStayInCell) {
  const auto& mesh = mesh_of("rPD", 0.01, -1, 1);
  const Lattice lat(mesh.period_beta);
  for (std::size_t v = 0; v < mesh.vertices.size(); v += 97) {
    const auto r = mesh.reduced(static_cast<int>(v));
    const auto [cx, cy] = lat.coords(cplx(r[0], r[1]));
    EXPECT_GE(cx, 0.0);
    EXPECT_LT(cx, 1.0);
    EXPECT_GE(cy, 0.0);
    EXPECT_LT(cy, 1.0);
    EXPECT_LT(lat.torus_distance(cplx(r[0], r[1]), cplx(mesh.vertices[v][0], mesh.vertices[v][1])), 1e-12);
  }
}

TEST(Mesh, NeckCentresApproachConfiguration) {
  std::vector<double> drift;
  for (double t : {0.02, 0.01, 0.005}) drift.push_back(neck_drift(solved("rPD", t), mesh_of("rPD", t, -1, 1)));
  EXPECT_LT(drift[0], 1e-10);
  EXPECT_LE(drift[1], drift[0]);
  EXPECT_LE(drift[2], drift[1]);
}

TEST(Diagnostics, PassForPeriodicSurface) {
  const auto rep = embeddedness_diagnostics(mesh_of("rPD", 0.01, -1, 1));
  EXPECT_TRUE(rep.graph_ok) << rep.min_layer_normal;
  EXPECT_TRUE(rep.slices_ok);
  EXPECT_TRUE(rep.intersections_ok) << rep.intersecting_pairs;
  EXPECT_EQ(rep.slices.size(), 6u);
}

TEST(Diagnostics, WaistSliceIsOneClosedCurve) {
  const auto& mesh = mesh_of("rPD", 0.01, -1, 1);
  for (const auto& n : mesh.necks) {
    const auto curves = mesh_slice(mesh, n.waist_height);
    ASSERT_EQ(curves.size(), 1u);
    EXPECT_TRUE(curves[0].front().isApprox(curves[0].back()));
  }
}

TEST(Diagnostics, ExplicitSliceConstant) {
  DiagnosticOptions opts;
  opts.slice_c = 3.0;
  const auto rep = embeddedness_diagnostics(mesh_of("rPD", 0.01, -1, 1), opts);
  EXPECT_TRUE(rep.slices_ok);
  for (const auto& sl : rep.slices) EXPECT_EQ(sl.curves, 1);
}

TEST(Diagnostics, FailOutsideContractionRegime) {
  auto st = solved("rPD", 0.05).state;
  st.t = 0.1;
  const OpenedSurface surf(st);
  const auto series = fix_omega(surf);
  MeshOptions mo;
  mo.loop_tol = 1.0;
  mo.tail_tol = 1.0;
  const auto rep = embeddedness_diagnostics(build_mesh(surf, series, mo));
  EXPECT_FALSE(rep.ok());
  EXPECT_FALSE(rep.graph_ok);
}

TEST(MeshSlice, OctahedronEquator) {
  const auto m = octahedron();
  const auto below = mesh_slice(m, 0.5);
  ASSERT_EQ(below.size(), 1u);
  EXPECT_EQ(below[0].size(), 5u);
  for (const auto& p : below[0]) EXPECT_NEAR(std::abs(p[0]) + std::abs(p[1]), 0.5, 1e-15);
  // The plane through the equatorial vertices yields each vertex once.
  const auto through = mesh_slice(m, 0.0);
  ASSERT_EQ(through.size(), 1u);
  EXPECT_EQ(through[0].size(), 5u);
  EXPECT_TRUE(mesh_slice(m, 2.0).empty());
}

TEST(Twin, DiagnosticsPass) {
  const auto& mesh = mesh_of("twin-rPD", 0.01, -2, 2);
  const auto rep = embeddedness_diagnostics(mesh);
  EXPECT_TRUE(rep.ok());
  for (const auto& n : mesh.necks) EXPECT_LT(n.stitch_error, 1e-8);
  EXPECT_LT(neck_drift(solved("twin-rPD", 0.01), mesh), 1e-10);
}

TEST(Twin, ReflectionAcrossMiddleWaist) {
  const auto& mesh = mesh_of("twin-rPD", 0.01, -2, 2);
  // Necks -1 - j and -1 + j mirror each other in the waist plane of neck -1.
  std::map<int, NeckSummary> necks;
  for (const auto& n : mesh.necks) necks[n.k] = n;
  const double plane = necks.at(-1).waist_height;
  const Lattice lat(mesh.period_beta);
  for (int j = 1; j <= 1; ++j) {
    const auto& lo = necks.at(-1 - j);
    const auto& hi = necks.at(-1 + j);
    EXPECT_NEAR(lo.waist_height + hi.waist_height, 2.0 * plane, 1e-7);
    EXPECT_LT(lat.torus_distance(lo.center, hi.center), 1e-7);
  }
  std::map<int, LayerSummary> layers;
  for (const auto& l : mesh.layers) layers[l.k] = l;
  for (int j = 0; j <= 1; ++j) {
    EXPECT_NEAR(layers.at(-1 - j).max_height + layers.at(j).min_height, 2.0 * plane, 1e-7);
    EXPECT_NEAR(layers.at(-1 - j).min_height + layers.at(j).max_height, 2.0 * plane, 1e-7);
  }
  // Inside the middle neck the reflection is s -> t^2 / conj(s).
  const auto& s = solved("twin-rPD", 0.01);
  const NeckPrimitive prim(*s.surf, s.series, -1, 64);
  const double t = s.state.t;
  for (double r : {1.5 * t, 4.0 * t, 0.9 * s.state.epsilon}) {
    for (double th : {0.2, 2.5, 4.4}) {
      const cplx waist = std::polar(t, th);
      const auto up = prim.displacement(waist, std::polar(r, th));
      const auto down = prim.displacement(waist, std::polar(t * t / r, th));
      EXPECT_LT(std::abs(up[0] - down[0]), 1e-7);
      EXPECT_LT(std::abs(up[1] - down[1]), 1e-7);
      EXPECT_LT(std::abs(up[2] + down[2]), 1e-7);
    }
  }
}
