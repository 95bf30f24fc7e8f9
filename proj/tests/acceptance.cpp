#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stacked/asymptotics.hpp"
#include "stacked/configuration.hpp"
#include "stacked/elliptic.hpp"
#include "stacked/hecke.hpp"
#include "stacked/immersion.hpp"
#include "stacked/surface_solver.hpp"

using namespace stacked;

namespace {

const cplx kHex = std::polar(1.0, kPi / 3);

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
};

std::string sci(double x) { return fmt::format("{:.2e}", x); }

Configuration named(const std::string& name, int K) {
  CatalogParams p;
  p.K = K;
  return catalog(name, p);
}

Outcome elliptic_kernel() {
  Outcome out;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double legendre = 0.0;
  double quasi = 0.0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const cplx tau(-0.5 + i / 9.0, 0.3 + 2.7 * j / 9.0);
      const Lattice lat(tau);
      legendre = std::max(legendre, std::abs(lat.eta1() * tau - 2.0 * zeta(tau / 2.0, lat) - 2.0 * kPi * kI));
      for (int s = 0; s < 10; ++s) {
        const cplx z = lat.from_coords(u(rng), u(rng));
        if (lat.lattice_distance(z) < 1e-2) continue;
        const cplx f = zeta(z, lat);
        quasi = std::max(quasi, std::abs(zeta(z + 1.0, lat) - f - lat.eta1()));
        quasi = std::max(quasi, std::abs(zeta(z + tau, lat) - f - lat.eta2()));
      }
    }
  }
  double lattice_sum = 0.0;
  for (int s = 0; s < 10; ++s) {
    const cplx tau(u(rng) - 0.5, 0.8 + 0.8 * u(rng));
    const Lattice lat(tau);
    const cplx z = lat.from_coords(0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng));
    lattice_sum = std::max(lattice_sum, std::abs(zeta(z, lat) - oracle::zeta_lattice_oracle(z, tau, 60)));
  }
  out.require(legendre < 1e-12, "Legendre residual " + sci(legendre));
  out.require(quasi < 1e-12, "quasi-periodicity " + sci(quasi));
  out.require(lattice_sum < 1e-9, "lattice-sum agreement " + sci(lattice_sum));
  return out;
}

Outcome theta_star_value() {
  Outcome out;
  const double th = theta_star();
  const auto ke = elliptic_KE(half_energy_parameter());
  out.require(std::abs(th - 1.23409) < 1e-4, fmt::format("theta* = {:.6f}", th));
  out.require(std::abs(2.0 * ke.E - ke.K) < 1e-12, "2E - K = " + sci(2.0 * ke.E - ke.K));
  return out;
}

Outcome hecke_roots() {
  Outcome out;
  double worst = 0.0;
  for (cplx tau : {kI, 2.0 * kI, kHex}) {
    const Lattice lat(tau);
    for (int w = 1; w <= 3; ++w) worst = std::max(worst, std::abs(hecke_G(half_period(lat, w), lat)));
  }
  const Lattice hex(kHex);
  worst = std::max(worst, std::abs(hecke_G((1.0 + kHex) / 3.0, hex)));
  worst = std::max(worst, std::abs(hecke_G(-(1.0 + kHex) / 3.0, hex)));
  out.require(worst < 1e-10, "|G| at known roots " + sci(worst));
  const int hex_count = solve_G_equals_C(hex, 0.0).count;
  const int square_count = solve_G_equals_C(Lattice(kI), 0.0).count;
  const int large_count = solve_G_equals_C(Lattice(kI), 100.0).count;
  out.require(hex_count == 5, fmt::format("hexagonal count {}", hex_count));
  out.require(square_count == 3, fmt::format("square count {}", square_count));
  out.require(large_count == 1, fmt::format("C = 100 count {}", large_count));
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int lo = 5;
  int hi = 1;
  for (int s = 0; s < 50; ++s) {
    const cplx tau(u(rng) - 0.5, 0.6 + 1.4 * u(rng));
    const cplx C(6.0 * u(rng) - 3.0, 6.0 * u(rng) - 3.0);
    const int n = solve_G_equals_C(Lattice(tau), C).count;
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  out.require(lo >= 1 && hi <= 5, fmt::format("random sample counts in [{}, {}]", lo, hi));
  return out;
}

Outcome catalog_balance() {
  Outcome out;
  double max_force = 0.0;
  double min_sv = std::numeric_limits<double>::infinity();
  std::string worst;
  for (const auto& name : catalog_names()) {
    const auto cfg = catalog(name);
    max_force = std::max(max_force, balance_report(cfg).max_force);
    const double sv = nondegeneracy_check(cfg).min_singular_value;
    if (sv < min_sv) {
      min_sv = sv;
      worst = name;
    }
  }
  out.require(max_force < 1e-10, fmt::format("{} entries, max force {}", catalog_names().size(), sci(max_force)));
  out.require(min_sv > 1e-8, fmt::format("min singular value {} ({})", sci(min_sv), worst));
  return out;
}

Outcome omega_fixed_point() {
  Outcome out;
  const auto rpd = named("rPD", 2);
  {
    const auto st = GluingState::central(rpd, 0.0);
    const OpenedSurface surf(st);
    const auto lam = fix_omega(surf);
    double lam_norm = 0.0;
    for (const auto& rows : {lam.plus, lam.minus}) {
      for (const auto& row : rows) {
        for (cplx c : row) lam_norm = std::max(lam_norm, std::abs(c));
      }
    }
    double closed = 0.0;
    for (int k : {0, 1}) {
      const auto& p = st.at(k);
      const Lattice lat(p.tau);
      for (auto [x, y] : {std::pair{0.6, 0.8}, std::pair{0.2, 0.35}, std::pair{0.85, 0.1}}) {
        const cplx z = lat.from_coords(x, y);
        const cplx expect = oracle::zeta_lattice_oracle(z, p.tau, 200) -
                            oracle::zeta_lattice_oracle(z - p.v, p.tau, 200) -
                            xi_linear(p.v, lat);
        closed = std::max(closed, std::abs(omega_eval(surf, lam, k, z) - expect));
      }
    }
    out.require(lam_norm == 0.0, "t = 0 corrections " + sci(lam_norm));
    out.require(closed < 1e-10, "t = 0 closed form " + sci(closed));
  }
  {
    const auto st = GluingState::central(rpd, 0.01);
    const OpenedSurface surf(st);
    const auto lam = fix_omega(surf);
    double gamma_err = 0.0;
    double real_part = 0.0;
    for (int k : {0, 1}) {
      const auto& p = surf.forms(k).params();
      const Lattice lat(p.tau);
      auto w = [&](cplx z) { return omega_eval(surf, lam, k, z); };
      gamma_err = std::max(gamma_err, std::abs(oracle::circle_integral(w, 0.0, 0.05, 256) - 2.0 * kPi * kI));
      auto [vx, vy] = lat.coords(p.v);
      auto away = [](double c) {
        c -= std::floor(c);
        return c <= 0.5 ? 0.5 * (c + 1.0) : 0.5 * c;
      };
      const cplx a0 = lat.from_coords(0.0, away(vy));
      const cplx b0 = lat.from_coords(away(vx), 0.0);
      real_part = std::max(real_part, std::abs(oracle::line_integral(w, a0, a0 + 1.0).real()));
      real_part = std::max(real_part, std::abs(oracle::line_integral(w, b0, b0 + p.tau).real()));
    }
    out.require(gamma_err < 1e-8, "gamma period error " + sci(gamma_err));
    out.require(real_part < 1e-8, "alpha/beta real parts " + sci(real_part));
  }
  const std::vector<double> ts{0.02, 0.01, 0.005};
  std::vector<double> est;
  for (double t : ts) est.push_back(fix_omega(GluingState::central(rpd, t)).contraction_estimate);
  const double slope = std::log(est.front() / est.back()) / std::log(ts.front() / ts.back());
  out.require(std::abs(slope - 2.0) < 0.1, fmt::format("contraction slope {:.4f}", slope));
  return out;
}

// Residuals of the central rhombohedral family at t = 0 in closed form.
std::array<cplx, 4> central_closed_form(int k, const TorusParams& p, const GluingState& st) {
  const cplx bh = p.b_hat();
  const bool even = (k % 2 == 0);
  const cplx P1 = even ? -1.0 / p.a - 2.0 : std::conj(1.0 / p.a) + 2.0;
  const cplx P2 = (even ? -p.tau / p.a : std::conj(p.tau / p.a)) - 2.0 * st.tau0;
  const cplx G = 2.0 * kPi * kI * (2.0 * p.a * hecke_G(p.v, Lattice(p.tau)) + bh);
  return {-2.0 * bh / p.a, P1, P2, (even ? G : std::conj(G)) + 2.0 * kPi * kI * st.hecke_q0};
}

double window_difference(const GluingState& a, const GluingState& b, int k_max) {
  double worst = 0.0;
  for (int k = -k_max; k <= k_max; ++k) {
    const auto xa = slot_unknowns(a.at(k));
    const auto xb = slot_unknowns(b.at(k));
    for (int c = 0; c < 8; ++c) worst = std::max(worst, std::abs(xa[c] - xb[c]));
  }
  return worst;
}

Outcome newton_continuation_rpd() {
  Outcome out;
  const auto rep = newton_continuation(named("rPD", 2), 0.02, {0.005, 0.01, 0.02});
  out.require(rep.final_residual < 1e-9, "final residual " + sci(rep.final_residual));

  const auto st = GluingState::central(named("rPD", 2), 0.0);
  double jac = 0.0;
  for (int k : {0, 1}) {
    const int slot = st.slot_of(k);
    const auto J = slot_jacobian(st, slot, slot);
    const auto x0 = slot_unknowns(st.slot(slot));
    const double h = 1e-6;
    for (int c = 0; c < 8; ++c) {
      auto xp = x0;
      auto xm = x0;
      xp[c] += h;
      xm[c] -= h;
      const auto fp = central_closed_form(k, slot_from_unknowns(xp), st);
      const auto fm = central_closed_form(k, slot_from_unknowns(xm), st);
      for (int r = 0; r < 4; ++r) {
        if ((r == 1 || r == 2) && c < 2) continue;
        const cplx d = (fp[r] - fm[r]) / (2.0 * h);
        jac = std::max({jac, std::abs(J(2 * r, c) - d.real()), std::abs(J(2 * r + 1, c) - d.imag())});
      }
    }
  }
  out.require(jac < 1e-5, "t = 0 diagonal blocks " + sci(jac));

  const double rpd_window =
      window_difference(newton_continuation(named("rPD", 8), 0.02).state, newton_continuation(named("rPD", 12), 0.02).state, 8);
  out.require(rpd_window < 1e-7, "rPD K = 8 vs 12 " + sci(rpd_window));
  const double twin_window = window_difference(newton_continuation(named("twin-rPD", 8), 0.01).state,
                                               newton_continuation(named("twin-rPD", 12), 0.01).state, 8);
  out.require(twin_window < 1e-7, "twin-rPD K = 8 vs 12 " + sci(twin_window));
  return out;
}

double neck_drift(const Configuration& cfg, const SurfaceMesh& mesh) {
  const auto pos = positions(cfg, TorusPoint{});
  const Lattice lat(cfg.tau());
  const int K = cfg.K();
  double worst = 0.0;
  for (const auto& n : mesh.necks) worst = std::max(worst, lat.torus_distance(n.center, pos[n.k + K].z - pos[K].z));
  return worst;
}

Outcome mesh_geometry() {
  Outcome out;
  bool increasing = true;
  std::vector<double> ratio;
  std::vector<double> drift;
  EmbeddednessReport rpd_diag;
  const auto rpd = named("rPD", 2);
  for (double t : {0.02, 0.01, 0.005}) {
    const auto st = newton_continuation(rpd, t).state;
    const OpenedSurface surf(st);
    const auto series = fix_omega(surf);
    MeshOptions mo;
    mo.k_first = -1;
    mo.k_last = 1;
    const auto mesh = build_mesh(surf, series, mo);
    for (std::size_t i = 1; i < mesh.frames.size(); ++i) {
      increasing = increasing && mesh.frames[i].position[2] > mesh.frames[i - 1].position[2];
    }
    ratio.push_back(spacing_report(surf, series, 0, 1)[1].ratio);
    drift.push_back(neck_drift(rpd, mesh));
    if (t == 0.01) rpd_diag = embeddedness_diagnostics(mesh);
  }
  out.require(increasing, "heights increasing");
  const bool approach = std::abs(1.0 - ratio[1]) < std::abs(1.0 - ratio[0]) &&
                        std::abs(1.0 - ratio[2]) < std::abs(1.0 - ratio[1]);
  out.require(approach, fmt::format("spacing ratios {:.4f}, {:.4f}, {:.4f}", ratio[0], ratio[1], ratio[2]));
  out.require(drift[1] <= drift[0] && drift[2] <= drift[1],
              fmt::format("neck drift {}, {}, {}", sci(drift[0]), sci(drift[1]), sci(drift[2])));
  out.require(rpd_diag.ok(), fmt::format("rPD diagnostics graph={} slices={} intersections={}", rpd_diag.graph_ok,
                                         rpd_diag.slices_ok, rpd_diag.intersections_ok));

  const auto twin = named("twin-rPD", 2);
  const OpenedSurface surf(newton_continuation(twin, 0.01).state);
  MeshOptions mo;
  mo.k_first = -2;
  mo.k_last = 2;
  const auto mesh = build_mesh(surf, fix_omega(surf), mo);
  const auto diag = embeddedness_diagnostics(mesh);
  out.require(diag.ok(), fmt::format("twin-rPD diagnostics graph={} slices={} intersections={}", diag.graph_ok,
                                     diag.slices_ok, diag.intersections_ok));
  return out;
}

Outcome asymptotic_decay() {
  Outcome out;
  const auto defect = named("twin-rPD", 10);
  const auto pair = pair_solve(periodic_extension(defect, TailSide::Right), defect, 0.01);
  const int K = pair.defect.K;
  std::vector<double> d;
  for (int k = 0; k <= K; ++k) d.push_back(parameter_distance(pair.periodic.at(k), pair.defect.at(k)));
  bool decreasing = true;
  for (int k = 2; k <= K; ++k) decreasing = decreasing && d[k] < d[k - 1];
  out.require(decreasing, fmt::format("d_0..d_3 = {}, {}, {}, {}", sci(d[0]), sci(d[1]), sci(d[2]), sci(d[3])));
  try {
    const auto rep = decay_fit(pair);
    out.require(rep.r_squared > 0.95, fmt::format("R^2 {:.3f} (rate {:.2f})", rep.r_squared, rep.rate));
    const bool comparable = std::isfinite(rep.w_rate) && rep.w_r_squared > 0.95 && rep.w_rate > 0.5 * rep.rate &&
                            rep.w_rate < 2.0 * rep.rate;
    out.require(comparable,
                fmt::format("form rate {:.2f} (R^2 {:.3f}) vs {:.2f}", rep.w_rate, rep.w_r_squared, rep.rate));
  } catch (const DegenerateFitError& e) {
    out.require(false, std::string("fit: ") + e.what());
  }
  const auto dist = tpms_distances(pair, 2);
  out.require(dist[1] < dist[0] && dist[2] < dist[1],
              fmt::format("tpms distances {}, {}, {}", sci(dist[0]), sci(dist[1]), sci(dist[2])));
  return out;
}

Outcome second_kind_oracle() {
  Outcome out;
  const auto st = GluingState::central(named("rPD", 2));
  double worst = 0.0;
  int samples = 0;
  for (int k : {0, 1}) {
    const TorusForms f(st.at(k), st.epsilon, GluingOptions{}, false);
    const Lattice& lat = f.lattice();
    for (int n : {2, 3}) {
      // A(x) = residue of zeta(z - x) dz^s / (z^s)^n at the pole, normalized to imaginary periods.
      auto A = [&](cplx x) {
        auto integrand = [&](cplx z) {
          const cplx g = f.g(z);
          return -f.g_prime(z) / (g * g) * std::pow(g, n) * zeta(z - x, lat);
        };
        return oracle::circle_integral(integrand, f.pole(+1), 0.04, 256) / (2.0 * kPi * kI);
      };
      auto [vx, vy] = lat.coords(f.pole(+1));
      auto away = [](double c) {
        c -= std::floor(c);
        return c <= 0.5 ? 0.5 * (c + 1.0) : 0.5 * c;
      };
      const cplx a0 = lat.from_coords(0.0, away(vy));
      const cplx b0 = lat.from_coords(away(vx), 0.0);
      const cplx alpha_A = oracle::line_integral(A, a0, a0 + 1.0, 8);
      auto fa = [&](cplx x) { return -A(x) + alpha_A; };
      const cplx shift = kI * oracle::line_integral(fa, b0, b0 + lat.tau(), 8).real() / lat.tau().imag();
      for (int s = 0; s < 10; ++s) {
        const cplx x = lat.from_coords(0.05 + 0.09 * s, 0.93 - 0.07 * s);
        if (std::abs(x - f.pole(+1)) < 0.08 || std::abs(x - f.pole(-1)) < 0.08) continue;
        const cplx expect = fa(x) + shift;
        worst = std::max(worst, std::abs(f.second_kind(+1, n, x) - expect) / std::max(1.0, std::abs(expect)));
        ++samples;
      }
    }
  }
  out.require(samples >= 30 && worst < 1e-7, fmt::format("{} samples, relative difference {}", samples, sci(worst)));
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "elliptic kernel", 10, elliptic_kernel},
      {2, "theta* root", 1, theta_star_value},
      {3, "Hecke roots and counts", 60, hecke_roots},
      {4, "catalog balance", 10, catalog_balance},
      {5, "omega fixed point", 120, omega_fixed_point},
      {6, "Newton continuation", 600, newton_continuation_rpd},
      {7, "mesh geometry", 600, mesh_geometry},
      {8, "asymptotic decay", 900, asymptotic_decay},
      {9, "second-kind cross-check", 120, second_kind_oracle},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.require(seconds < c.budget_seconds, fmt::format("{:.1f} s of {:.0f} s", seconds, c.budget_seconds));
    failed += out.pass ? 0 : 1;
    fmt::print("criterion {} {}: {} ({})\n", c.id, c.name, out.pass ? "PASS" : "FAIL", out.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
