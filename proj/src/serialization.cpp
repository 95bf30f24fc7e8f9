#include "stacked/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <system_error>

namespace stacked {

namespace {

template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string(what) + ": " + e.what());
  }
}

Json complex_list(const std::vector<cplx>& zs) {
  Json out = Json::array();
  for (cplx z : zs) out.push_back(to_json(z));
  return out;
}

std::vector<cplx> complex_list_from(const Json& j) {
  if (!j.is_array()) throw SchemaError("expected an array of [re, im] pairs");
  std::vector<cplx> out;
  for (const auto& e : j) out.push_back(complex_from_json(e));
  return out;
}

Json params_list(const std::vector<TorusParams>& ps) {
  Json out = Json::array();
  for (const auto& p : ps) out.push_back(to_json(p));
  return out;
}

std::vector<TorusParams> params_list_from(const Json& j) {
  if (!j.is_array()) throw SchemaError("expected an array of torus records");
  std::vector<TorusParams> out;
  for (const auto& e : j) out.push_back(torus_params_from_json(e));
  return out;
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json vector3(const Eigen::Vector3d& v) { return Json::array({v[0], v[1], v[2]}); }

}  // namespace

Json to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

cplx complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw SchemaError("expected a complex number [re, im], got " + j.dump());
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Json to_json(const Configuration& cfg) {
  return Json{{"tau", to_json(cfg.tau())},
              {"window", complex_list(cfg.window())},
              {"left_tail", complex_list(cfg.left_tail())},
              {"right_tail", complex_list(cfg.right_tail())}};
}

Configuration configuration_from_json(const Json& j) {
  return guarded("configuration", [&] {
    return Configuration(complex_from_json(j.at("tau")), complex_list_from(j.at("window")),
                         complex_list_from(j.at("left_tail")), complex_list_from(j.at("right_tail")));
  });
}

Json to_json(const BalanceReport& rep) {
  return Json{{"k_first", rep.k_first},
              {"G_values", complex_list(rep.G_values)},
              {"forces", complex_list(rep.forces)},
              {"max_force", rep.max_force},
              {"balanced", rep.balanced}};
}

Json to_json(const NondegeneracyReport& rep) {
  return Json{{"min_singular_value", rep.min_singular_value},
              {"worst_k", rep.worst_k},
              {"nondegenerate", rep.nondegenerate}};
}

Json to_json(const SolutionSet& set) {
  Json roots = Json::array();
  for (std::size_t i = 0; i < set.roots.size(); ++i) {
    Json r{{"z", to_json(set.roots[i].z)}, {"lattice_coords", Json::array({set.roots[i].x, set.roots[i].y})}};
    if (i < set.jacobians.size()) {
      const auto& m = set.jacobians[i].m;
      r["jacobian"] = Json::array({Json::array({m(0, 0), m(0, 1)}), Json::array({m(1, 0), m(1, 1)})});
      r["det"] = set.jacobians[i].det;
    }
    roots.push_back(r);
  }
  Json diverged = Json::array();
  for (const auto& [i, jcell] : set.diverged) diverged.push_back(Json::array({i, jcell}));
  return Json{{"C", to_json(set.C)}, {"count", set.count}, {"roots", roots}, {"diverged_seeds", diverged}};
}

Json to_json(const TorusParams& p) {
  return Json{{"a", to_json(p.a)}, {"b", to_json(p.b)}, {"v", to_json(p.v)}, {"tau", to_json(p.tau)}};
}

TorusParams torus_params_from_json(const Json& j) {
  return guarded("torus record", [&] {
    return TorusParams{complex_from_json(j.at("a")), complex_from_json(j.at("b")), complex_from_json(j.at("v")),
                       complex_from_json(j.at("tau"))};
  });
}

Json to_json(const GluingState& st) {
  return Json{{"t", st.t},
              {"epsilon", st.epsilon},
              {"rho", st.rho},
              {"K", st.K},
              {"tau0", to_json(st.tau0)},
              {"hecke_q0", to_json(st.hecke_q0)},
              {"period", st.period},
              {"window", params_list(st.window)},
              {"left_tail", params_list(st.left_tail)},
              {"right_tail", params_list(st.right_tail)}};
}

GluingState gluing_state_from_json(const Json& j) {
  if (j.is_object() && j.contains("state")) return gluing_state_from_json(j.at("state"));
  return guarded("gluing state", [&] {
    GluingState st;
    st.t = j.at("t").get<double>();
    st.epsilon = j.at("epsilon").get<double>();
    st.rho = j.at("rho").get<double>();
    st.K = j.at("K").get<int>();
    st.tau0 = complex_from_json(j.at("tau0"));
    st.hecke_q0 = complex_from_json(j.at("hecke_q0"));
    st.period = j.at("period").get<int>();
    st.window = params_list_from(j.at("window"));
    st.left_tail = params_list_from(j.at("left_tail"));
    st.right_tail = params_list_from(j.at("right_tail"));
    if (static_cast<int>(st.window.size()) != 2 * st.K + 1) throw SchemaError("gluing state: window size is not 2K + 1");
    if (st.left_tail.empty() || st.right_tail.empty()) throw SchemaError("gluing state: empty tail");
    if (!(st.t >= 0.0) || !(st.epsilon > 0.0) || !(st.rho > 0.0)) throw SchemaError("gluing state: bad scales");
    return st;
  });
}

Json to_json(const SolveReport& rep) {
  return Json{{"t_schedule", rep.t_schedule},
              {"iterations", rep.iterations},
              {"residual_history", rep.residual_history},
              {"final_residual", rep.final_residual}};
}

Json to_json(const std::vector<SpacingRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back(Json{{"k", r.k}, {"height", r.height}, {"spacing", r.spacing}, {"ratio", r.ratio}});
  }
  return out;
}

Json to_json(const EmbeddednessReport& rep) {
  Json slices = Json::array();
  for (const auto& s : rep.slices) {
    slices.push_back(
        Json{{"k", s.k}, {"height", s.height}, {"curves", s.curves}, {"simple", s.simple}, {"convex", s.convex}});
  }
  return Json{{"graph_ok", rep.graph_ok},
              {"min_layer_normal", rep.min_layer_normal},
              {"slices_ok", rep.slices_ok},
              {"slices", slices},
              {"intersections_ok", rep.intersections_ok},
              {"intersecting_pairs", rep.intersecting_pairs},
              {"ok", rep.ok()}};
}

Json mesh_sidecar(const SurfaceMesh& mesh, int copies, const std::vector<SpacingRow>& spacing,
                  const EmbeddednessReport& diagnostics) {
  Json frames = Json::array();
  for (const auto& f : mesh.frames) {
    frames.push_back(Json{{"k", f.k}, {"base_point", to_json(f.base_point)}, {"position", vector3(f.position)}});
  }
  Json layers = Json::array();
  for (const auto& l : mesh.layers) {
    layers.push_back(Json{{"k", l.k},
                          {"min_height", l.min_height},
                          {"max_height", l.max_height},
                          {"max_loop_residual", l.max_loop_residual},
                          {"alpha_period_error", l.alpha_period_error},
                          {"beta_period_error", l.beta_period_error}});
  }
  Json necks = Json::array();
  for (const auto& n : mesh.necks) {
    necks.push_back(Json{{"k", n.k},
                         {"center", to_json(n.center)},
                         {"waist_height", n.waist_height},
                         {"stitch_error", n.stitch_error}});
  }
  Json tags = Json::array();
  for (const auto& t : mesh.tags) {
    tags.push_back(Json::array({t.kind == VertexTag::Layer ? "layer" : "neck", t.k, t.chart}));
  }
  return Json{{"t", mesh.t},
              {"period_beta", to_json(mesh.period_beta)},
              {"copies", copies},
              {"vertices_per_copy", mesh.vertices.size()},
              {"faces_per_copy", mesh.faces.size()},
              {"frames", frames},
              {"layers", layers},
              {"necks", necks},
              {"spacing", to_json(spacing)},
              {"diagnostics", to_json(diagnostics)},
              {"vertex_tags", tags}};
}

Json to_json(const DecayReport& rep) {
  Json d = Json::array();
  Json w = Json::array();
  for (double x : rep.d) d.push_back(finite_or_null(x));
  for (double x : rep.w) w.push_back(finite_or_null(x));
  return Json{{"k", rep.k},
              {"d", d},
              {"w", w},
              {"fit_range", Json::array({rep.fit_first, rep.fit_last})},
              {"rate", finite_or_null(rep.rate)},
              {"r_squared", finite_or_null(rep.r_squared)},
              {"w_rate", finite_or_null(rep.w_rate)},
              {"w_r_squared", finite_or_null(rep.w_r_squared)},
              {"monotone", rep.monotone}};
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string decay_csv(const DecayReport& rep) {
  std::string out = "k,d,w\n";
  for (std::size_t i = 0; i < rep.k.size(); ++i) {
    out += std::to_string(rep.k[i]) + ',' + format_double(rep.d[i]) + ',' + format_double(rep.w[i]) + '\n';
  }
  return out;
}

std::string mesh_obj(const SurfaceMesh& mesh, int copies) {
  if (copies < 1) throw InputError("mesh_obj: copies must be at least 1");
  std::string out;
  out.reserve(mesh.vertices.size() * copies * copies * 60);
  out += "# stacked minimal surface mesh, t = " + format_double(mesh.t) + '\n';
  for (int i = 0; i < copies; ++i) {
    for (int j = 0; j < copies; ++j) {
      const cplx shift = static_cast<double>(i) + static_cast<double>(j) * mesh.period_beta;
      for (const auto& v : mesh.vertices) {
        out += "v " + format_double(v[0] + shift.real()) + ' ' + format_double(v[1] + shift.imag()) + ' ' +
               format_double(v[2]) + '\n';
      }
    }
  }
  const std::size_t n = mesh.vertices.size();
  for (int c = 0; c < copies * copies; ++c) {
    for (const auto& f : mesh.faces) {
      out += "f " + std::to_string(c * n + f[0] + 1) + ' ' + std::to_string(c * n + f[1] + 1) + ' ' +
             std::to_string(c * n + f[2] + 1) + '\n';
    }
  }
  return out;
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::random_device rd;
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw InputError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InputError("cannot rename onto " + path.string());
  }
}

}  // namespace stacked
