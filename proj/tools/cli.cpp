#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <iterator>
#include <regex>
#include <sstream>

#include "stacked/asymptotics.hpp"
#include "stacked/configuration.hpp"
#include "stacked/hecke.hpp"
#include "stacked/immersion.hpp"
#include "stacked/serialization.hpp"
#include "stacked/surface_solver.hpp"

namespace stacked::cli {

namespace {

cplx parse_complex(const std::string& text, const char* what) {
  std::istringstream in(text);
  double re = 0.0;
  double im = 0.0;
  char comma = 0;
  if (!(in >> re >> comma >> im) || comma != ',' || !(in >> std::ws).eof()) {
    throw InputError(std::string(what) + " must be 're,im', got '" + text + "'");
  }
  return {re, im};
}

std::vector<double> parse_schedule(const std::string& text) {
  if (text == "auto") return {};
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("--schedule must be 'auto' or a comma-separated list of t values, got '" + text + "'");
    }
  }
  return out;
}

void parse_layers(const std::string& text, int& k_first, int& k_last) {
  static const std::regex pattern(R"((-?\d+)\.\.(-?\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw InputError("--layers must be 'k0..k1', got '" + text + "'");
  k_first = std::stoi(m[1]);
  k_last = std::stoi(m[2]);
  if (k_last < k_first) throw InputError("--layers: empty range " + text);
}

std::string read_input(const std::string& path, std::istream& in) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return read_text(path);
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text_atomic(path, text);
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

SolverOptions solver_options(const JobSpec& job, std::ostream& err) {
  SolverOptions opts;
  opts.gluing.n_max = job.n_max;
  if (job.verbose) {
    opts.progress = [&err](double t, int it, double res) {
      err << "t = " << format_double(t) << "  iteration " << it << "  residual " << format_double(res) << '\n';
    };
  }
  return opts;
}

Configuration load_configuration(const JobSpec& job, std::size_t i, std::istream& in) {
  auto cfg = configuration_from_json(parse_json(read_input(job.inputs.at(i), in)));
  return job.K > 0 ? cfg.rewindowed(job.K) : cfg;
}

int run_job(const JobSpec& job, std::istream& in, std::ostream& out, std::ostream& err) {
  switch (job.command) {
    case Command::HeckeSolve: {
      const Lattice lat(job.tau);
      Json j = to_json(solve_G_equals_C(lat, job.C));
      j["tau"] = to_json(job.tau);
      emit(job.out, dump(j), out);
      return kOk;
    }
    case Command::HeckeAtlas: {
      if (job.atlas_steps < 1) throw InputError("--steps must be positive");
      std::string csv = "tau_re,tau_im,count\n";
      for (int i = 0; i <= job.atlas_steps; ++i) {
        for (int j = 0; j <= job.atlas_steps; ++j) {
          const cplx tau(job.re_min + (job.re_max - job.re_min) * i / job.atlas_steps,
                         job.im_min + (job.im_max - job.im_min) * j / job.atlas_steps);
          const auto set = solve_G_equals_C(Lattice(tau), job.C);
          csv += format_double(tau.real()) + ',' + format_double(tau.imag()) + ',' + std::to_string(set.count) + '\n';
        }
      }
      emit(job.out, csv, out);
      return kOk;
    }
    case Command::ConfigCheck: {
      const auto cfg = load_configuration(job, 0, in);
      Json j = to_json(balance_report(cfg));
      j["nondegeneracy"] = to_json(nondegeneracy_check(cfg));
      emit(job.out, dump(j), out);
      return kOk;
    }
    case Command::ConfigCatalog: {
      CatalogParams p;
      if (job.K > 0) p.K = job.K;
      p.imag_tau = job.imag_tau;
      if (job.theta > 0.0) p.theta = job.theta;
      emit(job.out, dump(to_json(catalog(job.catalog_name, p))), out);
      return kOk;
    }
    case Command::SurfaceSolve: {
      const auto cfg = load_configuration(job, 0, in);
      const auto rep = newton_continuation(cfg, job.t, parse_schedule(job.schedule), solver_options(job, err));
      const Json j{{"state", to_json(rep.state)}, {"report", to_json(rep)}, {"gluing", {{"n_max", job.n_max}}}};
      emit(job.out, dump(j), out);
      return kOk;
    }
    case Command::SurfaceMesh: {
      const Json doc = parse_json(read_input(job.inputs.at(0), in));
      const auto st = gluing_state_from_json(doc);
      GluingOptions gopts;
      gopts.n_max = doc.contains("gluing") ? doc["gluing"].value("n_max", job.n_max) : job.n_max;
      const OpenedSurface surf(st, gopts);
      const auto series = fix_omega(surf);
      MeshOptions mo;
      mo.grid_res = job.grid_res;
      mo.k_first = job.k_first;
      mo.k_last = job.k_last;
      const auto mesh = build_mesh(surf, series, mo);
      const auto diagnostics = embeddedness_diagnostics(mesh);
      const auto spacing = spacing_report(surf, series, job.k_first, job.k_last);
      const std::filesystem::path obj = job.out.empty() ? std::filesystem::path("mesh.obj") : std::filesystem::path(job.out);
      std::filesystem::path sidecar = obj;
      sidecar.replace_extension(".json");
      write_text_atomic(obj, mesh_obj(mesh, job.copies));
      write_text_atomic(sidecar, dump(mesh_sidecar(mesh, job.copies, spacing, diagnostics)));
      bool increasing = true;
      for (std::size_t i = 1; i < mesh.frames.size(); ++i) {
        increasing = increasing && mesh.frames[i].position[2] > mesh.frames[i - 1].position[2];
      }
      const Json summary{{"obj", obj.string()},
                         {"sidecar", sidecar.string()},
                         {"vertices", mesh.vertices.size() * job.copies * job.copies},
                         {"faces", mesh.faces.size() * job.copies * job.copies},
                         {"heights_increasing", increasing},
                         {"embeddedness_ok", diagnostics.ok()}};
      out << dump(summary);
      return kOk;
    }
    case Command::AsymptoticsDecay: {
      const auto periodic = load_configuration(job, 0, in);
      const auto defect = load_configuration(job, 1, in);
      PairOptions popts;
      popts.solver = solver_options(job, err);
      popts.schedule = parse_schedule(job.schedule);
      const auto pair = pair_solve(periodic, defect, job.t, popts);
      const auto rep = decay_fit(pair);
      Json j = to_json(rep);
      j["t"] = job.t;
      j["periodic_residual"] = pair.periodic_residual;
      j["defect_residual"] = pair.defect_residual;
      if (job.tpms_shifts >= 0) {
        MeshOptions mo;
        mo.grid_res = job.grid_res;
        j["tpms_distances"] = tpms_distances(pair, job.tpms_shifts, mo);
      }
      emit(job.out, dump(j), out);
      std::string csv_path = job.csv_out;
      if (csv_path.empty() && !job.out.empty()) {
        csv_path = std::filesystem::path(job.out).replace_extension(".csv").string();
      }
      if (!csv_path.empty()) write_text_atomic(csv_path, decay_csv(rep));
      return kOk;
    }
  }
  return kUsageError;
}

}  // namespace

bool parse_job(const std::vector<std::string>& args, JobSpec& job, std::ostream& out) {
  CLI::App app{"Stacked doubly periodic minimal surfaces by node opening", "stacked"};
  app.require_subcommand(1);
  std::string tau_text = "0,1";
  std::string C_text = "0,0";
  std::string layers_text = "-1..1";

  auto* hecke = app.add_subcommand("hecke", "Solutions of G(q; tau) = C")->require_subcommand(1);
  auto* hecke_solve = hecke->add_subcommand("solve", "All solutions for one tau as JSON");
  hecke_solve->add_option("--tau", tau_text, "Modulus as re,im");
  hecke_solve->add_option("--C", C_text, "Right-hand side as re,im");
  hecke_solve->add_option("--out", job.out, "Output file");
  auto* atlas = hecke->add_subcommand("atlas", "Solution counts over a tau rectangle as CSV");
  atlas->add_option("--re-min", job.re_min);
  atlas->add_option("--re-max", job.re_max);
  atlas->add_option("--im-min", job.im_min);
  atlas->add_option("--im-max", job.im_max);
  atlas->add_option("--steps", job.atlas_steps, "Grid intervals per direction");
  atlas->add_option("--C", C_text, "Right-hand side as re,im");
  atlas->add_option("--out", job.out, "Output file");

  auto* config = app.add_subcommand("config", "Stacking configurations")->require_subcommand(1);
  auto* check = config->add_subcommand("check", "Balance and nondegeneracy report as JSON");
  check->add_option("file", job.inputs, "Configuration JSON, - for standard input")->required()->expected(1);
  check->add_option("--out", job.out, "Output file");
  auto* cat = config->add_subcommand("catalog", "Emit a catalog configuration as JSON");
  cat->add_option("name", job.catalog_name, "Catalog name")->required();
  cat->add_option("--K", job.K, "Window half-width");
  cat->add_option("--imag-tau", job.imag_tau, "Im(tau) of the rectangular families");
  cat->add_option("--theta", job.theta, "Argument of tau of the rhombic families");
  cat->add_option("--out", job.out, "Output file");

  auto* surface = app.add_subcommand("surface", "Gluing solve and mesh export")->require_subcommand(1);
  auto* solve = surface->add_subcommand("solve", "Newton continuation to t; state and report as JSON");
  solve->add_option("config", job.inputs, "Configuration JSON, - for standard input")->required()->expected(1);
  solve->add_option("--t", job.t, "Gluing scale")->required();
  solve->add_option("--schedule", job.schedule, "auto or comma-separated increasing t values");
  solve->add_option("--K", job.K, "Window half-width");
  solve->add_option("--n-max", job.n_max, "Highest second-kind order");
  solve->add_option("--out", job.out, "Output file");
  solve->add_flag("--verbose", job.verbose, "Stream residual histories to standard error");
  auto* mesh = surface->add_subcommand("mesh", "Triangulated surface as OBJ plus JSON sidecar");
  mesh->add_option("state", job.inputs, "Solved state JSON, - for standard input")->required()->expected(1);
  mesh->add_option("--layers", layers_text, "Layer range k0..k1");
  mesh->add_option("--copies", job.copies, "Lattice copies per direction");
  mesh->add_option("--grid-res", job.grid_res, "Torus grid resolution per layer");
  mesh->add_option("--n-max", job.n_max, "Highest second-kind order when the state does not record it");
  mesh->add_option("--out", job.out, "OBJ path; the sidecar uses the .json extension");

  auto* asym = app.add_subcommand("asymptotics", "Decay of defects toward the periodic surface")->require_subcommand(1);
  auto* decay = asym->add_subcommand("decay", "Paired solve and decay fit");
  decay->add_option("configs", job.inputs, "Periodic configuration JSON, then the defect")->required()->expected(2);
  decay->add_option("--t", job.t, "Gluing scale")->required();
  decay->add_option("--schedule", job.schedule, "auto or comma-separated increasing t values");
  decay->add_option("--K", job.K, "Window half-width");
  decay->add_option("--n-max", job.n_max, "Highest second-kind order");
  decay->add_option("--tpms", job.tpms_shifts, "Also compare meshes for shifts 0..n");
  decay->add_option("--grid-res", job.grid_res, "Torus grid resolution for --tpms meshes");
  decay->add_option("--csv", job.csv_out, "CSV path for (k, d, w)");
  decay->add_option("--out", job.out, "JSON output file");
  decay->add_flag("--verbose", job.verbose, "Stream residual histories to standard error");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, out);
    return false;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, out);
    return false;
  } catch (const CLI::ParseError& e) {
    throw InputError(e.what());
  }

  if (hecke_solve->parsed()) job.command = Command::HeckeSolve;
  if (atlas->parsed()) job.command = Command::HeckeAtlas;
  if (check->parsed()) job.command = Command::ConfigCheck;
  if (cat->parsed()) job.command = Command::ConfigCatalog;
  if (solve->parsed()) job.command = Command::SurfaceSolve;
  if (mesh->parsed()) job.command = Command::SurfaceMesh;
  if (decay->parsed()) job.command = Command::AsymptoticsDecay;
  job.tau = parse_complex(tau_text, "--tau");
  job.C = parse_complex(C_text, "--C");
  parse_layers(layers_text, job.k_first, job.k_last);
  parse_schedule(job.schedule);
  if (job.copies < 1 || job.copies > 16) throw InputError("--copies must be in [1, 16]");
  if (job.grid_res < 8) throw InputError("--grid-res must be at least 8");
  if (job.n_max < 2) throw InputError("--n-max must be at least 2");
  if (!(job.t > 0.0)) throw InputError("--t must be positive");
  return true;
}

int run(const JobSpec& job, std::istream& in, std::ostream& out, std::ostream& err) {
  try {
    return run_job(job, in, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

int main_entry(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  JobSpec job;
  try {
    if (!parse_job(args, job, out)) return kOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return run(job, in, out, err);
}

}  // namespace stacked::cli
