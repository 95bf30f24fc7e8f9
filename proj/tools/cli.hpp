#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stacked/types.hpp"

namespace stacked::cli {

enum class Command { HeckeSolve, HeckeAtlas, ConfigCheck, ConfigCatalog, SurfaceSolve, SurfaceMesh, AsymptoticsDecay };

enum ExitCode { kOk = 0, kNumericalFailure = 1, kUsageError = 2 };

struct JobSpec {
  Command command = Command::ConfigCatalog;
  std::vector<std::string> inputs;  // file paths, "-" reads standard input
  std::string catalog_name;

  cplx tau{0.0, 1.0};
  cplx C{0.0, 0.0};
  double re_min = -0.5;
  double re_max = 0.5;
  double im_min = 0.6;
  double im_max = 2.0;
  int atlas_steps = 8;

  double t = 0.01;
  std::string schedule = "auto";
  int K = -1;  // keep the window of the input
  double imag_tau = 1.3;
  double theta = -1.0;  // unset
  int n_max = 8;
  int grid_res = 64;
  int k_first = -1;
  int k_last = 1;
  int copies = 1;
  int tpms_shifts = -1;  // no comparison

  std::string out;      // empty writes to standard output
  std::string csv_out;  // asymptotics decay table
  bool verbose = false;
};

/// Parses the command line (without the program name) into a job.
/// Throws InputError on usage errors; returns false when only help was requested.
bool parse_job(const std::vector<std::string>& args, JobSpec& job, std::ostream& out);

/// Runs a job; returns the process exit code and reports errors on `err`.
int run(const JobSpec& job, std::istream& in, std::ostream& out, std::ostream& err);

/// parse_job followed by run, mapping usage errors to exit code 2.
int main_entry(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace stacked::cli
