#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossfit/report.hpp"

namespace crossfit {

const char* functional_name(FunctionalKind kind);
FunctionalKind functional_from_name(const std::string& name);

// Everything one invocation needs, whether it came from flags or a config
// file. Validated in run().
struct RunConfig {
  std::string mode;  // estimate | simulate | rates

  std::string functional = "ecc";
  std::string estimator = "dcdr";  // comma-separated list in simulate mode
  int kappa = 0;
  int cells = 4;
  std::string normalization = "uniform_design";
  int folds = 3;
  std::uint64_t seed = 1;
  std::string omega = "poly_bump";
  bool require_nonsingular = false;

  // estimate mode
  std::string data_path;
  bool rescale = false;

  // simulate / rates modes
  std::string dgp = "ecc_smooth";
  int n = 1000;
  int reps = 200;
  std::string gamma_source = "estimate";
  std::string alpha_source = "estimate";
  std::vector<int> n_grid;
  double k_c = 2.0;
  double k_exponent = 1.0 / 3.0;
  int threads = 0;

  std::string out_path;  // empty writes to stdout
};

// Executes the configured pipeline and returns the full report. Throws Error
// with a stable code on any failure.
Json run(const RunConfig& cfg);

// run() plus serialization: writes the report (or a machine-readable error
// object) to the configured destination and returns the process exit code.
int run_to_file(const RunConfig& cfg);

}  // namespace crossfit
