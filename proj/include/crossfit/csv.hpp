#pragma once

#include <array>
#include <string>
#include <vector>

#include "crossfit/functionals.hpp"

namespace crossfit {

struct CsvOptions {
  // Min-max rescale covariates into [0,1]. Off by default: out-of-range
  // covariates are then a fatal ingestion error.
  bool rescale = false;
};

struct LoadedData {
  Dataset data;
  bool rescaled = false;
  // Observed (min, max) per covariate column, recorded when rescaling.
  std::vector<std::array<double, 2>> covariate_range;
};

// Header-row CSV with columns y, a (a1..ad for the partially linear kind,
// optional for the average derivative) and x1..xr (w1..wr for missing data).
LoadedData load_csv(const std::string& path, FunctionalKind kind, const CsvOptions& opt = {});

LoadedData parse_csv(const std::string& text, FunctionalKind kind, const CsvOptions& opt = {});

void write_csv(const std::string& path, const Dataset& data, FunctionalKind kind);

}  // namespace crossfit
