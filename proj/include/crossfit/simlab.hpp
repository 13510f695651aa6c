#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossfit/estimators.hpp"
#include "crossfit/functionals.hpp"
#include "crossfit/rng.hpp"

namespace crossfit {

// A named data-generating process with analytic truth. Covariates are uniform
// on [0,1]^r; the smoothness fields document the intended Holder orders of the
// nuisance components and are not enforced anywhere.
struct DgpSpec {
  std::string name;
  FunctionalKind kind = FunctionalKind::expected_conditional_covariance;
  int r = 1;
  double beta0 = 0.0;
  double s_gamma = 0.0;
  double s_alpha = 0.0;
  TrueNuisances truth;
  std::string omega_name;  // weighted average derivative only

  // Draws one observation, consuming a fixed number of variates per call.
  std::function<Observation(Rng&)> draw;
};

// Built-in family: ecc_smooth, ecc_bounded, md_smooth, wad_smooth, pl_smooth.
DgpSpec make_dgp(const std::string& name);
std::vector<std::string> dgp_names();

Dataset generate(const DgpSpec& dgp, int n, std::uint64_t seed);

double true_beta(const DgpSpec& dgp);

// The functional this process identifies, with built-in weights for the
// average derivative.
FunctionalSpec functional_for(const DgpSpec& dgp);

enum class EstimatorKind {
  plugin_no_split,
  cf_plugin,
  single_cf_dr,
  dcdr,
  pl_projection,
  hoif_q0,
  hoif_q1,
};

const char* estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

// Where each nuisance comes from in a simulation run: the series fit, the
// known truth, or a deliberately wrong fixed function (for double-robustness
// checks). For the higher-order estimator `estimate` means the documented
// zero default.
enum class NuisanceSource { estimate, truth, wrong };

const char* source_name(NuisanceSource s);
NuisanceSource source_from_name(const std::string& name);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::dcdr;
  NuisanceSource gamma_source = NuisanceSource::estimate;
  NuisanceSource alpha_source = NuisanceSource::estimate;
  std::string label;  // report key; defaults to estimator_name(kind)
};

NuisanceOverride make_override(const DgpSpec& dgp, NuisanceSource gamma_source,
                               NuisanceSource alpha_source);

// First fold of a seeded L-fold split, used as the higher-order estimator's
// training sample.
std::vector<int> hoif_training_fold(int n, int folds, std::uint64_t seed);

// One estimator run on given data: builds the plan its kind needs from
// plan_seed and dispatches. hoif_* kinds take initial nuisances as functions
// of x (empty means zero).
EstimateResult dispatch_estimator(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                                  EstimatorKind kind, int folds, std::uint64_t plan_seed,
                                  const EstimatorOptions& opt, const ScalarFn& hoif_gamma = {},
                                  const ScalarFn& hoif_alpha = {});

struct McConfig {
  int n = 500;
  int cells_per_dim = 4;
  int kappa = 0;
  Normalization normalization = Normalization::uniform_design;
  int folds = 3;
  int reps = 200;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 means all hardware threads
  bool require_nonsingular = false;
};

struct McEstimatorStats {
  std::string label;
  double mean_bias = 0.0;
  double mc_se = 0.0;  // standard error of mean_bias: sd / sqrt(reps)
  double sd = 0.0;     // 1/R variance convention, so rmse^2 = bias^2 + sd^2
  double rmse = 0.0;
  double coverage = 0.0;
  double mean_se = 0.0;
  bool sd_defined = true;  // false when reps == 1
};

struct MonteCarloReport {
  std::string dgp;
  double beta0 = 0.0;
  McConfig config;
  int K = 0;
  std::vector<McEstimatorStats> stats;
};

// R replications with per-replication derived seeds; deterministic given the
// master seed regardless of the thread count.
MonteCarloReport run_monte_carlo(const DgpSpec& dgp, const std::vector<EstimatorConfig>& estimators,
                                 const McConfig& cfg);

// K = round(c * n^exponent), then converted to per-dim cells for the basis.
struct KRule {
  double c = 2.0;
  double exponent = 1.0 / 3.0;
};

int cells_for_target_k(int k_target, int r, int kappa);

struct RateCell {
  int n = 0;
  int K = 0;
  int cells_per_dim = 0;
  double rmse = 0.0;
  double abs_bias = 0.0;
};

struct RateReport {
  std::string dgp;
  std::string estimator_label;
  std::vector<RateCell> cells;
  double slope = 0.0;     // OLS slope of log rmse on log n
  double slope_se = 0.0;
  double target_slope = -0.5;
  KRule rule;
  McConfig base;
};

// Monte Carlo per grid point, then ordinary least squares of log RMSE on
// log n. Needs at least three strictly increasing n values.
RateReport rate_sweep(const DgpSpec& dgp, const EstimatorConfig& estimator,
                      const std::vector<int>& n_grid, const KRule& rule, const McConfig& base);

// Shared worker pool used by the replication engine. Runs body(0..count-1);
// any exceptions are rethrown in index order after all workers finish.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace crossfit
