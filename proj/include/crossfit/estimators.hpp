#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "crossfit/functionals.hpp"
#include "crossfit/linreg.hpp"
#include "crossfit/splitting.hpp"

namespace crossfit {

// Frozen nuisances replacing the fitted ones. gamma is a function of the
// covariate vector (gamma(1, w) for missing-data); alpha gets the full
// observation because its missing-data form carries the a factor.
struct NuisanceOverride {
  ScalarFn gamma;
  std::function<double(const Observation&)> alpha;
};

struct EstimatorOptions {
  double eig_threshold = kEigThreshold;
  double rel_tol = kPinvRelTol;
  // With the gate on, any training gram whose smallest eigenvalue fails the
  // threshold aborts the estimate instead of relying on the truncated
  // pseudo-inverse.
  bool require_nonsingular = false;
  NuisanceOverride override_nuisance{};
};

struct GroupDiagnostics {
  int group = 0;
  std::optional<GramSummary> gamma_gram;
  std::optional<GramSummary> alpha_gram;
};

struct EstimateResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd influence;    // one row per evaluation observation
  std::vector<int> eval_index;  // original observation index per influence row
  Eigen::VectorXd se;
  Eigen::MatrixXd ci95;         // rows (lo, hi) per beta component
  std::vector<GroupDiagnostics> groups;
  PlanKind plan_kind = PlanKind::plugin;
  int K = 0;
  int n = 0;

  // partially linear projection extras (empty otherwise)
  Eigen::MatrixXd pl_h;
  Eigen::VectorXd pl_numerator;

  double scalar() const { return beta(0); }
};

// Full-sample series plug-in; biased for own-observation functionals and kept
// as the baseline for comparisons.
EstimateResult plugin_no_split(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                               const EstimatorOptions& opt = {});

// Cross-fit plug-in: average m(z_i, gamma_l) with gamma_l trained off-fold.
EstimateResult cf_plugin(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                         const SplitPlan& plan, const EstimatorOptions& opt = {});

// Doubly robust estimate: m(z_i, gamma_l) + alpha_l(x_i)(y_i - gamma_l(x_i))
// with the representer trained on gamma's fold (single_cf_dr) or on its own
// disjoint fold (dcdr).
EstimateResult dr_estimate(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                           const SplitPlan& plan, const EstimatorOptions& opt = {});

// Partially linear projection of y on a: a ratio of residual cross-moments
// with all three nuisances cross-fit on a dcdr plan.
EstimateResult pl_projection(const Basis& basis, const Dataset& data, const SplitPlan& plan,
                             const EstimatorOptions& opt = {});

// Empirical higher-order estimate for the expected conditional covariance.
// q_order 0 keeps the pairwise correction; q_order 1 adds the three-index
// term. The second-moment matrix is estimated on the training fold, the sums
// run over its complement, and gamma_hat / alpha_hat default to zero.
EstimateResult hoif_ecc(const Dataset& data, const Basis& basis,
                        const std::vector<int>& training_idx, int q_order,
                        const EstimatorOptions& opt = {}, ScalarFn gamma_hat = {},
                        ScalarFn alpha_hat = {});

// sqrt( (1/n^2) * sum (psi_i - mean)^2 )
double influence_se(const Eigen::VectorXd& psi);

std::array<double, 2> ci95_interval(double beta, double se);

}  // namespace crossfit
