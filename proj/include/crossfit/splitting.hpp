#pragma once

#include <cstdint>
#include <vector>

namespace crossfit {

enum class PlanKind { plugin, single_cf_dr, dcdr };

// Index sets for one group: the estimator averages over eval_idx, the
// regression trains on gamma_idx, and (for dcdr plans) the representer trains
// on alpha_idx. Indices are 0-based.
struct GroupSplit {
  std::vector<int> eval_idx;
  std::vector<int> gamma_idx;
  std::vector<int> alpha_idx;
};

struct SplitPlan {
  int n = 0;
  PlanKind kind = PlanKind::plugin;
  std::vector<GroupSplit> groups;
  bool partition = false;  // eval sets cover every observation exactly once
};

struct PlanDiagnostics {
  bool disjoint = false;   // roles within each group are pairwise disjoint
  bool coverage = false;   // eval sets partition the sample
  bool size_ok = false;    // every role set has at least floor(min_frac * n) points
  bool roles_ok = false;   // role sets present as the kind requires
};

// Seeded Fisher-Yates shuffle into L near-equal contiguous folds; group l
// evaluates on fold l and trains the regression on the complement.
SplitPlan make_plugin_plan(int n, int L, std::uint64_t seed);

// Same folds as the plugin plan but both nuisances train on the complement.
SplitPlan make_single_cf_plan(int n, int L, std::uint64_t seed);

// Three disjoint roles per group: evaluate on fold l, then split the
// complement (taken in cyclic fold order) into a gamma run and an alpha run.
SplitPlan make_dcdr_plan(int n, int L, std::uint64_t seed);

// Deterministic variants taking an explicit permutation of 0..n-1.
SplitPlan make_plugin_plan_from_order(const std::vector<int>& order, int L);
SplitPlan make_dcdr_plan_from_order(const std::vector<int>& order, int L);

// Single group with eval = gamma = the whole sample. Only sensible for
// functionals whose m does not depend on the observation's own response.
SplitPlan make_full_sample_plan(int n);

SplitPlan make_custom_plan(int n, PlanKind kind, std::vector<GroupSplit> groups);

// min_frac <= 0 selects the default bound 1/(2L).
PlanDiagnostics validate_plan(const SplitPlan& plan, double min_frac = 0.0);

}  // namespace crossfit
