#include "crossfit/splitting.hpp"

#include <algorithm>
#include <numeric>

#include "crossfit/errors.hpp"
#include "crossfit/rng.hpp"

namespace crossfit {

namespace {

std::vector<int> shuffled_order(int n, std::uint64_t seed) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

// Fold f gets a contiguous block of the order; the first n % L folds are one
// element longer.
std::vector<std::vector<int>> contiguous_folds(const std::vector<int>& order, int L) {
  const int n = static_cast<int>(order.size());
  std::vector<std::vector<int>> folds(L);
  const int base = n / L;
  const int extra = n % L;
  int pos = 0;
  for (int f = 0; f < L; ++f) {
    const int len = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + pos, order.begin() + pos + len);
    std::sort(folds[f].begin(), folds[f].end());
    pos += len;
  }
  return folds;
}

std::vector<int> sorted_union(const std::vector<std::vector<int>>& folds,
                              const std::vector<int>& which) {
  std::vector<int> out;
  for (int f : which) out.insert(out.end(), folds[f].begin(), folds[f].end());
  std::sort(out.begin(), out.end());
  return out;
}

void check_order(const std::vector<int>& order) {
  std::vector<int> seen(order.size(), 0);
  for (int v : order) {
    if (v < 0 || v >= static_cast<int>(order.size()) || seen[v]++)
      throw Error("INVALID_SPEC", "order is not a permutation of 0..n-1");
  }
}

SplitPlan plugin_from_folds(const std::vector<std::vector<int>>& folds, int n, PlanKind kind) {
  const int L = static_cast<int>(folds.size());
  SplitPlan plan;
  plan.n = n;
  plan.kind = kind;
  plan.partition = true;
  for (int l = 0; l < L; ++l) {
    GroupSplit g;
    g.eval_idx = folds[l];
    std::vector<int> rest;
    for (int f = 0; f < L; ++f)
      if (f != l) rest.push_back(f);
    g.gamma_idx = sorted_union(folds, rest);
    if (kind == PlanKind::single_cf_dr) g.alpha_idx = g.gamma_idx;
    plan.groups.push_back(std::move(g));
  }
  return plan;
}

SplitPlan dcdr_from_folds(const std::vector<std::vector<int>>& folds, int n) {
  const int L = static_cast<int>(folds.size());
  SplitPlan plan;
  plan.n = n;
  plan.kind = PlanKind::dcdr;
  plan.partition = true;
  const int gamma_folds = (L - 1 + 1) / 2;  // ceil((L-1)/2)
  for (int l = 0; l < L; ++l) {
    GroupSplit g;
    g.eval_idx = folds[l];
    std::vector<int> gamma_run, alpha_run;
    for (int s = 1; s < L; ++s) {
      const int f = (l + s) % L;
      (s <= gamma_folds ? gamma_run : alpha_run).push_back(f);
    }
    g.gamma_idx = sorted_union(folds, gamma_run);
    g.alpha_idx = sorted_union(folds, alpha_run);
    plan.groups.push_back(std::move(g));
  }
  return plan;
}

}  // namespace

SplitPlan make_plugin_plan(int n, int L, std::uint64_t seed) {
  if (L < 2) throw Error("INVALID_SPEC", "plugin plan needs L >= 2");
  if (n < L) throw Error("INVALID_SPEC", "plugin plan needs n >= L");
  return plugin_from_folds(contiguous_folds(shuffled_order(n, seed), L), n, PlanKind::plugin);
}

SplitPlan make_single_cf_plan(int n, int L, std::uint64_t seed) {
  if (L < 2) throw Error("INVALID_SPEC", "single cross-fit plan needs L >= 2");
  if (n < L) throw Error("INVALID_SPEC", "single cross-fit plan needs n >= L");
  return plugin_from_folds(contiguous_folds(shuffled_order(n, seed), L), n,
                           PlanKind::single_cf_dr);
}

SplitPlan make_dcdr_plan(int n, int L, std::uint64_t seed) {
  if (L < 3) throw Error("INVALID_SPEC", "dcdr plan needs L >= 3");
  if (n < L) throw Error("INVALID_SPEC", "dcdr plan needs n >= L");
  return dcdr_from_folds(contiguous_folds(shuffled_order(n, seed), L), n);
}

SplitPlan make_plugin_plan_from_order(const std::vector<int>& order, int L) {
  check_order(order);
  const int n = static_cast<int>(order.size());
  if (L < 2 || n < L) throw Error("INVALID_SPEC", "plugin plan needs 2 <= L <= n");
  return plugin_from_folds(contiguous_folds(order, L), n, PlanKind::plugin);
}

SplitPlan make_dcdr_plan_from_order(const std::vector<int>& order, int L) {
  check_order(order);
  const int n = static_cast<int>(order.size());
  if (L < 3 || n < L) throw Error("INVALID_SPEC", "dcdr plan needs 3 <= L <= n");
  return dcdr_from_folds(contiguous_folds(order, L), n);
}

SplitPlan make_full_sample_plan(int n) {
  if (n < 1) throw Error("INVALID_SPEC", "plan needs n >= 1");
  SplitPlan plan;
  plan.n = n;
  plan.kind = PlanKind::plugin;
  plan.partition = true;
  GroupSplit g;
  g.eval_idx.resize(n);
  std::iota(g.eval_idx.begin(), g.eval_idx.end(), 0);
  g.gamma_idx = g.eval_idx;
  plan.groups.push_back(std::move(g));
  return plan;
}

SplitPlan make_custom_plan(int n, PlanKind kind, std::vector<GroupSplit> groups) {
  if (n < 1) throw Error("INVALID_SPEC", "plan needs n >= 1");
  if (groups.empty()) throw Error("INVALID_SPEC", "plan needs at least one group");
  SplitPlan plan;
  plan.n = n;
  plan.kind = kind;
  plan.groups = std::move(groups);
  for (auto& g : plan.groups) {
    for (auto* role : {&g.eval_idx, &g.gamma_idx, &g.alpha_idx}) {
      for (int v : *role)
        if (v < 0 || v >= n) throw Error("INVALID_SPEC", "plan index out of range");
      std::sort(role->begin(), role->end());
      if (std::adjacent_find(role->begin(), role->end()) != role->end())
        throw Error("INVALID_SPEC", "duplicate index within a role set");
    }
    if (g.eval_idx.empty()) throw Error("INVALID_SPEC", "each group needs evaluation points");
  }
  std::vector<int> count(n, 0);
  for (const auto& g : plan.groups)
    for (int v : g.eval_idx) ++count[v];
  plan.partition = std::all_of(count.begin(), count.end(), [](int c) { return c == 1; });
  return plan;
}

PlanDiagnostics validate_plan(const SplitPlan& plan, double min_frac) {
  PlanDiagnostics d;
  const int n = plan.n;
  const int L = static_cast<int>(plan.groups.size());
  if (n < 1 || L < 1) return d;
  if (min_frac <= 0.0) min_frac = 1.0 / (2.0 * L);
  const int min_size = static_cast<int>(min_frac * n);

  d.disjoint = true;
  d.size_ok = true;
  d.roles_ok = true;
  std::vector<int> eval_count(n, 0);
  for (const auto& g : plan.groups) {
    for (int v : g.eval_idx) ++eval_count[v];
    std::vector<int> mark(n, 0);
    auto overlap = [&](const std::vector<int>& s) {
      bool any = false;
      for (int v : s) any |= mark[v]++ != 0;
      return any;
    };
    if (overlap(g.eval_idx)) d.disjoint = false;
    if (overlap(g.gamma_idx)) d.disjoint = false;
    if (plan.kind == PlanKind::dcdr && overlap(g.alpha_idx)) d.disjoint = false;

    if (static_cast<int>(g.eval_idx.size()) < std::max(1, min_size)) d.size_ok = false;
    if (static_cast<int>(g.gamma_idx.size()) < std::max(1, min_size)) d.size_ok = false;
    if (g.gamma_idx.empty()) d.roles_ok = false;
    if (plan.kind == PlanKind::dcdr) {
      if (static_cast<int>(g.alpha_idx.size()) < std::max(1, min_size)) d.size_ok = false;
      if (g.alpha_idx.empty()) d.roles_ok = false;
    }
    if (plan.kind == PlanKind::single_cf_dr && g.alpha_idx != g.gamma_idx) d.roles_ok = false;
  }
  d.coverage = std::all_of(eval_count.begin(), eval_count.end(), [](int c) { return c == 1; });
  return d;
}

}  // namespace crossfit
