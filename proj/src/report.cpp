#include "crossfit/report.hpp"

#include <cstdio>
#include <ctime>

namespace crossfit {

std::string repr17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string iso_timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* plan_kind_name(PlanKind kind) {
  switch (kind) {
    case PlanKind::plugin: return "plugin";
    case PlanKind::single_cf_dr: return "single_cf_dr";
    case PlanKind::dcdr: return "dcdr";
  }
  return "?";
}

Json plan_to_json(const SplitPlan& plan) {
  Json j;
  j["n"] = plan.n;
  j["kind"] = plan_kind_name(plan.kind);
  j["partition"] = plan.partition;
  Json groups = Json::array();
  for (const GroupSplit& g : plan.groups) {
    Json gj;
    gj["eval"] = g.eval_idx;
    gj["gamma"] = g.gamma_idx;
    gj["alpha"] = g.alpha_idx;
    groups.push_back(std::move(gj));
  }
  j["groups"] = std::move(groups);
  return j;
}

Json gram_to_json(const GramSummary& s) {
  Json j;
  j["rank"] = s.rank;
  j["min_eig"] = s.min_eig;
  j["max_eig"] = s.max_eig;
  j["nonsingular"] = s.nonsingular;
  j["half_gate"] = s.half_gate;
  j["n_used"] = s.n_used;
  return j;
}

Json estimate_to_json(const EstimateResult& res) {
  Json j;
  std::vector<double> beta(res.beta.data(), res.beta.data() + res.beta.size());
  j["beta"] = beta;
  Json repr = Json::array();
  for (double b : beta) repr.push_back(repr17(b));
  j["beta_repr"] = std::move(repr);
  std::vector<double> se(res.se.data(), res.se.data() + res.se.size());
  j["se"] = se;
  Json ci = Json::array();
  for (Eigen::Index i = 0; i < res.ci95.rows(); ++i)
    ci.push_back(Json::array({res.ci95(i, 0), res.ci95(i, 1)}));
  j["ci95"] = std::move(ci);
  j["plan_kind"] = plan_kind_name(res.plan_kind);
  j["K"] = res.K;
  j["n"] = res.n;
  Json groups = Json::array();
  for (const GroupDiagnostics& g : res.groups) {
    Json gj;
    gj["group"] = g.group;
    if (g.gamma_gram) gj["gamma_gram"] = gram_to_json(*g.gamma_gram);
    if (g.alpha_gram) gj["alpha_gram"] = gram_to_json(*g.alpha_gram);
    groups.push_back(std::move(gj));
  }
  j["groups"] = std::move(groups);
  return j;
}

namespace {

Json mc_config_to_json(const McConfig& c) {
  Json j;
  j["n"] = c.n;
  j["cells"] = c.cells_per_dim;
  j["kappa"] = c.kappa;
  j["normalization"] = c.normalization == Normalization::uniform_design ? "uniform_design" : "none";
  j["folds"] = c.folds;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  return j;
}

}  // namespace

Json mc_to_json(const MonteCarloReport& report) {
  Json j;
  j["dgp"] = report.dgp;
  j["beta0"] = report.beta0;
  j["K"] = report.K;
  j["config"] = mc_config_to_json(report.config);
  Json stats = Json::array();
  for (const McEstimatorStats& s : report.stats) {
    Json sj;
    sj["estimator"] = s.label;
    sj["mean_bias"] = s.mean_bias;
    sj["mean_bias_repr"] = repr17(s.mean_bias);
    sj["mc_se"] = s.mc_se;
    sj["sd"] = s.sd;
    sj["sd_defined"] = s.sd_defined;
    sj["rmse"] = s.rmse;
    sj["coverage"] = s.coverage;
    sj["mean_se"] = s.mean_se;
    stats.push_back(std::move(sj));
  }
  j["estimators"] = std::move(stats);
  return j;
}

Json rate_to_json(const RateReport& report) {
  Json j;
  j["dgp"] = report.dgp;
  j["estimator"] = report.estimator_label;
  j["k_rule"] = {{"c", report.rule.c}, {"exponent", report.rule.exponent}};
  j["config"] = mc_config_to_json(report.base);
  Json cells = Json::array();
  for (const RateCell& c : report.cells) {
    Json cj;
    cj["n"] = c.n;
    cj["K"] = c.K;
    cj["cells"] = c.cells_per_dim;
    cj["rmse"] = c.rmse;
    cj["abs_bias"] = c.abs_bias;
    cells.push_back(std::move(cj));
  }
  j["grid"] = std::move(cells);
  j["slope"] = report.slope;
  j["slope_se"] = report.slope_se;
  j["target_slope"] = report.target_slope;
  return j;
}

}  // namespace crossfit
