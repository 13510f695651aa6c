#include "crossfit/runner.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "crossfit/csv.hpp"
#include "crossfit/errors.hpp"

namespace crossfit {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Normalization normalization_from_name(const std::string& name) {
  if (name == "none") return Normalization::none;
  if (name == "uniform_design") return Normalization::uniform_design;
  throw Error("INVALID_SPEC", "unknown normalization '" + name + "'");
}

int effective_threads(int flag_threads) {
  const char* env = std::getenv("CROSSFIT_THREADS");
  if (env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != nullptr && *end == '\0' && v >= 0) return static_cast<int>(v);
  }
  return flag_threads;
}

Json config_echo(const RunConfig& cfg) {
  Json j;
  j["mode"] = cfg.mode;
  j["functional"] = cfg.functional;
  j["estimator"] = cfg.estimator;
  j["kappa"] = cfg.kappa;
  j["cells"] = cfg.cells;
  j["normalization"] = cfg.normalization;
  j["folds"] = cfg.folds;
  j["seed"] = cfg.seed;
  j["omega"] = cfg.omega;
  j["require_nonsingular"] = cfg.require_nonsingular;
  j["data"] = cfg.data_path;
  j["rescale"] = cfg.rescale;
  j["dgp"] = cfg.dgp;
  j["n"] = cfg.n;
  j["reps"] = cfg.reps;
  j["gamma_source"] = cfg.gamma_source;
  j["alpha_source"] = cfg.alpha_source;
  j["n_grid"] = cfg.n_grid;
  j["k_c"] = cfg.k_c;
  j["k_exponent"] = cfg.k_exponent;
  j["threads"] = cfg.threads;
  j["out"] = cfg.out_path;
  return j;
}

Json run_estimate(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw Error("INVALID_SPEC", "estimate mode needs a data file");
  const FunctionalKind kind = functional_from_name(cfg.functional);
  const EstimatorKind est = estimator_from_name(cfg.estimator);

  const bool est_is_pl = est == EstimatorKind::pl_projection;
  const bool est_is_hoif = est == EstimatorKind::hoif_q0 || est == EstimatorKind::hoif_q1;
  if (est_is_pl != (kind == FunctionalKind::partially_linear))
    throw Error("INVALID_SPEC", "the pl estimator and the pl functional go together");
  if (est_is_hoif && kind != FunctionalKind::expected_conditional_covariance)
    throw Error("INVALID_SPEC", "hoif estimators only apply to ecc");

  const LoadedData loaded = load_csv(cfg.data_path, kind, CsvOptions{cfg.rescale});
  const int r = loaded.data.r();
  FunctionalSpec f;
  switch (kind) {
    case FunctionalKind::expected_conditional_covariance: f = make_ecc(); break;
    case FunctionalKind::missing_data_mean: f = make_missing_data(); break;
    case FunctionalKind::weighted_average_derivative:
      f = make_weighted_avg_derivative_named(cfg.omega, r);
      break;
    case FunctionalKind::partially_linear: f = make_partially_linear(); break;
  }
  const Basis basis =
      build_basis({r, cfg.kappa, cfg.cells, normalization_from_name(cfg.normalization)});

  EstimatorOptions opt;
  opt.require_nonsingular = cfg.require_nonsingular;

  EstimateResult res;
  Json plan_json;
  const int n = loaded.data.n();
  switch (est) {
    case EstimatorKind::plugin_no_split: {
      res = plugin_no_split(f, basis, loaded.data, opt);
      plan_json["kind"] = "full_sample";
      break;
    }
    case EstimatorKind::cf_plugin: {
      const SplitPlan plan = make_plugin_plan(n, cfg.folds, cfg.seed);
      res = cf_plugin(f, basis, loaded.data, plan, opt);
      plan_json = plan_to_json(plan);
      break;
    }
    case EstimatorKind::single_cf_dr: {
      const SplitPlan plan = make_single_cf_plan(n, cfg.folds, cfg.seed);
      res = dr_estimate(f, basis, loaded.data, plan, opt);
      plan_json = plan_to_json(plan);
      break;
    }
    case EstimatorKind::dcdr: {
      const SplitPlan plan = make_dcdr_plan(n, cfg.folds, cfg.seed);
      res = dr_estimate(f, basis, loaded.data, plan, opt);
      plan_json = plan_to_json(plan);
      break;
    }
    case EstimatorKind::pl_projection: {
      const SplitPlan plan = make_dcdr_plan(n, cfg.folds, cfg.seed);
      res = pl_projection(basis, loaded.data, plan, opt);
      plan_json = plan_to_json(plan);
      break;
    }
    case EstimatorKind::hoif_q0:
    case EstimatorKind::hoif_q1: {
      const std::vector<int> training = hoif_training_fold(n, cfg.folds, cfg.seed);
      res = hoif_ecc(loaded.data, basis, training, est == EstimatorKind::hoif_q1 ? 1 : 0, opt);
      plan_json["kind"] = "hoif_training";
      plan_json["training"] = training;
      break;
    }
  }

  Json out;
  out["estimate"] = estimate_to_json(res);
  out["plan"] = std::move(plan_json);
  if (loaded.rescaled) {
    Json ranges = Json::array();
    for (const auto& mm : loaded.covariate_range) ranges.push_back(Json::array({mm[0], mm[1]}));
    out["rescaled_ranges"] = std::move(ranges);
  }
  return out;
}

McConfig mc_config_from(const RunConfig& cfg) {
  McConfig mc;
  mc.n = cfg.n;
  mc.cells_per_dim = cfg.cells;
  mc.kappa = cfg.kappa;
  mc.normalization = normalization_from_name(cfg.normalization);
  mc.folds = cfg.folds;
  mc.reps = cfg.reps;
  mc.seed = cfg.seed;
  mc.threads = effective_threads(cfg.threads);
  mc.require_nonsingular = cfg.require_nonsingular;
  return mc;
}

EstimatorConfig estimator_config_from(const RunConfig& cfg, const std::string& name) {
  EstimatorConfig ec;
  ec.kind = estimator_from_name(name);
  ec.gamma_source = source_from_name(cfg.gamma_source);
  ec.alpha_source = source_from_name(cfg.alpha_source);
  ec.label = name;
  return ec;
}

Json run_simulate(const RunConfig& cfg) {
  const DgpSpec dgp = make_dgp(cfg.dgp);
  std::vector<EstimatorConfig> ests;
  for (const std::string& name : split_list(cfg.estimator))
    ests.push_back(estimator_config_from(cfg, name));
  if (ests.empty()) throw Error("INVALID_SPEC", "no estimators configured");
  const MonteCarloReport report = run_monte_carlo(dgp, ests, mc_config_from(cfg));
  Json out;
  out["simulate"] = mc_to_json(report);
  return out;
}

Json run_rates(const RunConfig& cfg) {
  const DgpSpec dgp = make_dgp(cfg.dgp);
  const std::vector<std::string> names = split_list(cfg.estimator);
  if (names.size() != 1) throw Error("INVALID_SPEC", "rates mode takes exactly one estimator");
  const KRule rule{cfg.k_c, cfg.k_exponent};
  const RateReport report =
      rate_sweep(dgp, estimator_config_from(cfg, names[0]), cfg.n_grid, rule, mc_config_from(cfg));
  Json out;
  out["rates"] = rate_to_json(report);
  return out;
}

}  // namespace

const char* functional_name(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::expected_conditional_covariance: return "ecc";
    case FunctionalKind::missing_data_mean: return "missing_data";
    case FunctionalKind::weighted_average_derivative: return "wad";
    case FunctionalKind::partially_linear: return "pl";
  }
  return "?";
}

FunctionalKind functional_from_name(const std::string& name) {
  for (FunctionalKind k :
       {FunctionalKind::expected_conditional_covariance, FunctionalKind::missing_data_mean,
        FunctionalKind::weighted_average_derivative, FunctionalKind::partially_linear}) {
    if (name == functional_name(k)) return k;
  }
  throw Error("INVALID_SPEC", "unknown functional '" + name + "'");
}

Json run(const RunConfig& cfg) {
  Json body;
  if (cfg.mode == "estimate") {
    body = run_estimate(cfg);
  } else if (cfg.mode == "simulate") {
    body = run_simulate(cfg);
  } else if (cfg.mode == "rates") {
    body = run_rates(cfg);
  } else {
    throw Error("INVALID_SPEC", "unknown mode '" + cfg.mode + "'");
  }
  Json out;
  out["schema"] = "1";
  out["timestamp"] = iso_timestamp_utc();
  out["config"] = config_echo(cfg);
  for (auto it = body.begin(); it != body.end(); ++it) out[it.key()] = std::move(it.value());
  return out;
}

int run_to_file(const RunConfig& cfg) {
  Json out;
  int code = 0;
  try {
    out = run(cfg);
  } catch (const Error& e) {
    out = Json{{"schema", "1"}, {"error", {{"code", e.code()}, {"message", e.what()}}}};
    code = 1;
  } catch (const std::exception& e) {
    out = Json{{"schema", "1"}, {"error", {{"code", "INTERNAL"}, {"message", e.what()}}}};
    code = 1;
  }
  const std::string text = out.dump(2) + "\n";
  if (cfg.out_path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    std::ofstream f(cfg.out_path, std::ios::binary);
    if (!f) {
      std::fprintf(stderr, "cannot write '%s'\n", cfg.out_path.c_str());
      return 1;
    }
    f << text;
  }
  return code;
}

}  // namespace crossfit
