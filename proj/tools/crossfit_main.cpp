#include <fstream>
#include <string>

#include "CLI11.hpp"

#include "crossfit/errors.hpp"
#include "crossfit/runner.hpp"

namespace {

using crossfit::Json;
using crossfit::RunConfig;

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    out.push_back(std::stoi(cur));
    cur.clear();
  };
  for (char c : s) {
    if (c == ',')
      flush();
    else
      cur.push_back(c);
  }
  flush();
  return out;
}

// Flags beat the config file: a file value only lands in a field whose flag
// was absent from the command line.
class ConfigMerge {
 public:
  ConfigMerge(CLI::App* sub, const std::string& path) : sub_(sub) {
    std::ifstream in(path);
    if (!in) throw crossfit::Error("INVALID_SPEC", "cannot open config '" + path + "'");
    try {
      in >> file_;
    } catch (const std::exception& e) {
      throw crossfit::Error("INVALID_SPEC", "config '" + path + "': " + e.what());
    }
  }

  template <typename T>
  void field(const char* flag, T& target) {
    const std::string key = key_for(flag);
    if (sub_->count(flag) > 0 || !file_.contains(key)) return;
    try {
      target = file_.at(key).get<T>();
    } catch (const std::exception& e) {
      throw crossfit::Error("INVALID_SPEC", "config key '" + key + "': " + e.what());
    }
  }

 private:
  static std::string key_for(const char* flag) {
    std::string key(flag);
    key.erase(0, key.find_first_not_of('-'));
    for (char& c : key)
      if (c == '-') c = '_';
    return key;
  }

  CLI::App* sub_;
  Json file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-fit series estimators for average linear functionals"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  std::string ns_str;

  auto add_shared = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; explicit flags win");
    sub->add_option("--estimator", cfg.estimator,
                    "plugin | cf_plugin | single_dr | dcdr | pl | hoif0 | hoif1");
    sub->add_option("--kappa", cfg.kappa, "spline order (0 = piecewise constant)");
    sub->add_option("--cells", cfg.cells, "knot cells per covariate dimension");
    sub->add_option("--normalization", cfg.normalization, "none | uniform_design");
    sub->add_option("--folds", cfg.folds, "number of folds");
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--omega", cfg.omega, "derivative weight family (poly_bump | raised_cosine)");
    sub->add_flag("--require-nonsingular", cfg.require_nonsingular,
                  "abort when a training gram fails the eigenvalue gate");
    sub->add_option("--out", cfg.out_path, "report path (default: stdout)");
  };
  auto add_sim_shared = [&](CLI::App* sub) {
    sub->add_option("--dgp", cfg.dgp,
                    "ecc_smooth | ecc_bounded | md_smooth | wad_smooth | pl_smooth");
    sub->add_option("--reps", cfg.reps, "Monte Carlo replications");
    sub->add_option("--gamma-source", cfg.gamma_source, "estimate | truth | wrong");
    sub->add_option("--alpha-source", cfg.alpha_source, "estimate | truth | wrong");
    sub->add_option("--threads", cfg.threads,
                    "worker threads, 0 = all cores; CROSSFIT_THREADS overrides");
  };

  CLI::App* est = app.add_subcommand("estimate", "Estimate a functional from a CSV file");
  add_shared(est);
  est->add_option("--functional", cfg.functional, "ecc | missing_data | wad | pl");
  est->add_option("--data", cfg.data_path, "input CSV path");
  est->add_flag("--rescale", cfg.rescale, "min-max rescale covariates into [0,1]");

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo study on a built-in process");
  add_shared(sim);
  add_sim_shared(sim);
  sim->add_option("--n", cfg.n, "sample size per replication");

  CLI::App* rates = app.add_subcommand("rates", "RMSE rate sweep over an n grid");
  add_shared(rates);
  add_sim_shared(rates);
  rates->add_option("--ns", ns_str, "comma-separated n grid, e.g. 500,1000,2000");
  rates->add_option("--k-c", cfg.k_c, "K rule constant in K = c * n^a");
  rates->add_option("--k-exponent", cfg.k_exponent, "K rule exponent a");

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  cfg.mode = sub->get_name();
  try {
    if (cfg.mode == "rates" && sub->count("--ns") > 0) cfg.n_grid = parse_int_list(ns_str);
    if (!config_path.empty()) {
      ConfigMerge merge(sub, config_path);
      merge.field("--estimator", cfg.estimator);
      merge.field("--kappa", cfg.kappa);
      merge.field("--cells", cfg.cells);
      merge.field("--normalization", cfg.normalization);
      merge.field("--folds", cfg.folds);
      merge.field("--seed", cfg.seed);
      merge.field("--omega", cfg.omega);
      merge.field("--require-nonsingular", cfg.require_nonsingular);
      merge.field("--out", cfg.out_path);
      if (cfg.mode == "estimate") {
        merge.field("--functional", cfg.functional);
        merge.field("--data", cfg.data_path);
        merge.field("--rescale", cfg.rescale);
      } else {
        merge.field("--dgp", cfg.dgp);
        merge.field("--reps", cfg.reps);
        merge.field("--gamma-source", cfg.gamma_source);
        merge.field("--alpha-source", cfg.alpha_source);
        merge.field("--threads", cfg.threads);
        if (cfg.mode == "simulate") merge.field("--n", cfg.n);
        if (cfg.mode == "rates") {
          merge.field("--ns", cfg.n_grid);
          merge.field("--k-c", cfg.k_c);
          merge.field("--k-exponent", cfg.k_exponent);
        }
      }
    }
  } catch (const crossfit::Error& e) {
    const Json err{{"schema", "1"}, {"error", {{"code", e.code()}, {"message", e.what()}}}};
    std::fprintf(stderr, "%s\n", err.dump(2).c_str());
    return 1;
  }
  return crossfit::run_to_file(cfg);
}
