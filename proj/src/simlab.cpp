#include "crossfit/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "crossfit/errors.hpp"

namespace crossfit {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::VectorXd scalar_vec(double v) { return Eigen::VectorXd::Constant(1, v); }

Eigen::VectorXd draw_uniform_cube(Rng& rng, int r) {
  Eigen::VectorXd x(r);
  for (int d = 0; d < r; ++d) x(d) = rng.uniform01();
  return x;
}

DgpSpec dgp_ecc_smooth() {
  DgpSpec d;
  d.name = "ecc_smooth";
  d.kind = FunctionalKind::expected_conditional_covariance;
  d.r = 1;
  // a = sin(2 pi x) + u, y = cos(2 pi x) + 0.5 u + eps with u, eps standard
  // normal, so Cov(a, y | x) = 0.5 everywhere.
  d.beta0 = 0.5;
  d.s_gamma = 8.0;
  d.s_alpha = 8.0;
  d.truth.gamma0 = [](const Eigen::VectorXd& x) { return std::cos(2.0 * kPi * x(0)); };
  d.truth.e_a_given_x = [](const Eigen::VectorXd& x) { return std::sin(2.0 * kPi * x(0)); };
  d.truth.f0 = [](const Eigen::VectorXd&) { return 1.0; };
  d.draw = [](Rng& rng) {
    Observation z;
    z.x = draw_uniform_cube(rng, 1);
    const double u = rng.normal();
    const double eps = rng.normal();
    z.a = scalar_vec(std::sin(2.0 * kPi * z.x(0)) + u);
    z.y = std::cos(2.0 * kPi * z.x(0)) + 0.5 * u + eps;
    return z;
  };
  return d;
}

DgpSpec dgp_ecc_bounded() {
  DgpSpec d;
  d.name = "ecc_bounded";
  d.kind = FunctionalKind::expected_conditional_covariance;
  d.r = 1;
  // a = tanh(2 sin(2 pi x)) + u with u uniform on [-1/2, 1/2], so |a| <= 3/2;
  // y = cos(2 pi x) + 3 u + eps/2 gives Cov(a, y | x) = 3 Var(u) = 1/4.
  d.beta0 = 0.25;
  d.s_gamma = 8.0;
  d.s_alpha = 8.0;
  d.truth.gamma0 = [](const Eigen::VectorXd& x) { return std::cos(2.0 * kPi * x(0)); };
  d.truth.e_a_given_x = [](const Eigen::VectorXd& x) {
    return std::tanh(2.0 * std::sin(2.0 * kPi * x(0)));
  };
  d.truth.f0 = [](const Eigen::VectorXd&) { return 1.0; };
  d.draw = [](Rng& rng) {
    Observation z;
    z.x = draw_uniform_cube(rng, 1);
    const double u = rng.uniform(-0.5, 0.5);
    const double eps = rng.normal();
    z.a = scalar_vec(std::tanh(2.0 * std::sin(2.0 * kPi * z.x(0))) + u);
    z.y = std::cos(2.0 * kPi * z.x(0)) + 3.0 * u + 0.5 * eps;
    return z;
  };
  return d;
}

DgpSpec dgp_md_smooth() {
  DgpSpec d;
  d.name = "md_smooth";
  d.kind = FunctionalKind::missing_data_mean;
  d.r = 1;
  // E[Y|w] = w with w uniform, so beta0 = 1/2; the propensity stays in
  // [0.2, 0.8]. The stored y is a * Y.
  d.beta0 = 0.5;
  d.s_gamma = 8.0;
  d.s_alpha = 8.0;
  d.truth.gamma0 = [](const Eigen::VectorXd& w) { return w(0); };
  d.truth.pi0 = [](const Eigen::VectorXd& w) { return 0.5 + 0.3 * std::cos(2.0 * kPi * w(0)); };
  d.truth.f0 = [](const Eigen::VectorXd&) { return 1.0; };
  d.draw = [](Rng& rng) {
    Observation z;
    z.x = draw_uniform_cube(rng, 1);
    const double pi = 0.5 + 0.3 * std::cos(2.0 * kPi * z.x(0));
    const double a = rng.bernoulli(pi) ? 1.0 : 0.0;
    const double full_y = z.x(0) + 0.5 * rng.normal();  // drawn even when missing
    z.a = scalar_vec(a);
    z.y = a * full_y;
    return z;
  };
  return d;
}

DgpSpec dgp_wad_smooth() {
  DgpSpec d;
  d.name = "wad_smooth";
  d.kind = FunctionalKind::weighted_average_derivative;
  d.r = 1;
  // gamma0 = x^2 and omega = 6x(1-x), so the weighted average of gamma0' is
  // int 6x(1-x) 2x dx = 1. Any order-2 spline basis contains gamma0 exactly.
  d.beta0 = 1.0;
  d.s_gamma = 8.0;
  d.s_alpha = 8.0;
  d.omega_name = "poly_bump";
  d.truth.gamma0 = [](const Eigen::VectorXd& x) { return x(0) * x(0); };
  d.truth.f0 = [](const Eigen::VectorXd&) { return 1.0; };
  d.draw = [](Rng& rng) {
    Observation z;
    z.x = draw_uniform_cube(rng, 1);
    z.a = scalar_vec(0.0);
    z.y = z.x(0) * z.x(0) + 0.3 * rng.normal();
    return z;
  };
  return d;
}

DgpSpec dgp_pl_smooth() {
  DgpSpec d;
  d.name = "pl_smooth";
  d.kind = FunctionalKind::partially_linear;
  d.r = 1;
  // y = a + sin(2 pi x) + eps with a = cos(2 pi x)/2 + u; the projection
  // coefficient is E[Cov(a, y|x)] / E[Var(a|x)] = 1.
  d.beta0 = 1.0;
  d.s_gamma = 8.0;
  d.s_alpha = 8.0;
  d.truth.gamma0 = [](const Eigen::VectorXd& x) {
    return 0.5 * std::cos(2.0 * kPi * x(0)) + std::sin(2.0 * kPi * x(0));
  };
  d.truth.e_a_given_x = [](const Eigen::VectorXd& x) { return 0.5 * std::cos(2.0 * kPi * x(0)); };
  d.truth.f0 = [](const Eigen::VectorXd&) { return 1.0; };
  d.draw = [](Rng& rng) {
    Observation z;
    z.x = draw_uniform_cube(rng, 1);
    const double u = rng.normal();
    const double eps = rng.normal();
    const double a = 0.5 * std::cos(2.0 * kPi * z.x(0)) + u;
    z.a = scalar_vec(a);
    z.y = a + std::sin(2.0 * kPi * z.x(0)) + eps;
    return z;
  };
  return d;
}

ScalarFn wrong_gamma_for(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::missing_data_mean:
      return [](const Eigen::VectorXd& w) { return 0.2 + 0.4 * w(0); };
    default:
      return [](const Eigen::VectorXd& x) { return 1.5 - 2.0 * x(0); };
  }
}

std::function<double(const Observation&)> wrong_alpha_for(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::missing_data_mean:
      // Keeps the a * h(w) structure the correction term needs.
      return [](const Observation& z) { return z.a(0) * (1.7 + 0.6 * z.x(0)); };
    default:
      return [](const Observation& z) { return 0.3 + 0.8 * std::cos(2.0 * kPi * z.x(0)); };
  }
}

}  // namespace

DgpSpec make_dgp(const std::string& name) {
  if (name == "ecc_smooth") return dgp_ecc_smooth();
  if (name == "ecc_bounded") return dgp_ecc_bounded();
  if (name == "md_smooth") return dgp_md_smooth();
  if (name == "wad_smooth") return dgp_wad_smooth();
  if (name == "pl_smooth") return dgp_pl_smooth();
  throw Error("INVALID_SPEC", "unknown dgp '" + name + "'");
}

std::vector<std::string> dgp_names() {
  return {"ecc_smooth", "ecc_bounded", "md_smooth", "wad_smooth", "pl_smooth"};
}

Dataset generate(const DgpSpec& dgp, int n, std::uint64_t seed) {
  if (n < 1) throw Error("EMPTY_SAMPLE", "generate needs n >= 1");
  if (!dgp.draw) throw Error("INVALID_SPEC", "dgp has no draw function");
  Rng rng(seed);
  Dataset data;
  const Observation first = dgp.draw(rng);
  const int d_a = static_cast<int>(first.a.size());
  const int r = static_cast<int>(first.x.size());
  data.y.resize(n);
  data.a.resize(n, d_a);
  data.x.resize(n, r);
  data.y(0) = first.y;
  data.a.row(0) = first.a.transpose();
  data.x.row(0) = first.x.transpose();
  for (int i = 1; i < n; ++i) {
    const Observation z = dgp.draw(rng);
    data.y(i) = z.y;
    data.a.row(i) = z.a.transpose();
    data.x.row(i) = z.x.transpose();
  }
  return data;
}

double true_beta(const DgpSpec& dgp) { return dgp.beta0; }

FunctionalSpec functional_for(const DgpSpec& dgp) {
  switch (dgp.kind) {
    case FunctionalKind::expected_conditional_covariance:
      return make_ecc();
    case FunctionalKind::missing_data_mean:
      return make_missing_data();
    case FunctionalKind::weighted_average_derivative:
      return make_weighted_avg_derivative_named(dgp.omega_name, dgp.r);
    case FunctionalKind::partially_linear:
      return make_partially_linear();
  }
  throw Error("INVALID_SPEC", "unknown functional kind");
}

const char* estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::plugin_no_split: return "plugin";
    case EstimatorKind::cf_plugin: return "cf_plugin";
    case EstimatorKind::single_cf_dr: return "single_dr";
    case EstimatorKind::dcdr: return "dcdr";
    case EstimatorKind::pl_projection: return "pl";
    case EstimatorKind::hoif_q0: return "hoif0";
    case EstimatorKind::hoif_q1: return "hoif1";
  }
  return "?";
}

EstimatorKind estimator_from_name(const std::string& name) {
  for (EstimatorKind k :
       {EstimatorKind::plugin_no_split, EstimatorKind::cf_plugin, EstimatorKind::single_cf_dr,
        EstimatorKind::dcdr, EstimatorKind::pl_projection, EstimatorKind::hoif_q0,
        EstimatorKind::hoif_q1}) {
    if (name == estimator_name(k)) return k;
  }
  throw Error("INVALID_SPEC", "unknown estimator '" + name + "'");
}

const char* source_name(NuisanceSource s) {
  switch (s) {
    case NuisanceSource::estimate: return "estimate";
    case NuisanceSource::truth: return "truth";
    case NuisanceSource::wrong: return "wrong";
  }
  return "?";
}

NuisanceSource source_from_name(const std::string& name) {
  for (NuisanceSource s : {NuisanceSource::estimate, NuisanceSource::truth, NuisanceSource::wrong})
    if (name == source_name(s)) return s;
  throw Error("INVALID_SPEC", "unknown nuisance source '" + name + "'");
}

NuisanceOverride make_override(const DgpSpec& dgp, NuisanceSource gamma_source,
                               NuisanceSource alpha_source) {
  NuisanceOverride over;
  switch (gamma_source) {
    case NuisanceSource::estimate:
      break;
    case NuisanceSource::truth:
      if (!dgp.truth.gamma0) throw Error("DGP_COMPONENT_MISSING", "dgp has no gamma0");
      over.gamma = dgp.truth.gamma0;
      break;
    case NuisanceSource::wrong:
      over.gamma = wrong_gamma_for(dgp.kind);
      break;
  }
  switch (alpha_source) {
    case NuisanceSource::estimate:
      break;
    case NuisanceSource::truth: {
      const FunctionalSpec f = functional_for(dgp);
      const TrueNuisances truth = dgp.truth;
      over.alpha = [f, truth](const Observation& z) { return oracle_alpha(f, truth, z); };
      break;
    }
    case NuisanceSource::wrong:
      over.alpha = wrong_alpha_for(dgp.kind);
      break;
  }
  return over;
}

std::vector<int> hoif_training_fold(int n, int folds, std::uint64_t seed) {
  return make_plugin_plan(n, folds, seed).groups[0].eval_idx;
}

EstimateResult dispatch_estimator(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                                  EstimatorKind kind, int folds, std::uint64_t plan_seed,
                                  const EstimatorOptions& opt, const ScalarFn& hoif_gamma,
                                  const ScalarFn& hoif_alpha) {
  switch (kind) {
    case EstimatorKind::plugin_no_split:
      return plugin_no_split(f, basis, data, opt);
    case EstimatorKind::cf_plugin:
      return cf_plugin(f, basis, data, make_plugin_plan(data.n(), folds, plan_seed), opt);
    case EstimatorKind::single_cf_dr:
      return dr_estimate(f, basis, data, make_single_cf_plan(data.n(), folds, plan_seed), opt);
    case EstimatorKind::dcdr:
      return dr_estimate(f, basis, data, make_dcdr_plan(data.n(), folds, plan_seed), opt);
    case EstimatorKind::pl_projection:
      return pl_projection(basis, data, make_dcdr_plan(data.n(), folds, plan_seed), opt);
    case EstimatorKind::hoif_q0:
      return hoif_ecc(data, basis, hoif_training_fold(data.n(), folds, plan_seed), 0, opt,
                      hoif_gamma, hoif_alpha);
    case EstimatorKind::hoif_q1:
      return hoif_ecc(data, basis, hoif_training_fold(data.n(), folds, plan_seed), 1, opt,
                      hoif_gamma, hoif_alpha);
  }
  throw Error("INVALID_SPEC", "unknown estimator kind");
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (count <= 0) return;
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = 1;
  threads = std::min(threads, count);
  std::vector<std::exception_ptr> errors(static_cast<size_t>(count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<size_t>(i)] = std::current_exception();
        break;  // serial mode stops at the first failure
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= count) return;
          try {
            body(i);
          } catch (...) {
            errors[static_cast<size_t>(i)] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  // lowest-index failure wins so the surfaced error does not depend on
  // scheduling
  for (int i = 0; i < count; ++i)
    if (errors[static_cast<size_t>(i)]) std::rethrow_exception(errors[static_cast<size_t>(i)]);
}

namespace {

struct RepSlot {
  std::vector<double> beta;
  std::vector<double> se;
  std::vector<char> covered;
};

ScalarFn hoif_initial_gamma(const DgpSpec& dgp, NuisanceSource src) {
  switch (src) {
    case NuisanceSource::estimate:
      return {};  // documented zero default
    case NuisanceSource::truth:
      return dgp.truth.gamma0;
    case NuisanceSource::wrong:
      return wrong_gamma_for(dgp.kind);
  }
  return {};
}

ScalarFn hoif_initial_alpha(const DgpSpec& dgp, NuisanceSource src) {
  switch (src) {
    case NuisanceSource::estimate:
      return {};
    case NuisanceSource::truth: {
      const ScalarFn e_a = dgp.truth.e_a_given_x;
      if (!e_a) throw Error("DGP_COMPONENT_MISSING", "dgp has no E[a|x]");
      return [e_a](const Eigen::VectorXd& x) { return -e_a(x); };
    }
    case NuisanceSource::wrong:
      return [](const Eigen::VectorXd& x) { return 0.3 + 0.8 * std::cos(2.0 * kPi * x(0)); };
  }
  return {};
}

}  // namespace

MonteCarloReport run_monte_carlo(const DgpSpec& dgp, const std::vector<EstimatorConfig>& estimators,
                                 const McConfig& cfg) {
  if (cfg.reps < 1) throw Error("INVALID_SPEC", "reps must be at least 1");
  if (estimators.empty()) throw Error("INVALID_SPEC", "no estimators configured");

  const FunctionalSpec f = functional_for(dgp);
  const Basis basis =
      build_basis({dgp.r, cfg.kappa, cfg.cells_per_dim, cfg.normalization});
  const int n_est = static_cast<int>(estimators.size());

  std::vector<EstimatorOptions> opts(static_cast<size_t>(n_est));
  std::vector<ScalarFn> hg(static_cast<size_t>(n_est)), ha(static_cast<size_t>(n_est));
  for (int e = 0; e < n_est; ++e) {
    const EstimatorConfig& ec = estimators[static_cast<size_t>(e)];
    opts[e].require_nonsingular = cfg.require_nonsingular;
    if (ec.kind == EstimatorKind::hoif_q0 || ec.kind == EstimatorKind::hoif_q1) {
      hg[e] = hoif_initial_gamma(dgp, ec.gamma_source);
      ha[e] = hoif_initial_alpha(dgp, ec.alpha_source);
    } else {
      opts[e].override_nuisance = make_override(dgp, ec.gamma_source, ec.alpha_source);
    }
  }

  std::vector<RepSlot> slots(static_cast<size_t>(cfg.reps));
  parallel_for(cfg.reps, cfg.threads, [&](int rep) {
    const std::uint64_t rep_seed = Rng::derive(cfg.seed, static_cast<std::uint64_t>(rep));
    const Dataset data = generate(dgp, cfg.n, Rng::derive(rep_seed, 1));
    const std::uint64_t plan_seed = Rng::derive(rep_seed, 2);
    RepSlot& slot = slots[static_cast<size_t>(rep)];
    slot.beta.resize(static_cast<size_t>(n_est));
    slot.se.resize(static_cast<size_t>(n_est));
    slot.covered.resize(static_cast<size_t>(n_est));
    for (int e = 0; e < n_est; ++e) {
      const EstimateResult res =
          dispatch_estimator(f, basis, data, estimators[static_cast<size_t>(e)].kind, cfg.folds,
                             plan_seed, opts[static_cast<size_t>(e)], hg[static_cast<size_t>(e)],
                             ha[static_cast<size_t>(e)]);
      slot.beta[static_cast<size_t>(e)] = res.beta(0);
      slot.se[static_cast<size_t>(e)] = res.se(0);
      slot.covered[static_cast<size_t>(e)] =
          res.ci95(0, 0) <= dgp.beta0 && dgp.beta0 <= res.ci95(0, 1) ? 1 : 0;
    }
  });

  MonteCarloReport report;
  report.dgp = dgp.name;
  report.beta0 = dgp.beta0;
  report.config = cfg;
  report.K = basis.K;
  const double R = static_cast<double>(cfg.reps);
  for (int e = 0; e < n_est; ++e) {
    McEstimatorStats st;
    const EstimatorConfig& ec = estimators[static_cast<size_t>(e)];
    st.label = ec.label.empty() ? estimator_name(ec.kind) : ec.label;
    double sum = 0.0, sum_se = 0.0, sum_cov = 0.0;
    for (int rep = 0; rep < cfg.reps; ++rep) {  // fixed order keeps sums deterministic
      sum += slots[static_cast<size_t>(rep)].beta[static_cast<size_t>(e)];
      sum_se += slots[static_cast<size_t>(rep)].se[static_cast<size_t>(e)];
      sum_cov += slots[static_cast<size_t>(rep)].covered[static_cast<size_t>(e)];
    }
    const double mean = sum / R;
    double ss = 0.0, se2 = 0.0;
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const double b = slots[static_cast<size_t>(rep)].beta[static_cast<size_t>(e)];
      ss += (b - mean) * (b - mean);
      se2 += (b - dgp.beta0) * (b - dgp.beta0);
    }
    st.mean_bias = mean - dgp.beta0;
    st.sd = std::sqrt(ss / R);
    st.rmse = std::sqrt(se2 / R);
    st.sd_defined = cfg.reps > 1;
    st.mc_se = st.sd_defined ? st.sd / std::sqrt(R) : 0.0;
    st.coverage = sum_cov / R;
    st.mean_se = sum_se / R;
    report.stats.push_back(std::move(st));
  }
  return report;
}

int cells_for_target_k(int k_target, int r, int kappa) {
  // K = (cells + kappa)^r for the tensor basis; invert per dimension.
  const double j_real = std::pow(static_cast<double>(k_target), 1.0 / static_cast<double>(r));
  const int j = std::max(kappa + 1, static_cast<int>(std::lround(j_real)));
  return j - kappa;
}

RateReport rate_sweep(const DgpSpec& dgp, const EstimatorConfig& estimator,
                      const std::vector<int>& n_grid, const KRule& rule, const McConfig& base) {
  if (n_grid.size() < 3)
    throw Error("RATE_GRID_TOO_SMALL", "rate sweep needs at least 3 grid points");
  for (size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1])
      throw Error("INVALID_SPEC", "n grid must be strictly increasing");

  RateReport report;
  report.dgp = dgp.name;
  report.estimator_label =
      estimator.label.empty() ? estimator_name(estimator.kind) : estimator.label;
  report.rule = rule;
  report.base = base;

  for (size_t g = 0; g < n_grid.size(); ++g) {
    McConfig cell_cfg = base;
    cell_cfg.n = n_grid[g];
    cell_cfg.seed = Rng::derive(base.seed, static_cast<std::uint64_t>(g) + 1);
    const int k_target = std::max(
        1, static_cast<int>(std::lround(rule.c * std::pow(static_cast<double>(n_grid[g]),
                                                          rule.exponent))));
    cell_cfg.cells_per_dim = cells_for_target_k(k_target, dgp.r, cell_cfg.kappa);
    const MonteCarloReport mc = run_monte_carlo(dgp, {estimator}, cell_cfg);
    RateCell cell;
    cell.n = n_grid[g];
    cell.K = mc.K;
    cell.cells_per_dim = cell_cfg.cells_per_dim;
    cell.rmse = mc.stats[0].rmse;
    cell.abs_bias = std::abs(mc.stats[0].mean_bias);
    report.cells.push_back(cell);
  }

  // OLS of log rmse on log n.
  const auto G = static_cast<int>(report.cells.size());
  double sx = 0.0, sy = 0.0;
  for (const RateCell& c : report.cells) {
    sx += std::log(static_cast<double>(c.n));
    sy += std::log(c.rmse);
  }
  const double mx = sx / G, my = sy / G;
  double sxx = 0.0, sxy = 0.0;
  for (const RateCell& c : report.cells) {
    const double dx = std::log(static_cast<double>(c.n)) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(c.rmse) - my);
  }
  report.slope = sxy / sxx;
  double rss = 0.0;
  for (const RateCell& c : report.cells) {
    const double fit = my + report.slope * (std::log(static_cast<double>(c.n)) - mx);
    const double resid = std::log(c.rmse) - fit;
    rss += resid * resid;
  }
  report.slope_se = G > 2 ? std::sqrt(rss / (G - 2) / sxx) : 0.0;
  return report;
}

}  // namespace crossfit
