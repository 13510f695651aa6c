#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "crossfit/errors.hpp"
#include "crossfit/simlab.hpp"

using namespace crossfit;

namespace {

// Classic 10-point Gauss-Legendre rule on [-1,1], independent of the library.
constexpr double kGl10X[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                              0.8650633666889845, 0.9739065285171717};
constexpr double kGl10W[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                              0.1494513491505806, 0.0666713443086881};

double gl10_01(const std::function<double(double)>& f) {
  double acc = 0.0;
  for (int i = 0; i < 5; ++i)
    acc += kGl10W[i] * (f(0.5 + 0.5 * kGl10X[i]) + f(0.5 - 0.5 * kGl10X[i]));
  return acc * 0.5;
}

bool stats_equal(const McEstimatorStats& a, const McEstimatorStats& b) {
  return a.label == b.label && a.mean_bias == b.mean_bias && a.mc_se == b.mc_se && a.sd == b.sd &&
         a.rmse == b.rmse && a.coverage == b.coverage && a.mean_se == b.mean_se &&
         a.sd_defined == b.sd_defined;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  const DgpSpec dgp = make_dgp("ecc_smooth");
  const Dataset a = generate(dgp, 50, 42);
  const Dataset b = generate(dgp, 50, 42);
  const Dataset c = generate(dgp, 50, 43);
  CHECK(a.y == b.y);
  CHECK(a.a == b.a);
  CHECK(a.x == b.x);
  CHECK(a.y != c.y);
}

TEST_CASE("noiseless processes reproduce their conditional means") {
  DgpSpec clean;
  clean.name = "ecc_clean";
  clean.kind = FunctionalKind::expected_conditional_covariance;
  clean.r = 1;
  clean.beta0 = 0.0;
  clean.truth.e_a_given_x = [](const Eigen::VectorXd& x) {
    return std::sin(2.0 * std::numbers::pi * x(0));
  };
  clean.draw = [](Rng& rng) {
    Observation z;
    z.x = Eigen::VectorXd::Constant(1, rng.uniform01());
    z.a = Eigen::VectorXd::Constant(1, std::sin(2.0 * std::numbers::pi * z.x(0)));
    z.y = 0.0;
    return z;
  };
  const Dataset d = generate(clean, 30, 7);
  for (int i = 0; i < 30; ++i)
    CHECK(d.a(i, 0) == clean.truth.e_a_given_x(d.x.row(i).transpose()));
}

TEST_CASE("missing-data convention holds in generated samples") {
  const DgpSpec dgp = make_dgp("md_smooth");
  const Dataset d = generate(dgp, 400, 5);
  int missing = 0;
  for (int i = 0; i < 400; ++i) {
    const double a = d.a(i, 0);
    CHECK((a == 0.0 || a == 1.0));
    if (a == 0.0) {
      CHECK(d.y(i) == 0.0);
      ++missing;
    }
  }
  CHECK(missing > 50);  // propensity stays well inside (0, 1)
  CHECK(missing < 350);
}

TEST_CASE("built-in targets match independent quadrature") {
  CHECK(true_beta(make_dgp("ecc_smooth")) == 0.5);
  CHECK(true_beta(make_dgp("ecc_bounded")) == 0.25);
  CHECK(true_beta(make_dgp("md_smooth")) == 0.5);
  CHECK(true_beta(make_dgp("pl_smooth")) == 1.0);

  // the derivative target: int 6x(1-x) d/dx(x^2) dx
  const double want = gl10_01([](double t) { return 6.0 * t * (1.0 - t) * 2.0 * t; });
  CHECK(true_beta(make_dgp("wad_smooth")) == doctest::Approx(want).epsilon(1e-14));

  CHECK_THROWS_AS(make_dgp("nope"), Error);
  CHECK(dgp_names().size() == 5);
}

TEST_CASE("functional construction per process") {
  CHECK(functional_for(make_dgp("ecc_smooth")).kind ==
        FunctionalKind::expected_conditional_covariance);
  CHECK(functional_for(make_dgp("md_smooth")).kind == FunctionalKind::missing_data_mean);
  CHECK(functional_for(make_dgp("pl_smooth")).kind == FunctionalKind::partially_linear);
  const FunctionalSpec wad = functional_for(make_dgp("wad_smooth"));
  CHECK(wad.kind == FunctionalKind::weighted_average_derivative);
  CHECK(static_cast<bool>(wad.omega));
  CHECK(wad.r == 1);
}

TEST_CASE("name round trips") {
  for (const char* name : {"plugin", "cf_plugin", "single_dr", "dcdr", "pl", "hoif0", "hoif1"})
    CHECK(estimator_name(estimator_from_name(name)) == std::string(name));
  CHECK_THROWS_AS(estimator_from_name("mystery"), Error);
  for (const char* name : {"estimate", "truth", "wrong"})
    CHECK(source_name(source_from_name(name)) == std::string(name));
  CHECK_THROWS_AS(source_from_name("guess"), Error);
}

TEST_CASE("overrides pick the requested nuisance source") {
  const DgpSpec dgp = make_dgp("ecc_smooth");
  const NuisanceOverride est = make_override(dgp, NuisanceSource::estimate,
                                             NuisanceSource::estimate);
  CHECK_FALSE(static_cast<bool>(est.gamma));
  CHECK_FALSE(static_cast<bool>(est.alpha));

  const NuisanceOverride tru = make_override(dgp, NuisanceSource::truth, NuisanceSource::truth);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.25);
  CHECK(tru.gamma(x) == doctest::Approx(std::cos(0.5 * std::numbers::pi)).epsilon(1e-12));
  Observation z;
  z.y = 0.0;
  z.a = Eigen::VectorXd::Constant(1, 0.0);
  z.x = x;
  CHECK(tru.alpha(z) == doctest::Approx(-1.0).epsilon(1e-12));  // -E[a|x] at the peak

  const NuisanceOverride wr = make_override(dgp, NuisanceSource::wrong, NuisanceSource::wrong);
  CHECK(wr.gamma(x) != doctest::Approx(tru.gamma(x)).epsilon(1e-3));

  // the deliberately wrong missing-data weight keeps the indicator factor
  const DgpSpec md = make_dgp("md_smooth");
  const NuisanceOverride mdw = make_override(md, NuisanceSource::estimate, NuisanceSource::wrong);
  Observation unobserved;
  unobserved.y = 0.0;
  unobserved.a = Eigen::VectorXd::Constant(1, 0.0);
  unobserved.x = Eigen::VectorXd::Constant(1, 0.4);
  CHECK(mdw.alpha(unobserved) == 0.0);
  Observation observed = unobserved;
  observed.a(0) = 1.0;
  CHECK(mdw.alpha(observed) != 0.0);
}

TEST_CASE("training fold for the higher-order estimator") {
  const std::vector<int> fold = hoif_training_fold(100, 4, 9);
  CHECK(fold.size() == 25);
  for (size_t i = 1; i < fold.size(); ++i) CHECK(fold[i - 1] < fold[i]);
  for (int v : fold) {
    CHECK(v >= 0);
    CHECK(v < 100);
  }
  CHECK(hoif_training_fold(100, 4, 9) == fold);
}

TEST_CASE("monte carlo reports are deterministic and thread-invariant") {
  const DgpSpec dgp = make_dgp("ecc_smooth");
  McConfig cfg;
  cfg.n = 60;
  cfg.cells_per_dim = 3;
  cfg.kappa = 0;
  cfg.folds = 3;
  cfg.reps = 40;
  cfg.seed = 99;
  cfg.threads = 1;
  const std::vector<EstimatorConfig> ests = {
      {EstimatorKind::dcdr, NuisanceSource::estimate, NuisanceSource::estimate, ""},
      {EstimatorKind::cf_plugin, NuisanceSource::estimate, NuisanceSource::estimate, "cfp"}};

  const MonteCarloReport one = run_monte_carlo(dgp, ests, cfg);
  REQUIRE(one.stats.size() == 2);
  CHECK(one.stats[0].label == "dcdr");
  CHECK(one.stats[1].label == "cfp");
  CHECK(one.K == 3);
  CHECK(one.beta0 == 0.5);

  const MonteCarloReport again = run_monte_carlo(dgp, ests, cfg);
  McConfig cfg4 = cfg;
  cfg4.threads = 4;
  const MonteCarloReport pooled = run_monte_carlo(dgp, ests, cfg4);
  for (size_t e = 0; e < one.stats.size(); ++e) {
    CHECK(stats_equal(one.stats[e], again.stats[e]));
    CHECK(stats_equal(one.stats[e], pooled.stats[e]));
  }
}

TEST_CASE("error decomposition identity and single-rep conventions") {
  const DgpSpec dgp = make_dgp("ecc_smooth");
  McConfig cfg;
  cfg.n = 80;
  cfg.cells_per_dim = 4;
  cfg.reps = 50;
  cfg.seed = 3;
  cfg.threads = 1;
  const std::vector<EstimatorConfig> ests = {
      {EstimatorKind::dcdr, NuisanceSource::estimate, NuisanceSource::estimate, ""}};
  const MonteCarloReport r = run_monte_carlo(dgp, ests, cfg);
  const McEstimatorStats& st = r.stats[0];
  CHECK(st.sd_defined);
  CHECK(st.rmse * st.rmse ==
        doctest::Approx(st.mean_bias * st.mean_bias + st.sd * st.sd).epsilon(1e-10));
  CHECK(st.mc_se == doctest::Approx(st.sd / std::sqrt(50.0)).epsilon(1e-12));

  McConfig single = cfg;
  single.reps = 1;
  const MonteCarloReport r1 = run_monte_carlo(dgp, ests, single);
  CHECK_FALSE(r1.stats[0].sd_defined);
  CHECK(r1.stats[0].sd == 0.0);
  CHECK(r1.stats[0].mc_se == 0.0);
  CHECK(r1.stats[0].rmse == doctest::Approx(std::abs(r1.stats[0].mean_bias)).epsilon(1e-12));
}

TEST_CASE("oracle nuisances remove the bias") {
  const DgpSpec dgp = make_dgp("ecc_smooth");
  McConfig cfg;
  cfg.n = 200;
  cfg.cells_per_dim = 4;
  cfg.reps = 400;
  cfg.seed = 17;
  cfg.threads = 0;
  const std::vector<EstimatorConfig> ests = {
      {EstimatorKind::dcdr, NuisanceSource::truth, NuisanceSource::truth, "oracle"}};
  const MonteCarloReport r = run_monte_carlo(dgp, ests, cfg);
  CHECK(std::abs(r.stats[0].mean_bias) <= 3.0 * r.stats[0].mc_se);
  // the average reported standard error tracks the sampling spread
  CHECK(r.stats[0].mean_se == doctest::Approx(r.stats[0].sd).epsilon(0.25));
}

TEST_CASE("representer moments are unbiased for the weighted density integral") {
  const DgpSpec dgp = make_dgp("ecc_smooth");
  const FunctionalSpec f = make_ecc();
  const Basis basis = build_basis({1, 0, 4, Normalization::none});
  const int n = 500, reps = 400;
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;

  Eigen::MatrixXd h(reps, basis.K);
  for (int rep = 0; rep < reps; ++rep) {
    const Dataset d = generate(dgp, n, Rng::derive(1234, rep));
    h.row(rep) = v_rows(f, basis, d, all).colwise().mean();
  }
  const Eigen::VectorXd mean = h.colwise().mean();
  const Eigen::VectorXd want = integrate_weighted(
      basis,
      [](const Eigen::VectorXd& x) { return -std::sin(2.0 * std::numbers::pi * x(0)); },
      QuadratureSpec{10});
  for (int k = 0; k < basis.K; ++k) {
    const double sd = std::sqrt((h.col(k).array() - mean(k)).square().sum() / (reps - 1.0));
    CHECK(std::abs(mean(k) - want(k)) <= 3.0 * sd / std::sqrt(static_cast<double>(reps)));
  }
}

TEST_CASE("own-observation bias separates the plug-in from the cross-fit") {
  const DgpSpec dgp = make_dgp("ecc_smooth");
  McConfig cfg;
  cfg.n = 400;
  cfg.cells_per_dim = 100;
  cfg.kappa = 0;
  cfg.folds = 5;
  cfg.reps = 300;
  cfg.seed = 42;
  const std::vector<EstimatorConfig> ests = {
      {EstimatorKind::plugin_no_split, NuisanceSource::estimate, NuisanceSource::estimate, ""},
      {EstimatorKind::cf_plugin, NuisanceSource::estimate, NuisanceSource::estimate, ""}};
  const MonteCarloReport r = run_monte_carlo(dgp, ests, cfg);
  const auto& plug = r.stats[0];
  const auto& cf = r.stats[1];
  CHECK(std::abs(plug.mean_bias) > 5.0 * plug.mc_se);
  CHECK(std::abs(plug.mean_bias) > 2.0 * std::abs(cf.mean_bias));
  CHECK(plug.mean_bias < 0.0);  // own-observation terms shrink the covariance
}

TEST_CASE("higher-order estimates run inside the replication engine") {
  const DgpSpec dgp = make_dgp("ecc_smooth");
  McConfig cfg;
  cfg.n = 150;
  cfg.cells_per_dim = 4;
  cfg.reps = 20;
  cfg.seed = 8;
  cfg.threads = 1;
  const std::vector<EstimatorConfig> ests = {
      {EstimatorKind::hoif_q0, NuisanceSource::truth, NuisanceSource::truth, ""},
      {EstimatorKind::hoif_q1, NuisanceSource::truth, NuisanceSource::truth, ""}};
  const MonteCarloReport r = run_monte_carlo(dgp, ests, cfg);
  CHECK(r.stats[0].label == "hoif0");
  CHECK(r.stats[1].label == "hoif1");
  CHECK(std::isfinite(r.stats[0].mean_bias));
  CHECK(std::isfinite(r.stats[1].mean_bias));
}

TEST_CASE("basis size rule inverts the tensor dimension") {
  CHECK(cells_for_target_k(16, 1, 1) == 15);  // J = 16
  CHECK(cells_for_target_k(9, 2, 0) == 3);    // J = 3 per dimension
  CHECK(cells_for_target_k(10, 2, 1) == 2);   // J = round(sqrt(10)) = 3
  CHECK(cells_for_target_k(1, 1, 2) == 1);    // J floors at kappa + 1
}

TEST_CASE("rate sweep validates its grid") {
  const DgpSpec dgp = make_dgp("ecc_smooth");
  const EstimatorConfig est{EstimatorKind::dcdr, NuisanceSource::truth, NuisanceSource::truth, ""};
  McConfig base;
  base.reps = 5;
  try {
    rate_sweep(dgp, est, {500, 1000}, KRule{}, base);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == "RATE_GRID_TOO_SMALL");
  }
  CHECK_THROWS_AS(rate_sweep(dgp, est, {500, 500, 1000}, KRule{}, base), Error);
}

TEST_CASE("oracle estimates contract at the parametric rate") {
  const DgpSpec dgp = make_dgp("ecc_smooth");
  const EstimatorConfig est{EstimatorKind::dcdr, NuisanceSource::truth, NuisanceSource::truth, ""};
  McConfig base;
  base.kappa = 1;
  base.folds = 3;
  base.reps = 300;
  base.seed = 20;
  base.threads = 0;
  const RateReport r = rate_sweep(dgp, est, {500, 1000, 2000, 4000}, KRule{2.0, 1.0 / 3.0}, base);
  REQUIRE(r.cells.size() == 4);
  CHECK(r.cells[0].n == 500);
  CHECK(r.cells[3].K > r.cells[0].K);
  CHECK(r.slope > -0.55);
  CHECK(r.slope < -0.45);
  CHECK(r.slope_se < 0.05);
  CHECK(r.target_slope == -0.5);
}

TEST_CASE("worker pool surfaces the lowest failing index") {
  std::vector<int> ran;
  try {
    parallel_for(8, 1, [&](int i) {
      ran.push_back(i);
      if (i == 2) throw Error("INTERNAL", "serial boom");
    });
    CHECK(false);
  } catch (const Error&) {
    CHECK(ran == std::vector<int>({0, 1, 2}));  // serial mode stops early
  }

  try {
    parallel_for(16, 4, [](int i) {
      if (i == 5 || i == 2) throw Error("INTERNAL", "boom " + std::to_string(i));
    });
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "boom 2");
  }

  parallel_for(0, 4, [](int) { throw Error("INTERNAL", "never runs"); });
}
