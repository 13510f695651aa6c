#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "crossfit/csv.hpp"
#include "crossfit/errors.hpp"
#include "crossfit/runner.hpp"
#include "crossfit/simlab.hpp"

using namespace crossfit;

namespace {

constexpr FunctionalKind kEcc = FunctionalKind::expected_conditional_covariance;
constexpr FunctionalKind kMd = FunctionalKind::missing_data_mean;
constexpr FunctionalKind kWad = FunctionalKind::weighted_average_derivative;
constexpr FunctionalKind kPl = FunctionalKind::partially_linear;

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path(name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

Json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(static_cast<bool>(in));
  Json j;
  in >> j;
  return j;
}

}  // namespace

TEST_CASE("well-formed file parses into the dataset") {
  const LoadedData d = parse_csv("y,a,x1\n1,2,0.5\n3,4,0.25\n5,6,0.75\n", kEcc);
  REQUIRE(d.data.n() == 3);
  CHECK(d.data.r() == 1);
  CHECK(d.data.d_a() == 1);
  CHECK(d.data.y(1) == 3.0);
  CHECK(d.data.a(2, 0) == 6.0);
  CHECK(d.data.x(1, 0) == 0.25);
  CHECK_FALSE(d.rescaled);
  REQUIRE(d.covariate_range.size() == 1);
  CHECK(d.covariate_range[0][0] == 0.25);
  CHECK(d.covariate_range[0][1] == 0.75);

  // column order and stray spaces are irrelevant
  const LoadedData shuffled = parse_csv("x1 , y ,a\n0.5, 1 ,2\n", kEcc);
  CHECK(shuffled.data.y(0) == 1.0);
  CHECK(shuffled.data.a(0, 0) == 2.0);
  CHECK(shuffled.data.x(0, 0) == 0.5);
}

TEST_CASE("missing columns are reported by name") {
  CHECK(contains(error_message([] { parse_csv("a,x1\n1,0.5\n", kEcc); }), "'y'"));
  CHECK(contains(error_message([] { parse_csv("y,x1\n1,0.5\n", kEcc); }), "'a'"));
  CHECK(contains(error_message([] { parse_csv("y,a\n1,2\n", kEcc); }), "'x1'"));
  // the missing-data kind renames the covariates
  CHECK(contains(error_message([] { parse_csv("y,a,x1\n1,1,0.5\n", kMd); }), "'w1'"));
  CHECK(error_code([] { parse_csv("", kEcc); }) == "DATA_FORMAT");
  CHECK(error_code([] { parse_csv("y,a,x1\n", kEcc); }) == "DATA_FORMAT");
}

TEST_CASE("missing-data indicator is validated per row") {
  const std::string good = "y,a,w1\n1,1,0.1\n0,0,0.2\n2,1,0.3\n";
  CHECK(parse_csv(good, kMd).data.a(1, 0) == 0.0);
  const std::string bad = "y,a,w1\n1,1,0.1\n0,0,0.2\n2,1,0.3\n0,0,0.4\n9,2,0.5\n";
  const std::string msg = error_message([&] { parse_csv(bad, kMd); });
  CHECK(contains(msg, "0 or 1"));
  CHECK(contains(msg, "row 5"));
}

TEST_CASE("cell-level problems cite column and row") {
  const std::string msg =
      error_message([] { parse_csv("y,a,x1\n1,2,0.5\n1,bad,0.6\n", kEcc); });
  CHECK(contains(msg, "column a"));
  CHECK(contains(msg, "row 2"));
  CHECK(contains(error_message([] { parse_csv("y,a,x1\n1,2\n", kEcc); }), "expected 3"));
}

TEST_CASE("partially linear data takes a vector of regressors") {
  const LoadedData d = parse_csv("y,a1,a2,x1\n1,2,3,0.5\n4,5,6,0.25\n", kPl);
  REQUIRE(d.data.d_a() == 2);
  CHECK(d.data.a(0, 0) == 2.0);
  CHECK(d.data.a(0, 1) == 3.0);
  CHECK(d.data.a(1, 1) == 6.0);
  // a single plain column still works
  CHECK(parse_csv("y,a,x1\n1,2,0.5\n", kPl).data.d_a() == 1);
  CHECK(contains(error_message([] { parse_csv("y,x1\n1,0.5\n", kPl); }), "'a'"));
}

TEST_CASE("derivative data does not need a regressor column") {
  const LoadedData d = parse_csv("y,x1,x2\n1,0.5,0.2\n2,0.25,0.8\n", kWad);
  CHECK(d.data.r() == 2);
  CHECK(d.data.a.isZero(0.0));
  CHECK(parse_csv("y,a,x1\n1,7,0.5\n", kWad).data.a(0, 0) == 7.0);
}

TEST_CASE("rescaling maps covariates onto the unit interval") {
  CsvOptions opt;
  opt.rescale = true;
  const LoadedData d = parse_csv("y,a,x1,x2\n1,1,2,5\n2,1,4,5\n3,1,3,5\n", kEcc, opt);
  CHECK(d.rescaled);
  CHECK(d.data.x(0, 0) == 0.0);
  CHECK(d.data.x(1, 0) == 1.0);
  CHECK(d.data.x(2, 0) == 0.5);
  CHECK(d.covariate_range[0][0] == 2.0);
  CHECK(d.covariate_range[0][1] == 4.0);
  // a constant column lands at the midpoint
  CHECK(d.data.x(0, 1) == 0.5);
  CHECK(d.data.x(2, 1) == 0.5);

  const std::string msg =
      error_message([] { parse_csv("y,a,x1\n1,1,2\n2,1,4\n", kEcc); });
  CHECK(error_code([] { parse_csv("y,a,x1\n1,1,2\n", kEcc); }) == "DOMAIN");
  CHECK(contains(msg, "x1"));
  CHECK(contains(msg, "rescal"));
}

TEST_CASE("write and load round-trip bit-exact values") {
  Dataset d;
  d.y = Eigen::Vector3d(1.0 / 3.0, -2.5, 1e-17);
  d.a = Eigen::MatrixXd(3, 2);
  d.a << 0.1, -0.2, 1.0 / 7.0, 4.0, 0.0, -1e16;
  d.x = Eigen::MatrixXd(3, 1);
  d.x << 0.25, 2.0 / 3.0, 0.999999999999;

  TempFile f("cli_io_roundtrip.csv");
  write_csv(f.path, d, kPl);
  const LoadedData back = load_csv(f.path, kPl);
  CHECK(back.data.y == d.y);
  CHECK(back.data.a == d.a);
  CHECK(back.data.x == d.x);

  Dataset md;
  md.y = Eigen::Vector2d(3.0, 0.0);
  md.a = Eigen::MatrixXd(2, 1);
  md.a << 1.0, 0.0;
  md.x = Eigen::MatrixXd(2, 1);
  md.x << 0.5, 0.75;
  TempFile g("cli_io_roundtrip_md.csv");
  write_csv(g.path, md, kMd);
  {
    std::ifstream in(g.path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "y,a,w1");
  }
  CHECK(load_csv(g.path, kMd).data.a == md.a);

  CHECK(error_code([] { load_csv("definitely_not_here.csv", kEcc); }) == "DATA_FORMAT");
}

TEST_CASE("numeric strings carry the full double") {
  const double v = 1.0 / 3.0;
  const std::string s = repr17(v);
  CHECK(std::stod(s) == v);
  int digits = 0;
  for (char c : s)
    if (c >= '1' && c <= '9') ++digits;
  CHECK(digits >= 15);
  CHECK(repr17(0.5) == "0.5");
}

TEST_CASE("functional names round trip") {
  for (const char* name : {"ecc", "missing_data", "wad", "pl"})
    CHECK(functional_name(functional_from_name(name)) == std::string(name));
  CHECK_THROWS_AS(functional_from_name("unknown"), Error);
}

TEST_CASE("estimate mode produces a full report from a file") {
  const Dataset d = generate(make_dgp("ecc_smooth"), 60, 11);
  TempFile f("cli_io_estimate.csv");
  write_csv(f.path, d, kEcc);

  RunConfig cfg;
  cfg.mode = "estimate";
  cfg.functional = "ecc";
  cfg.estimator = "dcdr";
  cfg.cells = 3;
  cfg.kappa = 1;
  cfg.folds = 3;
  cfg.seed = 77;
  cfg.data_path = f.path;
  const Json out = run(cfg);

  CHECK(out.at("schema") == "1");
  CHECK(out.contains("timestamp"));
  CHECK(out.at("config").at("cells") == 3);
  CHECK(out.at("config").at("seed") == 77);
  CHECK(out.at("config").at("mode") == "estimate");
  const Json& est = out.at("estimate");
  REQUIRE(est.at("beta").size() == 1);
  const double beta = est.at("beta")[0].get<double>();
  CHECK(std::stod(est.at("beta_repr")[0].get<std::string>()) == beta);
  CHECK(est.at("n") == 60);
  CHECK(est.at("K") == 4);
  CHECK(est.at("plan_kind") == "dcdr");
  CHECK(est.at("groups").size() == 3);
  CHECK(out.at("plan").at("kind") == "dcdr");
  CHECK_FALSE(out.contains("rescaled_ranges"));

  RunConfig resc = cfg;
  resc.rescale = true;
  CHECK(run(resc).at("rescaled_ranges").size() == 1);
}

TEST_CASE("simulate mode echoes labels per estimator") {
  RunConfig cfg;
  cfg.mode = "simulate";
  cfg.dgp = "ecc_smooth";
  cfg.estimator = "dcdr,cf_plugin";
  cfg.n = 50;
  cfg.reps = 5;
  cfg.cells = 3;
  cfg.threads = 1;
  const Json out = run(cfg);
  const Json& stats = out.at("simulate").at("estimators");
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].at("estimator") == "dcdr");
  CHECK(stats[1].at("estimator") == "cf_plugin");
  CHECK(stats[0].contains("mean_bias_repr"));
  CHECK(out.at("simulate").at("beta0") == 0.5);
  CHECK(out.at("simulate").at("config").at("reps") == 5);
}

TEST_CASE("invalid configurations fail with stable codes") {
  RunConfig cfg;
  cfg.mode = "teleport";
  CHECK(error_code([&] { run(cfg); }) == "INVALID_SPEC");

  cfg.mode = "estimate";
  CHECK(contains(error_message([&] { run(cfg); }), "data file"));

  cfg.data_path = "missing.csv";
  cfg.functional = "ecc";
  cfg.estimator = "pl";
  CHECK(error_code([&] { run(cfg); }) == "INVALID_SPEC");  // mismatched pairing
  cfg.estimator = "hoif0";
  cfg.functional = "missing_data";
  CHECK(error_code([&] { run(cfg); }) == "INVALID_SPEC");

  cfg.functional = "ecc";
  cfg.estimator = "not_an_estimator";
  CHECK(error_code([&] { run(cfg); }) == "INVALID_SPEC");

  RunConfig sim;
  sim.mode = "simulate";
  sim.dgp = "no_such_process";
  CHECK(error_code([&] { run(sim); }) == "INVALID_SPEC");
  sim.dgp = "ecc_smooth";
  sim.gamma_source = "psychic";
  CHECK(error_code([&] { run(sim); }) == "INVALID_SPEC");
  sim.gamma_source = "estimate";
  sim.normalization = "weird";
  CHECK(error_code([&] { run(sim); }) == "INVALID_SPEC");

  RunConfig rates;
  rates.mode = "rates";
  rates.estimator = "dcdr,plugin";
  CHECK(contains(error_message([&] { run(rates); }), "one estimator"));
}

TEST_CASE("failures become machine-readable reports and exit status") {
  TempFile f("cli_io_error_report.json");
  RunConfig cfg;
  cfg.mode = "rates";
  cfg.dgp = "ecc_smooth";
  cfg.estimator = "dcdr";
  cfg.n_grid = {500, 1000};  // two points cannot support a slope
  cfg.reps = 3;
  cfg.out_path = f.path;
  CHECK(run_to_file(cfg) == 1);
  const Json err = read_json(f.path);
  CHECK(err.at("schema") == "1");
  CHECK(err.at("error").at("code") == "RATE_GRID_TOO_SMALL");
  CHECK_FALSE(err.contains("timestamp"));
}

TEST_CASE("successful runs land on disk with the config echo") {
  const Dataset d = generate(make_dgp("md_smooth"), 40, 2);
  TempFile csv("cli_io_md_data.csv");
  write_csv(csv.path, d, kMd);

  TempFile f("cli_io_md_report.json");
  RunConfig cfg;
  cfg.mode = "estimate";
  cfg.functional = "missing_data";
  cfg.estimator = "cf_plugin";
  cfg.cells = 2;
  cfg.folds = 2;
  cfg.data_path = csv.path;
  cfg.out_path = f.path;
  REQUIRE(run_to_file(cfg) == 0);
  const Json out = read_json(f.path);
  CHECK(out.at("config").at("functional") == "missing_data");
  CHECK(out.at("config").at("data") == csv.path);
  CHECK(out.at("estimate").at("plan_kind") == "plugin");
  CHECK(out.at("plan").at("groups").size() == 2);
}
