#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "crossfit/basis.hpp"
#include "crossfit/errors.hpp"
#include "crossfit/rng.hpp"

using namespace crossfit;

namespace {

Eigen::VectorXd pt(double x) { return Eigen::VectorXd::Constant(1, x); }

Eigen::VectorXd pt2(double x, double y) {
  Eigen::VectorXd p(2);
  p << x, y;
  return p;
}

// Classic 10-point Gauss-Legendre rule on [-1,1], exact through degree 19.
// Values from the standard tables, independent of the library's own nodes.
constexpr double kGl10X[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                              0.8650633666889845, 0.9739065285171717};
constexpr double kGl10W[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                              0.1494513491505806, 0.0666713443086881};

double gl10(double a, double b, const std::function<double(double)>& f) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 5; ++i)
    acc += kGl10W[i] * (f(c + h * kGl10X[i]) + f(c - h * kGl10X[i]));
  return acc * h;
}

}  // namespace

TEST_CASE("basis counts follow J = cells + kappa per dimension") {
  CHECK(build_basis({1, 0, 2, Normalization::none}).K == 2);
  CHECK(build_basis({2, 0, 2, Normalization::none}).K == 4);
  CHECK(build_basis({1, 1, 3, Normalization::none}).K == 4);
  CHECK(build_basis({3, 2, 3, Normalization::none}).K == 125);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_WITH_AS(build_basis({0, 0, 2, Normalization::none}), doctest::Contains("dimension"),
                       Error);
  CHECK_THROWS_AS(build_basis({1, 0, 0, Normalization::none}), Error);
  CHECK_THROWS_AS(build_basis({1, -1, 2, Normalization::none}), Error);
}

TEST_CASE("haar evaluation is a cell indicator") {
  const Basis b = build_basis({1, 0, 2, Normalization::none});
  const Eigen::VectorXd p = eval_basis(b, pt(0.25));
  CHECK(p(0) == 1.0);
  CHECK(p(1) == 0.0);

  const Basis bu = build_basis({1, 0, 2, Normalization::uniform_design});
  const Eigen::VectorXd q = eval_basis(bu, pt(0.75));
  CHECK(q(0) == 0.0);
  CHECK(q(1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("right endpoint maps into the last cell, outside is an error") {
  const Basis b = build_basis({1, 0, 4, Normalization::none});
  const Eigen::VectorXd p = eval_basis(b, pt(1.0));
  CHECK(p(3) == 1.0);
  CHECK_THROWS_AS(eval_basis(b, pt(1.0000001)), Error);
  CHECK_THROWS_AS(eval_basis(b, pt(-0.0000001)), Error);
  try {
    eval_basis(b, pt(2.0));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == "DOMAIN");
  }
}

TEST_CASE("partition of unity and local support") {
  Rng rng(17);
  for (const auto& spec : {BasisSpec{1, 0, 5, Normalization::none},
                           BasisSpec{1, 1, 3, Normalization::none},
                           BasisSpec{1, 3, 4, Normalization::none},
                           BasisSpec{2, 2, 3, Normalization::none}}) {
    const Basis b = build_basis(spec);
    const int max_nnz = static_cast<int>(std::pow(spec.kappa + 1.0, spec.r));
    for (int t = 0; t < 10000 / 4; ++t) {
      Eigen::VectorXd x(spec.r);
      for (int d = 0; d < spec.r; ++d) x(d) = rng.uniform01();
      const Eigen::VectorXd p = eval_basis(b, x);
      CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
      CHECK((p.array() != 0.0).count() <= max_nnz);
      CHECK(p.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("integrate_weighted basic values") {
  const Basis haar2 = build_basis({1, 0, 2, Normalization::none});
  const Eigen::VectorXd flat = integrate_weighted(haar2, [](const Eigen::VectorXd&) { return 1.0; }, {});
  CHECK(flat(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(flat(1) == doctest::Approx(0.5).epsilon(1e-14));

  const Basis one = build_basis({1, 0, 1, Normalization::none});
  const auto bump = [](const Eigen::VectorXd& x) { return 6.0 * x(0) * (1.0 - x(0)); };
  CHECK(integrate_weighted(one, bump, {})(0) == doctest::Approx(1.0).epsilon(1e-13));

  const Eigen::VectorXd halves = integrate_weighted(haar2, bump, {});
  CHECK(halves(0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(halves(1) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("integrate_weighted matches an independent composite rule") {
  // Random piecewise-smooth weight integrated against every spline column.
  Rng rng(99);
  for (int kappa : {0, 1, 2}) {
    const int cells = 3;
    const Basis b = build_basis({1, kappa, cells, Normalization::none});
    const double c0 = rng.uniform(-1.0, 1.0), c1 = rng.uniform(-1.0, 1.0),
                 c2 = rng.uniform(-1.0, 1.0);
    const auto omega_1d = [&](double t) { return c0 + c1 * t + c2 * t * t; };
    const auto omega = [&](const Eigen::VectorXd& x) { return omega_1d(x(0)); };
    const Eigen::VectorXd got = integrate_weighted(b, omega, {});
    for (int k = 0; k < b.K; ++k) {
      double want = 0.0;
      for (int c = 0; c < cells; ++c) {
        const double lo = static_cast<double>(c) / cells, hi = (c + 1.0) / cells;
        want += gl10(lo, hi, [&](double t) {
          // interior points only; the open cell interiors determine the integral
          return omega_1d(t) * eval_basis(b, pt(t))(k);
        });
      }
      CHECK(std::abs(got(k) - want) <= 1e-10);
    }
  }
}

TEST_CASE("tensor quadrature integrates separable weights") {
  const Basis b = build_basis({2, 1, 2, Normalization::none});
  const auto omega = [](const Eigen::VectorXd& x) { return x(0) * (1.0 - x(1)); };
  const Eigen::VectorXd v = integrate_weighted(b, omega, {});
  // sum over columns equals the integral of omega by partition of unity
  CHECK(v.sum() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("library nodes agree with the tabulated 10-point rule") {
  Eigen::VectorXd nodes, weights;
  gauss_legendre(10, nodes, weights);
  for (int i = 0; i < 5; ++i) {
    // ascending order: entry 5+i is the i-th positive tabulated node
    CHECK(std::abs(nodes(5 + i) - kGl10X[i]) <= 1e-13);
    CHECK(std::abs(nodes(4 - i) + kGl10X[i]) <= 1e-13);
    CHECK(std::abs(weights(5 + i) - kGl10W[i]) <= 1e-13);
    CHECK(std::abs(weights(4 - i) - kGl10W[i]) <= 1e-13);
  }
}

TEST_CASE("uniform design haar gram approaches the identity") {
  const Basis b = build_basis({1, 0, 2, Normalization::uniform_design});
  Rng rng(4242);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(2, 2);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd p = eval_basis(b, pt(rng.uniform01()));
    gram.noalias() += p * p.transpose();
  }
  gram /= n;
  CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 0.1);
}

TEST_CASE("clamped knots repeat at the boundary and are even inside") {
  const Basis b = build_basis({1, 2, 4, Normalization::none});
  // length J + kappa + 1 = (4 + 2) + 2 + 1
  REQUIRE(b.knots.size() == 9);
  for (int i = 0; i <= 2; ++i) CHECK(b.knots(i) == 0.0);
  for (int i = 6; i <= 8; ++i) CHECK(b.knots(i) == 1.0);
  CHECK(b.knots(3) == doctest::Approx(0.25));
  CHECK(b.knots(4) == doctest::Approx(0.5));
  CHECK(b.knots(5) == doctest::Approx(0.75));
}

TEST_CASE("two dimensional evaluation is the tensor product") {
  const Basis b2 = build_basis({2, 1, 2, Normalization::none});
  const Basis b1 = build_basis({1, 1, 2, Normalization::none});
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const double u = rng.uniform01(), v = rng.uniform01();
    const Eigen::VectorXd pu = eval_basis(b1, pt(u));
    const Eigen::VectorXd pv = eval_basis(b1, pt(v));
    const Eigen::VectorXd p = eval_basis(b2, pt2(u, v));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(std::abs(p(i * 3 + j) - pu(i) * pv(j)) <= 1e-14);
  }
}
