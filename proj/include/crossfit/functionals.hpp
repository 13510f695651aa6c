#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "crossfit/basis.hpp"

namespace crossfit {

enum class FunctionalKind {
  expected_conditional_covariance,
  missing_data_mean,
  weighted_average_derivative,
  partially_linear,
};

struct Observation {
  double y = 0.0;
  Eigen::VectorXd a;  // scalar kinds use a(0)
  Eigen::VectorXd x;  // the conditioning covariate; w for missing-data
};

// Column store for a sample. For the missing-data mean, `x` holds w and the
// convention y = a * Y applies (y is 0 whenever the response is unobserved).
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd a;  // n x d_a
  Eigen::MatrixXd x;  // n x r

  int n() const { return static_cast<int>(y.size()); }
  int r() const { return static_cast<int>(x.cols()); }
  int d_a() const { return static_cast<int>(a.cols()); }
  Observation row(int i) const {
    return Observation{y(i), a.row(i).transpose(), x.row(i).transpose()};
  }
};

// Grid for integrating omega * gamma when gamma is an arbitrary callable (the
// average-derivative m does not depend on z). Series fits use the exact
// basis-cell quadrature instead.
struct GenericQuad {
  int cells_per_dim = 64;
  int nodes_per_cell = 6;
};

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::expected_conditional_covariance;

  // weighted average derivative only
  ScalarFn omega;
  std::string omega_name;
  int r = 0;
  QuadratureSpec quad{};
  GenericQuad generic_quad{};

  // Optional replacement of p(x) by transform * p(x) everywhere. Estimators
  // are invariant under invertible transforms when grams are nonsingular;
  // exposed for diagnostics.
  Eigen::MatrixXd basis_transform;
};

FunctionalSpec make_ecc();
FunctionalSpec make_missing_data();
FunctionalSpec make_partially_linear();

// check_boundary verifies numerically that omega vanishes on the boundary of
// the cube, which the derivative functional's integration-by-parts form needs.
FunctionalSpec make_weighted_avg_derivative(ScalarFn omega, const std::string& name, int r,
                                            QuadratureSpec quad = {}, GenericQuad generic = {},
                                            bool check_boundary = true);

// Built-in weight families: "poly_bump" and "raised_cosine", both integrating
// to one per dimension and vanishing at the boundary.
FunctionalSpec make_weighted_avg_derivative_named(const std::string& omega_name, int r,
                                                  QuadratureSpec quad = {},
                                                  GenericQuad generic = {});

// True data-generating components, for oracle diagnostics. Only the pieces a
// given functional needs have to be present.
struct TrueNuisances {
  ScalarFn gamma0;       // gamma(x); gamma(1,w) as a function of w for missing-data
  ScalarFn e_a_given_x;  // E[a|x]
  ScalarFn pi0;          // propensity, missing-data
  ScalarFn f0;           // density of x
};

// m(z, gamma) for a gamma given as a function of the covariate vector.
double m_eval(const FunctionalSpec& f, const Observation& z, const ScalarFn& gamma);

// v(z) with components m(z, p_k) - m(z, 0).
Eigen::VectorXd v_eval(const FunctionalSpec& f, const Observation& z, const Basis& basis);

double oracle_alpha(const FunctionalSpec& f, const TrueNuisances& truth, const Observation& z);

// Basis features of the covariate vector, with the optional transform applied.
Eigen::VectorXd features(const FunctionalSpec& f, const Basis& basis, const Eigen::VectorXd& x);

Eigen::MatrixXd feature_rows(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                             const std::vector<int>& idx);

// Regressors entering the gram and the regression moment: features(x) for most
// kinds, a * features(w) for the missing-data mean.
Eigen::MatrixXd design_rows(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                            const std::vector<int>& idx);

Eigen::MatrixXd v_rows(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                       const std::vector<int>& idx);

// Transform-adjusted integral of omega * p for the average derivative.
Eigen::VectorXd wad_v(const FunctionalSpec& f, const Basis& basis);

}  // namespace crossfit
