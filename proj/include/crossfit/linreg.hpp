#pragma once

#include <Eigen/Core>

#include "crossfit/basis.hpp"

namespace crossfit {

inline constexpr double kEigThreshold = 1e-8;   // nonsingularity gate on min eigenvalue
inline constexpr double kPinvRelTol = 1e-10;    // pseudo-inverse truncation, relative to max eigenvalue

struct GramSummary {
  Eigen::MatrixXd matrix;
  int rank = 0;
  double min_eig = 0.0;
  double max_eig = 0.0;
  bool nonsingular = false;  // min_eig > eig_threshold
  bool half_gate = false;    // min_eig > 1/2; diagnostic only, meaningful under uniform_design
  int n_used = 0;
};

enum class FitTarget { regression, riesz };

struct SeriesFit {
  Eigen::VectorXd coeffs;
  GramSummary gram;
  int n_used = 0;
  FitTarget target = FitTarget::regression;
};

// A gram matrix together with its truncated pseudo-inverse, so several fits on
// the same subsample can share one eigendecomposition.
struct GramOps {
  GramSummary summary;
  Eigen::MatrixXd pinv;

  Eigen::VectorXd solve(const Eigen::VectorXd& h) const { return pinv * h; }
};

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix via eigendecomposition,
// zeroing eigenvalues below rel_tol * max_eig. Throws on non-symmetric input.
Eigen::MatrixXd pinv_psd(const Eigen::MatrixXd& a, double rel_tol = kPinvRelTol);

GramOps gram_ops_from_rows(const Eigen::MatrixXd& rows, double eig_threshold = kEigThreshold,
                           double rel_tol = kPinvRelTol);

GramSummary gram_from_rows(const Eigen::MatrixXd& rows, double eig_threshold = kEigThreshold);

// Sample second-moment matrix of basis functions at the given points (rows of
// `points`), averaged with 1/n.
GramSummary gram(const Basis& basis, const Eigen::MatrixXd& points,
                 double eig_threshold = kEigThreshold);

SeriesFit fit_from_ops(const GramOps& ops, const Eigen::VectorXd& h, FitTarget target, int n_used);

// Least squares of y on the rows of the design matrix: coeffs = pinv(R'R/n) R'y/n.
SeriesFit fit_regression_rows(const Eigen::MatrixXd& rows, const Eigen::VectorXd& y,
                              double eig_threshold = kEigThreshold, double rel_tol = kPinvRelTol);

SeriesFit fit_regression(const Basis& basis, const Eigen::MatrixXd& points,
                         const Eigen::VectorXd& y, double eig_threshold = kEigThreshold,
                         double rel_tol = kPinvRelTol);

// Riesz-representer coefficients: gram from gram_rows, moment vector from the
// column means of v_rows.
SeriesFit fit_riesz_rows(const Eigen::MatrixXd& gram_rows, const Eigen::MatrixXd& v_rows,
                         double eig_threshold = kEigThreshold, double rel_tol = kPinvRelTol);

SeriesFit fit_riesz(const Basis& basis, const Eigen::MatrixXd& v_rows,
                    const Eigen::MatrixXd& gram_points, double eig_threshold = kEigThreshold,
                    double rel_tol = kPinvRelTol);

}  // namespace crossfit
