#include "crossfit/linreg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "crossfit/errors.hpp"

namespace crossfit {

namespace {

constexpr double kSymTol = 1e-10;

// Haar grams (and missing-data grams built from Haar cells) are diagonal by
// construction, with exact zeros off the diagonal. Their eigendecomposition is
// trivial, which matters in Monte Carlo loops with K in the hundreds.
bool is_exactly_diagonal(const Eigen::MatrixXd& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j && a(i, j) != 0.0) return false;
  return true;
}

struct EigInfo {
  Eigen::VectorXd values;   // unordered for the diagonal branch
  Eigen::MatrixXd vectors;  // empty for the diagonal branch
  bool diagonal = false;
};

EigInfo sym_eig(const Eigen::MatrixXd& a) {
  EigInfo e;
  if (is_exactly_diagonal(a)) {
    e.diagonal = true;
    e.values = a.diagonal();
    return e;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw Error("EIG_FAIL", "eigendecomposition did not converge");
  e.values = es.eigenvalues();
  e.vectors = es.eigenvectors();
  return e;
}

bool keep_eig(double lambda, double cut) { return lambda > 0.0 && lambda >= cut; }

void check_symmetric(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error("NOT_SYMMETRIC", "matrix is not square");
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = j + 1; i < a.rows(); ++i)
      if (std::abs(a(i, j) - a(j, i)) > kSymTol)
        throw Error("NOT_SYMMETRIC", "matrix is not symmetric within tolerance");
}

Eigen::MatrixXd pinv_from(const EigInfo& e, double rel_tol) {
  const Eigen::Index k = e.values.size();
  const double max_eig = k > 0 ? e.values.maxCoeff() : 0.0;
  const double cut = rel_tol * std::max(max_eig, 0.0);
  if (e.diagonal) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      if (keep_eig(e.values(i), cut)) p(i, i) = 1.0 / e.values(i);
    return p;
  }
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < k; ++i)
    if (keep_eig(e.values(i), cut)) inv(i) = 1.0 / e.values(i);
  return e.vectors * inv.asDiagonal() * e.vectors.transpose();
}

GramSummary summarize(const Eigen::MatrixXd& a, const EigInfo& e, double eig_threshold,
                      int n_used) {
  GramSummary s;
  s.matrix = a;
  s.n_used = n_used;
  const Eigen::Index k = e.values.size();
  s.min_eig = k > 0 ? e.values.minCoeff() : 0.0;
  s.max_eig = k > 0 ? e.values.maxCoeff() : 0.0;
  const double cut = kPinvRelTol * std::max(s.max_eig, 0.0);
  s.rank = 0;
  for (Eigen::Index i = 0; i < k; ++i)
    if (keep_eig(e.values(i), cut)) ++s.rank;
  s.nonsingular = s.min_eig > eig_threshold;
  s.half_gate = s.min_eig > 0.5;
  return s;
}

}  // namespace

Eigen::MatrixXd pinv_psd(const Eigen::MatrixXd& a, double rel_tol) {
  check_symmetric(a);
  return pinv_from(sym_eig(a), rel_tol);
}

GramOps gram_ops_from_rows(const Eigen::MatrixXd& rows, double eig_threshold, double rel_tol) {
  if (rows.rows() == 0) throw Error("EMPTY_SAMPLE", "gram requires a nonempty sample");
  const double n = static_cast<double>(rows.rows());
  Eigen::MatrixXd a = (rows.transpose() * rows) / n;
  a = 0.5 * (a + a.transpose());  // kill asymmetric rounding residue
  const EigInfo e = sym_eig(a);
  GramOps ops;
  ops.summary = summarize(a, e, eig_threshold, static_cast<int>(rows.rows()));
  ops.pinv = pinv_from(e, rel_tol);
  return ops;
}

GramSummary gram_from_rows(const Eigen::MatrixXd& rows, double eig_threshold) {
  return gram_ops_from_rows(rows, eig_threshold).summary;
}

GramSummary gram(const Basis& basis, const Eigen::MatrixXd& points, double eig_threshold) {
  if (points.rows() == 0) throw Error("EMPTY_SAMPLE", "gram requires a nonempty sample");
  Eigen::MatrixXd rows(points.rows(), basis.K);
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    rows.row(i) = eval_basis(basis, points.row(i).transpose()).transpose();
  return gram_from_rows(rows, eig_threshold);
}

SeriesFit fit_from_ops(const GramOps& ops, const Eigen::VectorXd& h, FitTarget target,
                       int n_used) {
  if (h.size() != ops.summary.matrix.rows())
    throw Error("SIZE_MISMATCH", "moment vector length does not match gram");
  SeriesFit f;
  f.coeffs = ops.solve(h);
  f.gram = ops.summary;
  f.n_used = n_used;
  f.target = target;
  return f;
}

SeriesFit fit_regression_rows(const Eigen::MatrixXd& rows, const Eigen::VectorXd& y,
                              double eig_threshold, double rel_tol) {
  if (rows.rows() != y.size()) throw Error("SIZE_MISMATCH", "design rows and y differ in length");
  if (rows.rows() == 0) throw Error("EMPTY_SAMPLE", "regression requires a nonempty sample");
  const GramOps ops = gram_ops_from_rows(rows, eig_threshold, rel_tol);
  const Eigen::VectorXd h = rows.transpose() * y / static_cast<double>(rows.rows());
  return fit_from_ops(ops, h, FitTarget::regression, static_cast<int>(rows.rows()));
}

SeriesFit fit_regression(const Basis& basis, const Eigen::MatrixXd& points,
                         const Eigen::VectorXd& y, double eig_threshold, double rel_tol) {
  if (points.rows() != y.size()) throw Error("SIZE_MISMATCH", "points and y differ in length");
  if (points.rows() == 0) throw Error("EMPTY_SAMPLE", "regression requires a nonempty sample");
  Eigen::MatrixXd rows(points.rows(), basis.K);
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    rows.row(i) = eval_basis(basis, points.row(i).transpose()).transpose();
  return fit_regression_rows(rows, y, eig_threshold, rel_tol);
}

SeriesFit fit_riesz_rows(const Eigen::MatrixXd& gram_rows, const Eigen::MatrixXd& v_rows,
                         double eig_threshold, double rel_tol) {
  if (v_rows.rows() == 0) throw Error("EMPTY_SAMPLE", "riesz fit requires a nonempty sample");
  if (gram_rows.cols() != v_rows.cols())
    throw Error("SIZE_MISMATCH", "v dimension does not match basis dimension");
  const GramOps ops = gram_ops_from_rows(gram_rows, eig_threshold, rel_tol);
  const Eigen::VectorXd h = v_rows.colwise().mean();
  return fit_from_ops(ops, h, FitTarget::riesz, static_cast<int>(v_rows.rows()));
}

SeriesFit fit_riesz(const Basis& basis, const Eigen::MatrixXd& v_rows,
                    const Eigen::MatrixXd& gram_points, double eig_threshold, double rel_tol) {
  if (gram_points.rows() == 0) throw Error("EMPTY_SAMPLE", "riesz fit requires a nonempty sample");
  if (v_rows.cols() != basis.K)
    throw Error("SIZE_MISMATCH", "v dimension does not match basis dimension");
  Eigen::MatrixXd rows(gram_points.rows(), basis.K);
  for (Eigen::Index i = 0; i < gram_points.rows(); ++i)
    rows.row(i) = eval_basis(basis, gram_points.row(i).transpose()).transpose();
  return fit_riesz_rows(rows, v_rows, eig_threshold, rel_tol);
}

}  // namespace crossfit
