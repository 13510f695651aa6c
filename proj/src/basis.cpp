#include "crossfit/basis.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "crossfit/errors.hpp"

namespace crossfit {

namespace {

constexpr int kMaxKappa = 30;

// Index of the knot cell containing t; the closed right endpoint maps into the
// last cell.
int cell_of(double t, int m) {
  int c = static_cast<int>(t * m);
  if (c >= m) c = m - 1;
  return c;
}

// Values of the kappa+1 b-splines that are nonzero on the given cell,
// by the Cox-de Boor triangular recurrence (stable local form).
void local_spline_values(const Basis& b, double t, int cell, double* vals) {
  const int p = b.spec.kappa;
  const Eigen::VectorXd& U = b.knots;
  const int span = cell + p;  // U[span] <= t < U[span+1]
  vals[0] = 1.0;
  std::array<double, kMaxKappa + 1> left{}, right{};
  for (int j = 1; j <= p; ++j) {
    left[j] = t - U(span + 1 - j);
    right[j] = U(span + j) - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = vals[r] / (right[r + 1] + left[j - r]);
      vals[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    vals[j] = saved;
  }
}

}  // namespace

Basis build_basis(const BasisSpec& spec) {
  if (spec.r < 1) throw Error("INVALID_SPEC", "basis dimension r must be >= 1");
  if (spec.cells_per_dim < 1) throw Error("INVALID_SPEC", "cells_per_dim must be >= 1");
  if (spec.kappa < 0) throw Error("INVALID_SPEC", "kappa must be >= 0");
  if (spec.kappa > kMaxKappa) throw Error("INVALID_SPEC", "kappa too large");

  Basis b;
  b.spec = spec;
  const int m = spec.cells_per_dim;
  const int kap = spec.kappa;
  b.per_dim = m + kap;

  double k_check = 1.0;
  long long k = 1;
  for (int d = 0; d < spec.r; ++d) {
    k *= b.per_dim;
    k_check *= b.per_dim;
    if (k_check > 1e8) throw Error("INVALID_SPEC", "basis size K exceeds supported limit");
  }
  b.K = static_cast<int>(k);

  // Clamped knot vector: multiplicity kappa+1 at 0 and 1, interior knots j/m.
  const int n_knots = b.per_dim + kap + 1;
  b.knots.resize(n_knots);
  for (int i = 0; i < n_knots; ++i) {
    const int j = i - kap;
    b.knots(i) = j <= 0 ? 0.0 : (j >= m ? 1.0 : static_cast<double>(j) / m);
  }

  b.scale = spec.normalization == Normalization::uniform_design
                ? std::pow(static_cast<double>(m), 0.5 * spec.r)
                : 1.0;
  return b;
}

Eigen::VectorXd eval_basis(const Basis& basis, const Eigen::VectorXd& x) {
  const int r = basis.spec.r;
  if (x.size() != r) throw Error("DOMAIN", "point dimension does not match basis");
  const int m = basis.spec.cells_per_dim;
  const int p = basis.spec.kappa;
  const int J = basis.per_dim;

  std::vector<int> cells(r);
  std::vector<double> vals(static_cast<size_t>(r) * (p + 1));
  for (int d = 0; d < r; ++d) {
    const double t = x(d);
    if (!(t >= 0.0 && t <= 1.0))
      throw Error("DOMAIN", "covariate outside [0,1] in dimension " + std::to_string(d));
    cells[d] = cell_of(t, m);
    local_spline_values(basis, t, cells[d], &vals[static_cast<size_t>(d) * (p + 1)]);
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.K);
  std::vector<int> idx(r, 0);  // odometer over the (p+1)^r nonzero combinations
  while (true) {
    long long flat = 0;
    double v = basis.scale;
    for (int d = 0; d < r; ++d) {
      flat = flat * J + (cells[d] + idx[d]);
      v *= vals[static_cast<size_t>(d) * (p + 1) + idx[d]];
    }
    out(static_cast<Eigen::Index>(flat)) = v;
    int d = r - 1;
    while (d >= 0 && ++idx[d] > p) idx[d--] = 0;
    if (d < 0) break;
  }
  return out;
}

double eval_series(const Basis& basis, const Eigen::VectorXd& coeffs, const Eigen::VectorXd& x) {
  if (coeffs.size() != basis.K) throw Error("SIZE_MISMATCH", "coefficient length != K");
  return eval_basis(basis, x).dot(coeffs);
}

Eigen::VectorXd integrate_weighted(const Basis& basis, const ScalarFn& omega,
                                   const QuadratureSpec& quad) {
  if (!omega) throw Error("INVALID_SPEC", "weight function is empty");
  const int r = basis.spec.r;
  const int m = basis.spec.cells_per_dim;
  const int g = quad.nodes_per_cell > 0 ? quad.nodes_per_cell : basis.spec.kappa + 2;

  Eigen::VectorXd nodes, weights;
  gauss_legendre(g, nodes, weights);
  const double h = 1.0 / m;

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(basis.K);
  Eigen::VectorXd point(r);
  std::vector<int> cell(r, 0), node(r, 0);
  while (true) {  // cells
    while (true) {  // nodes within the cell
      double w = 1.0;
      for (int d = 0; d < r; ++d) {
        point(d) = (cell[d] + 0.5 * (nodes(node[d]) + 1.0)) * h;
        w *= weights(node[d]) * 0.5 * h;
      }
      acc.noalias() += (w * omega(point)) * eval_basis(basis, point);
      int d = r - 1;
      while (d >= 0 && ++node[d] >= g) node[d--] = 0;
      if (d < 0) break;
    }
    int d = r - 1;
    while (d >= 0 && ++cell[d] >= m) cell[d--] = 0;
    if (d < 0) break;
  }
  return acc;
}

void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (n < 1) throw Error("INVALID_SPEC", "quadrature order must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p0 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    nodes(i) = -z;
    nodes(n - 1 - i) = z;
    weights(i) = 2.0 / ((1.0 - z * z) * pp * pp);
    weights(n - 1 - i) = weights(i);
  }
}

}  // namespace crossfit
