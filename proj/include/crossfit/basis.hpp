#pragma once

#include <Eigen/Core>
#include <functional>

namespace crossfit {

enum class Normalization { none, uniform_design };

struct BasisSpec {
  int r = 1;           // input dimension
  int kappa = 0;       // spline order (piecewise polynomial degree); 0 = Haar
  int cells_per_dim = 1;
  Normalization normalization = Normalization::none;
};

// Tensor products of clamped b-splines on [0,1]^r with evenly spaced knots.
// Each dimension carries J = cells_per_dim + kappa functions; the flat index
// over the K = J^r tensor products runs with the last dimension fastest.
// Under uniform_design every function is scaled by cells_per_dim^(r/2), which
// makes the Haar gram the identity when x is uniform on the cube.
struct Basis {
  BasisSpec spec;
  int per_dim = 0;       // J
  int K = 0;             // J^r
  Eigen::VectorXd knots; // one clamped knot vector, shared by all dimensions
  double scale = 1.0;
};

struct QuadratureSpec {
  int nodes_per_cell = 0;  // Gauss-Legendre nodes per knot cell per dimension; 0 -> kappa + 2
};

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

Basis build_basis(const BasisSpec& spec);

// p(x). Throws when a coordinate falls outside [0,1]; x_d = 1 belongs to the
// last cell. At most (kappa+1)^r entries are nonzero.
Eigen::VectorXd eval_basis(const Basis& basis, const Eigen::VectorXd& x);

double eval_series(const Basis& basis, const Eigen::VectorXd& coeffs, const Eigen::VectorXd& x);

// Integral of omega(x) p(x) over the cube, by composite Gauss-Legendre on the
// knot cells. Exact whenever omega is polynomial of low enough degree per cell.
Eigen::VectorXd integrate_weighted(const Basis& basis, const ScalarFn& omega,
                                   const QuadratureSpec& quad = {});

// Nodes and weights on [-1,1].
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

}  // namespace crossfit
