#include "crossfit/functionals.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "crossfit/errors.hpp"

namespace crossfit {

namespace {

void require_scalar_a(const Observation& z) {
  if (z.a.size() != 1) throw Error("SIZE_MISMATCH", "this functional expects scalar a");
}

// omega * gamma integrated over the cube on the generic grid; used when gamma
// is not a series function.
double integrate_omega_times(const FunctionalSpec& f, const ScalarFn& g) {
  const int r = f.r;
  const int cells = f.generic_quad.cells_per_dim;
  const int gn = f.generic_quad.nodes_per_cell;
  Eigen::VectorXd nodes, weights;
  gauss_legendre(gn, nodes, weights);
  const double h = 1.0 / cells;

  double acc = 0.0;
  Eigen::VectorXd point(r);
  std::vector<int> cell(r, 0), node(r, 0);
  while (true) {
    while (true) {
      double w = 1.0;
      for (int d = 0; d < r; ++d) {
        point(d) = (cell[d] + 0.5 * (nodes(node[d]) + 1.0)) * h;
        w *= weights(node[d]) * 0.5 * h;
      }
      acc += w * f.omega(point) * g(point);
      int d = r - 1;
      while (d >= 0 && ++node[d] >= gn) node[d--] = 0;
      if (d < 0) break;
    }
    int d = r - 1;
    while (d >= 0 && ++cell[d] >= cells) cell[d--] = 0;
    if (d < 0) break;
  }
  return acc;
}

// Samples each face of the cube on a coarse lattice and rejects weights that
// do not vanish there.
void check_omega_boundary(const ScalarFn& omega, int r) {
  const int grid = 7;
  Eigen::VectorXd point(r);
  std::vector<int> idx(r, 0);
  for (int d = 0; d < r; ++d) {
    for (double side : {0.0, 1.0}) {
      std::fill(idx.begin(), idx.end(), 0);
      while (true) {
        for (int e = 0; e < r; ++e)
          point(e) = e == d ? side : (idx[e] + 0.5) / grid;
        if (std::abs(omega(point)) > 1e-8)
          throw Error("OMEGA_BOUNDARY", "weight function does not vanish on the boundary");
        int e = r - 1;
        while (e >= 0 && (e == d || ++idx[e] >= grid)) {
          if (e != d) idx[e] = 0;
          --e;
        }
        if (e < 0) break;
      }
    }
  }
}

// One-dimensional factor of a named derivative weight, with its derivative.
// Both families integrate to one over [0,1] and vanish at the endpoints.
struct WeightFamily {
  std::function<double(double)> w;
  std::function<double(double)> dw;
};

WeightFamily named_family(const std::string& name) {
  if (name == "poly_bump")
    return {[](double t) { return 6.0 * t * (1.0 - t); }, [](double t) { return 6.0 - 12.0 * t; }};
  if (name == "raised_cosine") {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return {[](double t) { return 1.0 - std::cos(two_pi * t); },
            [](double t) { return two_pi * std::sin(two_pi * t); }};
  }
  throw Error("INVALID_SPEC", "unknown weight family: " + name);
}

ScalarFn named_omega(const std::string& name, int r) {
  const WeightFamily fam = named_family(name);
  return [fam, r](const Eigen::VectorXd& x) {
    double v = 1.0;
    for (int d = 0; d < r; ++d) v *= fam.w(x(d));
    return v;
  };
}

}  // namespace

FunctionalSpec make_ecc() {
  FunctionalSpec f;
  f.kind = FunctionalKind::expected_conditional_covariance;
  return f;
}

FunctionalSpec make_missing_data() {
  FunctionalSpec f;
  f.kind = FunctionalKind::missing_data_mean;
  return f;
}

FunctionalSpec make_partially_linear() {
  FunctionalSpec f;
  f.kind = FunctionalKind::partially_linear;
  return f;
}

FunctionalSpec make_weighted_avg_derivative(ScalarFn omega, const std::string& name, int r,
                                            QuadratureSpec quad, GenericQuad generic,
                                            bool check_boundary) {
  if (r < 1) throw Error("INVALID_SPEC", "weight dimension must be >= 1");
  if (!omega) throw Error("INVALID_SPEC", "weight function is empty");
  if (generic.cells_per_dim < 1 || generic.nodes_per_cell < 1)
    throw Error("INVALID_SPEC", "invalid quadrature grid");
  if (check_boundary) check_omega_boundary(omega, r);
  FunctionalSpec f;
  f.kind = FunctionalKind::weighted_average_derivative;
  f.omega = std::move(omega);
  f.omega_name = name;
  f.r = r;
  f.quad = quad;
  f.generic_quad = generic;
  return f;
}

FunctionalSpec make_weighted_avg_derivative_named(const std::string& omega_name, int r,
                                                  QuadratureSpec quad, GenericQuad generic) {
  // The named family w weights the derivative: the target is
  // int w(x) sum_d d_d gamma(x) dx. Since w vanishes on the boundary,
  // integration by parts turns this into the plain weighted average with
  // integrand -sum_d d_d w, which is the weight stored on the functional.
  const WeightFamily fam = named_family(omega_name);
  if (r < 1) throw Error("INVALID_SPEC", "weight dimension must be >= 1");
  check_omega_boundary(named_omega(omega_name, r), r);
  ScalarFn integrand = [fam, r](const Eigen::VectorXd& x) {
    double sum = 0.0;
    for (int d = 0; d < r; ++d) {
      double term = fam.dw(x(d));
      for (int e = 0; e < r; ++e)
        if (e != d) term *= fam.w(x(e));
      sum += term;
    }
    return -sum;
  };
  return make_weighted_avg_derivative(std::move(integrand), omega_name, r, quad, generic, false);
}

double m_eval(const FunctionalSpec& f, const Observation& z, const ScalarFn& gamma) {
  if (!gamma) throw Error("INVALID_SPEC", "gamma is empty");
  switch (f.kind) {
    case FunctionalKind::expected_conditional_covariance:
      require_scalar_a(z);
      return z.a(0) * (z.y - gamma(z.x));
    case FunctionalKind::missing_data_mean:
      return gamma(z.x);
    case FunctionalKind::weighted_average_derivative:
      return integrate_omega_times(f, gamma);
    case FunctionalKind::partially_linear:
      throw Error("UNSUPPORTED", "the partially linear projection has no scalar m");
  }
  throw Error("INVALID_SPEC", "unknown functional kind");
}

Eigen::VectorXd v_eval(const FunctionalSpec& f, const Observation& z, const Basis& basis) {
  switch (f.kind) {
    case FunctionalKind::expected_conditional_covariance:
      require_scalar_a(z);
      return -z.a(0) * features(f, basis, z.x);
    case FunctionalKind::missing_data_mean:
      return features(f, basis, z.x);
    case FunctionalKind::weighted_average_derivative:
      return wad_v(f, basis);
    case FunctionalKind::partially_linear:
      throw Error("UNSUPPORTED", "the partially linear projection has no scalar v");
  }
  throw Error("INVALID_SPEC", "unknown functional kind");
}

double oracle_alpha(const FunctionalSpec& f, const TrueNuisances& truth, const Observation& z) {
  switch (f.kind) {
    case FunctionalKind::expected_conditional_covariance:
      require_scalar_a(z);
      if (!truth.e_a_given_x) throw Error("DGP_COMPONENT_MISSING", "E[a|x] is not available");
      return -truth.e_a_given_x(z.x);
    case FunctionalKind::missing_data_mean: {
      require_scalar_a(z);
      if (!truth.pi0) throw Error("DGP_COMPONENT_MISSING", "propensity is not available");
      return z.a(0) / truth.pi0(z.x);
    }
    case FunctionalKind::weighted_average_derivative: {
      if (!truth.f0) throw Error("DGP_COMPONENT_MISSING", "density is not available");
      return f.omega(z.x) / truth.f0(z.x);
    }
    case FunctionalKind::partially_linear:
      throw Error("UNSUPPORTED", "the partially linear projection has no scalar alpha");
  }
  throw Error("INVALID_SPEC", "unknown functional kind");
}

Eigen::VectorXd features(const FunctionalSpec& f, const Basis& basis, const Eigen::VectorXd& x) {
  Eigen::VectorXd p = eval_basis(basis, x);
  if (f.basis_transform.size() > 0) {
    if (f.basis_transform.cols() != p.size())
      throw Error("SIZE_MISMATCH", "basis transform does not match K");
    return f.basis_transform * p;
  }
  return p;
}

Eigen::MatrixXd feature_rows(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                             const std::vector<int>& idx) {
  const int k = f.basis_transform.size() > 0 ? static_cast<int>(f.basis_transform.rows())
                                             : basis.K;
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(idx.size()), k);
  for (size_t i = 0; i < idx.size(); ++i)
    rows.row(static_cast<Eigen::Index>(i)) =
        features(f, basis, data.x.row(idx[i]).transpose()).transpose();
  return rows;
}

Eigen::MatrixXd design_rows(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                            const std::vector<int>& idx) {
  Eigen::MatrixXd rows = feature_rows(f, basis, data, idx);
  if (f.kind == FunctionalKind::missing_data_mean) {
    for (size_t i = 0; i < idx.size(); ++i)
      rows.row(static_cast<Eigen::Index>(i)) *= data.a(idx[i], 0);
  }
  return rows;
}

Eigen::MatrixXd v_rows(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                       const std::vector<int>& idx) {
  switch (f.kind) {
    case FunctionalKind::expected_conditional_covariance: {
      Eigen::MatrixXd rows = feature_rows(f, basis, data, idx);
      for (size_t i = 0; i < idx.size(); ++i)
        rows.row(static_cast<Eigen::Index>(i)) *= -data.a(idx[i], 0);
      return rows;
    }
    case FunctionalKind::missing_data_mean:
      return feature_rows(f, basis, data, idx);
    case FunctionalKind::weighted_average_derivative: {
      const Eigen::VectorXd v = wad_v(f, basis);
      Eigen::MatrixXd rows(static_cast<Eigen::Index>(idx.size()), v.size());
      rows.rowwise() = v.transpose();
      return rows;
    }
    case FunctionalKind::partially_linear:
      throw Error("UNSUPPORTED", "the partially linear projection has no scalar v");
  }
  throw Error("INVALID_SPEC", "unknown functional kind");
}

Eigen::VectorXd wad_v(const FunctionalSpec& f, const Basis& basis) {
  if (f.kind != FunctionalKind::weighted_average_derivative)
    throw Error("INVALID_SPEC", "wad_v requires the average-derivative functional");
  if (basis.spec.r != f.r) throw Error("SIZE_MISMATCH", "basis dimension does not match weight");
  Eigen::VectorXd v = integrate_weighted(basis, f.omega, f.quad);
  if (f.basis_transform.size() > 0) return f.basis_transform * v;
  return v;
}

}  // namespace crossfit
