#include "crossfit/estimators.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "crossfit/errors.hpp"

namespace crossfit {

namespace {

std::vector<int> sorted_copy(const std::vector<int>& v) {
  std::vector<int> s(v);
  std::sort(s.begin(), s.end());
  return s;
}

void validate_data(const FunctionalSpec& f, const Dataset& data) {
  const int n = data.n();
  if (data.a.rows() != n || data.x.rows() != n)
    throw Error("SIZE_MISMATCH", "dataset columns differ in length");
  if (f.kind == FunctionalKind::partially_linear) {
    if (data.d_a() < 1) throw Error("SIZE_MISMATCH", "projection needs at least one a column");
    return;
  }
  if (data.d_a() != 1) throw Error("SIZE_MISMATCH", "this functional expects scalar a");
  if (f.kind == FunctionalKind::missing_data_mean) {
    for (int i = 0; i < n; ++i) {
      const double ai = data.a(i, 0);
      if (ai != 0.0 && ai != 1.0)
        throw Error("DATA_FORMAT",
                    "missing-data indicator must be 0 or 1 (row " + std::to_string(i) + ")");
    }
  }
}

void check_gram(const GramSummary& s, const EstimatorOptions& opt, int group, const char* role) {
  if (s.rank == 0)
    throw Error("SINGULAR_GRAM", std::string("group ") + std::to_string(group) + ": " + role +
                                     " gram has rank 0");
  if (opt.require_nonsingular && !s.nonsingular)
    throw Error("GRAM_GATE", std::string("group ") + std::to_string(group) + ": " + role +
                                 " gram fails the eigenvalue gate");
}

struct GroupWork {
  std::optional<SeriesFit> gamma_fit;
  std::optional<SeriesFit> alpha_fit;
};

// Fits the regression and/or the representer for one group. When both train
// on the same index set the gram eigendecomposition is shared.
GroupWork fit_group(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                    const std::vector<int>& gamma_idx, const std::vector<int>& alpha_idx,
                    bool need_gamma, bool need_alpha, const EstimatorOptions& opt,
                    const Eigen::VectorXd* wad_v_vec, int group) {
  GroupWork w;
  std::optional<GramOps> gamma_ops;
  if (need_gamma) {
    if (gamma_idx.empty())
      throw Error("EMPTY_SAMPLE",
                  "group " + std::to_string(group) + ": empty regression training set");
    const Eigen::MatrixXd rows = design_rows(f, basis, data, gamma_idx);
    gamma_ops = gram_ops_from_rows(rows, opt.eig_threshold, opt.rel_tol);
    check_gram(gamma_ops->summary, opt, group, "regression");
    Eigen::VectorXd ysub(static_cast<Eigen::Index>(gamma_idx.size()));
    for (size_t i = 0; i < gamma_idx.size(); ++i)
      ysub(static_cast<Eigen::Index>(i)) = data.y(gamma_idx[i]);
    const Eigen::VectorXd h = rows.transpose() * ysub / static_cast<double>(gamma_idx.size());
    w.gamma_fit =
        fit_from_ops(*gamma_ops, h, FitTarget::regression, static_cast<int>(gamma_idx.size()));
  }
  if (need_alpha) {
    if (alpha_idx.empty())
      throw Error("EMPTY_SAMPLE",
                  "group " + std::to_string(group) + ": empty representer training set");
    std::optional<GramOps> alpha_ops_local;
    const GramOps* alpha_ops = nullptr;
    if (need_gamma && alpha_idx == gamma_idx) {
      alpha_ops = &*gamma_ops;
    } else {
      const Eigen::MatrixXd rows = design_rows(f, basis, data, alpha_idx);
      alpha_ops_local = gram_ops_from_rows(rows, opt.eig_threshold, opt.rel_tol);
      check_gram(alpha_ops_local->summary, opt, group, "representer");
      alpha_ops = &*alpha_ops_local;
    }
    Eigen::VectorXd h;
    if (f.kind == FunctionalKind::weighted_average_derivative) {
      h = *wad_v_vec;  // v(z) does not depend on z
    } else {
      h = v_rows(f, basis, data, alpha_idx).colwise().mean();
    }
    w.alpha_fit = fit_from_ops(*alpha_ops, h, FitTarget::riesz, static_cast<int>(alpha_idx.size()));
  }
  return w;
}

struct EvalOut {
  Eigen::VectorXd m;
  Eigen::VectorXd corr;  // alpha(x_i) * (y_i - gamma(x_i)); zero when unused
};

EvalOut evaluate_group(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                       const std::vector<int>& eval_idx, const GroupWork& w, bool want_corr,
                       const EstimatorOptions& opt, const Eigen::VectorXd* wad_v_vec) {
  const auto n_e = static_cast<Eigen::Index>(eval_idx.size());
  const Eigen::MatrixXd F = feature_rows(f, basis, data, eval_idx);
  const bool gamma_over = static_cast<bool>(opt.override_nuisance.gamma);
  const bool alpha_over = static_cast<bool>(opt.override_nuisance.alpha);

  Eigen::VectorXd gv(n_e);
  if (gamma_over) {
    for (Eigen::Index i = 0; i < n_e; ++i)
      gv(i) = opt.override_nuisance.gamma(data.x.row(eval_idx[i]).transpose());
  } else {
    gv = F * w.gamma_fit->coeffs;
  }

  double m_const = 0.0;
  if (f.kind == FunctionalKind::weighted_average_derivative) {
    if (gamma_over)
      m_const = m_eval(f, Observation{}, opt.override_nuisance.gamma);
    else
      m_const = wad_v_vec->dot(w.gamma_fit->coeffs);
  }

  EvalOut out;
  out.m.resize(n_e);
  out.corr = Eigen::VectorXd::Zero(n_e);
  for (Eigen::Index i = 0; i < n_e; ++i) {
    const int gi = eval_idx[i];
    const double yi = data.y(gi);
    const double ai = data.a(gi, 0);
    const double resid = yi - gv(i);
    switch (f.kind) {
      case FunctionalKind::expected_conditional_covariance:
        out.m(i) = ai * resid;
        break;
      case FunctionalKind::missing_data_mean:
        out.m(i) = gv(i);
        break;
      case FunctionalKind::weighted_average_derivative:
        out.m(i) = m_const;
        break;
      case FunctionalKind::partially_linear:
        throw Error("UNSUPPORTED", "no scalar m for the projection");
    }
    if (want_corr) {
      double alpha_i;
      if (alpha_over) {
        alpha_i = opt.override_nuisance.alpha(data.row(gi));
      } else {
        const double series = F.row(i).dot(w.alpha_fit->coeffs);
        alpha_i = f.kind == FunctionalKind::missing_data_mean ? ai * series : series;
      }
      out.corr(i) = alpha_i * resid;
    }
  }
  return out;
}

void push_diagnostics(std::vector<GroupDiagnostics>& diags, int group, const GroupWork& w) {
  GroupDiagnostics d;
  d.group = group;
  if (w.gamma_fit) d.gamma_gram = w.gamma_fit->gram;
  if (w.alpha_fit) d.alpha_gram = w.alpha_fit->gram;
  diags.push_back(std::move(d));
}

EstimateResult assemble_scalar(double beta, Eigen::VectorXd psi_raw, std::vector<int> eval_order,
                               std::vector<GroupDiagnostics> diags, PlanKind kind, int K, int n) {
  EstimateResult res;
  res.beta = Eigen::VectorXd::Constant(1, beta);
  res.influence = (psi_raw.array() - beta).matrix();
  res.eval_index = std::move(eval_order);
  res.se = Eigen::VectorXd::Constant(1, influence_se(res.influence.col(0)));
  const auto ci = ci95_interval(beta, res.se(0));
  res.ci95.resize(1, 2);
  res.ci95(0, 0) = ci[0];
  res.ci95(0, 1) = ci[1];
  res.groups = std::move(diags);
  res.plan_kind = kind;
  res.K = K;
  res.n = n;
  return res;
}

void check_plan_matches(const SplitPlan& plan, const Dataset& data) {
  if (plan.n != data.n()) throw Error("SIZE_MISMATCH", "plan was built for a different n");
  if (plan.groups.empty()) throw Error("INVALID_SPEC", "plan has no groups");
}

}  // namespace

EstimateResult plugin_no_split(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                               const EstimatorOptions& opt) {
  if (f.kind == FunctionalKind::partially_linear)
    throw Error("UNSUPPORTED", "use pl_projection for the partially linear functional");
  validate_data(f, data);
  if (data.n() < 1) throw Error("EMPTY_SAMPLE", "estimation requires data");

  std::vector<int> all(data.n());
  for (int i = 0; i < data.n(); ++i) all[i] = i;

  Eigen::VectorXd wv;
  const Eigen::VectorXd* wvp = nullptr;
  if (f.kind == FunctionalKind::weighted_average_derivative) {
    wv = wad_v(f, basis);
    wvp = &wv;
  }

  const bool need_gamma = !opt.override_nuisance.gamma;
  const bool need_alpha = !opt.override_nuisance.alpha;
  const GroupWork w = fit_group(f, basis, data, all, all, need_gamma, need_alpha, opt, wvp, 0);
  const EvalOut ev = evaluate_group(f, basis, data, all, w, true, opt, wvp);

  const double beta = ev.m.mean();
  std::vector<GroupDiagnostics> diags;
  push_diagnostics(diags, 0, w);
  return assemble_scalar(beta, ev.m + ev.corr, all, std::move(diags), PlanKind::plugin, basis.K,
                         data.n());
}

EstimateResult cf_plugin(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                         const SplitPlan& plan, const EstimatorOptions& opt) {
  if (f.kind == FunctionalKind::partially_linear)
    throw Error("UNSUPPORTED", "use pl_projection for the partially linear functional");
  if (plan.kind != PlanKind::plugin)
    throw Error("PLAN_KIND", "cf_plugin needs a plugin plan");
  validate_data(f, data);
  check_plan_matches(plan, data);

  Eigen::VectorXd wv;
  const Eigen::VectorXd* wvp = nullptr;
  if (f.kind == FunctionalKind::weighted_average_derivative) {
    wv = wad_v(f, basis);
    wvp = &wv;
  }

  const bool need_gamma = !opt.override_nuisance.gamma;
  const bool need_alpha = !opt.override_nuisance.alpha;

  double m_sum = 0.0;
  std::vector<double> psi_raw;
  std::vector<int> eval_order;
  std::vector<GroupDiagnostics> diags;
  for (size_t g = 0; g < plan.groups.size(); ++g) {
    const auto eval_idx = sorted_copy(plan.groups[g].eval_idx);
    const auto gamma_idx = sorted_copy(plan.groups[g].gamma_idx);
    // The influence correction trains the representer on the same off-fold
    // subsample as the regression.
    const GroupWork w = fit_group(f, basis, data, gamma_idx, gamma_idx, need_gamma, need_alpha,
                                  opt, wvp, static_cast<int>(g));
    const EvalOut ev = evaluate_group(f, basis, data, eval_idx, w, true, opt, wvp);
    m_sum += ev.m.sum();
    for (Eigen::Index i = 0; i < ev.m.size(); ++i) {
      psi_raw.push_back(ev.m(i) + ev.corr(i));
      eval_order.push_back(eval_idx[static_cast<size_t>(i)]);
    }
    push_diagnostics(diags, static_cast<int>(g), w);
  }
  if (psi_raw.empty()) throw Error("EMPTY_SAMPLE", "plan evaluates no observations");
  const double beta = m_sum / static_cast<double>(psi_raw.size());
  return assemble_scalar(beta, Eigen::Map<Eigen::VectorXd>(psi_raw.data(), psi_raw.size()),
                         std::move(eval_order), std::move(diags), plan.kind, basis.K, data.n());
}

EstimateResult dr_estimate(const FunctionalSpec& f, const Basis& basis, const Dataset& data,
                           const SplitPlan& plan, const EstimatorOptions& opt) {
  if (f.kind == FunctionalKind::partially_linear)
    throw Error("UNSUPPORTED", "use pl_projection for the partially linear functional");
  if (plan.kind != PlanKind::single_cf_dr && plan.kind != PlanKind::dcdr)
    throw Error("PLAN_KIND", "dr_estimate needs a single_cf_dr or dcdr plan");
  validate_data(f, data);
  check_plan_matches(plan, data);

  Eigen::VectorXd wv;
  const Eigen::VectorXd* wvp = nullptr;
  if (f.kind == FunctionalKind::weighted_average_derivative) {
    wv = wad_v(f, basis);
    wvp = &wv;
  }

  const bool need_gamma = !opt.override_nuisance.gamma;
  const bool need_alpha = !opt.override_nuisance.alpha;

  double sum = 0.0;
  std::vector<double> contrib;
  std::vector<int> eval_order;
  std::vector<GroupDiagnostics> diags;
  for (size_t g = 0; g < plan.groups.size(); ++g) {
    const auto eval_idx = sorted_copy(plan.groups[g].eval_idx);
    const auto gamma_idx = sorted_copy(plan.groups[g].gamma_idx);
    const auto alpha_idx = plan.kind == PlanKind::dcdr ? sorted_copy(plan.groups[g].alpha_idx)
                                                       : gamma_idx;
    const GroupWork w = fit_group(f, basis, data, gamma_idx, alpha_idx, need_gamma, need_alpha,
                                  opt, wvp, static_cast<int>(g));
    const EvalOut ev = evaluate_group(f, basis, data, eval_idx, w, true, opt, wvp);
    for (Eigen::Index i = 0; i < ev.m.size(); ++i) {
      const double c = ev.m(i) + ev.corr(i);
      sum += c;
      contrib.push_back(c);
      eval_order.push_back(eval_idx[static_cast<size_t>(i)]);
    }
    push_diagnostics(diags, static_cast<int>(g), w);
  }
  if (contrib.empty()) throw Error("EMPTY_SAMPLE", "plan evaluates no observations");
  const double beta = sum / static_cast<double>(contrib.size());
  return assemble_scalar(beta, Eigen::Map<Eigen::VectorXd>(contrib.data(), contrib.size()),
                         std::move(eval_order), std::move(diags), plan.kind, basis.K, data.n());
}

EstimateResult pl_projection(const Basis& basis, const Dataset& data, const SplitPlan& plan,
                             const EstimatorOptions& opt) {
  const FunctionalSpec f = make_partially_linear();
  validate_data(f, data);
  if (plan.kind != PlanKind::dcdr)
    throw Error("PLAN_KIND", "pl_projection needs a dcdr plan");
  check_plan_matches(plan, data);
  const int d = data.d_a();

  Eigen::MatrixXd h_sum = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd num_sum = Eigen::VectorXd::Zero(d);
  std::vector<Eigen::VectorXd> it_rows, rt_rows;
  std::vector<double> resids;
  std::vector<int> eval_order;
  std::vector<GroupDiagnostics> diags;

  for (size_t g = 0; g < plan.groups.size(); ++g) {
    const auto eval_idx = sorted_copy(plan.groups[g].eval_idx);
    const auto gamma_idx = sorted_copy(plan.groups[g].gamma_idx);
    const auto alpha_idx = sorted_copy(plan.groups[g].alpha_idx);
    if (gamma_idx.empty() || alpha_idx.empty())
      throw Error("EMPTY_SAMPLE", "group " + std::to_string(g) + ": empty training set");

    const Eigen::MatrixXd rows_hat = feature_rows(f, basis, data, gamma_idx);
    const GramOps ops_hat = gram_ops_from_rows(rows_hat, opt.eig_threshold, opt.rel_tol);
    check_gram(ops_hat.summary, opt, static_cast<int>(g), "regression");

    const Eigen::MatrixXd rows_til = feature_rows(f, basis, data, alpha_idx);
    const GramOps ops_til = gram_ops_from_rows(rows_til, opt.eig_threshold, opt.rel_tol);
    check_gram(ops_til.summary, opt, static_cast<int>(g), "representer");

    const double n_hat = static_cast<double>(gamma_idx.size());
    const double n_til = static_cast<double>(alpha_idx.size());

    Eigen::VectorXd ysub(static_cast<Eigen::Index>(gamma_idx.size()));
    Eigen::MatrixXd asub_hat(static_cast<Eigen::Index>(gamma_idx.size()), d);
    for (size_t i = 0; i < gamma_idx.size(); ++i) {
      ysub(static_cast<Eigen::Index>(i)) = data.y(gamma_idx[i]);
      asub_hat.row(static_cast<Eigen::Index>(i)) = data.a.row(gamma_idx[i]);
    }
    Eigen::MatrixXd asub_til(static_cast<Eigen::Index>(alpha_idx.size()), d);
    for (size_t i = 0; i < alpha_idx.size(); ++i)
      asub_til.row(static_cast<Eigen::Index>(i)) = data.a.row(alpha_idx[i]);

    const Eigen::VectorXd gamma_coef = ops_hat.solve(rows_hat.transpose() * ysub / n_hat);
    const Eigen::MatrixXd ahat_coef = ops_hat.pinv * (rows_hat.transpose() * asub_hat / n_hat);
    const Eigen::MatrixXd atil_coef = ops_til.pinv * (rows_til.transpose() * asub_til / n_til);

    const Eigen::MatrixXd F = feature_rows(f, basis, data, eval_idx);
    for (Eigen::Index i = 0; i < F.rows(); ++i) {
      const int gi = eval_idx[static_cast<size_t>(i)];
      const Eigen::VectorXd a_i = data.a.row(gi).transpose();
      const Eigen::VectorXd rt = a_i - (F.row(i) * ahat_coef).transpose();
      const Eigen::VectorXd it = a_i - (F.row(i) * atil_coef).transpose();
      const double resid = data.y(gi) - F.row(i).dot(gamma_coef);
      h_sum.noalias() += it * rt.transpose();
      num_sum.noalias() += it * resid;
      it_rows.push_back(it);
      rt_rows.push_back(rt);
      resids.push_back(resid);
      eval_order.push_back(gi);
    }

    GroupDiagnostics gd;
    gd.group = static_cast<int>(g);
    gd.gamma_gram = ops_hat.summary;
    gd.alpha_gram = ops_til.summary;
    diags.push_back(std::move(gd));
  }

  const auto n_eval = static_cast<double>(resids.size());
  if (resids.empty()) throw Error("EMPTY_SAMPLE", "plan evaluates no observations");
  const Eigen::MatrixXd h_mat = h_sum / n_eval;
  const Eigen::VectorXd num = num_sum / n_eval;

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(h_mat);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > 1e12)
    throw Error("SINGULAR_H", "residual cross-moment matrix is numerically singular");

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(h_mat);
  const Eigen::VectorXd beta = lu.solve(num);

  EstimateResult res;
  res.beta = beta;
  res.influence.resize(static_cast<Eigen::Index>(resids.size()), d);
  for (size_t i = 0; i < resids.size(); ++i) {
    const double eps = resids[i] - rt_rows[i].dot(beta);
    res.influence.row(static_cast<Eigen::Index>(i)) = lu.solve(it_rows[i] * eps).transpose();
  }
  res.eval_index = std::move(eval_order);
  res.se.resize(d);
  res.ci95.resize(d, 2);
  for (int j = 0; j < d; ++j) {
    res.se(j) = influence_se(res.influence.col(j));
    const auto ci = ci95_interval(beta(j), res.se(j));
    res.ci95(j, 0) = ci[0];
    res.ci95(j, 1) = ci[1];
  }
  res.groups = std::move(diags);
  res.plan_kind = plan.kind;
  res.K = basis.K;
  res.n = data.n();
  res.pl_h = h_mat;
  res.pl_numerator = num;
  return res;
}

// The pairwise and three-index corrections are complete U-statistic sums over
// distinct indices. Writing S_u, S_t for sums over the estimation sample and
// B(x) = pinv * (p(x) p(x)' - gram), the sums collapse to O(n K^2) work:
//   sum_{i != j} u_i' t_j            = S_u' S_t - sum_i u_i' t_i
//   sum_{i != j != l} u_i' B(x_l) t_j
//     = S_u' B_sum S_t - sum_i u_i' B_sum t_i
//       - sum_i u_i' B(x_i) (S_t - t_i) - sum_j (S_u - u_j)' B(x_j) t_j
// with B_sum = sum_l B(x_l).
EstimateResult hoif_ecc(const Dataset& data, const Basis& basis,
                        const std::vector<int>& training_idx, int q_order,
                        const EstimatorOptions& opt, ScalarFn gamma_hat, ScalarFn alpha_hat) {
  const FunctionalSpec f = make_ecc();
  validate_data(f, data);
  if (q_order != 0 && q_order != 1)
    throw Error("UNSUPPORTED", "q_order must be 0 or 1");

  const int n = data.n();
  std::vector<char> in_training(n, 0);
  for (int v : training_idx) {
    if (v < 0 || v >= n) throw Error("INVALID_SPEC", "training index out of range");
    if (in_training[v]) throw Error("INVALID_SPEC", "duplicate training index");
    in_training[v] = 1;
  }
  if (training_idx.empty()) throw Error("EMPTY_SAMPLE", "training fold is empty");
  std::vector<int> est_idx;
  for (int i = 0; i < n; ++i)
    if (!in_training[i]) est_idx.push_back(i);
  const auto n_e = static_cast<Eigen::Index>(est_idx.size());
  if (n_e < 2) throw Error("EMPTY_SAMPLE", "estimation sample needs at least two observations");

  Eigen::MatrixXd train_rows(static_cast<Eigen::Index>(training_idx.size()), basis.K);
  {
    auto tr = sorted_copy(training_idx);
    for (size_t i = 0; i < tr.size(); ++i)
      train_rows.row(static_cast<Eigen::Index>(i)) =
          eval_basis(basis, data.x.row(tr[i]).transpose()).transpose();
  }
  const GramOps train_ops = gram_ops_from_rows(train_rows, opt.eig_threshold, opt.rel_tol);
  if (!train_ops.summary.nonsingular)
    throw Error("SINGULAR_GRAM", "training gram fails the eigenvalue gate");

  Eigen::MatrixXd P(n_e, basis.K);
  Eigen::VectorXd e(n_e), c(n_e);
  for (Eigen::Index i = 0; i < n_e; ++i) {
    const int gi = est_idx[static_cast<size_t>(i)];
    const Eigen::VectorXd x_i = data.x.row(gi).transpose();
    P.row(i) = eval_basis(basis, x_i).transpose();
    e(i) = data.y(gi) - (gamma_hat ? gamma_hat(x_i) : 0.0);
    c(i) = data.a(gi, 0) - (alpha_hat ? alpha_hat(x_i) : 0.0);
  }
  const Eigen::MatrixXd Q = P * train_ops.pinv;  // row i is (pinv p_i)'

  const double term1 = (c.array() * e.array()).mean();

  const Eigen::VectorXd s_ii = (P.array() * Q.array()).rowwise().sum();  // p_i' pinv p_i
  const Eigen::VectorXd su = P.transpose() * c;                          // sum of u_i
  const Eigen::VectorXd st = Q.transpose() * e;                          // sum of t_i
  const double diag_ut = (c.array() * e.array() * s_ii.array()).sum();
  const double nd = static_cast<double>(n_e);
  const double term2 = (su.dot(st) - diag_ut) / (nd * (nd - 1.0));

  double beta = term1 - term2;
  if (q_order == 1 && n_e >= 3) {
    // B(x) = pinv (p(x) p(x)' - gram) = (pinv p(x)) p(x)' - I on the kept range.
    const Eigen::MatrixXd b_sum =
        train_ops.pinv * (P.transpose() * P) - nd * Eigen::MatrixXd::Identity(basis.K, basis.K);

    // A1 = sum_{i != j} u_i' B_sum t_j, with u_i = c_i p_i and t_j = e_j pinv p_j.
    double a1 = su.dot(b_sum * st);
    const Eigen::MatrixXd bq = b_sum * Q.transpose();  // column i is B_sum (pinv p_i)
    for (Eigen::Index i = 0; i < n_e; ++i) a1 -= c(i) * e(i) * P.row(i).dot(bq.col(i));

    // u_i' B(x_i) = c_i (s_ii - 1) p_i' and B(x_j) t_j = e_j (s_jj - 1) pinv p_j,
    // so the shared-index corrections are O(n K) given P S_t and Q S_u.
    const Eigen::VectorXd p_st = P * st;
    const Eigen::VectorXd q_su = Q * su;
    double a2 = 0.0, a3 = 0.0;
    for (Eigen::Index i = 0; i < n_e; ++i) {
      a2 += c(i) * (s_ii(i) - 1.0) * (p_st(i) - e(i) * s_ii(i));
      a3 += e(i) * (s_ii(i) - 1.0) * (q_su(i) - c(i) * s_ii(i));
    }

    const double log_w = std::log(nd) + std::log(nd - 1.0) + std::log(nd - 2.0);
    beta += std::exp(-log_w) * (a1 - a2 - a3);
  }

  const Eigen::VectorXd psi_raw = c.cwiseProduct(e);
  EstimateResult res;
  res.beta = Eigen::VectorXd::Constant(1, beta);
  res.influence = (psi_raw.array() - beta).matrix();
  res.eval_index = est_idx;
  res.se = Eigen::VectorXd::Constant(1, influence_se(res.influence.col(0)));
  const auto ci = ci95_interval(beta, res.se(0));
  res.ci95.resize(1, 2);
  res.ci95(0, 0) = ci[0];
  res.ci95(0, 1) = ci[1];
  GroupDiagnostics gd;
  gd.group = 0;
  gd.gamma_gram = train_ops.summary;
  res.groups.push_back(std::move(gd));
  res.plan_kind = PlanKind::plugin;
  res.K = basis.K;
  res.n = n;
  return res;
}

double influence_se(const Eigen::VectorXd& psi) {
  const auto n = psi.size();
  if (n == 0) throw Error("EMPTY_SAMPLE", "influence values are empty");
  const double mean = psi.mean();
  const double ss = (psi.array() - mean).square().sum();
  return std::sqrt(ss) / static_cast<double>(n);
}

std::array<double, 2> ci95_interval(double beta, double se) {
  return {beta - 1.96 * se, beta + 1.96 * se};
}

}  // namespace crossfit
