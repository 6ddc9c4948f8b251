#include "sandboost/sandwich.hpp"

#include <cmath>

#include "sandboost/numeric.hpp"

namespace sboost {

SValues WeightModel::s_values(const std::vector<Eigen::MatrixXd>& xs) const {
  SValues out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(s->evaluate(x));
  return out;
}

Eigen::MatrixXd WeightModel::weight_matrix(const Eigen::MatrixXd& x, const GroupLayout& layout) const {
  const Eigen::VectorXd sv = s_at(x);
  const Eigen::MatrixXd C = InverseView(family, layout).matrix();
  return sv.asDiagonal() * C * sv.asDiagonal();
}

double WeightModel::bilinear(const Eigen::MatrixXd& x, const GroupLayout& layout,
                             const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  const Eigen::VectorXd sv = s_at(x);
  const Eigen::VectorXd sv_v = sv.cwiseProduct(v);
  Eigen::VectorXd Cv(v.size());
  InverseView(family, layout).apply(sv_v, Cv);
  return sv.cwiseProduct(u).dot(Cv);
}

GroupLayout layout_of(const ResidualBundle& rb, int i) {
  const auto k = static_cast<std::size_t>(i);
  return GroupLayout{static_cast<int>(rb.xi[k].size()), rb.subgroups[k]};
}

SValues unit_s(const ResidualBundle& rb) {
  SValues out;
  out.reserve(rb.xi.size());
  for (const auto& v : rb.xi) out.push_back(Eigen::VectorXd::Ones(v.size()));
  return out;
}

namespace {

struct GroupTerms {
  Eigen::VectorXd a, e;    // s*xi, s*eps
  Eigen::VectorXd Ca, Ce;  // C a, C e
  double b = 0.0, c = 0.0;
};

void fill_products_generic(const InverseView& view, GroupTerms& t) {
  const int n = view.size();
  t.Ca.resize(n);
  t.Ce.resize(n);
  for (int j = 0; j < n; ++j) {
    double sa = 0.0, se = 0.0;
    for (int k = 0; k < n; ++k) {
      const double cjk = view.entry(j, k);
      sa += cjk * t.a(k);
      se += cjk * t.e(k);
    }
    t.Ca(j) = sa;
    t.Ce(j) = se;
  }
}

GroupTerms group_terms(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& family,
                       int i, ScorePath path, InverseView** view_out, std::vector<InverseView>& views) {
  const auto k = static_cast<std::size_t>(i);
  GroupTerms t;
  const Eigen::VectorXd& sv = s[k];
  if (sv.size() != rb.xi[k].size()) throw DataError("LengthMismatch", "s-values do not match group size");
  t.a = sv.cwiseProduct(rb.xi[k]);
  t.e = sv.cwiseProduct(rb.eps[k]);
  views.emplace_back(family, layout_of(rb, i));
  InverseView& view = views.back();
  if (view_out) *view_out = &view;
  if (path == ScorePath::Generic) {
    fill_products_generic(view, t);
  } else {
    t.Ca.resize(t.a.size());
    t.Ce.resize(t.a.size());
    view.apply(t.a, t.Ca);
    view.apply(t.e, t.Ce);
  }
  t.b = t.a.dot(t.Ca);
  t.c = t.a.dot(t.Ce);
  return t;
}

void check_b(double b) {
  if (!(b > 0.0) || !std::isfinite(b))
    throw NumericError("DegenerateWeights", "sum of xi'W xi is not positive");
}

}  // namespace

LossParts sandwich_parts(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& family) {
  const int I = rb.n_groups();
  if (static_cast<int>(s.size()) != I) throw DataError("LengthMismatch", "s-values do not match group count");
  std::vector<double> bs(static_cast<std::size_t>(I)), c2(static_cast<std::size_t>(I));
  LossParts out;
  out.c.resize(I);
  for (int i = 0; i < I; ++i) {
    std::vector<InverseView> views;
    views.reserve(1);
    GroupTerms t = group_terms(rb, s, family, i, ScorePath::Fast, nullptr, views);
    bs[static_cast<std::size_t>(i)] = t.b;
    out.c(i) = t.c;
    c2[static_cast<std::size_t>(i)] = t.c * t.c;
  }
  out.b = pairwise_sum(bs);
  check_b(out.b);
  out.sum_c2 = pairwise_sum(c2);
  out.loss = rb.n_obs() * out.sum_c2 / (out.b * out.b);
  return out;
}

double sandwich_loss(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& family) {
  return sandwich_parts(rb, s, family).loss;
}

double sandwich_loss(const ResidualBundle& rb, const WeightModel& w) {
  return sandwich_loss(rb, w.s_values(rb.x), w.family);
}

SandwichScores sandwich_scores(const ResidualBundle& rb, const SValues& s,
                               const CorrelationFamily& family, ScorePath path) {
  const int I = rb.n_groups();
  if (static_cast<int>(s.size()) != I) throw DataError("LengthMismatch", "s-values do not match group count");
  const int P = family.n_params();

  // Phase one: per-group accumulators.
  std::vector<GroupTerms> terms;
  std::vector<InverseView> views;
  terms.reserve(static_cast<std::size_t>(I));
  views.reserve(static_cast<std::size_t>(I));
  std::vector<double> bs(static_cast<std::size_t>(I)), c2(static_cast<std::size_t>(I));
  std::array<std::vector<double>, 2> dxx, dxe;
  for (int p = 0; p < P; ++p) {
    dxx[static_cast<std::size_t>(p)].resize(static_cast<std::size_t>(I));
    dxe[static_cast<std::size_t>(p)].resize(static_cast<std::size_t>(I));
  }
  for (int i = 0; i < I; ++i) {
    const auto k = static_cast<std::size_t>(i);
    InverseView* view = nullptr;
    terms.push_back(group_terms(rb, s, family, i, path, &view, views));
    const GroupTerms& t = terms.back();
    bs[k] = t.b;
    c2[k] = t.c * t.c;
    const int n = view->size();
    for (int p = 0; p < P; ++p) {
      double qxx = 0.0, qxe = 0.0;
      if (path == ScorePath::Generic) {
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            const double d = view->dentry(j, l)[static_cast<std::size_t>(p)];
            qxx += d * t.a(j) * t.a(l);
            qxe += d * t.a(j) * t.e(l);
          }
      } else {
        Eigen::VectorXd da(n), de(n);
        view->apply_d(p, t.a, da);
        view->apply_d(p, t.e, de);
        qxx = t.a.dot(da);
        qxe = t.a.dot(de);
      }
      dxx[static_cast<std::size_t>(p)][k] = qxx;
      dxe[static_cast<std::size_t>(p)][k] = t.c * qxe;
    }
  }
  const double b = pairwise_sum(bs);
  check_b(b);
  const double Q = pairwise_sum(c2);
  const double N = rb.n_obs();
  const double pref = -2.0 * N / (b * b * b);

  // Phase two: emit scores.
  SandwichScores out;
  out.loss = N * Q / (b * b);
  out.s.resize(static_cast<std::size_t>(I));
  for (int i = 0; i < I; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const GroupTerms& t = terms[k];
    const Eigen::VectorXd& xi = rb.xi[k];
    const Eigen::VectorXd& eps = rb.eps[k];
    Eigen::VectorXd u(xi.size());
    for (Eigen::Index j = 0; j < xi.size(); ++j) {
      const double a3 = 2.0 * xi(j) * t.Ca(j);
      const double a4 = xi(j) * t.Ce(j) + eps(j) * t.Ca(j);
      u(j) = pref * (Q * a3 - b * t.c * a4);
    }
    out.s[k] = std::move(u);
  }
  for (int p = 0; p < P; ++p) {
    const double sxx = pairwise_sum(dxx[static_cast<std::size_t>(p)]);
    const double sxe = pairwise_sum(dxe[static_cast<std::size_t>(p)]);
    out.theta[static_cast<std::size_t>(p)] = pref * (Q * sxx - b * sxe);
  }
  return out;
}

std::vector<Eigen::VectorXd> s_scores_generic(const ResidualBundle& rb, const SValues& s,
                                              const CorrelationFamily& family) {
  return sandwich_scores(rb, s, family, ScorePath::Generic).s;
}

std::vector<Eigen::VectorXd> s_scores_fast(const ResidualBundle& rb, const SValues& s,
                                           const CorrelationFamily& family) {
  return sandwich_scores(rb, s, family, ScorePath::Fast).s;
}

std::array<double, 2> theta_score(const ResidualBundle& rb, const SValues& s,
                                  const CorrelationFamily& family, ScorePath path) {
  return sandwich_scores(rb, s, family, path).theta;
}

ResidualBundle transform_residuals_by_initializer(const ResidualBundle& rb,
                                                  const CovarianceInitializer& sigma_init) {
  ResidualBundle out = rb;
  for (int i = 0; i < rb.n_groups(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Eigen::MatrixXd S = sigma_init(rb.x[k], layout_of(rb, i));
    if (S.rows() != rb.xi[k].size() || S.cols() != S.rows())
      throw DataError("LengthMismatch", "initializer covariance has wrong shape");
    if (!S.isApprox(S.transpose(), 1e-10))
      throw NumericError("NotPositiveDefinite", "initializer covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
      throw NumericError("NotPositiveDefinite", "initializer covariance is not positive definite");
    const Eigen::MatrixXd root_inv = es.operatorInverseSqrt();
    out.xi[k] = root_inv * rb.xi[k];
    out.eps[k] = root_inv * rb.eps[k];
  }
  return out;
}

}  // namespace sboost
