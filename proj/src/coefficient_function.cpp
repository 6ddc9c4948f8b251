#include <cmath>

#include "sandboost/numeric.hpp"
#include "sandboost/plm.hpp"

namespace sboost {

namespace {

Eigen::MatrixXd stack_x(const GroupedDataset& data, const std::vector<int>& idx) {
  Eigen::Index n = 0;
  for (int i : idx) n += data.group(i).size();
  Eigen::MatrixXd out(n, data.d_covariates());
  Eigen::Index r = 0;
  for (int i : idx) {
    const Group& g = data.group(i);
    if (data.d_covariates() > 0) out.middleRows(r, g.size()) = g.x;
    r += g.size();
  }
  return out;
}

Eigen::VectorXd stack_col(const GroupedDataset& data, const std::vector<int>& idx, bool response) {
  Eigen::Index n = 0;
  for (int i : idx) n += data.group(i).size();
  Eigen::VectorXd out(n);
  Eigen::Index r = 0;
  for (int i : idx) {
    const Group& g = data.group(i);
    out.segment(r, g.size()) = response ? g.y : g.d;
    r += g.size();
  }
  return out;
}

struct SplitPhi {
  Eigen::VectorXd phi;
  Eigen::MatrixXd V;
};

SplitPhi run_split(const GroupedDataset& data, const BasisSet& basis, const PlmOptions& opt, int split) {
  const int L = basis.size();
  const std::uint64_t split_seed = derive_seed(opt.seed, static_cast<std::uint64_t>(split));
  const FoldPartition fp = partition_folds(data, opt.K, split_seed);
  const auto members = fp.members();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(L, L);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(L);
  std::vector<Eigen::VectorXd> vs;

  for (int k = 0; k < fp.K; ++k) {
    const std::vector<int> comp = fp.complement(k);
    const std::vector<int>& test = members[static_cast<std::size_t>(k)];
    const Eigen::MatrixXd Xc = stack_x(data, comp);
    auto lhat = fit_nuisance(Xc, stack_col(data, comp, true), opt.nuisance, 'y');
    auto mhat = fit_nuisance(Xc, stack_col(data, comp, false), opt.nuisance, 'd');

    // Preliminary unweighted fit on the complement.
    ResidualBundle rb;
    std::vector<Eigen::VectorXd> ry_c;
    Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(L, L);
    Eigen::VectorXd r0 = Eigen::VectorXd::Zero(L);
    for (int i : comp) {
      const Group& g = data.group(i);
      const Eigen::VectorXd rd = g.d - mhat->predict(g.x);
      const Eigen::VectorXd ry = g.y - lhat->predict(g.x);
      const Eigen::MatrixXd M = rd.asDiagonal() * basis.evaluate(g.x);
      A0 += M.transpose() * M;
      r0 += M.transpose() * ry;
      rb.xi.push_back(rd);
      rb.x.push_back(g.x);
      rb.subgroups.push_back(subgroup_layout(g));
      ry_c.push_back(ry);
    }
    check_invertible(A0);
    const Eigen::VectorXd phi_tilde = A0.ldlt().solve(r0);
    for (std::size_t i = 0; i < rb.xi.size(); ++i) {
      const Eigen::MatrixXd M = rb.xi[i].asDiagonal() * basis.evaluate(rb.x[i]);
      rb.eps.push_back(ry_c[i] - M * phi_tilde);
    }

    const GeneralizedSandwichObjective objective(basis, gram_matrix(basis, rb.x));
    const std::uint64_t fold_seed = derive_seed(split_seed, static_cast<std::uint64_t>(k) + 1000);
    const WeightModel w = fit_weights(rb, opt.family, opt.weights, fold_seed, nullptr, &objective);

    for (int i : test) {
      const Group& g = data.group(i);
      const Eigen::VectorXd rd = g.d - mhat->predict(g.x);
      const Eigen::VectorXd ry = g.y - lhat->predict(g.x);
      const Eigen::MatrixXd M = rd.asDiagonal() * basis.evaluate(g.x);
      const Eigen::VectorXd eps = ry - M * phi_tilde;
      const Eigen::MatrixXd W = w.weight_matrix(g.x, GroupLayout{g.size(), subgroup_layout(g)});
      const Eigen::MatrixXd MW = M.transpose() * W;
      A += MW * M;
      r += MW * ry;
      vs.push_back(MW * eps);
    }
  }
  A = 0.5 * (A + A.transpose());
  check_invertible(A);
  const Eigen::MatrixXd Ainv = A.inverse();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(L, L);
  for (const auto& v : vs) B += v * v.transpose();
  SplitPhi out;
  out.phi = Ainv * r;
  out.V = data.n_obs() * Ainv * B * Ainv;
  return out;
}

}  // namespace

CoefficientReport fit_coefficient_function(const GroupedDataset& data, const BasisSet& basis,
                                           const PlmOptions& opt) {
  if (basis.size() < 1) throw ConfigError("InvalidBasis", "basis must contain at least one function");
  if (opt.K < 2 || opt.S < 1 || !(opt.alpha > 0.0 && opt.alpha < 1.0))
    throw ConfigError("InvalidOptions", "invalid K, S or alpha");
  const int L = basis.size();
  std::vector<SplitPhi> splits(static_cast<std::size_t>(opt.S));
  parallel_for(opt.S, opt.threads,
               [&](int s) { splits[static_cast<std::size_t>(s)] = run_split(data, basis, opt, s); });

  CoefficientReport rep;
  rep.alpha = opt.alpha;
  rep.n_groups = data.n_groups();
  rep.n_obs = data.n_obs();
  rep.names = basis.names;
  rep.phi_hat.resize(L);
  for (int l = 0; l < L; ++l) {
    std::vector<double> v;
    for (const auto& s : splits) v.push_back(s.phi(l));
    rep.phi_hat(l) = lower_median(v);
  }
  rep.v_hat.resize(L, L);
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) {
      std::vector<double> v;
      for (const auto& s : splits)
        v.push_back(s.V(a, b) + (rep.phi_hat(a) - s.phi(a)) * (rep.phi_hat(b) - s.phi(b)));
      rep.v_hat(a, b) = opt.S == 1 ? splits.front().V(a, b) : lower_median(v);
    }
  const double z = normal_quantile(1.0 - opt.alpha / 2.0);
  for (int l = 0; l < L; ++l) {
    const double half = std::sqrt(std::max(rep.v_hat(l, l), 0.0) / rep.n_obs) * z;
    rep.ci.emplace_back(rep.phi_hat(l) - half, rep.phi_hat(l) + half);
  }
  for (const auto& s : splits) rep.per_split.push_back(s.phi);
  if (rep.v_hat.cwiseAbs().maxCoeff() == 0.0) rep.flags.push_back("zero_variance_exact_fit");
  return rep;
}

}  // namespace sboost
