#include <cmath>

#include "sandboost/numeric.hpp"
#include "sandboost/sandwich.hpp"

namespace sboost {

Eigen::MatrixXd BasisSet::evaluate(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), size());
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    const Eigen::RowVectorXd row = x.row(j);
    for (int l = 0; l < size(); ++l) out(j, l) = phi[static_cast<std::size_t>(l)](row);
  }
  return out;
}

BasisSet BasisSet::constant() {
  BasisSet b;
  b.phi.push_back([](const Eigen::RowVectorXd&) { return 1.0; });
  b.names.push_back("1");
  return b;
}

BasisSet BasisSet::polynomial(int degree, int column) {
  if (degree < 0) throw ConfigError("InvalidBasis", "polynomial degree must be non-negative");
  if (degree > 0 && column < 0) throw ConfigError("InvalidBasis", "basis column must be non-negative");
  BasisSet b = constant();
  for (int p = 1; p <= degree; ++p) {
    b.phi.push_back([p, column](const Eigen::RowVectorXd& x) {
      if (column >= x.size()) throw ConfigError("InvalidBasis", "basis column exceeds covariate count");
      return std::pow(x(column), p);
    });
    b.names.push_back("x" + std::to_string(column + 1) + (p > 1 ? "^" + std::to_string(p) : ""));
  }
  return b;
}

Eigen::MatrixXd gram_matrix(const BasisSet& basis, const std::vector<Eigen::MatrixXd>& xs) {
  const int L = basis.size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(L, L);
  long n = 0;
  for (const auto& x : xs) {
    const Eigen::MatrixXd F = basis.evaluate(x);
    G += F.transpose() * F;
    n += x.rows();
  }
  if (n == 0) throw DataError("EmptyInput", "no observations for the basis Gram matrix");
  return G / static_cast<double>(n);
}

void check_invertible(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double hi = ev.cwiseAbs().maxCoeff();
  const double lo = ev.minCoeff();
  if (es.info() != Eigen::Success || !(lo > 0.0) || hi / lo > 1e12 || !std::isfinite(hi))
    throw NumericError("SingularDesign", "weighted design matrix is not invertible");
}

namespace {

struct GenGroup {
  Eigen::MatrixXd sM;  // rows s_j * M_j
  Eigen::MatrixXd M;   // M_jl = phi_l(x_j) xi_j
  Eigen::MatrixXd G;   // C (s*M)
  Eigen::VectorXd Ce;  // C (s*eps)
  Eigen::VectorXd e;   // s*eps
  Eigen::VectorXd v;   // M'W eps
};

GenGroup gen_group(const ResidualBundle& rb, const SValues& s, const BasisSet& basis,
                   const InverseView& view, int i, ScorePath path) {
  const auto k = static_cast<std::size_t>(i);
  const Eigen::VectorXd& sv = s[k];
  if (sv.size() != rb.xi[k].size()) throw DataError("LengthMismatch", "s-values do not match group size");
  GenGroup g;
  const Eigen::MatrixXd F = basis.evaluate(rb.x[k]);
  g.M = rb.xi[k].asDiagonal() * F;
  g.sM = sv.asDiagonal() * g.M;
  g.e = sv.cwiseProduct(rb.eps[k]);
  const int n = view.size();
  const int L = basis.size();
  g.G.resize(n, L);
  g.Ce.resize(n);
  if (path == ScorePath::Generic) {
    for (int j = 0; j < n; ++j) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(L);
      double ae = 0.0;
      for (int l = 0; l < n; ++l) {
        const double c = view.entry(j, l);
        acc += c * g.sM.row(l);
        ae += c * g.e(l);
      }
      g.G.row(j) = acc;
      g.Ce(j) = ae;
    }
  } else {
    for (int l = 0; l < L; ++l) view.apply(g.sM.col(l), g.G.col(l));
    view.apply(g.e, g.Ce);
  }
  g.v = g.sM.transpose() * g.Ce;
  return g;
}

}  // namespace

GeneralizedParts generalized_parts(const ResidualBundle& rb, const SValues& s,
                                   const CorrelationFamily& family, const BasisSet& basis,
                                   const Eigen::MatrixXd& gram) {
  const int L = basis.size();
  if (L < 1) throw ConfigError("InvalidBasis", "basis must contain at least one function");
  if (gram.rows() != L || gram.cols() != L) throw ConfigError("InvalidBasis", "Gram matrix has wrong shape");
  GeneralizedParts out;
  out.A = Eigen::MatrixXd::Zero(L, L);
  out.B = Eigen::MatrixXd::Zero(L, L);
  for (int i = 0; i < rb.n_groups(); ++i) {
    InverseView view(family, layout_of(rb, i));
    GenGroup g = gen_group(rb, s, basis, view, i, ScorePath::Fast);
    out.A += g.sM.transpose() * g.G;
    out.B += g.v * g.v.transpose();
    out.v.push_back(std::move(g.v));
  }
  out.A = 0.5 * (out.A + out.A.transpose());
  check_invertible(out.A);
  const Eigen::MatrixXd Ainv = out.A.inverse();
  out.loss = rb.n_obs() * (gram * Ainv * out.B * Ainv).trace();
  return out;
}

double generalized_loss(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& family,
                        const BasisSet& basis, const Eigen::MatrixXd& gram) {
  return generalized_parts(rb, s, family, basis, gram).loss;
}

SandwichScores generalized_scores(const ResidualBundle& rb, const SValues& s,
                                  const CorrelationFamily& family, const BasisSet& basis,
                                  const Eigen::MatrixXd& gram, ScorePath path) {
  const int L = basis.size();
  const int I = rb.n_groups();
  const int P = family.n_params();
  if (L < 1) throw ConfigError("InvalidBasis", "basis must contain at least one function");

  std::vector<GenGroup> groups;
  std::vector<InverseView> views;
  groups.reserve(static_cast<std::size_t>(I));
  views.reserve(static_cast<std::size_t>(I));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(L, L), B = Eigen::MatrixXd::Zero(L, L);
  for (int i = 0; i < I; ++i) {
    views.emplace_back(family, layout_of(rb, i));
    groups.push_back(gen_group(rb, s, basis, views.back(), i, path));
    const GenGroup& g = groups.back();
    A += g.sM.transpose() * g.G;
    B += g.v * g.v.transpose();
  }
  A = 0.5 * (A + A.transpose());
  check_invertible(A);
  const Eigen::MatrixXd Ainv = A.inverse();
  const Eigen::MatrixXd P_ = Ainv * gram * Ainv;
  const Eigen::MatrixXd H = Ainv * B * Ainv;
  const Eigen::MatrixXd K = H * gram * Ainv + Ainv * gram * H;
  const double N = rb.n_obs();

  SandwichScores out;
  out.loss = N * (gram * H).trace();
  out.s.resize(static_cast<std::size_t>(I));
  for (int i = 0; i < I; ++i) {
    const GenGroup& g = groups[static_cast<std::size_t>(i)];
    const Eigen::VectorXd& eps = rb.eps[static_cast<std::size_t>(i)];
    const Eigen::RowVectorXd Pv = (P_ * g.v).transpose();
    const Eigen::MatrixXd GK = g.G * K;
    const auto n = g.M.rows();
    Eigen::VectorXd u(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::RowVectorXd dv = g.M.row(j) * g.Ce(j) + g.G.row(j) * eps(j);
      u(j) = N * (2.0 * Pv.dot(dv) - 2.0 * GK.row(j).dot(g.M.row(j)));
    }
    out.s[static_cast<std::size_t>(i)] = std::move(u);
  }

  for (int p = 0; p < P; ++p) {
    Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(L, L);
    double vPdv = 0.0;
    for (int i = 0; i < I; ++i) {
      const GenGroup& g = groups[static_cast<std::size_t>(i)];
      const InverseView& view = views[static_cast<std::size_t>(i)];
      const int n = view.size();
      Eigen::MatrixXd dG(n, L);
      Eigen::VectorXd dCe(n);
      if (path == ScorePath::Generic) {
        for (int j = 0; j < n; ++j) {
          Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(L);
          double ae = 0.0;
          for (int l = 0; l < n; ++l) {
            const double d = view.dentry(j, l)[static_cast<std::size_t>(p)];
            acc += d * g.sM.row(l);
            ae += d * g.e(l);
          }
          dG.row(j) = acc;
          dCe(j) = ae;
        }
      } else {
        for (int l = 0; l < L; ++l) view.apply_d(p, g.sM.col(l), dG.col(l));
        view.apply_d(p, g.e, dCe);
      }
      dA += g.sM.transpose() * dG;
      const Eigen::VectorXd dv = g.sM.transpose() * dCe;
      vPdv += g.v.dot(P_ * dv);
    }
    out.theta[static_cast<std::size_t>(p)] = N * (2.0 * vPdv - (K * dA).trace());
  }
  return out;
}

}  // namespace sboost
