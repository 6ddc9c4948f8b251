#include <cmath>
#include <limits>

#include "sandboost/numeric.hpp"
#include "sandboost/plm.hpp"

namespace sboost {

std::pair<double, double> baseline_rho_domain(CorrelationKind kind) {
  switch (kind) {
    case CorrelationKind::Equicorrelated: return {0.0, 0.999};
    case CorrelationKind::AR1: return {-0.999, 0.999};
    case CorrelationKind::Nested: break;
  }
  throw ConfigError("UnsupportedFamily", "ML/GEE baselines support equicorrelated and ar1 only");
}

namespace {

bool all_singletons(const ResidualBundle& rb) {
  for (const auto& v : rb.eps)
    if (v.size() > 1) return false;
  return true;
}

RhoFit minimise_rho(const std::function<double(double)>& f, CorrelationKind kind) {
  const auto [lo, hi] = baseline_rho_domain(kind);
  const GoldenResult g = grid_golden_minimize(f, lo, hi, 201, 60);
  const double f0 = f(0.0);
  if (!std::isfinite(g.value) && !std::isfinite(f0))
    throw NumericError("OptimFail", "baseline objective is non-finite across the domain");
  // Prefer independence when it is no worse (flat objectives, n_i = 1).
  if (f0 <= g.value + 1e-12 * std::abs(f0)) return {0.0, f0};
  return {g.argmin, g.value};
}

WeightModel homoscedastic(const CorrelationFamily& family, double rho) {
  WeightModel w;
  w.family = family;
  w.family.theta = {rho_to_theta(family.kind, rho), 0.0};
  w.s = std::make_shared<ConstantS>(1.0);
  return w;
}

}  // namespace

double ml_profile_objective(const ResidualBundle& rb, CorrelationKind kind, double rho) {
  double logdet = 0.0, quad = 0.0;
  const double N = rb.n_obs();
  for (const auto& e : rb.eps) {
    const auto n = static_cast<double>(e.size());
    const double ss = e.squaredNorm();
    if (kind == CorrelationKind::Equicorrelated) {
      const double sum = e.sum();
      logdet += (n - 1.0) * std::log1p(-rho) + std::log1p((n - 1.0) * rho);
      quad += (ss - rho / (1.0 + (n - 1.0) * rho) * sum * sum) / (1.0 - rho);
    } else if (kind == CorrelationKind::AR1) {
      if (e.size() == 1) {
        quad += ss;
        continue;
      }
      const auto m = e.size();
      const double inner = ss - e(0) * e(0) - e(m - 1) * e(m - 1);
      const double lag1 = e.head(m - 1).dot(e.tail(m - 1));
      logdet += (n - 1.0) * std::log1p(-rho * rho);
      quad += (ss + rho * rho * inner - 2.0 * rho * lag1) / (1.0 - rho * rho);
    } else {
      throw ConfigError("UnsupportedFamily", "ML baseline supports equicorrelated and ar1 only");
    }
  }
  if (!(quad > 0.0)) return std::numeric_limits<double>::infinity();
  return logdet + N * std::log(quad / N);
}

RhoFit fit_rho_ml(const ResidualBundle& rb, CorrelationKind kind) {
  baseline_rho_domain(kind);
  if (all_singletons(rb)) return {0.0, ml_profile_objective(rb, kind, 0.0)};
  return minimise_rho([&](double r) { return ml_profile_objective(rb, kind, r); }, kind);
}

WeightModel fit_weights_ml(const ResidualBundle& rb, const CorrelationFamily& family) {
  return homoscedastic(family, fit_rho_ml(rb, family.kind).rho);
}

namespace {

// Lag sums P_h = sum p q, Q_h = sum q^2 over ordered pairs at lag h (h >= 1).
struct LagSums {
  std::vector<double> P, Q;
  double pp = 0.0;
};

LagSums lag_sums(const ResidualBundle& rb, const std::vector<Eigen::VectorXd>& sigma) {
  LagSums ls;
  int nmax = 0;
  for (const auto& e : rb.eps) nmax = std::max(nmax, static_cast<int>(e.size()));
  ls.P.assign(static_cast<std::size_t>(nmax), 0.0);
  ls.Q.assign(static_cast<std::size_t>(nmax), 0.0);
  for (std::size_t i = 0; i < rb.eps.size(); ++i) {
    const Eigen::VectorXd& e = rb.eps[i];
    const Eigen::VectorXd& sg = sigma[i];
    for (Eigen::Index j = 0; j < e.size(); ++j)
      for (Eigen::Index k = 0; k < e.size(); ++k) {
        if (j == k) continue;
        const double p = e(j) * e(k);
        const double q = sg(j) * sg(k);
        const auto h = static_cast<std::size_t>(std::abs(j - k));
        ls.P[h] += p * q;
        ls.Q[h] += q * q;
        ls.pp += p * p;
      }
  }
  return ls;
}

double gee_from_lags(const LagSums& ls, CorrelationKind kind, double rho) {
  double f = ls.pp;
  for (std::size_t h = 1; h < ls.P.size(); ++h) {
    const double c = kind == CorrelationKind::Equicorrelated ? rho : std::pow(rho, static_cast<double>(h));
    f += -2.0 * c * ls.P[h] + c * c * ls.Q[h];
  }
  return f;
}

}  // namespace

double gee_objective(const ResidualBundle& rb, CorrelationKind kind, double rho,
                     const std::vector<Eigen::VectorXd>& sigma) {
  baseline_rho_domain(kind);
  return gee_from_lags(lag_sums(rb, sigma), kind, rho);
}

RhoFit fit_rho_gee(const ResidualBundle& rb, CorrelationKind kind, const std::vector<Eigen::VectorXd>& sigma) {
  baseline_rho_domain(kind);
  const LagSums ls = lag_sums(rb, sigma);
  if (all_singletons(rb)) return {0.0, ls.pp};
  return minimise_rho([&](double r) { return gee_from_lags(ls, kind, r); }, kind);
}

WeightModel fit_weights_gee(const ResidualBundle& rb, const CorrelationFamily& family, bool heteroscedastic,
                            const NuisanceSpec& smoother) {
  baseline_rho_domain(family.kind);
  std::vector<Eigen::VectorXd> sigma;
  if (!heteroscedastic) {
    double ss = 0.0;
    for (const auto& e : rb.eps) ss += e.squaredNorm();
    const double s2 = ss / rb.n_obs();
    for (const auto& e : rb.eps) sigma.push_back(Eigen::VectorXd::Constant(e.size(), std::sqrt(s2)));
    return homoscedastic(family, fit_rho_gee(rb, family.kind, sigma).rho);
  }

  const int d = rb.dim();
  Eigen::Index n = rb.n_obs();
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd e2(n);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < rb.eps.size(); ++i) {
    const auto m = rb.eps[i].size();
    if (d > 0) X.middleRows(r, m) = rb.x[i];
    e2.segment(r, m) = rb.eps[i].array().square().matrix();
    r += m;
  }
  std::shared_ptr<const Regressor> var_fit = fit_nuisance(X, e2, smoother, 'y');
  auto sigma_of = [var_fit](const Eigen::MatrixXd& x) -> Eigen::VectorXd {
    return var_fit->predict(x).cwiseMax(0.0).cwiseSqrt().cwiseMax(0.1);
  };
  for (const auto& x : rb.x) sigma.push_back(sigma_of(x));
  const RhoFit fit = fit_rho_gee(rb, family.kind, sigma);
  WeightModel w = homoscedastic(family, fit.rho);
  w.s = std::make_shared<CallableS>([sigma_of](const Eigen::MatrixXd& x) -> Eigen::VectorXd {
    return sigma_of(x).cwiseInverse();
  });
  return w;
}

}  // namespace sboost
