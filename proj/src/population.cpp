#include "sandboost/population.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "sandboost/correlation.hpp"
#include "sandboost/numeric.hpp"

namespace sboost {

bool arma_stationary(const std::vector<double>& phi) {
  const auto p = static_cast<Eigen::Index>(phi.size());
  if (p == 0) return true;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) comp(0, i) = phi[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < p; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  return es.eigenvalues().cwiseAbs().maxCoeff() < 1.0 - 1e-12;
}

Eigen::VectorXd arma_autocorrelation(const ArmaSpec& spec, int max_lag) {
  if (!arma_stationary(spec.phi)) throw ConfigError("NonStationary", "AR polynomial has a root inside the unit circle");
  const int p = static_cast<int>(spec.phi.size());
  const int q = static_cast<int>(spec.vartheta.size());
  const int m = std::max(p, q);
  auto phi = [&](int i) { return (i >= 1 && i <= p) ? spec.phi[static_cast<std::size_t>(i - 1)] : 0.0; };
  auto th = [&](int j) { return j == 0 ? 1.0 : (j <= q ? spec.vartheta[static_cast<std::size_t>(j - 1)] : 0.0); };

  std::vector<double> psi(static_cast<std::size_t>(q + 1));
  for (int j = 0; j <= q; ++j) {
    double v = th(j);
    for (int i = 1; i <= std::min(j, p); ++i) v += phi(i) * psi[static_cast<std::size_t>(j - i)];
    psi[static_cast<std::size_t>(j)] = v;
  }
  // Linear system for gamma(0..m).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  for (int k = 0; k <= m; ++k) {
    A(k, k) += 1.0;
    for (int i = 1; i <= p; ++i) A(k, std::abs(k - i)) -= phi(i);
    for (int j = k; j <= q; ++j) rhs(k) += th(j) * psi[static_cast<std::size_t>(j - k)];
  }
  const Eigen::VectorXd g0 = A.fullPivLu().solve(rhs);
  const int L = std::max(max_lag, m);
  Eigen::VectorXd gamma(L + 1);
  gamma.head(m + 1) = g0;
  for (int k = m + 1; k <= L; ++k) {
    double v = 0.0;
    for (int i = 1; i <= p; ++i) v += phi(i) * gamma(k - i);
    gamma(k) = v;
  }
  if (!(gamma(0) > 0.0)) throw NumericError("NonStationary", "ARMA variance is not positive");
  return (gamma / gamma(0)).head(max_lag + 1);
}

Eigen::MatrixXd arma_covariance(const ArmaSpec& spec) {
  if (spec.n < 1) throw ConfigError("InvalidSize", "n must be positive");
  const Eigen::VectorXd r = arma_autocorrelation(spec, spec.n - 1);
  Eigen::MatrixXd S(spec.n, spec.n);
  for (int j = 0; j < spec.n; ++j)
    for (int k = 0; k < spec.n; ++k) S(j, k) = r(std::abs(j - k));
  return S;
}

PopulationSetting arma_setting(const ArmaSpec& spec) {
  PopulationSetting s;
  s.Sigma = arma_covariance(spec);
  const int n = spec.n;
  s.OmegaD = Eigen::MatrixXd::Constant(n, n, 1.0 / 8.0) + (7.0 / 8.0) * Eigen::MatrixXd::Identity(n, n);
  return s;
}

PopulationSetting example21_setting(char which) {
  if (which == 'a') return arma_setting({{0.3, 0.6}, {-0.5}, 100});
  if (which == 'b') return arma_setting({{0.1, 0.85}, {-0.4}, 30});
  throw ConfigError("UnknownSetting", "setting must be 'a' or 'b'");
}

Eigen::MatrixXd ar1_weight(int n, double rho) {
  CorrelationFamily f;
  f.kind = CorrelationKind::AR1;
  f.theta = {rho, 0.0};
  return InverseView(f, GroupLayout::flat(n)).matrix();
}

double population_sl_weight(const PopulationSetting& s, const Eigen::MatrixXd& W) {
  const double t = (W * s.OmegaD).trace();
  return (W * s.Sigma * W * s.OmegaD).trace() / (t * t);
}

namespace {

Eigen::MatrixXd ar1_apply(const Eigen::MatrixXd& M, double rho) {
  CorrelationFamily f;
  f.kind = CorrelationKind::AR1;
  f.theta = {rho, 0.0};
  const InverseView view(f, GroupLayout::flat(static_cast<int>(M.rows())));
  Eigen::MatrixXd out(M.rows(), M.cols());
  for (Eigen::Index c = 0; c < M.cols(); ++c) view.apply(M.col(c), out.col(c));
  return out;
}

}  // namespace

double population_sl(const PopulationSetting& s, double rho) {
  const Eigen::MatrixXd WS = ar1_apply(s.Sigma, rho);
  const Eigen::MatrixXd WO = ar1_apply(s.OmegaD, rho);
  const double t = WO.trace();
  return WS.transpose().cwiseProduct(WO).sum() / (t * t);
}

double population_ml(const PopulationSetting& s, double rho) {
  const auto n = static_cast<double>(s.Sigma.rows());
  const double one_m = 1.0 - rho * rho;
  const double tr = ar1_apply(s.Sigma, rho).trace() / one_m;
  return (n - 1.0) * std::log(one_m) + n * std::log(tr / n);
}

namespace {

// Per-lag sums of Sigma entries and of their squares, plus entry counts.
struct LagTotals {
  std::vector<double> sum, sq, count;
  double s2 = 0.0;
};

LagTotals lag_totals(const Eigen::MatrixXd& Sigma) {
  const auto n = Sigma.rows();
  LagTotals t;
  t.sum.assign(static_cast<std::size_t>(n), 0.0);
  t.sq.assign(static_cast<std::size_t>(n), 0.0);
  t.count.assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto h = static_cast<std::size_t>(std::abs(j - k));
      t.sum[h] += Sigma(j, k);
      t.sq[h] += Sigma(j, k) * Sigma(j, k);
      t.count[h] += 1.0;
    }
  t.s2 = Sigma.trace() / static_cast<double>(n);
  return t;
}

}  // namespace

double population_gee(const PopulationSetting& s, double rho) {
  const LagTotals t = lag_totals(s.Sigma);
  double f = 0.0, c = 1.0;
  for (std::size_t h = 0; h < t.sum.size(); ++h) {
    f += t.sq[h] - 2.0 * t.s2 * c * t.sum[h] + t.count[h] * t.s2 * t.s2 * c * c;
    c *= rho;
  }
  return f;
}

namespace {

double gee_derivative(const LagTotals& t, double rho) {
  double g = 0.0, dc = 1.0;  // dc = h rho^(h-1) / h
  for (std::size_t h = 1; h < t.sum.size(); ++h) {
    const double c = dc * rho;
    const auto hd = static_cast<double>(h);
    g += -2.0 * t.s2 * hd * dc * t.sum[h] + 2.0 * t.count[h] * t.s2 * t.s2 * c * hd * dc;
    dc *= rho;
  }
  return g;
}

}  // namespace

double population_gee_derivative(const PopulationSetting& s, double rho) {
  return gee_derivative(lag_totals(s.Sigma), rho);
}

ScanResult scan_objective(const std::function<double(double)>& f, double lo, double hi, int resolution) {
  if (resolution < 3) throw ConfigError("InvalidResolution", "resolution must be at least 3");
  ScanResult r;
  const double step = (hi - lo) / (resolution - 1);
  for (int i = 0; i < resolution; ++i) {
    const double x = i == resolution - 1 ? hi : lo + step * i;
    r.parameter.push_back(x);
    r.value.push_back(f(x));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < r.value.size(); ++i)
    if (r.value[i] < r.value[best]) best = i;
  r.argmin = r.parameter[best];
  r.min_value = r.value[best];
  for (std::size_t i = 1; i + 1 < r.value.size(); ++i) {
    if (r.value[i] < r.value[i - 1] && r.value[i] <= r.value[i + 1]) {
      const GoldenResult g = golden_section_minimize(f, r.parameter[i - 1], r.parameter[i + 1], 60);
      r.local_minima.push_back(g.argmin);
      if (g.value < r.min_value) {
        r.min_value = g.value;
        r.argmin = g.argmin;
      }
    }
  }
  // Endpoint minima.
  if (r.value.front() < r.value[1] && r.argmin == r.parameter.front()) r.local_minima.insert(r.local_minima.begin(), lo);
  if (r.value.back() < r.value[r.value.size() - 2]) r.local_minima.push_back(hi);
  return r;
}

DescentResult gradient_descent(const std::function<double(double)>& grad, double start, double step,
                               double lo, double hi, int max_iter, double tol) {
  DescentResult r;
  r.x = start;
  for (int it = 0; it < max_iter; ++it) {
    const double next = std::clamp(r.x - step * grad(r.x), lo, hi);
    r.iterations = it + 1;
    if (std::abs(next - r.x) < tol) {
      r.x = next;
      r.converged = true;
      return r;
    }
    r.x = next;
  }
  return r;
}

Example21Summary example21_summary(const PopulationSetting& s, int resolution) {
  Example21Summary out;
  const double lo = -0.999, hi = 0.999;
  const ScanResult sl = scan_objective([&](double r) { return population_sl(s, r); }, lo, hi, resolution);
  const ScanResult ml = scan_objective([&](double r) { return population_ml(s, r); }, lo, hi, resolution);
  const ScanResult gee = scan_objective([&](double r) { return population_gee(s, r); }, lo, hi, resolution);
  out.rho_sl = sl.argmin;
  out.sl_min = sl.min_value;
  out.rho_ml = ml.argmin;
  out.rho_gee_global = gee.argmin;
  out.gee_local_minima = gee.local_minima;
  const LagTotals t = lag_totals(s.Sigma);
  out.rho_gee_gd =
      gradient_descent([&t](double r) { return gee_derivative(t, r); }, 0.0, 1e-4, lo, hi).x;
  out.ratio_unweighted = population_sl(s, 0.0) / out.sl_min;
  out.ratio_ml = population_sl(s, out.rho_ml) / out.sl_min;
  out.ratio_gee = population_sl(s, out.rho_gee_gd) / out.sl_min;
  return out;
}

namespace {

// Integrals of t^k, t = tanh(lambda (x - mu)), as antiderivatives in x.
struct TanhPowers {
  double lambda, mu;

  std::array<double, 5> at(double x) const {
    if (lambda < 1e-12) return {x, 0.0, 0.0, 0.0, 0.0};
    const double z = lambda * (x - mu);
    const double t = std::tanh(z);
    const double lc = (std::abs(z) + std::log1p(std::exp(-2.0 * std::abs(z))) - std::log(2.0)) / lambda;
    const double i2 = x - t / lambda;
    return {x, lc, i2, lc - t * t / (2.0 * lambda), i2 - t * t * t / (3.0 * lambda)};
  }
  // integral over [a, b] of sum_k c_k t^k
  double integrate(const std::array<double, 5>& c, double a, double b) const {
    if (b <= a) return 0.0;
    const auto A = at(a), B = at(b);
    double s = 0.0;
    for (std::size_t k = 0; k < 5; ++k) s += c[k] * (B[k] - A[k]);
    return s;
  }
};

// sigma0^2 as a polynomial in t.
std::array<double, 5> variance_poly(VarianceConvention conv) {
  if (conv == VarianceConvention::Variance) return {2.0, 1.0, 0.0, 0.0, 0.0};
  return {4.0, 4.0, 1.0, 0.0, 0.0};
}

std::array<double, 5> square_minus(const std::array<double, 5>& p, double a) {
  std::array<double, 5> q{};
  std::array<double, 5> r = p;
  r[0] -= a;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; i + j < 5; ++j) q[i + j] += r[i] * r[j];
  return q;
}

struct Moments {
  double v_lo, v_hi;  // integral of sigma0^2 on [0,c] and [c,1]
  double gee_lo, gee_hi;
  double c;
};

Moments moments(double lambda, double mu, double eta, VarianceConvention conv) {
  Moments m{};
  m.c = std::clamp(eta, 0.0, 1.0);
  const TanhPowers tp{lambda, mu};
  const auto v = variance_poly(conv);
  m.v_lo = tp.integrate(v, 0.0, m.c);
  m.v_hi = tp.integrate(v, m.c, 1.0);
  m.gee_lo = tp.integrate(square_minus(v, 1.0), 0.0, m.c);
  m.gee_hi = tp.integrate(square_minus(v, 9.0), m.c, 1.0);
  return m;
}

}  // namespace

VarianceLosses variance_example_losses(double lambda, double mu, double eta, VarianceConvention conv) {
  const Moments m = moments(lambda, mu, eta, conv);
  VarianceLosses l;
  l.ml = (1.0 - m.c) * std::log(9.0) + m.v_lo + m.v_hi / 9.0;
  l.gee = m.gee_lo + m.gee_hi;
  const double inv = m.c + (1.0 - m.c) / 9.0;
  l.sl = (m.v_lo + m.v_hi / 81.0) / (inv * inv);
  return l;
}

double variance_example_unweighted(double lambda, double mu, VarianceConvention conv) {
  return TanhPowers{lambda, mu}.integrate(variance_poly(conv), 0.0, 1.0);
}

Example22Summary example22_summary(double lambda, double mu, VarianceConvention conv) {
  const double lo = -0.1, hi = 1.1, h = 1e-3;
  const int n = static_cast<int>(std::lround((hi - lo) / h)) + 1;
  std::array<int, 3> best{0, 0, 0};
  std::array<double, 3> bv;
  bv.fill(std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) {
    const VarianceLosses l = variance_example_losses(lambda, mu, lo + h * i, conv);
    const std::array<double, 3> v{l.ml, l.gee, l.sl};
    for (std::size_t k = 0; k < 3; ++k)
      if (v[k] < bv[k]) {
        bv[k] = v[k];
        best[k] = i;
      }
  }
  std::array<double, 3> eta{};
  for (std::size_t k = 0; k < 3; ++k) {
    auto f = [&](double e) {
      const VarianceLosses l = variance_example_losses(lambda, mu, e, conv);
      return k == 0 ? l.ml : (k == 1 ? l.gee : l.sl);
    };
    const double a = lo + h * std::max(0, best[k] - 1), b = lo + h * std::min(n - 1, best[k] + 1);
    const GoldenResult g = golden_section_minimize(f, a, b, 40);
    eta[k] = g.value < bv[k] ? g.argmin : lo + h * best[k];
  }
  Example22Summary s;
  s.eta_ml = eta[0];
  s.eta_gee = eta[1];
  s.eta_sl = eta[2];
  s.mse_ml = variance_example_losses(lambda, mu, s.eta_ml, conv).sl;
  s.mse_gee = variance_example_losses(lambda, mu, s.eta_gee, conv).sl;
  s.mse_sl = variance_example_losses(lambda, mu, s.eta_sl, conv).sl;
  s.mse_unweighted = variance_example_unweighted(lambda, mu, conv);
  return s;
}

}  // namespace sboost
