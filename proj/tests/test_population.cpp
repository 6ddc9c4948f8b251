#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sandboost/correlation.hpp"
#include "sandboost/numeric.hpp"
#include "sandboost/population.hpp"

using namespace sboost;

namespace {

Eigen::MatrixXd ar1_corr(int n, double rho) {
  Eigen::MatrixXd R(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) R(j, k) = std::pow(rho, std::abs(j - k));
  return R;
}

double quad(const std::function<double(double)>& f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

struct Direct {
  double ml, gee, sl, unweighted;
};

// Losses of the step-variance example by adaptive quadrature of their definitions.
Direct direct_losses(double lambda, double mu, double eta, VarianceConvention conv) {
  auto s0sq = [&](double x) {
    const double t = std::tanh(lambda * (x - mu));
    return conv == VarianceConvention::Variance ? 2.0 + t : (2.0 + t) * (2.0 + t);
  };
  const double c = std::clamp(eta, 0.0, 1.0);
  Direct d{};
  d.ml = quad([&](double x) { return s0sq(x); }, 0, c) + quad([&](double x) { return std::log(9.0) + s0sq(x) / 9.0; }, c, 1);
  d.gee = quad([&](double x) { return std::pow(s0sq(x) - 1.0, 2); }, 0, c) +
          quad([&](double x) { return std::pow(s0sq(x) - 9.0, 2); }, c, 1);
  const double num = quad([&](double x) { return s0sq(x); }, 0, c) + quad([&](double x) { return s0sq(x) / 81.0; }, c, 1);
  const double den = c + (1.0 - c) / 9.0;
  d.sl = num / (den * den);
  d.unweighted = quad([&](double x) { return s0sq(x); }, 0, 1);
  return d;
}

}  // namespace

TEST_CASE("ar1 autocorrelation is geometric") {
  const Eigen::VectorXd r = arma_autocorrelation(ArmaSpec{{0.7}, {}, 1}, 6);
  for (int h = 0; h <= 6; ++h) CHECK(r(h) == doctest::Approx(std::pow(0.7, h)).epsilon(1e-12));
}

TEST_CASE("ma1 autocorrelation has a single lag") {
  const Eigen::VectorXd r = arma_autocorrelation(ArmaSpec{{}, {0.5}, 1}, 4);
  CHECK(r(1) == doctest::Approx(0.5 / 1.25));
  CHECK(std::abs(r(2)) < 1e-14);
}

TEST_CASE("arma autocorrelation matches a long simulated path") {
  const ArmaSpec spec{{0.3, 0.6}, {-0.5}, 1};
  const Eigen::VectorXd r = arma_autocorrelation(spec, 3);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> z;
  const int T = 1000000, burn = 1000;
  std::vector<double> e(static_cast<std::size_t>(T + burn), 0.0);
  double u_prev = 0.0;
  for (std::size_t t = 2; t < e.size(); ++t) {
    const double u = z(rng);
    e[t] = 0.3 * e[t - 1] + 0.6 * e[t - 2] + u - 0.5 * u_prev;
    u_prev = u;
  }
  double g0 = 0.0;
  for (int t = burn; t < T + burn; ++t) g0 += e[static_cast<std::size_t>(t)] * e[static_cast<std::size_t>(t)];
  for (int h = 1; h <= 3; ++h) {
    double gh = 0.0;
    for (int t = burn + h; t < T + burn; ++t) gh += e[static_cast<std::size_t>(t)] * e[static_cast<std::size_t>(t - h)];
    CHECK(std::abs(gh / g0 - r(h)) < 0.01);
  }
}

TEST_CASE("arma covariance is a unit-diagonal Toeplitz matrix") {
  const Eigen::MatrixXd S = arma_covariance(ArmaSpec{{0.1, 0.85}, {-0.4}, 12});
  const Eigen::VectorXd r = arma_autocorrelation(ArmaSpec{{0.1, 0.85}, {-0.4}, 12}, 11);
  for (int j = 0; j < 12; ++j)
    for (int k = 0; k < 12; ++k) CHECK(S(j, k) == doctest::Approx(r(std::abs(j - k))));
  CHECK(S.llt().info() == Eigen::Success);
  CHECK_FALSE(arma_stationary({0.5, 0.6}));
  CHECK_THROWS(arma_autocorrelation(ArmaSpec{{1.1}, {}, 1}, 2));
}

TEST_CASE("population objectives match dense formulas") {
  const PopulationSetting s = example21_setting('b');
  const int n = static_cast<int>(s.Sigma.rows());
  for (double rho : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
    const Eigen::MatrixXd Rinv = ar1_corr(n, rho).inverse();
    CHECK(population_sl(s, rho) == doctest::Approx(population_sl_weight(s, Rinv)).epsilon(1e-9));
    const double ml = std::log(ar1_corr(n, rho).determinant()) + n * std::log((Rinv * s.Sigma).trace() / n);
    CHECK(population_ml(s, rho) == doctest::Approx(ml).epsilon(1e-9));
    const double s2 = s.Sigma.trace() / n;
    double gee = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) gee += std::pow(s.Sigma(j, k) - s2 * std::pow(rho, std::abs(j - k)), 2);
    CHECK(population_gee(s, rho) == doctest::Approx(gee).epsilon(1e-10));
    const double h = 1e-6;
    const double fd = (population_gee(s, rho + h) - population_gee(s, rho - h)) / (2 * h);
    CHECK(population_gee_derivative(s, rho) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("oracle weights minimise the population sandwich loss") {
  const PopulationSetting s = example21_setting('a');
  const double oracle = population_sl_weight(s, s.Sigma.inverse());
  for (double rho = -0.9; rho <= 0.9; rho += 0.1) CHECK(oracle <= population_sl(s, rho) * (1 + 1e-12));
}

TEST_CASE("gradient descent finds the vertex of a quadratic") {
  const DescentResult r = gradient_descent([](double x) { return 2.0 * (x - 0.3); }, 0.0, 0.1, -1.0, 1.0);
  CHECK(r.converged);
  CHECK(r.x == doctest::Approx(0.3).epsilon(1e-9));
  const DescentResult c = gradient_descent([](double x) { return 2.0 * (x - 5.0); }, 0.0, 0.1, -1.0, 1.0);
  CHECK(c.x == 1.0);
}

TEST_CASE("scan refines interior local minima") {
  auto f = [](double x) { return std::cos(6 * x) + 0.1 * x; };
  const ScanResult r = scan_objective(f, -1.0, 1.0, 201);
  CHECK(r.local_minima.size() == 2);
  CHECK(r.argmin == doctest::Approx(-std::acos(-1.0) / 6.0 - 0.1 / 36.0).epsilon(1e-3));
  CHECK_THROWS_AS(scan_objective(f, 0, 1, 2), ConfigError);
}

TEST_CASE("step-variance closed forms agree with quadrature") {
  for (auto conv : {VarianceConvention::Variance, VarianceConvention::StdDev})
    for (double lambda : {0.0, 2.0, 30.0})
      for (double mu : {0.1, 0.5, 0.9})
        for (double eta : {-0.05, 0.0, 0.3, 0.77, 1.0, 1.05}) {
          const VarianceLosses c = variance_example_losses(lambda, mu, eta, conv);
          const Direct d = direct_losses(lambda, mu, eta, conv);
          CHECK(c.ml == doctest::Approx(d.ml).epsilon(1e-10));
          CHECK(c.gee == doctest::Approx(d.gee).epsilon(1e-10));
          CHECK(c.sl == doctest::Approx(d.sl).epsilon(1e-10));
          CHECK(variance_example_unweighted(lambda, mu, conv) == doctest::Approx(d.unweighted).epsilon(1e-10));
        }
}

TEST_CASE("step-variance minimisers") {
  const Example22Summary s = example22_summary(10.0, 0.5);
  CHECK(s.mse_sl <= s.mse_ml + 1e-12);
  CHECK(s.mse_sl <= s.mse_gee + 1e-12);
  CHECK(s.mse_sl <= s.mse_unweighted + 1e-12);
  const Example22Summary flat = example22_summary(0.0, 0.5);
  CHECK(flat.mse_sl == doctest::Approx(flat.mse_unweighted));
}
