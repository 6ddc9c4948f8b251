#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sandboost/numeric.hpp"
#include "sandboost/plm.hpp"
#include "support.hpp"

using namespace sboost;

namespace {

// Y = beta D + sin(X) + e, D = X + xi, equicorrelated errors within groups.
GroupedDataset plm_data(std::mt19937_64& rng, int I, int n, double beta, double rho) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<Group> gs;
  for (int i = 0; i < I; ++i) {
    Group g;
    g.x.resize(n, 1);
    g.y.resize(n);
    g.d.resize(n);
    const double shared = z(rng);
    for (int j = 0; j < n; ++j) {
      const double x = u(rng);
      g.x(j, 0) = x;
      g.d(j) = x + z(rng);
      g.y(j) = beta * g.d(j) + std::sin(x) + std::sqrt(rho) * shared + std::sqrt(1 - rho) * z(rng);
    }
    gs.push_back(g);
  }
  return GroupedDataset(gs, 1);
}

PlmOptions zero_nuisance() {
  PlmOptions o;
  o.nuisance.kind = NuisanceKind::Zero;
  o.K = 3;
  return o;
}

ResidualBundle equi_residuals(std::mt19937_64& rng, int I, int n, double rho) {
  std::normal_distribution<double> z;
  ResidualBundle rb;
  for (int i = 0; i < I; ++i) {
    const double s = z(rng);
    Eigen::VectorXd e(n);
    for (int j = 0; j < n; ++j) e(j) = 2.0 * (std::sqrt(rho) * s + std::sqrt(1 - rho) * z(rng));
    rb.eps.push_back(e);
    rb.xi.push_back(Eigen::VectorXd::Ones(n));
    rb.x.push_back(Eigen::MatrixXd::Zero(n, 0));
    rb.subgroups.push_back({n});
  }
  return rb;
}

ResidualBundle ar1_residuals(std::mt19937_64& rng, int I, int n, double rho) {
  std::normal_distribution<double> z;
  ResidualBundle rb;
  for (int i = 0; i < I; ++i) {
    Eigen::VectorXd e(n);
    e(0) = z(rng);
    for (int j = 1; j < n; ++j) e(j) = rho * e(j - 1) + std::sqrt(1 - rho * rho) * z(rng);
    rb.eps.push_back(e);
    rb.xi.push_back(Eigen::VectorXd::Ones(n));
    rb.x.push_back(Eigen::MatrixXd::Zero(n, 0));
    rb.subgroups.push_back({n});
  }
  return rb;
}

}  // namespace

TEST_CASE("unweighted fit without nuisances is least squares through the origin") {
  std::mt19937_64 rng(51);
  const GroupedDataset data = plm_data(rng, 40, 3, 1.5, 0.3);
  double dd = 0, dy = 0;
  for (const auto& g : data.groups()) {
    dd += g.d.squaredNorm();
    dy += g.d.dot(g.y);
  }
  const EstimateReport r = fit_plm(data, zero_nuisance());
  CHECK(r.beta_hat == doctest::Approx(dy / dd).epsilon(1e-12));
  const double half = std::sqrt(r.v_hat / r.n_obs) * normal_quantile(0.975);
  CHECK(r.ci_lower == doctest::Approx(r.beta_hat - half));
  CHECK(r.ci_upper == doctest::Approx(r.beta_hat + half));
  CHECK(r.folds.size() == 3);
}

TEST_CASE("unweighted fit is invariant to group order when nuisances are not fitted") {
  std::mt19937_64 rng(52);
  const GroupedDataset data = plm_data(rng, 30, 4, 0.7, 0.5);
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const double a = fit_plm(data, zero_nuisance()).beta_hat;
  const double b = fit_plm(data.subset(perm), zero_nuisance()).beta_hat;
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("identity fixed weights reproduce the unweighted estimate") {
  std::mt19937_64 rng(53);
  const GroupedDataset data = plm_data(rng, 50, 3, 1.0, 0.4);
  PlmOptions o;
  o.nuisance.kind = NuisanceKind::Mean;
  const EstimateReport u = fit_plm(data, o);
  o.weights.kind = WeightMethodKind::Fixed;
  const EstimateReport f = fit_plm(data, o);
  CHECK(f.beta_hat == doctest::Approx(u.beta_hat).epsilon(1e-12));
  CHECK(f.v_hat == doctest::Approx(u.v_hat).epsilon(1e-12));
}

TEST_CASE("multi-split aggregation uses medians") {
  std::mt19937_64 rng(54);
  const GroupedDataset data = plm_data(rng, 60, 3, 1.0, 0.4);
  PlmOptions o;
  o.nuisance.rounds = 20;
  o.S = 1;
  const EstimateReport one = fit_plm(data, o);
  REQUIRE(one.per_split.size() == 1);
  CHECK(one.beta_hat == one.per_split[0].beta);
  CHECK(one.v_hat == one.per_split[0].v_hat);
  o.S = 5;
  const EstimateReport five = fit_plm(data, o);
  REQUIRE(five.per_split.size() == 5);
  std::vector<double> b, v;
  for (const auto& s : five.per_split) b.push_back(s.beta);
  CHECK(five.beta_hat == lower_median(b));
  for (const auto& s : five.per_split) v.push_back(s.v_hat + std::pow(five.beta_hat - s.beta, 2));
  CHECK(five.v_hat == lower_median(v));
  CHECK(five.per_split[0].beta == one.per_split[0].beta);
}

TEST_CASE("fits are reproducible and thread-count independent") {
  std::mt19937_64 rng(55);
  const GroupedDataset data = plm_data(rng, 60, 3, 1.0, 0.4);
  PlmOptions o;
  o.nuisance.rounds = 20;
  o.S = 4;
  o.weights.kind = WeightMethodKind::SandwichBoost;
  o.weights.boost.m_stop = 10;
  const EstimateReport a = fit_plm(data, o);
  o.threads = 3;
  const EstimateReport b = fit_plm(data, o);
  CHECK(a.beta_hat == b.beta_hat);
  CHECK(a.v_hat == b.v_hat);
}

TEST_CASE("estimates are consistent under the working model") {
  std::mt19937_64 rng(56);
  const GroupedDataset data = plm_data(rng, 800, 5, 2.0, 0.5);
  for (auto kind : {WeightMethodKind::Unweighted, WeightMethodKind::HomoscedasticML, WeightMethodKind::HomoscedasticGEE}) {
    PlmOptions o;
    o.weights.kind = kind;
    o.nuisance.rounds = 60;
    const EstimateReport r = fit_plm(data, o);
    CHECK(std::abs(r.beta_hat - 2.0) < 5 * std::sqrt(r.v_hat / r.n_obs));
  }
}

TEST_CASE("invalid fit options are rejected") {
  std::mt19937_64 rng(57);
  const GroupedDataset data = plm_data(rng, 4, 2, 1.0, 0.0);
  PlmOptions o;
  o.K = 5;
  CHECK_THROWS_AS(fit_plm(data, o), DataError);
  o.K = 1;
  CHECK_THROWS_AS(fit_plm(data, o), ConfigError);
  o.K = 2;
  o.alpha = 1.5;
  CHECK_THROWS_AS(fit_plm(data, o), ConfigError);
}

TEST_CASE("constant-basis coefficient function equals the scalar estimate") {
  std::mt19937_64 rng(58);
  const GroupedDataset data = plm_data(rng, 50, 3, 1.2, 0.3);
  PlmOptions o;
  o.nuisance.rounds = 20;
  const EstimateReport s = fit_plm(data, o);
  const CoefficientReport c = fit_coefficient_function(data, BasisSet::constant(), o);
  REQUIRE(c.phi_hat.size() == 1);
  CHECK(c.phi_hat(0) == doctest::Approx(s.beta_hat).epsilon(1e-10));
  CHECK(c.v_hat(0, 0) == doctest::Approx(s.v_hat).epsilon(1e-10));
}

TEST_CASE("coefficient function recovers a linear effect") {
  std::mt19937_64 rng(59);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Group> gs;
  for (int i = 0; i < 600; ++i) {
    Group g;
    g.x.resize(3, 1);
    g.y.resize(3);
    g.d.resize(3);
    for (int j = 0; j < 3; ++j) {
      g.x(j, 0) = u(rng);
      g.d(j) = z(rng);
      g.y(j) = (1.0 + 2.0 * g.x(j, 0)) * g.d(j) + z(rng);
    }
    gs.push_back(g);
  }
  PlmOptions o;
  o.nuisance.kind = NuisanceKind::Mean;
  const CoefficientReport c = fit_coefficient_function(GroupedDataset(gs, 1), BasisSet::polynomial(1, 0), o);
  CHECK(std::abs(c.phi_hat(0) - 1.0) < 0.15);
  CHECK(std::abs(c.phi_hat(1) - 2.0) < 0.25);
}

TEST_CASE("ml profile objective matches the dense Gaussian likelihood") {
  std::mt19937_64 rng(60);
  const ResidualBundle rb = equi_residuals(rng, 6, 4, 0.3);
  for (auto kind : {CorrelationKind::Equicorrelated, CorrelationKind::AR1}) {
    for (double rho : {0.1, 0.45, 0.8}) {
      double logdet = 0.0, q = 0.0;
      for (const auto& e : rb.eps) {
        const int n = static_cast<int>(e.size());
        Eigen::MatrixXd R(n, n);
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            R(j, k) = j == k ? 1.0 : (kind == CorrelationKind::AR1 ? std::pow(rho, std::abs(j - k)) : rho);
        logdet += std::log(R.determinant());
        q += e.dot(R.inverse() * e);
      }
      const double N = rb.n_obs();
      CHECK(ml_profile_objective(rb, kind, rho) == doctest::Approx(logdet + N * std::log(q / N)).epsilon(1e-10));
    }
  }
}

TEST_CASE("gee objective matches the pairwise definition") {
  std::mt19937_64 rng(61);
  const ResidualBundle rb = ar1_residuals(rng, 5, 5, 0.4);
  std::vector<Eigen::VectorXd> sigma;
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (const auto& e : rb.eps) {
    Eigen::VectorXd s(e.size());
    for (Eigen::Index j = 0; j < e.size(); ++j) s(j) = u(rng);
    sigma.push_back(s);
  }
  for (double rho : {-0.5, 0.2, 0.7}) {
    double f = 0.0;
    for (std::size_t i = 0; i < rb.eps.size(); ++i)
      for (int j = 0; j < 5; ++j)
        for (int k = 0; k < 5; ++k)
          if (j != k) {
            const double q = sigma[i](j) * sigma[i](k);
            f += std::pow(rb.eps[i](j) * rb.eps[i](k) - q * std::pow(rho, std::abs(j - k)), 2);
          }
    CHECK(gee_objective(rb, CorrelationKind::AR1, rho, sigma) == doctest::Approx(f).epsilon(1e-10));
  }
}

TEST_CASE("ml and gee recover the correlation of correctly specified errors") {
  std::mt19937_64 rng(62);
  const ResidualBundle eq = equi_residuals(rng, 4000, 4, 0.4);
  const std::vector<Eigen::VectorXd> ones(eq.eps.size(), Eigen::VectorXd::Constant(4, 2.0));
  CHECK(std::abs(fit_rho_ml(eq, CorrelationKind::Equicorrelated).rho - 0.4) < 0.03);
  CHECK(std::abs(fit_rho_gee(eq, CorrelationKind::Equicorrelated, ones).rho - 0.4) < 0.03);
  const ResidualBundle ar = ar1_residuals(rng, 4000, 5, -0.3);
  const std::vector<Eigen::VectorXd> unit(ar.eps.size(), Eigen::VectorXd::Ones(5));
  CHECK(std::abs(fit_rho_ml(ar, CorrelationKind::AR1).rho + 0.3) < 0.03);
  CHECK(std::abs(fit_rho_gee(ar, CorrelationKind::AR1, unit).rho + 0.3) < 0.03);
  CHECK_THROWS_AS(fit_rho_ml(ar, CorrelationKind::Nested), ConfigError);
}

TEST_CASE("singleton groups give independence") {
  std::mt19937_64 rng(63);
  const ResidualBundle rb = equi_residuals(rng, 50, 1, 0.0);
  CHECK(fit_rho_ml(rb, CorrelationKind::Equicorrelated).rho == 0.0);
}
