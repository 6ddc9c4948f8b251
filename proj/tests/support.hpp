#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sandboost/correlation.hpp"
#include "sandboost/grouped_data.hpp"
#include "sandboost/sandwich.hpp"

namespace testsupport {

using sboost::CorrelationFamily;
using sboost::CorrelationKind;
using sboost::ResidualBundle;
using sboost::SValues;

inline std::vector<int> random_partition(std::mt19937_64& rng, int n) {
  std::vector<int> out;
  std::uniform_int_distribution<int> piece(1, std::max(1, n / 2));
  int left = n;
  while (left > 0) {
    const int k = std::min(left, piece(rng));
    out.push_back(k);
    left -= k;
  }
  return out;
}

inline ResidualBundle random_bundle(std::mt19937_64& rng, int I, int n_min, int n_max, int d, bool nested) {
  std::uniform_int_distribution<int> size(n_min, n_max);
  std::normal_distribution<double> z;
  ResidualBundle rb;
  for (int i = 0; i < I; ++i) {
    const int n = size(rng);
    Eigen::VectorXd xi(n), eps(n);
    Eigen::MatrixXd x(n, d);
    for (int j = 0; j < n; ++j) {
      xi(j) = z(rng);
      eps(j) = z(rng);
      for (int c = 0; c < d; ++c) x(j, c) = z(rng);
    }
    rb.xi.push_back(xi);
    rb.eps.push_back(eps);
    rb.x.push_back(x);
    rb.subgroups.push_back(nested ? random_partition(rng, n) : std::vector<int>{n});
  }
  return rb;
}

inline SValues random_s(std::mt19937_64& rng, const ResidualBundle& rb) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  SValues s;
  for (const auto& v : rb.xi) {
    Eigen::VectorXd sv(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) sv(j) = u(rng);
    s.push_back(sv);
  }
  return s;
}

inline CorrelationFamily random_family(std::mt19937_64& rng, CorrelationKind kind) {
  CorrelationFamily f;
  f.kind = kind;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (kind) {
    case CorrelationKind::Equicorrelated: f.theta = {0.05 + 4.0 * u(rng), 0.0}; break;
    case CorrelationKind::AR1: f.theta = {0.02 + 0.9 * u(rng), 0.0}; break;
    case CorrelationKind::Nested: {
      const double r1 = 0.05 + 0.85 * u(rng);
      const double r2 = r1 * (0.05 + 0.9 * u(rng));
      const auto [t1, t2] = sboost::nested_reparam(r1, r2);
      f.theta = {t1, t2};
      break;
    }
  }
  return f;
}

// Sandwich loss with W_i = D_s R_i^{-1} D_s from a dense inverse.
inline double dense_sandwich_loss(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& f) {
  double b = 0.0, q = 0.0;
  for (int i = 0; i < rb.n_groups(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Eigen::MatrixXd R = sboost::dense_correlation(f, sboost::layout_of(rb, i));
    const Eigen::MatrixXd W = s[k].asDiagonal() * R.inverse() * s[k].asDiagonal();
    b += rb.xi[k].dot(W * rb.xi[k]);
    const double c = rb.xi[k].dot(W * rb.eps[k]);
    q += c * c;
  }
  return rb.n_obs() * q / (b * b);
}

inline double max_abs(const std::vector<Eigen::VectorXd>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, x.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace testsupport
