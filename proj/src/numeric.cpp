#include "sandboost/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

namespace sboost {

namespace {

double pairwise_sum_impl(const double* p, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(p, half) + pairwise_sum_impl(p + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  return pairwise_sum_impl(values.data(), values.size());
}

GoldenResult golden_section_minimize(const std::function<double(double)>& f,
                                     double lo, double hi, int iterations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iterations; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  const double fx = f(x);
  // Endpoints are not probed by the interior iteration; keep them in play.
  GoldenResult best{x, fx};
  if (fc < best.value) best = {c, fc};
  if (fd < best.value) best = {d, fd};
  return best;
}

GoldenResult grid_golden_minimize(const std::function<double(double)>& f,
                                  double lo, double hi, int grid_points,
                                  int iterations) {
  if (grid_points < 3) grid_points = 3;
  const double step = (hi - lo) / (grid_points - 1);
  int best_i = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    const double v = f(lo + step * i);
    if (v < best_v) {
      best_v = v;
      best_i = i;
    }
  }
  if (!std::isfinite(best_v)) return {lo + step * best_i, best_v};
  const double a = lo + step * std::max(0, best_i - 1);
  const double b = lo + step * std::min(grid_points - 1, best_i + 1);
  GoldenResult refined = golden_section_minimize(f, a, b, iterations);
  if (refined.value <= best_v) return refined;
  return {lo + step * best_i, best_v};
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("DomainError", "normal_quantile: p must lie in (0,1)");
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("EmptyInput", "median of empty set");
  const std::size_t k = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

}  // namespace sboost
