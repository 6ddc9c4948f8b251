#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sboost {

/// Base class for all library errors. `code()` is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

/// Malformed input data (CSV problems, invariant violations on construction).
class DataError : public Error {
  using Error::Error;
};

/// Invalid configuration or arguments.
class ConfigError : public Error {
  using Error::Error;
};

/// Numerical breakdown: degenerate weights, singular designs, divergence.
class NumericError : public Error {
  using Error::Error;
};

// Pairwise (cascade) summation. Deterministic for a given input order.
double pairwise_sum(std::span<const double> values);

struct GoldenResult {
  double argmin;
  double value;
};

/// Golden-section search for a minimum of `f` on [lo, hi]. Runs a fixed number
/// of iterations so results do not depend on tolerance heuristics.
GoldenResult golden_section_minimize(const std::function<double(double)>& f,
                                     double lo, double hi, int iterations = 60);

/// Coarse grid scan followed by golden-section refinement in the bracket
/// around the best grid point. Ties on the grid resolve to the smallest argument.
GoldenResult grid_golden_minimize(const std::function<double(double)>& f,
                                  double lo, double hi, int grid_points = 201,
                                  int iterations = 60);

/// Standard normal quantile function.
double normal_quantile(double p);

/// Lower median (element of rank floor((n-1)/2) in sorted order).
double lower_median(std::vector<double> values);

}  // namespace sboost
