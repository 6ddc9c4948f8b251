#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sboost {

struct ArmaSpec {
  std::vector<double> phi;       // AR coefficients
  std::vector<double> vartheta;  // MA coefficients (e_t = sum phi e_{t-i} + u_t + sum vartheta u_{t-j})
  int n = 1;
};

bool arma_stationary(const std::vector<double>& phi);
/// Autocorrelations rho(0..max_lag) of a stationary ARMA process.
Eigen::VectorXd arma_autocorrelation(const ArmaSpec& spec, int max_lag);
/// n x n Toeplitz autocovariance matrix scaled to unit marginal variance.
Eigen::MatrixXd arma_covariance(const ArmaSpec& spec);

struct PopulationSetting {
  Eigen::MatrixXd Sigma;   // true error covariance
  Eigen::MatrixXd OmegaD;  // covariance of D
};

/// Example 2.1 settings 'a' (n=100, phi=(0.3,0.6), vartheta=-0.5) and 'b'
/// (n=30, phi=(0.1,0.85), vartheta=-0.4), with Omega_D = 1/8 11' + 7/8 I.
PopulationSetting example21_setting(char which);
PopulationSetting arma_setting(const ArmaSpec& spec);

/// Closed-form scaled inverse of the AR(1) correlation; rho may be negative.
Eigen::MatrixXd ar1_weight(int n, double rho);

double population_sl(const PopulationSetting& setting, double rho);
double population_sl_weight(const PopulationSetting& setting, const Eigen::MatrixXd& W);
double population_ml(const PopulationSetting& setting, double rho);
double population_gee(const PopulationSetting& setting, double rho);
double population_gee_derivative(const PopulationSetting& setting, double rho);

struct ScanResult {
  std::vector<double> parameter;
  std::vector<double> value;
  std::vector<double> local_minima;  // refined locations
  double argmin = 0.0;
  double min_value = 0.0;
};

/// Grid scan on [lo, hi] with `resolution` points; interior points below both
/// neighbours are refined by golden-section search.
ScanResult scan_objective(const std::function<double(double)>& f, double lo, double hi, int resolution);

struct DescentResult {
  double x = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Fixed-step gradient descent x <- clamp(x - step f'(x)).
DescentResult gradient_descent(const std::function<double(double)>& grad, double start, double step,
                               double lo, double hi, int max_iter = 2000000, double tol = 1e-12);

struct Example21Summary {
  double rho_ml = 0.0;
  double rho_sl = 0.0;
  double rho_gee_global = 0.0;
  double rho_gee_gd = 0.0;
  double sl_min = 0.0;
  double ratio_unweighted = 0.0;
  double ratio_ml = 0.0;
  double ratio_gee = 0.0;
  std::vector<double> gee_local_minima;
};

Example21Summary example21_summary(const PopulationSetting& setting, int resolution = 1999);

enum class VarianceConvention { Variance, StdDev };

struct VarianceLosses {
  double ml = 0.0, gee = 0.0, sl = 0.0;
};

/// Population ML, GEE and SL losses for the step class sigma(x; eta) = 1 + 2 1[eta, inf)
/// with X ~ U[0,1] and true variance 2 + tanh(lambda (x - mu)) (or its square
/// under StdDev convention).
VarianceLosses variance_example_losses(double lambda, double mu, double eta,
                                       VarianceConvention conv = VarianceConvention::Variance);
double variance_example_unweighted(double lambda, double mu,
                                   VarianceConvention conv = VarianceConvention::Variance);

struct Example22Summary {
  double eta_ml = 0.0, eta_gee = 0.0, eta_sl = 0.0;
  double mse_ml = 0.0, mse_gee = 0.0, mse_sl = 0.0, mse_unweighted = 0.0;
};

Example22Summary example22_summary(double lambda, double mu,
                                   VarianceConvention conv = VarianceConvention::Variance);

}  // namespace sboost
