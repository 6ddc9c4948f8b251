#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sandboost/boosting.hpp"
#include "sandboost/grouped_data.hpp"
#include "sandboost/learners.hpp"
#include "sandboost/sandwich.hpp"

namespace sboost {

enum class NuisanceKind { L2Boost, Knn, Mean, Zero, Known };

struct NuisanceSpec {
  NuisanceKind kind = NuisanceKind::L2Boost;
  TreeConfig tree{3, 10};
  int rounds = 100;
  double shrinkage = 0.1;
  int knn_k = 10;
  // Used only with NuisanceKind::Known: E[Y|X] and E[D|X] as row-wise maps.
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> known_l;
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> known_m;
};

NuisanceKind parse_nuisance(const std::string& name);
std::string to_string(NuisanceKind kind);

/// Fits a regression of `target` on `x`. For Known, `which` selects l ('y') or m ('d').
std::shared_ptr<const Regressor> fit_nuisance(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                                              const NuisanceSpec& spec, char which = 'y');

enum class WeightMethodKind { Unweighted, SandwichBoost, HomoscedasticML, HomoscedasticGEE, HeteroscedasticGEE, Fixed };

WeightMethodKind parse_weight_method(const std::string& name);
std::string to_string(WeightMethodKind kind);

struct WeightMethod {
  WeightMethodKind kind = WeightMethodKind::Unweighted;
  BoostConfig boost;
  NuisanceSpec variance_smoother{NuisanceKind::L2Boost, {2, 20}, 50, 0.1, 10, {}, {}};
  WeightModel fixed;  // used by Fixed (e.g. oracle weights)
};

struct FoldSummary {
  int split = 0;
  int fold = 0;
  std::array<double, 2> theta{0.0, 0.0};
  double s_min = 1.0;
  double s_max = 1.0;
  int m_stop = 0;
  double beta_tilde = 0.0;
};

struct SplitEstimate {
  double beta = 0.0;
  double v_hat = 0.0;
};

struct EstimateReport {
  double beta_hat = 0.0;
  double v_hat = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double alpha = 0.05;
  int n_groups = 0;
  int n_obs = 0;
  std::string family;
  std::string weight_method;
  std::vector<SplitEstimate> per_split;
  std::vector<FoldSummary> folds;
  std::vector<std::string> flags;
};

struct PlmOptions {
  CorrelationFamily family;
  WeightMethod weights;
  int K = 5;
  int S = 1;
  double alpha = 0.05;
  NuisanceSpec nuisance;
  std::uint64_t seed = 1;
  int threads = 1;
};

EstimateReport fit_plm(const GroupedDataset& data, const PlmOptions& opt);

/// Weight model for one fold complement. `summary` receives theta, s-range, m_stop.
WeightModel fit_weights(const ResidualBundle& rb, const CorrelationFamily& family,
                        const WeightMethod& method, std::uint64_t seed, FoldSummary* summary = nullptr,
                        const Objective* objective = nullptr);

struct RhoFit {
  double rho = 0.0;
  double objective = 0.0;
};

/// Profile quasi-Gaussian likelihood in rho (sigma^2 profiled out), up to a constant.
double ml_profile_objective(const ResidualBundle& rb, CorrelationKind kind, double rho);
RhoFit fit_rho_ml(const ResidualBundle& rb, CorrelationKind kind);
WeightModel fit_weights_ml(const ResidualBundle& rb, const CorrelationFamily& family);

/// sum_i sum_{j != k} (e_ij e_ik - q_ijk C_jk(rho))^2 with q_ijk = sigma_ij sigma_ik.
double gee_objective(const ResidualBundle& rb, CorrelationKind kind, double rho,
                     const std::vector<Eigen::VectorXd>& sigma);
RhoFit fit_rho_gee(const ResidualBundle& rb, CorrelationKind kind, const std::vector<Eigen::VectorXd>& sigma);
WeightModel fit_weights_gee(const ResidualBundle& rb, const CorrelationFamily& family, bool heteroscedastic,
                            const NuisanceSpec& smoother);

/// Baseline rho search domains.
std::pair<double, double> baseline_rho_domain(CorrelationKind kind);

struct CoefficientReport {
  Eigen::VectorXd phi_hat;
  Eigen::MatrixXd v_hat;  // N times the covariance estimate
  std::vector<std::pair<double, double>> ci;
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> per_split;
  int n_groups = 0;
  int n_obs = 0;
  double alpha = 0.05;
  std::vector<std::string> flags;
};

/// beta(x) = sum_l phi_l basis_l(x). With SandwichBoost, weights are trained on the
/// generalised sandwich loss.
CoefficientReport fit_coefficient_function(const GroupedDataset& data, const BasisSet& basis,
                                           const PlmOptions& opt);

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers; results are indexed so
/// output does not depend on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace sboost
