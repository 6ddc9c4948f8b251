#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sandboost/grouped_data.hpp"
#include "sandboost/plm.hpp"

namespace sboost {

enum class Scenario { Complexity, Misspecification, CorrMisspec, VarMisspec };

Scenario parse_scenario(const std::string& name);
std::string to_string(Scenario s);

struct ScenarioSpec {
  Scenario scenario = Scenario::VarMisspec;
  double lambda = 0.0;  // Complexity: frequency of sigma_0
  double eta = 1.0;     // Misspecification: confounding strength (>= 1)
  int n = 4;            // group size
  int I = 512;          // number of groups
  int reps = 100;
  std::uint64_t seed = 1;
  double beta = 1.0;

  void validate() const;
};

/// Desk-scale defaults, or the full published sizes when `full` is set.
ScenarioSpec default_spec(Scenario s, bool full);

struct Simulated {
  GroupedDataset data;
  std::vector<Eigen::VectorXd> xi;     // true D - m0(X)
  std::vector<Eigen::VectorXd> eps;    // true Y - beta D - g0(X)
  std::vector<Eigen::MatrixXd> sigma;  // true Cov(eps | D, X) per group
};

/// Reproducible from (spec.seed, rep).
Simulated generate(const ScenarioSpec& spec, int rep);

/// True nuisance functions l0, m0 as a Known nuisance spec.
NuisanceSpec true_nuisance(const ScenarioSpec& spec);

/// Working family used for this scenario (equicorrelated or ar1).
CorrelationFamily scenario_family(Scenario s);

struct MethodSpec {
  std::string name;
  WeightMethod weights;
  CorrelationFamily family;
  NuisanceSpec nuisance;
};

/// Oracle weights Sigma(X)^{-1} with known nuisances (Complexity only).
MethodSpec oracle_method(const ScenarioSpec& spec);

/// Boosting settings tuned per scenario.
BoostConfig scenario_boost(const ScenarioSpec& spec);

/// Unweighted, ML, GEE, (heteroscedastic GEE), sandwich-boost, and the oracle
/// for Complexity.
std::vector<MethodSpec> default_methods(const ScenarioSpec& spec, const NuisanceSpec& nuisance);

struct MethodResult {
  std::string name;
  std::vector<double> beta_hat;
  std::vector<double> se;  // sqrt(V/N) per rep
  std::vector<int> covered;
  double mse = 0.0;
  double mse_se = 0.0;
  double rel_mse = 0.0;
  double coverage = 0.0;
  double coverage_se = 0.0;
  double diff_vs_ref = 0.0;  // mean of paired squared-error differences (method - reference)
  double diff_vs_ref_se = 0.0;
};

struct ExperimentResult {
  ScenarioSpec spec;
  int K = 2;
  double alpha = 0.05;
  std::string reference;
  std::vector<MethodResult> methods;
  double wall_seconds = 0.0;  // not serialised

  const MethodResult& method(const std::string& name) const;
};

/// `reference` defaults to "oracle" when present, else "unweighted", else the first method.
ExperimentResult run_experiment(const ScenarioSpec& spec, const std::vector<MethodSpec>& methods, int K = 2,
                                double alpha = 0.05, int threads = 1, const std::string& reference = "");

/// Recomputes the aggregate fields of each method from its per-rep vectors.
void summarise(ExperimentResult& result);

std::string experiment_csv(const ExperimentResult& r);

}  // namespace sboost
