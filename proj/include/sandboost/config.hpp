#pragma once

#include <string>
#include <vector>

#include "sandboost/plm.hpp"
#include "sandboost/population.hpp"
#include "sandboost/simulation.hpp"

namespace sboost {

/// Options are flat JSON objects; unknown keys and ill-typed values raise ConfigError.
PlmOptions parse_fit_options(const std::string& json_text);

struct SimulateOptions {
  ScenarioSpec spec;
  NuisanceSpec nuisance;
  std::vector<std::string> methods;  // empty: scenario defaults
  int K = 2;
  double alpha = 0.05;
  int threads = 1;
  bool boost_overridden = false;
  BoostConfig boost;
};

SimulateOptions parse_simulate_options(const std::string& json_text);
std::vector<MethodSpec> build_methods(const SimulateOptions& opt);

struct PopulationOptions {
  std::string example = "example21";  // example21 | example22
  char setting = 'a';
  int resolution = 1999;
  double lambda = 0.0;
  double mu = 0.5;
  VarianceConvention convention = VarianceConvention::Variance;
};

PopulationOptions parse_population_options(const std::string& json_text);

struct PopulationOutput {
  std::string json;
  std::string csv;
};

PopulationOutput run_population(const PopulationOptions& opt);

}  // namespace sboost
