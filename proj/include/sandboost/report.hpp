#pragma once

#include <string>

#include "sandboost/plm.hpp"
#include "sandboost/population.hpp"
#include "sandboost/simulation.hpp"

namespace sboost {

std::string to_json(const EstimateReport& r, int indent = 2);
std::string to_json(const CoefficientReport& r, int indent = 2);
std::string to_json(const ExperimentResult& r, int indent = 2);
std::string to_json(const Example21Summary& s, int indent = 2);
std::string to_json(const Example22Summary& s, int indent = 2);

EstimateReport estimate_from_json(const std::string& text);
/// Per-rep vectors and spec are restored; aggregates are recomputed.
ExperimentResult experiment_from_json(const std::string& text);

}  // namespace sboost
