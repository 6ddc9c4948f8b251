#include "sandboost/config.hpp"

#include <set>
#include <sstream>

#include <json.hpp>

#include "sandboost/numeric.hpp"
#include "sandboost/population.hpp"
#include "sandboost/report.hpp"

namespace sboost {

using nlohmann::json;

namespace {

json parse_object(const std::string& text) {
  json j;
  try {
    j = text.empty() ? json::object() : json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("MalformedOptions", e.what());
  }
  if (!j.is_object()) throw ConfigError("MalformedOptions", "options must be a JSON object");
  return j;
}

void reject_unknown(const json& j, const std::set<std::string>& known) {
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("UnknownKey", "unknown option '" + k + "'");
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("InvalidValue", std::string("option '") + key + "' has the wrong type");
  }
}

const std::set<std::string> kBoostKeys{"m_stop",    "lambda_s",  "lambda_theta", "step",       "lambda_lo",
                                       "lambda_hi", "shrinkage", "s_floor",      "cv_folds",   "learner",
                                       "learner_depth", "learner_min_leaf", "learner_k"};
const std::set<std::string> kNuisanceKeys{"nuisance", "nuisance_rounds", "nuisance_depth", "nuisance_min_leaf",
                                          "nuisance_shrinkage", "nuisance_k"};

bool apply_boost(const json& j, BoostConfig& b) {
  bool any = false;
  for (const auto& k : kBoostKeys) any = any || j.contains(k);
  take(j, "m_stop", b.m_stop);
  take(j, "lambda_s", b.lambda_s);
  take(j, "lambda_theta", b.lambda_theta);
  if (j.contains("step")) {
    std::string s;
    take(j, "step", s);
    if (s == "fixed") b.step_mode = StepMode::Fixed;
    else if (s == "variable") b.step_mode = StepMode::Variable;
    else throw ConfigError("InvalidValue", "step must be 'fixed' or 'variable'");
  }
  take(j, "lambda_lo", b.lambda_lo);
  take(j, "lambda_hi", b.lambda_hi);
  take(j, "shrinkage", b.shrinkage);
  take(j, "s_floor", b.s_floor);
  take(j, "cv_folds", b.cv_folds);
  if (j.contains("learner")) {
    std::string s;
    take(j, "learner", s);
    b.learner.kind = parse_base_learner(s);
  }
  take(j, "learner_depth", b.learner.tree.max_depth);
  take(j, "learner_min_leaf", b.learner.tree.min_leaf);
  take(j, "learner_k", b.learner.knn_k);
  if (b.m_stop < 0) throw ConfigError("InvalidValue", "m_stop must be >= 0");
  if (!(b.lambda_s >= 0.0) || !(b.lambda_theta >= 0.0)) throw ConfigError("InvalidValue", "step sizes must be >= 0");
  if (!(b.lambda_lo > 0.0 && b.lambda_lo <= b.lambda_hi)) throw ConfigError("InvalidValue", "need 0 < lambda_lo <= lambda_hi");
  if (!(b.shrinkage > 0.0 && b.shrinkage <= 1.0)) throw ConfigError("InvalidValue", "shrinkage must lie in (0,1]");
  if (!(b.s_floor > 0.0)) throw ConfigError("InvalidValue", "s_floor must be > 0");
  if (b.learner.tree.max_depth < 1 || b.learner.tree.min_leaf < 1 || b.learner.knn_k < 1)
    throw ConfigError("InvalidValue", "learner sizes must be >= 1");
  return any;
}

void apply_nuisance(const json& j, NuisanceSpec& n) {
  if (j.contains("nuisance")) {
    std::string s;
    take(j, "nuisance", s);
    n.kind = parse_nuisance(s);
  }
  take(j, "nuisance_rounds", n.rounds);
  take(j, "nuisance_depth", n.tree.max_depth);
  take(j, "nuisance_min_leaf", n.tree.min_leaf);
  take(j, "nuisance_shrinkage", n.shrinkage);
  take(j, "nuisance_k", n.knn_k);
  if (n.rounds < 0 || n.tree.max_depth < 1 || n.tree.min_leaf < 1 || n.knn_k < 1 ||
      !(n.shrinkage > 0.0 && n.shrinkage <= 1.0))
    throw ConfigError("InvalidValue", "invalid nuisance settings");
}

}  // namespace

PlmOptions parse_fit_options(const std::string& text) {
  const json j = parse_object(text);
  std::set<std::string> known{"folds", "splits", "alpha", "correlation", "weights", "seed", "threads"};
  known.insert(kBoostKeys.begin(), kBoostKeys.end());
  known.insert(kNuisanceKeys.begin(), kNuisanceKeys.end());
  reject_unknown(j, known);
  PlmOptions o;
  take(j, "folds", o.K);
  take(j, "splits", o.S);
  take(j, "alpha", o.alpha);
  take(j, "seed", o.seed);
  take(j, "threads", o.threads);
  if (j.contains("correlation")) {
    std::string s;
    take(j, "correlation", s);
    o.family.kind = parse_correlation(s);
  }
  if (j.contains("weights")) {
    std::string s;
    take(j, "weights", s);
    o.weights.kind = parse_weight_method(s);
  }
  apply_boost(j, o.weights.boost);
  apply_nuisance(j, o.nuisance);
  if (o.K < 2) throw ConfigError("InvalidFolds", "folds must be at least 2");
  if (o.S < 1) throw ConfigError("InvalidSplits", "splits must be at least 1");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw ConfigError("InvalidAlpha", "alpha must lie in (0,1)");
  if (o.threads < 1) throw ConfigError("InvalidThreads", "threads must be >= 1");
  return o;
}

SimulateOptions parse_simulate_options(const std::string& text) {
  const json j = parse_object(text);
  std::set<std::string> known{"scenario", "lambda", "eta", "n", "groups", "reps", "seed",
                              "folds", "alpha", "threads", "full", "methods"};
  known.insert(kBoostKeys.begin(), kBoostKeys.end());
  known.insert(kNuisanceKeys.begin(), kNuisanceKeys.end());
  reject_unknown(j, known);
  std::string scenario = "var-misspec";
  take(j, "scenario", scenario);
  bool full = false;
  take(j, "full", full);
  SimulateOptions o;
  o.spec = default_spec(parse_scenario(scenario), full);
  take(j, "lambda", o.spec.lambda);
  take(j, "eta", o.spec.eta);
  take(j, "n", o.spec.n);
  if (j.contains("n") && !j.contains("groups") && full &&
      (o.spec.scenario == Scenario::CorrMisspec || o.spec.scenario == Scenario::VarMisspec))
    o.spec.I = std::max(4, (1 << 15) / o.spec.n);
  take(j, "groups", o.spec.I);
  take(j, "reps", o.spec.reps);
  take(j, "seed", o.spec.seed);
  take(j, "folds", o.K);
  take(j, "alpha", o.alpha);
  take(j, "threads", o.threads);
  take(j, "methods", o.methods);
  o.boost = scenario_boost(o.spec);
  o.boost_overridden = apply_boost(j, o.boost);
  o.nuisance.kind = o.spec.scenario == Scenario::CorrMisspec ? NuisanceKind::Zero : NuisanceKind::L2Boost;
  apply_nuisance(j, o.nuisance);
  o.spec.validate();
  if (o.K < 2) throw ConfigError("InvalidFolds", "folds must be at least 2");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw ConfigError("InvalidAlpha", "alpha must lie in (0,1)");
  if (o.threads < 1) throw ConfigError("InvalidThreads", "threads must be >= 1");
  build_methods(o);
  return o;
}

std::vector<MethodSpec> build_methods(const SimulateOptions& o) {
  std::vector<MethodSpec> all = default_methods(o.spec, o.nuisance);
  for (auto& m : all)
    if (m.weights.kind == WeightMethodKind::SandwichBoost) m.weights.boost = o.boost;
  if (o.methods.empty()) return all;
  std::vector<MethodSpec> out;
  for (const auto& name : o.methods) {
    bool found = false;
    for (const auto& m : all)
      if (m.name == name) {
        out.push_back(m);
        found = true;
      }
    if (!found) throw ConfigError("UnknownMethod", "method '" + name + "' is not available for this scenario");
  }
  return out;
}

PopulationOptions parse_population_options(const std::string& text) {
  const json j = parse_object(text);
  reject_unknown(j, {"example", "setting", "resolution", "lambda", "mu", "convention"});
  PopulationOptions o;
  take(j, "example", o.example);
  std::string setting = "a";
  take(j, "setting", setting);
  take(j, "resolution", o.resolution);
  take(j, "lambda", o.lambda);
  take(j, "mu", o.mu);
  std::string conv = "variance";
  take(j, "convention", conv);
  if (o.example != "example21" && o.example != "example22")
    throw ConfigError("UnknownExample", "example must be example21 or example22");
  if (setting != "a" && setting != "b") throw ConfigError("InvalidSetting", "setting must be 'a' or 'b'");
  o.setting = setting[0];
  if (o.resolution < 3) throw ConfigError("InvalidResolution", "resolution must be >= 3");
  if (!(std::isfinite(o.lambda) && o.lambda >= 0.0) || !std::isfinite(o.mu))
    throw ConfigError("InvalidValue", "lambda must be finite and >= 0, mu finite");
  if (conv == "variance") o.convention = VarianceConvention::Variance;
  else if (conv == "sd") o.convention = VarianceConvention::StdDev;
  else throw ConfigError("InvalidValue", "convention must be 'variance' or 'sd'");
  return o;
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

PopulationOutput run_population(const PopulationOptions& o) {
  PopulationOutput out;
  std::ostringstream csv;
  if (o.example == "example21") {
    const PopulationSetting s = example21_setting(o.setting);
    const Example21Summary sum = example21_summary(s, o.resolution);
    out.json = to_json(sum);
    csv << "rho,sl,ml,gee\n";
    const double lo = -0.999, hi = 0.999;
    for (int i = 0; i < o.resolution; ++i) {
      const double r = lo + (hi - lo) * i / (o.resolution - 1);
      csv << num(r) << ',' << num(population_sl(s, r)) << ',' << num(population_ml(s, r)) << ','
          << num(population_gee(s, r)) << '\n';
    }
  } else {
    const Example22Summary sum = example22_summary(o.lambda, o.mu, o.convention);
    out.json = to_json(sum);
    csv << "eta,sl,ml,gee\n";
    for (int i = 0; i < o.resolution; ++i) {
      const double e = static_cast<double>(i) / (o.resolution - 1);
      const VarianceLosses l = variance_example_losses(o.lambda, o.mu, e, o.convention);
      csv << num(e) << ',' << num(l.sl) << ',' << num(l.ml) << ',' << num(l.gee) << '\n';
    }
  }
  out.csv = csv.str();
  return out;
}

}  // namespace sboost
