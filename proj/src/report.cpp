#include "sandboost/report.hpp"

#include <cmath>

#include <json.hpp>

#include "sandboost/numeric.hpp"

namespace sboost {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(m.row(r).transpose()));
  return rows;
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError("MalformedJson", e.what());
  }
}

}  // namespace

std::string to_json(const EstimateReport& r, int indent) {
  json j;
  j["beta_hat"] = r.beta_hat;
  j["v_hat"] = r.v_hat;
  j["se"] = std::sqrt(std::max(r.v_hat, 0.0) / r.n_obs);
  j["ci"] = {r.ci_lower, r.ci_upper};
  j["alpha"] = r.alpha;
  j["n_groups"] = r.n_groups;
  j["n_obs"] = r.n_obs;
  j["family"] = r.family;
  j["weight_method"] = r.weight_method;
  json splits = json::array();
  for (const auto& s : r.per_split) splits.push_back({{"beta", s.beta}, {"v_hat", s.v_hat}});
  j["per_split"] = splits;
  json folds = json::array();
  for (const auto& f : r.folds)
    folds.push_back({{"split", f.split}, {"fold", f.fold}, {"theta", f.theta}, {"s_min", f.s_min},
                     {"s_max", f.s_max}, {"m_stop", f.m_stop}, {"beta_tilde", f.beta_tilde}});
  j["folds"] = folds;
  j["flags"] = r.flags;
  return j.dump(indent);
}

EstimateReport estimate_from_json(const std::string& text) {
  return guarded([&] {
    const json j = json::parse(text);
    EstimateReport r;
    r.beta_hat = j.at("beta_hat").get<double>();
    r.v_hat = j.at("v_hat").get<double>();
    r.ci_lower = j.at("ci").at(0).get<double>();
    r.ci_upper = j.at("ci").at(1).get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.n_groups = j.at("n_groups").get<int>();
    r.n_obs = j.at("n_obs").get<int>();
    r.family = j.at("family").get<std::string>();
    r.weight_method = j.at("weight_method").get<std::string>();
    for (const auto& s : j.at("per_split")) r.per_split.push_back({s.at("beta").get<double>(), s.at("v_hat").get<double>()});
    for (const auto& f : j.at("folds")) {
      FoldSummary fs;
      fs.split = f.at("split").get<int>();
      fs.fold = f.at("fold").get<int>();
      fs.theta = f.at("theta").get<std::array<double, 2>>();
      fs.s_min = f.at("s_min").get<double>();
      fs.s_max = f.at("s_max").get<double>();
      fs.m_stop = f.at("m_stop").get<int>();
      fs.beta_tilde = f.at("beta_tilde").get<double>();
      r.folds.push_back(fs);
    }
    r.flags = j.at("flags").get<std::vector<std::string>>();
    return r;
  });
}

std::string to_json(const CoefficientReport& r, int indent) {
  json j;
  j["names"] = r.names;
  j["phi_hat"] = vec(r.phi_hat);
  j["v_hat"] = mat(r.v_hat);
  json ci = json::array();
  for (const auto& [lo, hi] : r.ci) ci.push_back({lo, hi});
  j["ci"] = ci;
  json ps = json::array();
  for (const auto& p : r.per_split) ps.push_back(vec(p));
  j["per_split"] = ps;
  j["n_groups"] = r.n_groups;
  j["n_obs"] = r.n_obs;
  j["alpha"] = r.alpha;
  j["flags"] = r.flags;
  return j.dump(indent);
}

std::string to_json(const ExperimentResult& r, int indent) {
  json j;
  j["scenario"] = to_string(r.spec.scenario);
  j["lambda"] = r.spec.lambda;
  j["eta"] = r.spec.eta;
  j["n"] = r.spec.n;
  j["groups"] = r.spec.I;
  j["reps"] = r.spec.reps;
  j["seed"] = r.spec.seed;
  j["beta"] = r.spec.beta;
  j["folds"] = r.K;
  j["alpha"] = r.alpha;
  j["reference"] = r.reference;
  json ms = json::array();
  for (const auto& m : r.methods) {
    ms.push_back({{"method", m.name},
                  {"mse", m.mse},
                  {"mse_se", m.mse_se},
                  {"rel_mse", m.rel_mse},
                  {"coverage", m.coverage},
                  {"coverage_se", m.coverage_se},
                  {"diff_vs_ref", m.diff_vs_ref},
                  {"diff_vs_ref_se", m.diff_vs_ref_se},
                  {"beta_hat", m.beta_hat},
                  {"se", m.se},
                  {"covered", m.covered}});
  }
  j["methods"] = ms;
  return j.dump(indent);
}

ExperimentResult experiment_from_json(const std::string& text) {
  return guarded([&] {
    const json j = json::parse(text);
    ExperimentResult r;
    r.spec.scenario = parse_scenario(j.at("scenario").get<std::string>());
    r.spec.lambda = j.at("lambda").get<double>();
    r.spec.eta = j.at("eta").get<double>();
    r.spec.n = j.at("n").get<int>();
    r.spec.I = j.at("groups").get<int>();
    r.spec.reps = j.at("reps").get<int>();
    r.spec.seed = j.at("seed").get<std::uint64_t>();
    r.spec.beta = j.at("beta").get<double>();
    r.K = j.at("folds").get<int>();
    r.alpha = j.at("alpha").get<double>();
    r.reference = j.at("reference").get<std::string>();
    for (const auto& m : j.at("methods")) {
      MethodResult mr;
      mr.name = m.at("method").get<std::string>();
      mr.beta_hat = m.at("beta_hat").get<std::vector<double>>();
      mr.se = m.at("se").get<std::vector<double>>();
      mr.covered = m.at("covered").get<std::vector<int>>();
      r.methods.push_back(std::move(mr));
    }
    summarise(r);
    return r;
  });
}

std::string to_json(const Example21Summary& s, int indent) {
  json j;
  j["rho_ml"] = s.rho_ml;
  j["rho_sl"] = s.rho_sl;
  j["rho_gee_global"] = s.rho_gee_global;
  j["rho_gee_gd"] = s.rho_gee_gd;
  j["gee_local_minima"] = s.gee_local_minima;
  j["sl_min"] = s.sl_min;
  j["mse_ratio"] = {{"unweighted", s.ratio_unweighted}, {"ml", s.ratio_ml}, {"gee", s.ratio_gee}, {"sl", 1.0}};
  return j.dump(indent);
}

std::string to_json(const Example22Summary& s, int indent) {
  json j;
  j["eta"] = {{"ml", s.eta_ml}, {"gee", s.eta_gee}, {"sl", s.eta_sl}};
  j["mse"] = {{"ml", s.mse_ml}, {"gee", s.mse_gee}, {"sl", s.mse_sl}, {"unweighted", s.mse_unweighted}};
  j["mse_ratio_vs_unweighted"] = {{"ml", s.mse_ml / s.mse_unweighted},
                                  {"gee", s.mse_gee / s.mse_unweighted},
                                  {"sl", s.mse_sl / s.mse_unweighted}};
  return j.dump(indent);
}

}  // namespace sboost
