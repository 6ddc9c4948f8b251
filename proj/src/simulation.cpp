#include "sandboost/simulation.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "sandboost/numeric.hpp"
#include "sandboost/population.hpp"

namespace sboost {

Scenario parse_scenario(const std::string& name) {
  if (name == "complexity") return Scenario::Complexity;
  if (name == "misspecification" || name == "misspec") return Scenario::Misspecification;
  if (name == "corr-misspec") return Scenario::CorrMisspec;
  if (name == "var-misspec") return Scenario::VarMisspec;
  throw ConfigError("UnknownScenario", "unknown scenario '" + name + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Complexity: return "complexity";
    case Scenario::Misspecification: return "misspecification";
    case Scenario::CorrMisspec: return "corr-misspec";
    case Scenario::VarMisspec: return "var-misspec";
  }
  return "?";
}

void ScenarioSpec::validate() const {
  if (reps < 1) throw ConfigError("InvalidReps", "reps must be >= 1");
  if (I < 4) throw ConfigError("InvalidGroups", "need at least 4 groups");
  if (n < 1) throw ConfigError("InvalidGroupSize", "group size must be >= 1");
  if (!std::isfinite(beta)) throw ConfigError("InvalidBeta", "beta must be finite");
  if (scenario == Scenario::Complexity && !(lambda >= 0.0 && std::isfinite(lambda)))
    throw ConfigError("InvalidLambda", "lambda must be finite and >= 0");
  if (scenario == Scenario::Misspecification && !(eta >= 1.0 && std::isfinite(eta)))
    throw ConfigError("InvalidEta", "eta must be finite and >= 1");
}

ScenarioSpec default_spec(Scenario s, bool full) {
  ScenarioSpec spec;
  spec.scenario = s;
  spec.reps = full ? 500 : 100;
  switch (s) {
    case Scenario::Complexity:
      spec.n = 10;
      spec.I = full ? 2000 : 500;
      break;
    case Scenario::Misspecification:
      spec.n = 4;
      spec.eta = 10.0;
      spec.I = full ? 10000 : 1024;
      break;
    case Scenario::CorrMisspec:
      spec.n = 4;
      spec.I = full ? (1 << 15) / spec.n : 256;
      break;
    case Scenario::VarMisspec:
      spec.n = 4;
      spec.I = full ? (1 << 15) / spec.n : 512;
      break;
  }
  return spec;
}

namespace {

Eigen::MatrixXd equicorrelation(int n, double rho) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Constant(n, n, rho);
  C.diagonal().setOnes();
  return C;
}

Eigen::MatrixXd ar1_correlation(int n, double rho) {
  Eigen::MatrixXd C(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) C(j, k) = std::pow(rho, std::abs(j - k));
  return C;
}

Eigen::MatrixXd chol(const Eigen::MatrixXd& S) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw NumericError("NotPositiveDefinite", "covariance is not positive definite");
  return llt.matrixL();
}

struct Draw {
  std::mt19937_64 rng;
  std::normal_distribution<double> z{0.0, 1.0};

  explicit Draw(std::uint64_t seed) : rng(seed) {}
  Eigen::VectorXd normal(int n) {
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v(j) = z(rng);
    return v;
  }
  Eigen::VectorXd uniform(int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v(j) = u(rng);
    return v;
  }
  bool bernoulli(double p) { return std::bernoulli_distribution(p)(rng); }
};

Eigen::VectorXd m0_of(Scenario s, const Eigen::VectorXd& x) {
  switch (s) {
    case Scenario::Complexity:
    case Scenario::Misspecification: return x.array().cos().matrix();
    case Scenario::VarMisspec: return (-6.0 * (-x.array()).exp()).matrix();
    case Scenario::CorrMisspec: break;
  }
  return Eigen::VectorXd::Zero(x.size());
}

Eigen::VectorXd g0_of(Scenario s, const Eigen::VectorXd& x) {
  if (s == Scenario::CorrMisspec) return Eigen::VectorXd::Zero(x.size());
  return x.array().tanh().matrix();
}

}  // namespace

Simulated generate(const ScenarioSpec& spec, int rep) {
  spec.validate();
  Draw draw(derive_seed(spec.seed, static_cast<std::uint64_t>(rep)));
  const int n = spec.n;
  Simulated out;
  std::vector<Group> groups;
  groups.reserve(static_cast<std::size_t>(spec.I));

  Eigen::MatrixXd L_eps, L_xi, L_x;
  switch (spec.scenario) {
    case Scenario::Complexity:
      L_eps = chol(equicorrelation(n, 0.2));
      L_xi = chol(equicorrelation(n, 0.1));
      break;
    case Scenario::Misspecification:
      L_eps = chol(ar1_correlation(n, 0.2));
      L_x = chol(0.9 * Eigen::MatrixXd::Ones(n, n) + 0.1 * Eigen::MatrixXd::Identity(n, n));
      break;
    case Scenario::CorrMisspec:
      L_eps = chol(arma_covariance(ArmaSpec{{0.3, 0.6}, {-0.5}, n}));
      L_xi = chol(0.125 * Eigen::MatrixXd::Ones(n, n) + 0.875 * Eigen::MatrixXd::Identity(n, n));
      break;
    case Scenario::VarMisspec:
      L_eps = chol(equicorrelation(n, 0.2));
      break;
  }

  for (int i = 0; i < spec.I; ++i) {
    Eigen::VectorXd x, xi, eps;
    Eigen::MatrixXd Sigma;
    switch (spec.scenario) {
      case Scenario::Complexity: {
        x = draw.uniform(n, -5.0, 5.0);
        xi = L_xi * draw.normal(n);
        const Eigen::VectorXd sd = (2.0 + (spec.lambda * x.array()).cos()).matrix();
        eps = sd.cwiseProduct(L_eps * draw.normal(n));
        Sigma = sd.asDiagonal() * equicorrelation(n, 0.2) * sd.asDiagonal();
        break;
      }
      case Scenario::Misspecification: {
        x = L_x * draw.normal(n);
        const double p = x.mean() >= 0.0 ? 1.0 : 1.0 / spec.eta;
        const double zeta = draw.bernoulli(p) ? 1.0 / p : 0.0;
        xi = std::sqrt(zeta) * draw.normal(n);
        eps = std::sqrt(zeta) * (L_eps * draw.normal(n));
        Sigma = zeta * ar1_correlation(n, 0.2);
        break;
      }
      case Scenario::CorrMisspec: {
        xi = L_xi * draw.normal(n);
        eps = L_eps * draw.normal(n);
        Sigma = L_eps * L_eps.transpose();
        break;
      }
      case Scenario::VarMisspec: {
        x = draw.uniform(n, -2.0, 2.0);
        xi = 3.0 * draw.normal(n);
        const Eigen::VectorXd d = m0_of(spec.scenario, x) + xi;
        const Eigen::VectorXd sd = (2.0 + (d - 3.0 * x).array().tanh()).matrix();
        eps = sd.cwiseProduct(L_eps * draw.normal(n));
        Sigma = sd.asDiagonal() * equicorrelation(n, 0.2) * sd.asDiagonal();
        break;
      }
    }
    const bool has_x = spec.scenario != Scenario::CorrMisspec;
    if (!has_x) x = Eigen::VectorXd::Zero(n);
    Group g;
    g.d = m0_of(spec.scenario, x) + xi;
    g.y = spec.beta * g.d + g0_of(spec.scenario, x) + eps;
    g.x = has_x ? Eigen::MatrixXd(x) : Eigen::MatrixXd(n, 0);
    groups.push_back(std::move(g));
    out.xi.push_back(xi);
    out.eps.push_back(eps);
    out.sigma.push_back(Sigma);
  }
  const int d = spec.scenario == Scenario::CorrMisspec ? 0 : 1;
  out.data = GroupedDataset(std::move(groups), d);
  return out;
}

NuisanceSpec true_nuisance(const ScenarioSpec& spec) {
  NuisanceSpec ns;
  ns.kind = NuisanceKind::Known;
  const Scenario sc = spec.scenario;
  const double beta = spec.beta;
  auto col = [](const Eigen::MatrixXd& x) -> Eigen::VectorXd {
    return x.cols() > 0 ? Eigen::VectorXd(x.col(0)) : Eigen::VectorXd::Zero(x.rows());
  };
  ns.known_m = [sc, col](const Eigen::MatrixXd& x) { return m0_of(sc, col(x)); };
  ns.known_l = [sc, col, beta](const Eigen::MatrixXd& x) {
    const Eigen::VectorXd v = col(x);
    return Eigen::VectorXd(beta * m0_of(sc, v) + g0_of(sc, v));
  };
  return ns;
}

CorrelationFamily scenario_family(Scenario s) {
  CorrelationFamily f;
  f.kind = (s == Scenario::Misspecification || s == Scenario::CorrMisspec) ? CorrelationKind::AR1
                                                                            : CorrelationKind::Equicorrelated;
  return f;
}

MethodSpec oracle_method(const ScenarioSpec& spec) {
  if (spec.scenario != Scenario::Complexity)
    throw ConfigError("NoOracle", "oracle weights are only defined for the complexity scenario");
  MethodSpec m;
  m.name = "oracle";
  m.family = scenario_family(spec.scenario);
  m.weights.kind = WeightMethodKind::Fixed;
  m.weights.fixed.family = m.family;
  m.weights.fixed.family.theta = {rho_to_theta(CorrelationKind::Equicorrelated, 0.2), 0.0};
  const double lambda = spec.lambda;
  m.weights.fixed.s = std::make_shared<CallableS>([lambda](const Eigen::MatrixXd& x) -> Eigen::VectorXd {
    return (2.0 + (lambda * x.col(0).array()).cos()).inverse().matrix();
  });
  m.nuisance = true_nuisance(spec);
  return m;
}

BoostConfig scenario_boost(const ScenarioSpec& spec) {
  BoostConfig b;
  b.lambda_theta = 0.1;
  b.s_floor = 0.1;
  b.cv_folds = 2;
  switch (spec.scenario) {
    case Scenario::Complexity:
      b.step_mode = StepMode::Variable;
      b.lambda_lo = 0.001;
      b.lambda_hi = 10.0;
      b.shrinkage = 0.1;
      b.m_stop = 200;
      break;
    case Scenario::Misspecification:
      b.step_mode = StepMode::Fixed;
      b.lambda_s = 0.01;
      b.lambda_theta = 0.5;
      b.m_stop = 200;
      b.learner.tree = {2, 50};
      break;
    case Scenario::CorrMisspec:
      b.step_mode = StepMode::Fixed;
      b.lambda_s = 0.01;
      b.lambda_theta = 0.5;
      b.m_stop = 200;
      b.cv_folds = 0;
      break;
    case Scenario::VarMisspec:
      b.step_mode = StepMode::Fixed;
      b.lambda_s = 0.002;
      b.lambda_theta = 1.0;
      b.m_stop = 300;
      b.learner.tree = {1, 100};
      break;
  }
  return b;
}

std::vector<MethodSpec> default_methods(const ScenarioSpec& spec, const NuisanceSpec& nuisance) {
  const CorrelationFamily fam = scenario_family(spec.scenario);
  std::vector<MethodSpec> out;
  auto add = [&](const std::string& name, WeightMethodKind kind) {
    MethodSpec m;
    m.name = name;
    m.family = fam;
    m.nuisance = nuisance;
    m.weights.kind = kind;
    if (kind == WeightMethodKind::SandwichBoost) m.weights.boost = scenario_boost(spec);
    out.push_back(std::move(m));
  };
  add("unweighted", WeightMethodKind::Unweighted);
  add("ml", WeightMethodKind::HomoscedasticML);
  add("gee", WeightMethodKind::HomoscedasticGEE);
  if (spec.scenario != Scenario::CorrMisspec) add("het-gee", WeightMethodKind::HeteroscedasticGEE);
  add("sandwich-boost", WeightMethodKind::SandwichBoost);
  if (spec.scenario == Scenario::Complexity) out.push_back(oracle_method(spec));
  return out;
}

const MethodResult& ExperimentResult::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.name == name) return m;
  throw ConfigError("UnknownMethod", "no method named '" + name + "'");
}

namespace {

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  const auto R = static_cast<double>(v.size());
  const double mean = pairwise_sum(v) / R;
  if (v.size() < 2) return {mean, 0.0};
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  return {mean, std::sqrt(pairwise_sum(sq) / (R - 1.0) / R)};
}

}  // namespace

void summarise(ExperimentResult& r) {
  const double beta = r.spec.beta;
  auto sqerr = [beta](const MethodResult& m) {
    std::vector<double> e;
    for (double b : m.beta_hat) e.push_back((b - beta) * (b - beta));
    return e;
  };
  const MethodResult* ref = nullptr;
  for (const auto& m : r.methods)
    if (m.name == r.reference) ref = &m;
  const std::vector<double> ref_err = ref ? sqerr(*ref) : std::vector<double>{};
  const double ref_mse = ref ? pairwise_sum(ref_err) / static_cast<double>(ref_err.size()) : 0.0;
  for (auto& m : r.methods) {
    const std::vector<double> e = sqerr(m);
    const MeanSe ms = mean_se(e);
    m.mse = ms.mean;
    m.mse_se = ms.se;
    std::vector<double> cov(m.covered.begin(), m.covered.end());
    const MeanSe cs = mean_se(cov);
    m.coverage = cs.mean;
    m.coverage_se = std::sqrt(cs.mean * (1.0 - cs.mean) / static_cast<double>(cov.size()));
    m.rel_mse = ref_mse > 0.0 ? m.mse / ref_mse : 1.0;
    if (ref) {
      std::vector<double> diff(e.size());
      for (std::size_t i = 0; i < e.size(); ++i) diff[i] = e[i] - ref_err[i];
      const MeanSe ds = mean_se(diff);
      m.diff_vs_ref = ds.mean;
      m.diff_vs_ref_se = ds.se;
    }
  }
}

ExperimentResult run_experiment(const ScenarioSpec& spec, const std::vector<MethodSpec>& methods, int K,
                                double alpha, int threads, const std::string& reference) {
  spec.validate();
  if (methods.empty()) throw ConfigError("NoMethods", "at least one method is required");
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.spec = spec;
  res.K = K;
  res.alpha = alpha;
  res.reference = reference;
  if (res.reference.empty()) {
    res.reference = methods.front().name;
    for (const auto& m : methods)
      if (m.name == "unweighted") res.reference = m.name;
    for (const auto& m : methods)
      if (m.name == "oracle") res.reference = m.name;
  }
  const auto R = static_cast<std::size_t>(spec.reps);
  res.methods.resize(methods.size());
  for (std::size_t k = 0; k < methods.size(); ++k) {
    res.methods[k].name = methods[k].name;
    res.methods[k].beta_hat.assign(R, 0.0);
    res.methods[k].se.assign(R, 0.0);
    res.methods[k].covered.assign(R, 0);
  }

  parallel_for(spec.reps, threads, [&](int rep) {
    const Simulated sim = generate(spec, rep);
    const std::uint64_t fold_seed = derive_seed(derive_seed(spec.seed, static_cast<std::uint64_t>(rep)), 0x5EED);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      PlmOptions opt;
      opt.family = methods[k].family;
      opt.weights = methods[k].weights;
      opt.nuisance = methods[k].nuisance;
      opt.K = K;
      opt.S = 1;
      opt.alpha = alpha;
      opt.seed = fold_seed;
      opt.threads = 1;
      const EstimateReport rep_k = fit_plm(sim.data, opt);
      const auto r = static_cast<std::size_t>(rep);
      res.methods[k].beta_hat[r] = rep_k.beta_hat;
      res.methods[k].se[r] = std::sqrt(std::max(rep_k.v_hat, 0.0) / rep_k.n_obs);
      res.methods[k].covered[r] = (rep_k.ci_lower <= spec.beta && spec.beta <= rep_k.ci_upper) ? 1 : 0;
    }
  });
  summarise(res);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

std::string experiment_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "scenario,lambda,eta,n,groups,reps,method,mse,mse_se,rel_mse,coverage,coverage_se,diff_vs_ref,diff_vs_ref_se\n";
  for (const auto& m : r.methods) {
    os << to_string(r.spec.scenario) << ',' << num(r.spec.lambda) << ',' << num(r.spec.eta) << ',' << r.spec.n << ','
       << r.spec.I << ',' << r.spec.reps << ',' << m.name << ',' << num(m.mse) << ',' << num(m.mse_se) << ','
       << num(m.rel_mse) << ',' << num(m.coverage) << ',' << num(m.coverage_se) << ',' << num(m.diff_vs_ref) << ','
       << num(m.diff_vs_ref_se) << '\n';
  }
  return os.str();
}

}  // namespace sboost
