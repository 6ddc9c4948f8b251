#include "sandboost/plm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "sandboost/numeric.hpp"

namespace sboost {

NuisanceKind parse_nuisance(const std::string& name) {
  if (name == "l2boost") return NuisanceKind::L2Boost;
  if (name == "knn") return NuisanceKind::Knn;
  if (name == "mean") return NuisanceKind::Mean;
  if (name == "zero") return NuisanceKind::Zero;
  throw ConfigError("UnknownNuisance", "unknown nuisance regressor '" + name + "'");
}

std::string to_string(NuisanceKind kind) {
  switch (kind) {
    case NuisanceKind::L2Boost: return "l2boost";
    case NuisanceKind::Knn: return "knn";
    case NuisanceKind::Mean: return "mean";
    case NuisanceKind::Zero: return "zero";
    case NuisanceKind::Known: return "known";
  }
  return "?";
}

namespace {

class FunctionRegressor final : public Regressor {
public:
  explicit FunctionRegressor(std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> fn) : fn_(std::move(fn)) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override { return fn_(x); }

private:
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> fn_;
};

}  // namespace

std::shared_ptr<const Regressor> fit_nuisance(const Eigen::MatrixXd& x, const Eigen::VectorXd& target,
                                              const NuisanceSpec& spec, char which) {
  if (target.size() == 0) throw DataError("EmptyTrainingSet", "no training observations for nuisance fit");
  switch (spec.kind) {
    case NuisanceKind::Mean: return std::make_shared<ConstantRegressor>(target.mean());
    case NuisanceKind::Zero: return std::make_shared<ConstantRegressor>(0.0);
    case NuisanceKind::Knn:
      if (x.cols() == 0) return std::make_shared<ConstantRegressor>(target.mean());
      return std::make_shared<KnnRegressor>(x, target, spec.knn_k);
    case NuisanceKind::L2Boost:
      return std::make_shared<L2Boost>(L2Boost::fit(x, target, spec.tree, spec.rounds, spec.shrinkage));
    case NuisanceKind::Known: {
      const auto& fn = which == 'd' ? spec.known_m : spec.known_l;
      if (!fn) throw ConfigError("InvalidNuisance", "known nuisance function not supplied");
      return std::make_shared<FunctionRegressor>(fn);
    }
  }
  throw ConfigError("UnknownNuisance", "unknown nuisance regressor");
}

WeightMethodKind parse_weight_method(const std::string& name) {
  if (name == "unweighted") return WeightMethodKind::Unweighted;
  if (name == "sandwich-boost") return WeightMethodKind::SandwichBoost;
  if (name == "ml") return WeightMethodKind::HomoscedasticML;
  if (name == "gee") return WeightMethodKind::HomoscedasticGEE;
  if (name == "het-gee") return WeightMethodKind::HeteroscedasticGEE;
  throw ConfigError("UnknownWeightMethod", "unknown weight method '" + name + "'");
}

std::string to_string(WeightMethodKind kind) {
  switch (kind) {
    case WeightMethodKind::Unweighted: return "unweighted";
    case WeightMethodKind::SandwichBoost: return "sandwich-boost";
    case WeightMethodKind::HomoscedasticML: return "ml";
    case WeightMethodKind::HomoscedasticGEE: return "gee";
    case WeightMethodKind::HeteroscedasticGEE: return "het-gee";
    case WeightMethodKind::Fixed: return "fixed";
  }
  return "?";
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  int err_index = n;
  std::exception_ptr err;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const int t = std::min(threads, n);
  for (int k = 0; k < t; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

WeightModel fit_weights(const ResidualBundle& rb, const CorrelationFamily& family,
                        const WeightMethod& method, std::uint64_t seed, FoldSummary* summary,
                        const Objective* objective) {
  WeightModel w;
  w.family = family;
  w.family.theta = {0.0, 0.0};
  int m_stop = 0;
  switch (method.kind) {
    case WeightMethodKind::Unweighted: break;
    case WeightMethodKind::Fixed: w = method.fixed; break;
    case WeightMethodKind::HomoscedasticML: w = fit_weights_ml(rb, family); break;
    case WeightMethodKind::HomoscedasticGEE:
      w = fit_weights_gee(rb, family, false, method.variance_smoother);
      break;
    case WeightMethodKind::HeteroscedasticGEE:
      w = fit_weights_gee(rb, family, true, method.variance_smoother);
      break;
    case WeightMethodKind::SandwichBoost: {
      BoostConfig cfg = method.boost;
      cfg.seed = seed;
      BoostResult r = boost_cv(rb, family, cfg, objective);
      w = r.model;
      m_stop = r.trace.m_stop;
      break;
    }
  }
  if (summary) {
    summary->theta = w.family.theta;
    summary->m_stop = m_stop;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& x : rb.x) {
      const Eigen::VectorXd sv = w.s_at(x);
      if (sv.size() == 0) continue;
      lo = std::min(lo, sv.minCoeff());
      hi = std::max(hi, sv.maxCoeff());
    }
    summary->s_min = lo;
    summary->s_max = hi;
  }
  return w;
}

namespace {

struct Residualized {
  std::vector<Eigen::VectorXd> ry, rd;
  std::vector<Eigen::MatrixXd> x;
  std::vector<std::vector<int>> subgroups;
};

Eigen::MatrixXd stack_x(const GroupedDataset& data, const std::vector<int>& idx) {
  Eigen::Index n = 0;
  for (int i : idx) n += data.group(i).size();
  Eigen::MatrixXd out(n, data.d_covariates());
  Eigen::Index r = 0;
  for (int i : idx) {
    const Group& g = data.group(i);
    if (data.d_covariates() > 0) out.middleRows(r, g.size()) = g.x;
    r += g.size();
  }
  return out;
}

Eigen::VectorXd stack_col(const GroupedDataset& data, const std::vector<int>& idx, bool response) {
  Eigen::Index n = 0;
  for (int i : idx) n += data.group(i).size();
  Eigen::VectorXd out(n);
  Eigen::Index r = 0;
  for (int i : idx) {
    const Group& g = data.group(i);
    out.segment(r, g.size()) = response ? g.y : g.d;
    r += g.size();
  }
  return out;
}

Residualized residualize(const GroupedDataset& data, const std::vector<int>& idx, const Regressor& l,
                         const Regressor& m) {
  Residualized out;
  for (int i : idx) {
    const Group& g = data.group(i);
    out.ry.push_back(g.y - l.predict(g.x));
    out.rd.push_back(g.d - m.predict(g.x));
    out.x.push_back(g.x);
    out.subgroups.push_back(subgroup_layout(g));
  }
  return out;
}

struct FoldWork {
  Residualized train, test;
};

FoldWork prepare_fold(const GroupedDataset& data, const std::vector<int>& comp, const std::vector<int>& test,
                      const NuisanceSpec& nuisance) {
  const Eigen::MatrixXd Xc = stack_x(data, comp);
  auto l = fit_nuisance(Xc, stack_col(data, comp, true), nuisance, 'y');
  auto m = fit_nuisance(Xc, stack_col(data, comp, false), nuisance, 'd');
  return {residualize(data, comp, *l, *m), residualize(data, test, *l, *m)};
}

struct WeightedProducts {
  double dd = 0.0, dy = 0.0, de = 0.0;
};

WeightedProducts weighted(const WeightModel& w, const Eigen::MatrixXd& x, const std::vector<int>& sub,
                          const Eigen::VectorXd& rd, const Eigen::VectorXd& ry, const Eigen::VectorXd& eps) {
  const Eigen::VectorXd sv = w.s_at(x);
  const GroupLayout layout{static_cast<int>(rd.size()), sub};
  InverseView view(w.family, layout);
  const Eigen::VectorXd a = sv.cwiseProduct(rd);
  Eigen::VectorXd Ca(a.size());
  view.apply(a, Ca);
  const Eigen::VectorXd WD = sv.cwiseProduct(Ca);
  return {WD.dot(rd), WD.dot(ry), WD.dot(eps)};
}

struct SplitResult {
  SplitEstimate est;
  std::vector<FoldSummary> folds;
};

SplitResult run_split(const GroupedDataset& data, const PlmOptions& opt, int split) {
  const std::uint64_t split_seed = derive_seed(opt.seed, static_cast<std::uint64_t>(split));
  const FoldPartition fp = partition_folds(data, opt.K, split_seed);
  const auto members = fp.members();
  std::vector<double> den_parts, num_parts, c2_parts;
  SplitResult out;
  for (int k = 0; k < fp.K; ++k) {
    const std::vector<int> comp = fp.complement(k);
    const std::vector<int>& test = members[static_cast<std::size_t>(k)];
    FoldWork fw = prepare_fold(data, comp, test, opt.nuisance);

    double sdd = 0.0, sdy = 0.0;
    for (std::size_t i = 0; i < fw.train.rd.size(); ++i) {
      sdd += fw.train.rd[i].squaredNorm();
      sdy += fw.train.rd[i].dot(fw.train.ry[i]);
    }
    if (!(sdd > 0.0)) throw NumericError("SingularDenominator", "treatment residuals vanish on a fold complement");
    const double beta_tilde = sdy / sdd;

    ResidualBundle rb;
    rb.xi = fw.train.rd;
    for (std::size_t i = 0; i < fw.train.rd.size(); ++i) rb.eps.push_back(fw.train.ry[i] - beta_tilde * fw.train.rd[i]);
    rb.x = fw.train.x;
    rb.subgroups = fw.train.subgroups;

    FoldSummary fs;
    fs.split = split;
    fs.fold = k;
    fs.beta_tilde = beta_tilde;
    const std::uint64_t fold_seed = derive_seed(split_seed, static_cast<std::uint64_t>(k) + 1000);
    const WeightModel w = fit_weights(rb, opt.family, opt.weights, fold_seed, &fs);
    out.folds.push_back(fs);

    for (std::size_t i = 0; i < fw.test.rd.size(); ++i) {
      const Eigen::VectorXd eps = fw.test.ry[i] - beta_tilde * fw.test.rd[i];
      const WeightedProducts wp =
          weighted(w, fw.test.x[i], fw.test.subgroups[i], fw.test.rd[i], fw.test.ry[i], eps);
      den_parts.push_back(wp.dd);
      num_parts.push_back(wp.dy);
      c2_parts.push_back(wp.de * wp.de);
    }
  }
  const double den = pairwise_sum(den_parts);
  if (!(std::abs(den) > 1e-300) || !std::isfinite(den))
    throw NumericError("SingularDenominator", "weighted treatment residual sum of squares vanishes");
  const double N = data.n_obs();
  out.est.beta = pairwise_sum(num_parts) / den;
  out.est.v_hat = N * pairwise_sum(c2_parts) / (den * den);
  return out;
}

void validate(const PlmOptions& opt, const GroupedDataset& data) {
  if (opt.K < 2) throw ConfigError("InvalidFolds", "K must be at least 2");
  if (opt.S < 1) throw ConfigError("InvalidSplits", "S must be at least 1");
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw ConfigError("InvalidAlpha", "alpha must lie in (0,1)");
  if (opt.K > data.n_groups())
    throw DataError("TooFewGroups", "fewer groups than folds");
  if (data.d_covariates() == 0 &&
      (opt.nuisance.kind == NuisanceKind::Knn))
    throw ConfigError("InvalidNuisance", "knn nuisance requires covariates");
}

}  // namespace

EstimateReport fit_plm(const GroupedDataset& data, const PlmOptions& opt) {
  validate(opt, data);
  std::vector<SplitResult> splits(static_cast<std::size_t>(opt.S));
  parallel_for(opt.S, opt.threads, [&](int s) { splits[static_cast<std::size_t>(s)] = run_split(data, opt, s); });

  EstimateReport rep;
  rep.alpha = opt.alpha;
  rep.n_groups = data.n_groups();
  rep.n_obs = data.n_obs();
  rep.family = to_string(opt.family.kind);
  rep.weight_method = to_string(opt.weights.kind);
  std::vector<double> betas;
  for (const auto& s : splits) {
    rep.per_split.push_back(s.est);
    betas.push_back(s.est.beta);
    rep.folds.insert(rep.folds.end(), s.folds.begin(), s.folds.end());
  }
  rep.beta_hat = lower_median(betas);
  std::vector<double> vs;
  for (const auto& s : splits) vs.push_back(s.est.v_hat + (rep.beta_hat - s.est.beta) * (rep.beta_hat - s.est.beta));
  rep.v_hat = opt.S == 1 ? splits.front().est.v_hat : lower_median(vs);
  const double half = std::sqrt(rep.v_hat / rep.n_obs) * normal_quantile(1.0 - opt.alpha / 2.0);
  rep.ci_lower = rep.beta_hat - half;
  rep.ci_upper = rep.beta_hat + half;
  if (rep.v_hat <= 0.0) rep.flags.push_back("zero_variance_exact_fit");
  return rep;
}

}  // namespace sboost
