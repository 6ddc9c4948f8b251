#include "sandboost/boosting.hpp"

#include <algorithm>
#include <cmath>

#include "sandboost/numeric.hpp"

namespace sboost {

void BoostedS::add(double step, std::shared_ptr<const Regressor> learner) {
  members_.push_back({step, std::move(learner)});
}

Eigen::VectorXd BoostedS::evaluate(const Eigen::MatrixXd& x) const { return evaluate_upto(x, size()); }

Eigen::VectorXd BoostedS::evaluate_upto(const Eigen::MatrixXd& x, int m) const {
  Eigen::VectorXd s = Eigen::VectorXd::Constant(x.rows(), init_);
  const int upto = std::min(m, size());
  for (int k = 0; k < upto; ++k) {
    const Member& mem = members_[static_cast<std::size_t>(k)];
    s = (s - mem.step * mem.learner->predict(x)).cwiseMax(floor_);
  }
  return s;
}

void BoostedS::truncate(int m) {
  if (m < size()) members_.resize(static_cast<std::size_t>(m));
}

namespace {

const ScalarSandwichObjective& default_objective() {
  static const ScalarSandwichObjective obj(ScorePath::Fast);
  return obj;
}

Eigen::MatrixXd stack_rows(const std::vector<Eigen::MatrixXd>& xs, int d) {
  Eigen::Index n = 0;
  for (const auto& x : xs) n += x.rows();
  Eigen::MatrixXd out(n, d);
  Eigen::Index r = 0;
  for (const auto& x : xs) {
    if (x.rows() > 0) out.middleRows(r, x.rows()) = x;
    r += x.rows();
  }
  return out;
}

Eigen::VectorXd stack(const std::vector<Eigen::VectorXd>& vs) {
  Eigen::Index n = 0;
  for (const auto& v : vs) n += v.size();
  Eigen::VectorXd out(n);
  Eigen::Index r = 0;
  for (const auto& v : vs) {
    out.segment(r, v.size()) = v;
    r += v.size();
  }
  return out;
}

SValues unstack(const Eigen::VectorXd& flat, const std::vector<Eigen::VectorXd>& like) {
  SValues out;
  out.reserve(like.size());
  Eigen::Index r = 0;
  for (const auto& v : like) {
    out.push_back(flat.segment(r, v.size()));
    r += v.size();
  }
  return out;
}

SValues axpy_floor(const SValues& s, double step, const SValues& u, double floor) {
  SValues out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - step * u[i]).cwiseMax(floor);
  return out;
}

SValues axpy(const SValues& s, double step, const SValues& u) {
  SValues out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] - step * u[i];
  return out;
}

void validate(const BoostConfig& cfg) {
  if (cfg.m_stop < 0) throw ConfigError("InvalidBoostConfig", "m_stop must be non-negative");
  if (!(cfg.lambda_s > 0.0) || !(cfg.lambda_theta > 0.0))
    throw ConfigError("InvalidBoostConfig", "step sizes must be positive");
  if (!(cfg.s_floor > 0.0)) throw ConfigError("InvalidBoostConfig", "s_floor must be positive");
  if (!(cfg.lambda_lo > 0.0) || !(cfg.lambda_hi >= cfg.lambda_lo))
    throw ConfigError("InvalidBoostConfig", "lambda_interval must be a positive closed interval");
  if (!(cfg.shrinkage > 0.0) || cfg.shrinkage > 1.0)
    throw ConfigError("InvalidBoostConfig", "shrinkage must lie in (0,1]");
}

}  // namespace

double variable_step(const std::function<double(double)>& g, double lo, double hi, double h) {
  const double gp = g(h), g0 = g(0.0), gm = g(-h);
  const double d1 = (gp - gm) / (2.0 * h);
  const double d2 = (gp - 2.0 * g0 + gm) / (h * h);
  if (!(d2 > 0.0) || !std::isfinite(d1)) return hi;
  return std::clamp(-d1 / d2, lo, hi);
}

double variable_step(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& family,
                     const SValues& direction, double lo, double hi, const Objective* objective) {
  const Objective& obj = objective ? *objective : default_objective();
  double umax = 0.0, smax = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (direction[i].size() > 0) umax = std::max(umax, direction[i].cwiseAbs().maxCoeff());
    if (s[i].size() > 0) smax = std::max(smax, s[i].cwiseAbs().maxCoeff());
  }
  if (umax == 0.0) return hi;
  const double h = 1e-4 * std::max(smax, 1e-8) / umax;
  return variable_step([&](double lam) { return obj.loss(rb, axpy(s, lam, direction), family); }, lo,
                       hi, h);
}

BoostResult boost(const ResidualBundle& rb, const CorrelationFamily& family, const BoostConfig& cfg,
                  int m_stop, const Objective* objective, const ResidualBundle* held_out,
                  std::vector<double>* held_out_curve) {
  validate(cfg);
  rb.validate();
  const Objective& obj = objective ? *objective : default_objective();
  const int d = rb.dim();
  const Eigen::MatrixXd X = stack_rows(rb.x, d);
  const double N = rb.n_obs();

  BoostResult res;
  res.ensemble = std::make_shared<BoostedS>(1.0, cfg.s_floor);
  CorrelationFamily fam = family;
  fam.theta = {0.0, 0.0};
  SValues s = unit_s(rb);

  SValues s_ho;
  Eigen::MatrixXd X_ho;
  if (held_out) {
    X_ho = stack_rows(held_out->x, d);
    held_out->validate();
    s_ho = unit_s(*held_out);
    if (held_out_curve) held_out_curve->push_back(obj.loss(*held_out, s_ho, fam));
  }

  for (int m = 0; m < m_stop; ++m) {
    const SandwichScores sc = obj.scores(rb, s, fam);
    if (!std::isfinite(sc.loss)) throw NumericError("NonFiniteLoss", "sandwich loss became non-finite");
    res.trace.loss.push_back(sc.loss);
    res.trace.theta.push_back(fam.theta);

    // Per-observation targets are N * U / L: gradients of log L scaled to O(1).
    const double scale = sc.loss > 0.0 ? N / sc.loss : 0.0;
    Eigen::VectorXd targets = stack(sc.s) * scale;
    if (!targets.allFinite()) throw NumericError("NonFiniteLoss", "non-finite s-scores");
    auto learner = fit_base_learner(X, targets, cfg.learner);
    const Eigen::VectorXd pred = learner->predict(X);
    const SValues u = unstack(pred, s);

    double step = cfg.lambda_s;
    if (cfg.step_mode == StepMode::Variable) {
      step = cfg.shrinkage * variable_step(rb, s, fam, u, cfg.lambda_lo, cfg.lambda_hi, &obj);
    }
    std::array<double, 2> raw = fam.theta;
    const double tscale = sc.loss > 0.0 ? 1.0 / sc.loss : 0.0;
    for (int p = 0; p < fam.n_params(); ++p)
      raw[static_cast<std::size_t>(p)] -= cfg.lambda_theta * sc.theta[static_cast<std::size_t>(p)] * tscale;

    s = axpy_floor(s, step, u, cfg.s_floor);
    fam.theta = project_theta(fam, raw);
    res.ensemble->add(step, learner);
    res.trace.steps.push_back(step);

    if (held_out) {
      const Eigen::VectorXd pho = learner->predict(X_ho);
      s_ho = axpy_floor(s_ho, step, unstack(pho, s_ho), cfg.s_floor);
      if (held_out_curve) held_out_curve->push_back(obj.loss(*held_out, s_ho, fam));
    }
  }
  res.trace.loss.push_back(obj.loss(rb, s, fam));
  res.trace.theta.push_back(fam.theta);
  res.trace.m_stop = m_stop;
  res.model.s = res.ensemble;
  res.model.family = fam;
  res.model.s_floor = cfg.s_floor;
  return res;
}

int select_m_stop(const ResidualBundle& rb, const CorrelationFamily& family, const BoostConfig& cfg,
                  const Objective* objective, std::vector<double>* curve) {
  validate(cfg);
  if (cfg.cv_folds < 2) throw ConfigError("InvalidBoostConfig", "cv_folds must be at least 2");
  const FoldPartition fp = partition_folds(rb.n_groups(), cfg.cv_folds, derive_seed(cfg.seed, 0xC0FFEE));
  std::vector<double> mean(static_cast<std::size_t>(cfg.m_stop + 1), 0.0);
  for (int k = 0; k < fp.K; ++k) {
    const ResidualBundle train = rb.subset(fp.complement(k));
    const ResidualBundle test = rb.subset(fp.members()[static_cast<std::size_t>(k)]);
    std::vector<double> c;
    boost(train, family, cfg, cfg.m_stop, objective, &test, &c);
    for (std::size_t m = 0; m < mean.size(); ++m) mean[m] += c[m] / fp.K;
  }
  int best = 0;
  for (std::size_t m = 1; m < mean.size(); ++m)
    if (mean[m] < mean[static_cast<std::size_t>(best)]) best = static_cast<int>(m);
  if (curve) *curve = mean;
  return best;
}

BoostResult boost_cv(const ResidualBundle& rb, const CorrelationFamily& family, const BoostConfig& cfg,
                     const Objective* objective) {
  std::vector<double> curve;
  int m = cfg.m_stop;
  if (cfg.cv_folds >= 2) m = select_m_stop(rb, family, cfg, objective, &curve);
  BoostResult r = boost(rb, family, cfg, m, objective);
  r.trace.cv_curve = std::move(curve);
  return r;
}

}  // namespace sboost
