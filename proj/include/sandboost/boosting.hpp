#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "sandboost/learners.hpp"
#include "sandboost/sandwich.hpp"

namespace sboost {

enum class StepMode { Fixed, Variable };

struct BoostConfig {
  int m_stop = 100;  // iteration budget (upper end of the CV search)
  double lambda_s = 0.5;
  double lambda_theta = 0.1;
  StepMode step_mode = StepMode::Variable;
  double lambda_lo = 0.01;
  double lambda_hi = 1.0;
  double shrinkage = 0.1;
  double s_floor = 0.1;
  int cv_folds = 2;  // < 2 disables m_stop selection
  BaseLearnerSpec learner;
  std::uint64_t seed = 1;
};

/// s(x) = s_1 followed by the sequential floored updates
/// s <- max(s - step_m u_m(x), floor).
class BoostedS final : public SFunction {
public:
  BoostedS(double init, double floor) : init_(init), floor_(floor) {}
  void add(double step, std::shared_ptr<const Regressor> learner);
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& x) const override;
  Eigen::VectorXd evaluate_upto(const Eigen::MatrixXd& x, int m) const;
  int size() const { return static_cast<int>(members_.size()); }
  void truncate(int m);

private:
  struct Member {
    double step;
    std::shared_ptr<const Regressor> learner;
  };
  double init_;
  double floor_;
  std::vector<Member> members_;
};

struct BoostTrace {
  std::vector<double> loss;                  // training loss at iterations 0..m_stop
  std::vector<std::array<double, 2>> theta;  // theta at iterations 0..m_stop
  std::vector<double> steps;                 // s step applied at each iteration
  int m_stop = 0;
  std::vector<double> cv_curve;              // mean held-out loss per iteration, if CV ran
};

struct BoostResult {
  WeightModel model;
  std::shared_ptr<BoostedS> ensemble;
  BoostTrace trace;
};

/// Runs m_stop iterations of sandwich boosting starting from s = 1, theta = 0.
/// If `held_out` is given, its loss after each iteration is appended to
/// `held_out_curve` (entry 0 is the starting point).
BoostResult boost(const ResidualBundle& rb, const CorrelationFamily& family, const BoostConfig& cfg,
                  int m_stop, const Objective* objective = nullptr,
                  const ResidualBundle* held_out = nullptr,
                  std::vector<double>* held_out_curve = nullptr);

/// Cross-validated iteration count in [0, cfg.m_stop]; ties go to the smallest m.
int select_m_stop(const ResidualBundle& rb, const CorrelationFamily& family, const BoostConfig& cfg,
                  const Objective* objective = nullptr, std::vector<double>* curve = nullptr);

/// select_m_stop (when cfg.cv_folds >= 2) followed by boost.
BoostResult boost_cv(const ResidualBundle& rb, const CorrelationFamily& family, const BoostConfig& cfg,
                     const Objective* objective = nullptr);

/// Vertex of the second-order expansion of g around 0, from central
/// differences with step h, clamped into [lo, hi]; hi if g'' <= 0.
double variable_step(const std::function<double(double)>& g, double lo, double hi, double h);

double variable_step(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& family,
                     const SValues& direction, double lo, double hi,
                     const Objective* objective = nullptr);

}  // namespace sboost
