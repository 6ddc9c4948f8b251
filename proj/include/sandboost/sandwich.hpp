#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sandboost/correlation.hpp"
#include "sandboost/grouped_data.hpp"

namespace sboost {

/// Per-group vectors of s-values (inverse working standard deviations).
using SValues = std::vector<Eigen::VectorXd>;

/// An inverse-standard-deviation function evaluated row-wise on covariates.
class SFunction {
public:
  virtual ~SFunction() = default;
  virtual Eigen::VectorXd evaluate(const Eigen::MatrixXd& x) const = 0;
};

class ConstantS final : public SFunction {
public:
  explicit ConstantS(double value) : value_(value) {}
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& x) const override {
    return Eigen::VectorXd::Constant(x.rows(), value_);
  }

private:
  double value_;
};

class CallableS final : public SFunction {
public:
  using Fn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
  explicit CallableS(Fn fn) : fn_(std::move(fn)) {}
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& x) const override { return fn_(x); }

private:
  Fn fn_;
};

/// W(X_i) = D_s(X_i) C(X_i) D_s(X_i) with C the closed-form scaled inverse.
struct WeightModel {
  std::shared_ptr<const SFunction> s = std::make_shared<ConstantS>(1.0);
  CorrelationFamily family;
  double s_floor = 0.1;

  Eigen::VectorXd s_at(const Eigen::MatrixXd& x) const { return s->evaluate(x); }
  SValues s_values(const std::vector<Eigen::MatrixXd>& xs) const;
  Eigen::MatrixXd weight_matrix(const Eigen::MatrixXd& x, const GroupLayout& layout) const;
  /// u' W v in O(n).
  double bilinear(const Eigen::MatrixXd& x, const GroupLayout& layout, const Eigen::VectorXd& u,
                  const Eigen::VectorXd& v) const;
};

GroupLayout layout_of(const ResidualBundle& rb, int i);
SValues unit_s(const ResidualBundle& rb);

enum class ScorePath { Generic, Fast };

struct LossParts {
  double b = 0.0;
  Eigen::VectorXd c;
  double sum_c2 = 0.0;
  double loss = 0.0;
};

struct SandwichScores {
  std::vector<Eigen::VectorXd> s;  // per-observation s-scores, grouped
  std::array<double, 2> theta{0.0, 0.0};
  double loss = 0.0;
};

/// N (sum xi'W xi)^-2 sum (xi'W eps)^2.
LossParts sandwich_parts(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& family);
double sandwich_loss(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& family);
double sandwich_loss(const ResidualBundle& rb, const WeightModel& w);

/// Exact gradients of sandwich_loss with respect to each s_ij and to theta.
SandwichScores sandwich_scores(const ResidualBundle& rb, const SValues& s,
                               const CorrelationFamily& family, ScorePath path);
std::vector<Eigen::VectorXd> s_scores_generic(const ResidualBundle& rb, const SValues& s,
                                              const CorrelationFamily& family);
std::vector<Eigen::VectorXd> s_scores_fast(const ResidualBundle& rb, const SValues& s,
                                           const CorrelationFamily& family);
std::array<double, 2> theta_score(const ResidualBundle& rb, const SValues& s,
                                  const CorrelationFamily& family, ScorePath path = ScorePath::Fast);

using CovarianceInitializer =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd& x, const GroupLayout& layout)>;

/// Replaces xi_i, eps_i by Sigma_i^{-1/2} xi_i, Sigma_i^{-1/2} eps_i.
ResidualBundle transform_residuals_by_initializer(const ResidualBundle& rb,
                                                  const CovarianceInitializer& sigma_init);

/// Basis functions phi_1..phi_L of the covariate row.
struct BasisSet {
  std::vector<std::function<double(const Eigen::RowVectorXd&)>> phi;
  std::vector<std::string> names;

  int size() const { return static_cast<int>(phi.size()); }
  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& x) const;  // n x L

  static BasisSet constant();
  /// {1, x_c, x_c^2, ..., x_c^degree}.
  static BasisSet polynomial(int degree, int column);
};

/// Empirical mean of phi(x) phi(x)' over all rows.
Eigen::MatrixXd gram_matrix(const BasisSet& basis, const std::vector<Eigen::MatrixXd>& xs);

struct GeneralizedParts {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::vector<Eigen::VectorXd> v;
  double loss = 0.0;
};

/// N tr(Phi A^-1 B A^-1).
GeneralizedParts generalized_parts(const ResidualBundle& rb, const SValues& s,
                                   const CorrelationFamily& family, const BasisSet& basis,
                                   const Eigen::MatrixXd& gram);
double generalized_loss(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& family,
                        const BasisSet& basis, const Eigen::MatrixXd& gram);
SandwichScores generalized_scores(const ResidualBundle& rb, const SValues& s,
                                  const CorrelationFamily& family, const BasisSet& basis,
                                  const Eigen::MatrixXd& gram, ScorePath path);

/// Throws SingularDesign if A is not safely invertible (condition > 1e12).
void check_invertible(const Eigen::MatrixXd& A);

/// Loss/score provider used by the boosting engine.
class Objective {
public:
  virtual ~Objective() = default;
  virtual double loss(const ResidualBundle& rb, const SValues& s,
                      const CorrelationFamily& family) const = 0;
  virtual SandwichScores scores(const ResidualBundle& rb, const SValues& s,
                                const CorrelationFamily& family) const = 0;
};

class ScalarSandwichObjective final : public Objective {
public:
  explicit ScalarSandwichObjective(ScorePath path = ScorePath::Fast) : path_(path) {}
  double loss(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& f) const override {
    return sandwich_loss(rb, s, f);
  }
  SandwichScores scores(const ResidualBundle& rb, const SValues& s,
                        const CorrelationFamily& f) const override {
    return sandwich_scores(rb, s, f, path_);
  }

private:
  ScorePath path_;
};

class GeneralizedSandwichObjective final : public Objective {
public:
  GeneralizedSandwichObjective(BasisSet basis, Eigen::MatrixXd gram, ScorePath path = ScorePath::Fast)
      : basis_(std::move(basis)), gram_(std::move(gram)), path_(path) {}
  double loss(const ResidualBundle& rb, const SValues& s, const CorrelationFamily& f) const override {
    return generalized_loss(rb, s, f, basis_, gram_);
  }
  SandwichScores scores(const ResidualBundle& rb, const SValues& s,
                        const CorrelationFamily& f) const override {
    return generalized_scores(rb, s, f, basis_, gram_, path_);
  }

private:
  BasisSet basis_;
  Eigen::MatrixXd gram_;
  ScorePath path_;
};

}  // namespace sboost
