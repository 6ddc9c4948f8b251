#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sboost {

class Regressor {
public:
  virtual ~Regressor() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& x) const = 0;
};

struct TreeConfig {
  int max_depth = 2;
  int min_leaf = 10;
};

/// Greedy axis-aligned least-squares regression tree.
class RegressionTree final : public Regressor {
public:
  static RegressionTree fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TreeConfig& cfg);
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  int n_leaves() const;
  int depth() const;

  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;
    int depth = 0;
  };
  const std::vector<Node>& nodes() const { return nodes_; }

private:
  std::vector<Node> nodes_;
};

/// k-nearest-neighbour mean under Euclidean distance; ties go to lower index.
class KnnRegressor final : public Regressor {
public:
  KnnRegressor(Eigen::MatrixXd x, Eigen::VectorXd y, int k);
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;

private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  int k_;
};

class ConstantRegressor final : public Regressor {
public:
  explicit ConstantRegressor(double value) : value_(value) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    return Eigen::VectorXd::Constant(x.rows(), value_);
  }
  double value() const { return value_; }

private:
  double value_;
};

/// Squared-error gradient boosting with regression trees.
class L2Boost final : public Regressor {
public:
  static L2Boost fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TreeConfig& tree,
                     int rounds, double shrinkage);
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;
  int rounds() const { return static_cast<int>(trees_.size()); }

private:
  double init_ = 0.0;
  double shrinkage_ = 0.1;
  std::vector<RegressionTree> trees_;
};

enum class BaseLearnerKind { Tree, Knn };

struct BaseLearnerSpec {
  BaseLearnerKind kind = BaseLearnerKind::Tree;
  TreeConfig tree;
  int knn_k = 10;
};

BaseLearnerKind parse_base_learner(const std::string& name);
std::string to_string(BaseLearnerKind kind);

std::shared_ptr<const Regressor> fit_base_learner(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                                  const BaseLearnerSpec& spec);

}  // namespace sboost
