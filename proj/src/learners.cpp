#include "sandboost/learners.hpp"

#include <algorithm>
#include <numeric>

#include "sandboost/numeric.hpp"

namespace sboost {

namespace {

struct Builder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  TreeConfig cfg;
  std::vector<RegressionTree::Node>& nodes;

  int build(std::vector<int>& idx, int depth) {
    const int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    double sum = 0.0;
    for (int i : idx) sum += y(i);
    const auto n = static_cast<double>(idx.size());
    nodes[static_cast<std::size_t>(node_id)].value = sum / n;
    nodes[static_cast<std::size_t>(node_id)].depth = depth;
    const int n_i = static_cast<int>(idx.size());
    if (depth >= cfg.max_depth || n_i < 2 * cfg.min_leaf) return node_id;

    double best_gain = 0.0;
    int best_f = -1;
    double best_thr = 0.0;
    const double base = sum * sum / n;
    double sse_scale = 0.0;
    for (int i : idx) sse_scale += y(i) * y(i);
    std::vector<int> order(idx);
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return x(a, f) < x(b, f); });
      double left = 0.0;
      for (int p = 1; p < n_i; ++p) {
        left += y(order[static_cast<std::size_t>(p - 1)]);
        if (p < cfg.min_leaf || n_i - p < cfg.min_leaf) continue;
        const double xl = x(order[static_cast<std::size_t>(p - 1)], f);
        const double xr = x(order[static_cast<std::size_t>(p)], f);
        if (!(xl < xr)) continue;
        const double right = sum - left;
        const double gain = left * left / p + right * right / (n_i - p) - base;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_thr = 0.5 * (xl + xr);
        }
      }
    }
    if (best_f < 0 || best_gain <= 1e-14 * sse_scale) return node_id;

    std::vector<int> li, ri;
    for (int i : idx) (x(i, best_f) <= best_thr ? li : ri).push_back(i);
    const int l = build(li, depth + 1);
    const int r = build(ri, depth + 1);
    auto& nd = nodes[static_cast<std::size_t>(node_id)];
    nd.feature = best_f;
    nd.threshold = best_thr;
    nd.left = l;
    nd.right = r;
    return node_id;
  }
};

}  // namespace

RegressionTree RegressionTree::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const TreeConfig& cfg) {
  if (y.size() < 1) throw ConfigError("EmptyInput", "cannot fit a tree to zero points");
  if (x.rows() != y.size()) throw DataError("LengthMismatch", "covariate and target lengths differ");
  if (cfg.max_depth < 0 || cfg.min_leaf < 1) throw ConfigError("InvalidLearner", "invalid tree configuration");
  RegressionTree t;
  std::vector<int> idx(static_cast<std::size_t>(y.size()));
  std::iota(idx.begin(), idx.end(), 0);
  Builder b{x, y, cfg, t.nodes_};
  b.build(idx, 0);
  return t;
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int k = 0;
  while (nodes_[static_cast<std::size_t>(k)].feature >= 0) {
    const Node& nd = nodes_[static_cast<std::size_t>(k)];
    k = row(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return nodes_[static_cast<std::size_t>(k)].value;
}

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict_row(x.row(i));
  return out;
}

int RegressionTree::n_leaves() const {
  int c = 0;
  for (const auto& nd : nodes_) c += nd.feature < 0;
  return c;
}

int RegressionTree::depth() const {
  int d = 0;
  for (const auto& nd : nodes_) d = std::max(d, nd.depth);
  return d;
}

KnnRegressor::KnnRegressor(Eigen::MatrixXd x, Eigen::VectorXd y, int k)
    : x_(std::move(x)), y_(std::move(y)), k_(k) {
  if (y_.size() < 1) throw ConfigError("EmptyInput", "cannot fit KNN to zero points");
  if (k_ < 1) throw ConfigError("InvalidLearner", "knn_k must be positive");
}

Eigen::VectorXd KnnRegressor::predict(const Eigen::MatrixXd& x) const {
  const auto n = y_.size();
  const auto k = std::min<Eigen::Index>(k_, n);
  Eigen::VectorXd out(x.rows());
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = {(x_.row(i) - x.row(r)).squaredNorm(), i};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    double s = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) s += y_(dist[static_cast<std::size_t>(i)].second);
    out(r) = s / static_cast<double>(k);
  }
  return out;
}

L2Boost L2Boost::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TreeConfig& tree,
                     int rounds, double shrinkage) {
  if (y.size() < 1) throw DataError("EmptyTrainingSet", "no training observations");
  if (rounds < 0 || !(shrinkage > 0.0)) throw ConfigError("InvalidLearner", "invalid boosting configuration");
  L2Boost m;
  m.init_ = y.mean();
  m.shrinkage_ = shrinkage;
  Eigen::VectorXd f = Eigen::VectorXd::Constant(y.size(), m.init_);
  for (int r = 0; r < rounds; ++r) {
    const Eigen::VectorXd resid = y - f;
    RegressionTree t = RegressionTree::fit(x, resid, tree);
    if (t.n_leaves() == 1 && std::abs(t.nodes().front().value) < 1e-15) break;
    f += shrinkage * t.predict(x);
    m.trees_.push_back(std::move(t));
  }
  return m;
}

Eigen::VectorXd L2Boost::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd f = Eigen::VectorXd::Constant(x.rows(), init_);
  for (const auto& t : trees_) f += shrinkage_ * t.predict(x);
  return f;
}

BaseLearnerKind parse_base_learner(const std::string& name) {
  if (name == "tree") return BaseLearnerKind::Tree;
  if (name == "knn") return BaseLearnerKind::Knn;
  throw ConfigError("UnknownLearner", "unknown base learner '" + name + "'");
}

std::string to_string(BaseLearnerKind kind) { return kind == BaseLearnerKind::Tree ? "tree" : "knn"; }

std::shared_ptr<const Regressor> fit_base_learner(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                                  const BaseLearnerSpec& spec) {
  if (y.size() < 1) throw ConfigError("EmptyInput", "base learner needs at least one point");
  if (spec.kind == BaseLearnerKind::Knn) return std::make_shared<KnnRegressor>(x, y, spec.knn_k);
  return std::make_shared<RegressionTree>(RegressionTree::fit(x, y, spec.tree));
}

}  // namespace sboost
