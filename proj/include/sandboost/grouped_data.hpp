#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sboost {

/// One group (cluster) of observations. Row j of `x` is the covariate row of
/// observation j; `subgroup_sizes` is empty unless a nested layout was given.
struct Group {
  Eigen::VectorXd y;
  Eigen::VectorXd d;
  Eigen::MatrixXd x;
  std::vector<int> subgroup_sizes;

  int size() const { return static_cast<int>(y.size()); }
};

class GroupedDataset {
public:
  GroupedDataset() = default;
  /// Validates all invariants; throws DataError on violation.
  GroupedDataset(std::vector<Group> groups, int d_covariates,
                 std::vector<std::string> ids = {});

  const std::vector<Group>& groups() const { return groups_; }
  const Group& group(int i) const { return groups_[static_cast<std::size_t>(i)]; }
  const std::vector<std::string>& ids() const { return ids_; }
  int n_groups() const { return static_cast<int>(groups_.size()); }
  int n_obs() const { return n_obs_; }
  int d_covariates() const { return d_; }

  /// Dataset restricted to the listed groups, in the listed order.
  GroupedDataset subset(const std::vector<int>& group_indices) const;

private:
  std::vector<Group> groups_;
  std::vector<std::string> ids_;
  int d_ = 0;
  int n_obs_ = 0;
};

struct CsvSchema {
  std::string group_col;
  std::string y_col;
  std::string d_col;
  std::vector<std::string> x_cols;
  std::string subgroup_col;  // optional
};

GroupedDataset load_csv(const std::string& path, const CsvSchema& schema);
GroupedDataset parse_csv(const std::string& text, const CsvSchema& schema);

/// Writes columns group,y,d,x1..xd[,subgroup] with shortest round-trip decimals.
std::string to_csv(const GroupedDataset& data, CsvSchema* schema_out = nullptr);
void write_csv(const GroupedDataset& data, const std::string& path);

struct FoldPartition {
  std::vector<int> assignment;  // group index -> fold in [0, K)
  int K = 0;

  std::vector<std::vector<int>> members() const;
  std::vector<int> complement(int fold) const;
};

/// Shuffle group indices with the seed, then deal them round-robin into K folds.
FoldPartition partition_folds(int n_groups, int K, std::uint64_t seed);
FoldPartition partition_folds(const GroupedDataset& data, int K, std::uint64_t seed);

std::vector<int> subgroup_layout(const Group& g);

/// Per-group error estimates (xi, eps) together with the covariates and
/// subgroup layouts they refer to.
struct ResidualBundle {
  std::vector<Eigen::VectorXd> xi;
  std::vector<Eigen::VectorXd> eps;
  std::vector<Eigen::MatrixXd> x;
  std::vector<std::vector<int>> subgroups;

  int n_groups() const { return static_cast<int>(xi.size()); }
  int n_obs() const;
  int dim() const { return x.empty() ? 0 : static_cast<int>(x.front().cols()); }
  void validate() const;
  ResidualBundle subset(const std::vector<int>& group_indices) const;
};

/// Derives a 64-bit seed from a master seed and a counter (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

}  // namespace sboost
