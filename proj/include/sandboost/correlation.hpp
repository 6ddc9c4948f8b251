#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sboost {

enum class CorrelationKind { Equicorrelated, AR1, Nested };

CorrelationKind parse_correlation(const std::string& name);
std::string to_string(CorrelationKind kind);

/// A working-correlation family with its current parameter. Only theta[0] is
/// used by the one-parameter families.
struct CorrelationFamily {
  CorrelationKind kind = CorrelationKind::Equicorrelated;
  std::array<double, 2> theta{0.0, 0.0};
  double theta_max = 1e6;
  double ar_margin = 0.01;

  int n_params() const { return kind == CorrelationKind::Nested ? 2 : 1; }
  double lower(int) const { return 0.0; }
  double upper(int) const { return kind == CorrelationKind::AR1 ? 1.0 - ar_margin : theta_max; }
  CorrelationFamily with_theta(std::array<double, 2> t) const {
    CorrelationFamily f = *this;
    f.theta = t;
    return f;
  }
};

/// Group shape: size plus subgroup sizes (only used by the nested family).
struct GroupLayout {
  int n = 1;
  std::vector<int> subgroups;  // empty means a single subgroup of size n

  static GroupLayout flat(int n) { return {n, {}}; }
};

/// Closed-form scaled inverse of the working correlation for one group.
/// Precomputes the per-group constants so that entries cost O(1) and
/// matrix-vector products cost O(n).
class InverseView {
public:
  InverseView(const CorrelationFamily& family, const GroupLayout& layout);

  int size() const { return n_; }
  double entry(int j, int k) const;
  std::array<double, 2> dentry(int j, int k) const;

  /// out = C v with C the closed-form scaled inverse.
  void apply(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::VectorXd> out) const;
  /// out = (dC / dtheta_p) v.
  void apply_d(int p, const Eigen::Ref<const Eigen::VectorXd>& v,
               Eigen::Ref<Eigen::VectorXd> out) const;

  Eigen::MatrixXd matrix() const;
  Eigen::MatrixXd dmatrix(int p) const;

private:
  CorrelationKind kind_;
  double t1_ = 0.0, t2_ = 0.0;
  int n_ = 0;
  // nested
  std::vector<int> sub_of_;
  std::vector<int> sizes_;
  Eigen::MatrixXd A_, dA1_, dA2_;
};

double inverse_entry(const CorrelationFamily& family, const GroupLayout& layout, int j, int k);
std::array<double, 2> dtheta_inverse_entry(const CorrelationFamily& family,
                                           const GroupLayout& layout, int j, int k);
Eigen::MatrixXd dense_correlation(const CorrelationFamily& family, const GroupLayout& layout);

std::array<double, 2> project_theta(const CorrelationFamily& family, std::array<double, 2> raw);

/// (rho1, rho2) -> (theta1, theta2); requires 0 <= rho2 <= rho1 < 1.
std::pair<double, double> nested_reparam(double rho1, double rho2);
std::pair<double, double> nested_rho(double theta1, double theta2);

/// Correlation value for the one-parameter families and its inverse map.
double theta_to_rho(CorrelationKind kind, double theta);
double rho_to_theta(CorrelationKind kind, double rho);

}  // namespace sboost
