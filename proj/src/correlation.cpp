#include "sandboost/correlation.hpp"

#include <algorithm>
#include <cmath>

#include "sandboost/numeric.hpp"

namespace sboost {

CorrelationKind parse_correlation(const std::string& name) {
  if (name == "equicorrelated") return CorrelationKind::Equicorrelated;
  if (name == "ar1") return CorrelationKind::AR1;
  if (name == "nested") return CorrelationKind::Nested;
  throw ConfigError("UnknownCorrelation", "unknown correlation family '" + name + "'");
}

std::string to_string(CorrelationKind kind) {
  switch (kind) {
    case CorrelationKind::Equicorrelated: return "equicorrelated";
    case CorrelationKind::AR1: return "ar1";
    case CorrelationKind::Nested: return "nested";
  }
  return "?";
}

InverseView::InverseView(const CorrelationFamily& family, const GroupLayout& layout)
    : kind_(family.kind), t1_(family.theta[0]), t2_(family.theta[1]), n_(layout.n) {
  if (n_ < 1) throw DataError("InvalidLayout", "group size must be positive");
  if (kind_ != CorrelationKind::Nested) return;

  sizes_ = layout.subgroups.empty() ? std::vector<int>{n_} : layout.subgroups;
  sub_of_.resize(static_cast<std::size_t>(n_));
  int pos = 0;
  for (std::size_t m = 0; m < sizes_.size(); ++m)
    for (int t = 0; t < sizes_[m]; ++t) {
      if (pos >= n_) throw DataError("InvalidLayout", "subgroup sizes exceed group size");
      sub_of_[static_cast<std::size_t>(pos++)] = static_cast<int>(m);
    }
  if (pos != n_) throw DataError("InvalidLayout", "subgroup sizes do not sum to group size");

  const auto M = static_cast<Eigen::Index>(sizes_.size());
  Eigen::VectorXd nm(M), a(M), da(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    nm(m) = sizes_[static_cast<std::size_t>(m)];
    a(m) = 1.0 / (1.0 + t1_ * nm(m));
    da(m) = -nm(m) * a(m) * a(m);
  }
  const double S = nm.dot(a);
  const double dS = nm.dot(da);
  const double q = 1.0 + t2_ * S;
  const Eigen::MatrixXd aa = a * a.transpose();
  const Eigen::MatrixXd daa = da * a.transpose() + a * da.transpose();

  A_ = (t2_ / q) * aa;
  dA1_ = t2_ * (daa / q - (t2_ * dS / (q * q)) * aa);
  dA2_ = aa / (q * q);
  for (Eigen::Index m = 0; m < M; ++m) {
    A_(m, m) += t1_ * a(m);
    dA1_(m, m) += a(m) * a(m);
  }
}

double InverseView::entry(int j, int k) const {
  if (j < 0 || k < 0 || j >= n_ || k >= n_) throw ConfigError("IndexOutOfRange", "inverse entry index out of range");
  const double delta = (j == k) ? 1.0 : 0.0;
  switch (kind_) {
    case CorrelationKind::Equicorrelated:
      return delta - t1_ / (1.0 + t1_ * n_);
    case CorrelationKind::AR1: {
      if (n_ == 1) return 1.0 - t1_ * t1_;
      if (j == k) return (j > 0 && j < n_ - 1) ? 1.0 + t1_ * t1_ : 1.0;
      return std::abs(j - k) == 1 ? -t1_ : 0.0;
    }
    case CorrelationKind::Nested:
      return delta - A_(sub_of_[static_cast<std::size_t>(j)], sub_of_[static_cast<std::size_t>(k)]);
  }
  return 0.0;
}

std::array<double, 2> InverseView::dentry(int j, int k) const {
  if (j < 0 || k < 0 || j >= n_ || k >= n_) throw ConfigError("IndexOutOfRange", "inverse entry index out of range");
  switch (kind_) {
    case CorrelationKind::Equicorrelated: {
      const double q = 1.0 + t1_ * n_;
      return {-1.0 / (q * q), 0.0};
    }
    case CorrelationKind::AR1: {
      if (n_ == 1) return {-2.0 * t1_, 0.0};
      if (j == k) return {(j > 0 && j < n_ - 1) ? 2.0 * t1_ : 0.0, 0.0};
      return {std::abs(j - k) == 1 ? -1.0 : 0.0, 0.0};
    }
    case CorrelationKind::Nested: {
      const int a = sub_of_[static_cast<std::size_t>(j)], b = sub_of_[static_cast<std::size_t>(k)];
      return {-dA1_(a, b), -dA2_(a, b)};
    }
  }
  return {0.0, 0.0};
}

void InverseView::apply(const Eigen::Ref<const Eigen::VectorXd>& v,
                        Eigen::Ref<Eigen::VectorXd> out) const {
  switch (kind_) {
    case CorrelationKind::Equicorrelated: {
      const double c = t1_ / (1.0 + t1_ * n_) * v.sum();
      out = v.array() - c;
      return;
    }
    case CorrelationKind::AR1: {
      if (n_ == 1) {
        out(0) = (1.0 - t1_ * t1_) * v(0);
        return;
      }
      const double t2 = t1_ * t1_;
      for (int j = 0; j < n_; ++j) {
        double r = v(j);
        if (j > 0 && j < n_ - 1) r += t2 * v(j);
        if (j > 0) r -= t1_ * v(j - 1);
        if (j < n_ - 1) r -= t1_ * v(j + 1);
        out(j) = r;
      }
      return;
    }
    case CorrelationKind::Nested: {
      Eigen::VectorXd block = Eigen::VectorXd::Zero(A_.rows());
      for (int j = 0; j < n_; ++j) block(sub_of_[static_cast<std::size_t>(j)]) += v(j);
      const Eigen::VectorXd ab = A_ * block;
      for (int j = 0; j < n_; ++j) out(j) = v(j) - ab(sub_of_[static_cast<std::size_t>(j)]);
      return;
    }
  }
}

void InverseView::apply_d(int p, const Eigen::Ref<const Eigen::VectorXd>& v,
                          Eigen::Ref<Eigen::VectorXd> out) const {
  switch (kind_) {
    case CorrelationKind::Equicorrelated: {
      if (p != 0) {
        out.setZero();
        return;
      }
      const double q = 1.0 + t1_ * n_;
      out.setConstant(-v.sum() / (q * q));
      return;
    }
    case CorrelationKind::AR1: {
      if (p != 0) {
        out.setZero();
        return;
      }
      if (n_ == 1) {
        out(0) = -2.0 * t1_ * v(0);
        return;
      }
      for (int j = 0; j < n_; ++j) {
        double r = (j > 0 && j < n_ - 1) ? 2.0 * t1_ * v(j) : 0.0;
        if (j > 0) r -= v(j - 1);
        if (j < n_ - 1) r -= v(j + 1);
        out(j) = r;
      }
      return;
    }
    case CorrelationKind::Nested: {
      const Eigen::MatrixXd& dA = (p == 0) ? dA1_ : dA2_;
      Eigen::VectorXd block = Eigen::VectorXd::Zero(A_.rows());
      for (int j = 0; j < n_; ++j) block(sub_of_[static_cast<std::size_t>(j)]) += v(j);
      const Eigen::VectorXd ab = dA * block;
      for (int j = 0; j < n_; ++j) out(j) = -ab(sub_of_[static_cast<std::size_t>(j)]);
      return;
    }
  }
}

Eigen::MatrixXd InverseView::matrix() const {
  Eigen::MatrixXd m(n_, n_);
  for (int j = 0; j < n_; ++j)
    for (int k = 0; k < n_; ++k) m(j, k) = entry(j, k);
  return m;
}

Eigen::MatrixXd InverseView::dmatrix(int p) const {
  Eigen::MatrixXd m(n_, n_);
  for (int j = 0; j < n_; ++j)
    for (int k = 0; k < n_; ++k) m(j, k) = dentry(j, k)[static_cast<std::size_t>(p)];
  return m;
}

double inverse_entry(const CorrelationFamily& family, const GroupLayout& layout, int j, int k) {
  return InverseView(family, layout).entry(j, k);
}

std::array<double, 2> dtheta_inverse_entry(const CorrelationFamily& family,
                                           const GroupLayout& layout, int j, int k) {
  return InverseView(family, layout).dentry(j, k);
}

Eigen::MatrixXd dense_correlation(const CorrelationFamily& family, const GroupLayout& layout) {
  const int n = layout.n;
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
  switch (family.kind) {
    case CorrelationKind::Equicorrelated: {
      const double rho = theta_to_rho(family.kind, family.theta[0]);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (j != k) C(j, k) = rho;
      break;
    }
    case CorrelationKind::AR1: {
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) C(j, k) = std::pow(family.theta[0], std::abs(j - k));
      break;
    }
    case CorrelationKind::Nested: {
      const auto [r1, r2] = nested_rho(family.theta[0], family.theta[1]);
      std::vector<int> sizes = layout.subgroups.empty() ? std::vector<int>{n} : layout.subgroups;
      std::vector<int> sub_of;
      for (std::size_t m = 0; m < sizes.size(); ++m)
        for (int t = 0; t < sizes[m]; ++t) sub_of.push_back(static_cast<int>(m));
      if (static_cast<int>(sub_of.size()) != n)
        throw DataError("InvalidLayout", "subgroup sizes do not sum to group size");
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (j != k)
            C(j, k) = sub_of[static_cast<std::size_t>(j)] == sub_of[static_cast<std::size_t>(k)] ? r1 : r2;
      break;
    }
  }
  return C;
}

std::array<double, 2> project_theta(const CorrelationFamily& family, std::array<double, 2> raw) {
  std::array<double, 2> out{0.0, 0.0};
  for (int p = 0; p < family.n_params(); ++p) {
    double v = raw[static_cast<std::size_t>(p)];
    if (std::isnan(v)) v = family.lower(p);
    out[static_cast<std::size_t>(p)] = std::clamp(v, family.lower(p), family.upper(p));
  }
  return out;
}

std::pair<double, double> nested_reparam(double rho1, double rho2) {
  if (!(rho2 >= 0.0 && rho2 <= rho1 && rho1 < 1.0))
    throw ConfigError("DomainError", "nested correlations require 0 <= rho2 <= rho1 < 1");
  return {(rho1 - rho2) / (1.0 - rho1), rho2 / (1.0 - rho1)};
}

std::pair<double, double> nested_rho(double theta1, double theta2) {
  const double q = 1.0 + theta1 + theta2;
  return {(theta1 + theta2) / q, theta2 / q};
}

double theta_to_rho(CorrelationKind kind, double theta) {
  switch (kind) {
    case CorrelationKind::Equicorrelated: return theta / (1.0 + theta);
    case CorrelationKind::AR1: return theta;
    case CorrelationKind::Nested: break;
  }
  throw ConfigError("UnsupportedFamily", "nested family has two correlation parameters");
}

double rho_to_theta(CorrelationKind kind, double rho) {
  switch (kind) {
    case CorrelationKind::Equicorrelated:
      if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("DomainError", "rho must lie in (-1,1)");
      return rho / (1.0 - rho);
    case CorrelationKind::AR1: return rho;
    case CorrelationKind::Nested: break;
  }
  throw ConfigError("UnsupportedFamily", "nested family has two correlation parameters");
}

}  // namespace sboost
