#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace smpp {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Componentwise Neumaier sum for vectors of fixed length.
class CompensatedVectorSum {
 public:
  explicit CompensatedVectorSum(Eigen::Index n)
      : sum_(Eigen::VectorXd::Zero(n)), comp_(Eigen::VectorXd::Zero(n)) {}

  void add(const Eigen::Ref<const Eigen::VectorXd>& x) noexcept {
    for (Eigen::Index j = 0; j < sum_.size(); ++j) {
      const double s = sum_[j];
      const double t = s + x[j];
      if (std::abs(s) >= std::abs(x[j])) {
        comp_[j] += (s - t) + x[j];
      } else {
        comp_[j] += (x[j] - t) + s;
      }
      sum_[j] = t;
    }
  }
  Eigen::VectorXd value() const { return sum_ + comp_; }

 private:
  Eigen::VectorXd sum_;
  Eigen::VectorXd comp_;
};

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace smpp
