#pragma once

#include <vector>

#include <Eigen/Core>

namespace dynsparse {

/// The sequence (y_t, X_t), t = 1..T. The number of observations n may
/// differ between steps; the predictor count p may not.
class RegressionData {
 public:
  RegressionData() = default;
  /// Throws DomainError on empty input, mismatched lengths, rows(X_t) !=
  /// size(y_t), inconsistent p, or non-finite entries. `labels` defaults to 1..T.
  RegressionData(std::vector<Eigen::VectorXd> y, std::vector<Eigen::MatrixXd> X,
                 std::vector<long> labels = {});

  int T() const { return static_cast<int>(y_.size()); }
  int p() const { return p_; }
  const Eigen::VectorXd& y(int t) const { return y_[static_cast<std::size_t>(t)]; }
  const Eigen::MatrixXd& X(int t) const { return X_[static_cast<std::size_t>(t)]; }
  long label(int t) const { return labels_[static_cast<std::size_t>(t)]; }
  const std::vector<long>& labels() const { return labels_; }

  /// Steps [first, first + count) as a new data set.
  RegressionData slice(int first, int count) const;

 private:
  std::vector<Eigen::VectorXd> y_;
  std::vector<Eigen::MatrixXd> X_;
  std::vector<long> labels_;
  int p_ = 0;
};

}  // namespace dynsparse
