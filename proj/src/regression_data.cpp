#include "dynsparse/regression_data.hpp"

#include <string>

#include "dynsparse/errors.hpp"

namespace dynsparse {

RegressionData::RegressionData(std::vector<Eigen::VectorXd> y, std::vector<Eigen::MatrixXd> X,
                               std::vector<long> labels)
    : y_(std::move(y)), X_(std::move(X)), labels_(std::move(labels)) {
  if (y_.empty()) throw DomainError("RegressionData: no time steps");
  if (y_.size() != X_.size()) throw DomainError("RegressionData: y and X lengths differ");
  if (labels_.empty()) {
    for (std::size_t t = 0; t < y_.size(); ++t) labels_.push_back(static_cast<long>(t + 1));
  }
  if (labels_.size() != y_.size()) throw DomainError("RegressionData: label count differs from T");
  p_ = static_cast<int>(X_[0].cols());
  if (p_ < 1) throw DomainError("RegressionData: need at least one predictor");
  for (std::size_t t = 0; t < y_.size(); ++t) {
    const std::string at = " at step " + std::to_string(t + 1);
    if (X_[t].cols() != p_) throw DomainError("RegressionData: inconsistent predictor count" + at);
    if (X_[t].rows() != y_[t].size()) throw DomainError("RegressionData: rows(X) != size(y)" + at);
    if (y_[t].size() == 0) throw DomainError("RegressionData: no observations" + at);
    if (!y_[t].allFinite() || !X_[t].allFinite()) throw DomainError("RegressionData: non-finite value" + at);
  }
}

RegressionData RegressionData::slice(int first, int count) const {
  if (first < 0 || count < 1 || first + count > T()) throw DomainError("RegressionData::slice: out of range");
  const auto b = static_cast<std::size_t>(first);
  const auto e = static_cast<std::size_t>(first + count);
  return RegressionData({y_.begin() + b, y_.begin() + e}, {X_.begin() + b, X_.begin() + e},
                        {labels_.begin() + b, labels_.begin() + e});
}

}  // namespace dynsparse
