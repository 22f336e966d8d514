#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dynsparse/regression_data.hpp"

namespace dynsparse {

struct SyntheticSeries {
  RegressionData data;
  Eigen::MatrixXd truth;          // p x T
  std::vector<int> change_points;  // 0-based steps where the sparsity pattern of any row changes
};

/// p = 1, X_t = 1, y_t = beta_t + Normal(0, sigma^2), T = 100. The truth
/// alternates zero stretches with a constant level 3, a smooth bump of
/// height 4, and an alternating +-5 stretch.
SyntheticSeries piecewise_signal(std::uint64_t seed, double sigma = 1.0);

/// p = 5 "assets" observed directly (X_t = I_5) over T steps. The truth is
/// zero except for bursts: one asset early, all assets in a shared crisis
/// window (one of them with opposite sign), and a late single-asset shock.
SyntheticSeries portfolio_series(std::uint64_t seed, int T = 156, double sigma = 1.0);

/// y_t = beta_t + Normal(0, sigma^2 I) with X_t = I_p.
RegressionData observe_directly(const Eigen::MatrixXd& beta, double sigma, std::uint64_t seed);

/// Steps where the zero/nonzero pattern of any row differs from the previous step.
std::vector<int> pattern_changes(const Eigen::MatrixXd& truth);

}  // namespace dynsparse
