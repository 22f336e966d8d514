#include "dynsparse/synthetic.hpp"

#include <cmath>

#include "dynsparse/errors.hpp"
#include "dynsparse/random.hpp"

namespace dynsparse {

namespace {

// Half-sine bump over [first, last], zero at neither end.
void add_bump(Eigen::MatrixXd& truth, int row, int first, int last, double height) {
  const double width = static_cast<double>(last - first + 2);
  for (int t = first; t <= last; ++t) {
    truth(row, t) += height * std::sin(M_PI * static_cast<double>(t - first + 1) / width);
  }
}

}  // namespace

RegressionData observe_directly(const Eigen::MatrixXd& beta, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw DomainError("observe_directly: sigma must be positive");
  RandomStream rng(seed);
  const Eigen::Index p = beta.rows();
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::MatrixXd> X;
  for (Eigen::Index t = 0; t < beta.cols(); ++t) {
    Eigen::VectorXd obs(p);
    for (Eigen::Index j = 0; j < p; ++j) obs[j] = beta(j, t) + sigma * rng.normal();
    y.push_back(std::move(obs));
    X.push_back(Eigen::MatrixXd::Identity(p, p));
  }
  return RegressionData(std::move(y), std::move(X));
}

std::vector<int> pattern_changes(const Eigen::MatrixXd& truth) {
  std::vector<int> out;
  for (Eigen::Index t = 1; t < truth.cols(); ++t) {
    if (((truth.col(t).array() != 0.0) != (truth.col(t - 1).array() != 0.0)).any()) {
      out.push_back(static_cast<int>(t));
    }
  }
  return out;
}

SyntheticSeries piecewise_signal(std::uint64_t seed, double sigma) {
  constexpr int T = 100;
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(1, T);
  for (int t = 15; t < 30; ++t) truth(0, t) = 3.0;
  add_bump(truth, 0, 40, 59, 4.0);
  for (int t = 70; t < 85; ++t) truth(0, t) = (t % 2 == 0) ? 5.0 : -5.0;
  return {observe_directly(truth, sigma, seed), truth, pattern_changes(truth)};
}

SyntheticSeries portfolio_series(std::uint64_t seed, int T, double sigma) {
  if (T < 40) throw DomainError("portfolio_series: need T >= 40");
  constexpr int p = 5;
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(p, T);
  const auto at = [T](double frac) { return static_cast<int>(frac * T); };
  // early sector bubble
  add_bump(truth, 1, at(0.12), at(0.26), 3.5);
  // shared crisis; asset 2 moves against the rest
  const int crisis_first = at(0.65);
  const int crisis_last = at(0.78);
  const double heights[p] = {-3.0, -2.5, 3.0, -2.0, -4.0};
  for (int j = 0; j < p; ++j) add_bump(truth, j, crisis_first, crisis_last, heights[j]);
  // late single-asset shock
  add_bump(truth, 0, at(0.9), T - 2, -4.5);
  return {observe_directly(truth, sigma, seed), truth, pattern_changes(truth)};
}

}  // namespace dynsparse
