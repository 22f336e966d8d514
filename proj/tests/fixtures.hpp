#pragma once

// Random problem generators shared by the unit and acceptance tests.

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "dynsparse/dynamic_prior.hpp"
#include "dynsparse/group_lasso.hpp"
#include "dynsparse/random.hpp"
#include "dynsparse/regression_data.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace dynsparse;

struct Instance {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd window;
  ModelConfig config;
};

inline Instance random_instance(RandomStream& rng, int n, int p, double sigma) {
  const int d = static_cast<int>(rng.uniform() * 3.0);
  const double alpha = rng.uniform() < 0.3 ? 0.0 : 0.95 * rng.uniform();
  double nu, delta, gamma;
  if (rng.uniform() < 0.25) {
    // inverse-gamma mixing: Student-type prior
    nu = -0.2 - 2.0 * rng.uniform();
    delta = 0.3 + 2.0 * rng.uniform();
    gamma = 0.0;
  } else if (rng.uniform() < 0.3) {
    delta = 0.0;
    nu = 0.5 * d + 0.1 + 2.0 * rng.uniform();
    gamma = 0.3 + 2.0 * rng.uniform();
  } else {
    nu = -2.0 + 5.0 * rng.uniform();
    delta = 0.05 + 2.0 * rng.uniform();
    gamma = 0.2 + 2.0 * rng.uniform();
  }
  Instance inst{Eigen::VectorXd(n), Eigen::MatrixXd(n, p), Eigen::MatrixXd(p, d),
                ModelConfig::fixed_order(nu, delta, gamma, alpha, d, sigma, p)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) inst.X(i, j) = rng.normal();
  }
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta[j] = rng.uniform() < 0.5 ? 0.0 : 3.0 * rng.normal();
  for (int i = 0; i < n; ++i) inst.y[i] = inst.X.row(i).dot(beta) + sigma * rng.normal();
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < d; ++k) inst.window(j, k) = rng.uniform() < 0.4 ? 0.0 : 2.0 * rng.normal();
  }
  return inst;
}

// Objective with the prior density by mixture quadrature.
inline double quadrature_objective(const Instance& inst, const Eigen::VectorXd& beta) {
  const ModelConfig& c = inst.config;
  const int k = static_cast<int>(inst.window.cols());
  double total = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    double nu = c.nu(), delta = c.delta(), loc = 0.0, vf = 1.0;
    if (k > 0) {
      const Eigen::VectorXd w = inst.window.row(j).transpose();
      const double quad = w.dot(build_sigma(k, c.alpha()).matrix().ldlt().solve(w));
      nu -= 0.5 * k;
      delta = std::sqrt(delta * delta + quad);
      loc = c.alpha() * w[k - 1];
      vf = 1.0 - c.alpha() * c.alpha();
    }
    const oracle::Gig g(nu, delta, c.gamma());
    const double b = beta[j];
    total += std::log(oracle::integrate_split(
        [&](double tau) { return tau > 0 ? oracle::normal_pdf(b, loc, vf * tau) * g.pdf(tau) : 0.0; },
        g.scale()));
  }
  const double s2 = c.sigma() * c.sigma();
  const double n = static_cast<double>(inst.y.size());
  return total - 0.5 * n * std::log(2 * oracle::kPi * s2) - 0.5 * (inst.y - inst.X * beta).squaredNorm() / s2;
}

inline RegressionData noisy_windows(RandomStream& rng, int T, int n, int p) {
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::MatrixXd> X;
  for (int t = 0; t < T; ++t) {
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::VectorXd beta(p);
    for (int j = 0; j < p; ++j) beta[j] = j % 2 == 0 ? 1.5 * std::sin(0.3 * t + j) : 0.0;
    Eigen::VectorXd obs = x * beta;
    for (int i = 0; i < n; ++i) obs[i] += rng.normal();
    y.push_back(obs);
    X.push_back(x);
  }
  return RegressionData(std::move(y), std::move(X));
}

inline oracle::GlassoInstance to_oracle(const WindowProblem& w) {
  return {w.y, w.X, w.gamma, w.sigma2, w.corr.matrix()};
}

inline int zero_groups(const Eigen::MatrixXd& beta) {
  int zeros = 0;
  for (Eigen::Index j = 0; j < beta.rows(); ++j) zeros += beta.row(j).isZero(0.0);
  return zeros;
}

}  // namespace fixture
