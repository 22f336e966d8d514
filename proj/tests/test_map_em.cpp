#include <cmath>
#include <vector>

#include <Eigen/QR>

#include "doctest.h"
#include "dynsparse/errors.hpp"
#include "dynsparse/map_em.hpp"
#include "dynsparse/random.hpp"
#include "dynsparse/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dynsparse;
using namespace fixture;

TEST_SUITE("map_em") {
  TEST_CASE("EM objective is monotone on random instances") {
    RandomStream rng(2024);
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
      const Instance inst = random_instance(rng, 4 + i % 7, 1 + i % 4, 0.5 + rng.uniform());
      const EmStepResult r = em_map_step(inst.y, inst.X, inst.window, inst.config, 1e-12, 500);
      for (std::size_t k = 1; k < r.trace.size(); ++k) {
        const double slack = 1e-12 * std::max(1.0, std::fabs(r.trace[k - 1]));
        CAPTURE(i);
        CHECK(r.trace[k] >= r.trace[k - 1] - slack);
      }
      checked += r.trace.size() > 1;
    }
    CHECK(checked == 100);
  }

  TEST_CASE("objective and gradient against independent computations") {
    RandomStream rng(7);
    for (int i = 0; i < 10; ++i) {
      const Instance inst = random_instance(rng, 6, 3, 1.0);
      Eigen::VectorXd beta(3);
      for (int j = 0; j < 3; ++j) beta[j] = rng.normal() + 0.1;
      CHECK(map_step_objective(inst.y, inst.X, inst.window, inst.config, beta) ==
            doctest::Approx(quadrature_objective(inst, beta)).epsilon(1e-9));
      const Eigen::VectorXd g = map_step_gradient(inst.y, inst.X, inst.window, inst.config, beta);
      for (int j = 0; j < 3; ++j) {
        Eigen::VectorXd hi = beta, lo = beta;
        hi[j] += 1e-6;
        lo[j] -= 1e-6;
        const double fd = (map_step_objective(inst.y, inst.X, inst.window, inst.config, hi) -
                           map_step_objective(inst.y, inst.X, inst.window, inst.config, lo)) / 2e-6;
        CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }
  }

  TEST_CASE("Laplace prior with orthonormal design gives soft thresholding") {
    RandomStream rng(99);
    const double gamma = 1.5, sigma = 0.8;
    const double lambda = sigma * sigma * gamma;
    const ModelConfig config = ModelConfig::fixed_order(1.0, 0.0, gamma, 0.0, 0, sigma, 6);
    int compared = 0;
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::MatrixXd A(12, 6);
      for (int i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
      const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ() * Eigen::MatrixXd::Identity(12, 6);
      Eigen::VectorXd y(12);
      for (int i = 0; i < 12; ++i) y[i] = 2.0 * rng.normal();
      const Eigen::VectorXd z = Q.transpose() * y;
      // stay away from the kink where EM converges sublinearly
      bool clear = true;
      for (int j = 0; j < 6; ++j) clear = clear && std::fabs(std::fabs(z[j]) - lambda) > 0.2 * lambda;
      if (!clear) continue;
      const EmStepResult r = em_map_step(y, Q, Eigen::MatrixXd(6, 0), config, 1e-15, 20000);
      for (int j = 0; j < 6; ++j) {
        const double soft = std::copysign(std::max(std::fabs(z[j]) - lambda, 0.0), z[j]);
        CHECK(std::fabs(r.beta[j] - soft) < 1e-6);
      }
      ++compared;
    }
    CHECK(compared >= 3);
  }

  TEST_CASE("EM agrees with numerical ascent on small instances") {
    RandomStream rng(31);
    int done = 0;
    while (done < 20) {
      const Instance inst = random_instance(rng, 12, 2, 0.4);
      const EmStepResult r = em_map_step(inst.y, inst.X, inst.window, inst.config, 1e-15, 5000);
      if (!std::isfinite(r.trace.back())) continue;  // pole of a delta = 0 prior
      auto f = [&](const Eigen::VectorXd& b) { return quadrature_objective(inst, b); };
      // several starts; the oracle keeps the best local maximum
      Eigen::VectorXd best = oracle::nelder_mead_max(f, inst.X.colPivHouseholderQr().solve(inst.y), 0.5, 1e-14, 4000);
      for (const Eigen::Vector2d& start : {Eigen::Vector2d(0.013, -0.011), Eigen::Vector2d(1.0, -1.0)}) {
        const Eigen::VectorXd cand = oracle::nelder_mead_max(f, start, 0.5, 1e-14, 4000);
        if (f(cand) > f(best)) best = cand;
      }
      CAPTURE(done);
      CHECK((r.beta - best).cwiseAbs().maxCoeff() < 1e-4);
      ++done;
    }
  }

  TEST_CASE("gradient vanishes at the EM fixed point") {
    RandomStream rng(5);
    for (int i = 0; i < 20; ++i) {
      Instance inst = random_instance(rng, 15, 3, 1.0);
      const EmStepResult r = em_map_step(inst.y, inst.X, inst.window, inst.config, 1e-15, 5000);
      if (!r.converged || (r.beta.array() == 0.0).any()) continue;
      const Eigen::VectorXd g = map_step_gradient(inst.y, inst.X, inst.window, inst.config, r.beta);
      // the prior is not differentiable where beta equals its location
      bool smooth = true;
      for (int j = 0; j < 3; ++j) {
        const double loc = inst.window.cols() ? inst.config.alpha() * inst.window(j, inst.window.cols() - 1) : 0.0;
        smooth = smooth && std::fabs(r.beta[j] - loc) > 1e-3;
      }
      if (smooth) CHECK(g.cwiseAbs().maxCoeff() < 1e-4);
    }
  }

  TEST_CASE("shape validation") {
    const ModelConfig c = ModelConfig::fixed_order(1.0, 1.0, 1.0, 0.5, 1, 1.0, 2);
    const Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 2);
    CHECK_THROWS_AS(em_map_step(y, Eigen::MatrixXd::Ones(4, 2), Eigen::MatrixXd::Zero(2, 1), c), DomainError);
    CHECK_THROWS_AS(em_map_step(y, X, Eigen::MatrixXd::Zero(3, 1), c), DomainError);
    CHECK_THROWS_AS(em_map_step(y, X, Eigen::MatrixXd::Zero(2, 1), c.with_p(3)), DomainError);
    CHECK_THROWS_AS(em_map_step(y, X, Eigen::MatrixXd::Zero(2, 1), c, -1.0), DomainError);
    CHECK_THROWS_AS(em_map_step(y, X, Eigen::MatrixXd::Zero(2, 1), c, 1e-8, 0), DomainError);
  }

  TEST_CASE("online fit feeds estimates back into the window") {
    const SyntheticSeries s = piecewise_signal(3);
    const ModelConfig c = ModelConfig::fixed_order(1.0, 0.01, 1.0, 0.8, 1, 1.0);
    const MapFit fit = run_online_map(s.data, c);
    REQUIRE(fit.beta_hat.cols() == s.data.T());
    for (int t : {0, 1, 2, 3, 50, 99}) {
      const int k = std::min(1, t);
      const EmStepResult step = em_map_step(s.data.y(t), s.data.X(t), fit.beta_hat.middleCols(t - k, k), c);
      CHECK((step.beta - fit.beta_hat.col(t)).cwiseAbs().maxCoeff() == 0.0);
      CHECK(fit.em_iters[static_cast<std::size_t>(t)] == step.iterations);
    }
    CHECK(fit.sparsity_threshold == doctest::Approx(1e-3 * fit.beta_hat.cwiseAbs().maxCoeff()));
    // large signals are found, zero stretches are shrunk
    double err = 0.0;
    for (int t = 0; t < s.data.T(); ++t) err += std::fabs(fit.beta_hat(0, t) - s.truth(0, t));
    double naive = 0.0;
    for (int t = 0; t < s.data.T(); ++t) naive += std::fabs(s.data.y(t)[0] - s.truth(0, t));
    CHECK(err < naive);

    CHECK_THROWS_AS(run_online_map(s.data, c.with_p(2)), DomainError);
    CHECK_THROWS_AS(run_online_map(s.data, ModelConfig::time_varying(1.0, 0.01, 1.0, 0.8, 0.9, 1.0)), UsageError);
  }

  TEST_CASE("sparsity threshold") {
    MapFit fit;
    fit.beta_hat.resize(1, 4);
    fit.beta_hat << 0.0, 1e-4, -2.0, 0.5;
    apply_sparsity_threshold(fit, std::nullopt);
    CHECK(fit.sparsity_threshold == doctest::Approx(2e-3));
    CHECK(fit.support(0, 0) == false);
    CHECK(fit.support(0, 1) == false);
    CHECK(fit.support(0, 2) == true);
    apply_sparsity_threshold(fit, 0.6);
    CHECK(fit.support(0, 3) == false);
    CHECK(fit.support(0, 2) == true);
  }
}
