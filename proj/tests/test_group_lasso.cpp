#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "dynsparse/errors.hpp"
#include "dynsparse/group_lasso.hpp"
#include "dynsparse/random.hpp"
#include "dynsparse/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dynsparse;
using namespace fixture;

TEST_SUITE("group_lasso") {
  TEST_CASE("objective and penalty against dense computations") {
    RandomStream rng(1);
    const RegressionData data = noisy_windows(rng, 5, 4, 3);
    const WindowProblem w = make_window_problem(data, 4, 2, 0.7, 0.9, 1.3);
    Eigen::MatrixXd beta(3, 3);
    for (int i = 0; i < beta.size(); ++i) beta.data()[i] = rng.normal();
    CHECK(window_objective(w, beta) == doctest::Approx(oracle::glasso_objective(to_oracle(w), beta)).epsilon(1e-12));
    const Eigen::MatrixXd S = w.corr.matrix();
    double pen = 0.0;
    for (int j = 0; j < 3; ++j) {
      const Eigen::VectorXd b = beta.row(j).transpose();
      pen += std::sqrt(b.dot(S.inverse() * b));
    }
    CHECK(window_penalty(w, beta) == doctest::Approx(0.9 * pen).epsilon(1e-12));
    // the window holds steps last - d .. last, oldest first
    CHECK(w.y.size() == 3);
    CHECK(w.y.front() == data.y(2));
    CHECK(w.X.back() == data.X(4));
  }

  TEST_CASE("window construction errors") {
    RandomStream rng(2);
    const RegressionData data = noisy_windows(rng, 5, 4, 2);
    CHECK_THROWS_AS(make_window_problem(data, 1, 2, 0.5, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(make_window_problem(data, 5, 0, 0.5, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(make_window_problem(data, 3, 2, 0.5, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(make_window_problem(data, 3, 2, 0.5, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(make_window_problem(data, 3, 2, 1.0, 1.0, 1.0), DomainError);
  }

  TEST_CASE("solutions meet KKT and match the proximal-gradient oracle") {
    RandomStream rng(3);
    for (int rep = 0; rep < 12; ++rep) {
      const int p = 2 + rep % 4, d = rep % 3;
      const RegressionData data = noisy_windows(rng, d + 1, p + 2, p);
      const double alpha = 0.3 * (rep % 4);
      WindowProblem w = make_window_problem(data, d, d, alpha, 1.0, 1.0);
      w.gamma = (0.15 + 0.2 * (rep % 4)) * null_threshold(w);
      const WindowSolution sol = solve_window(w, 1e-10);
      CHECK(sol.kkt_residual < 1e-8);
      CHECK(kkt_residual(w, sol.beta) == sol.kkt_residual);

      const auto inst = to_oracle(w);
      const double ours = window_objective(w, sol.beta);
      const double reference = oracle::glasso_objective(inst, oracle::glasso_fista(inst, 20000));
      CAPTURE(rep);
      CHECK(std::fabs(ours - reference) < 1e-5 * std::max(1.0, std::fabs(reference)));
      CHECK(ours <= oracle::glasso_subgradient_best(inst, 20000) + 1e-9);
      // block coordinate descent never increases the objective
      for (std::size_t k = 1; k < sol.objective_trace.size(); ++k) {
        CHECK(sol.objective_trace[k] <= sol.objective_trace[k - 1] + 1e-12 * std::fabs(sol.objective_trace[k - 1]));
      }
    }
  }

  TEST_CASE("null threshold is exact") {
    RandomStream rng(4);
    for (int rep = 0; rep < 8; ++rep) {
      const RegressionData data = noisy_windows(rng, 3, 5, 4);
      WindowProblem w = make_window_problem(data, 2, 2, 0.2 * rep / 2.0, 1.0, 0.8);
      // group gradients at zero, whitened with a generic Cholesky factor
      const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(w.corr.matrix()).matrixL();
      double expected = 0.0;
      for (int j = 0; j < 4; ++j) {
        Eigen::VectorXd g(3);
        for (int s = 0; s < 3; ++s) g[s] = w.X[static_cast<std::size_t>(s)].col(j).dot(w.y[static_cast<std::size_t>(s)]) / w.sigma2;
        expected = std::max(expected, (L.transpose() * g).norm());
      }
      const double thr = null_threshold(w);
      CHECK(thr == doctest::Approx(expected).epsilon(1e-12));

      w.gamma = thr * (1.0 + 1e-12);
      CHECK(zero_groups(solve_window(w).beta) == 4);
      w.gamma = thr;
      CHECK(zero_groups(solve_window(w).beta) == 4);
      w.gamma = thr * (1.0 - 1e-6);
      CHECK(zero_groups(solve_window(w).beta) == 3);
    }
  }

  TEST_CASE("sweep order does not change the solution") {
    RandomStream rng(5);
    const RegressionData data = noisy_windows(rng, 4, 8, 5);
    WindowProblem w = make_window_problem(data, 3, 3, 0.6, 1.0, 1.0);
    w.gamma = 0.3 * null_threshold(w);
    const WindowSolution a = solve_window(w, 1e-12);
    const std::vector<int> reversed{4, 3, 2, 1, 0};
    const WindowSolution b = solve_window(w, 1e-12, 10000, reversed);
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-9);
    const std::vector<int> bad{0, 1, 7};
    CHECK_THROWS_AS(solve_window(w, 1e-8, 10, bad), DomainError);
    CHECK_THROWS_AS(solve_window(w, 0.0), DomainError);
  }

  TEST_CASE("non-convergence reports the residual") {
    RandomStream rng(6);
    const RegressionData data = noisy_windows(rng, 3, 3, 6);
    WindowProblem w = make_window_problem(data, 2, 2, 0.9, 1.0, 1.0);
    w.gamma = 0.05 * null_threshold(w);
    CHECK_THROWS_AS(solve_window(w, 1e-300, 1), NumericalError);
  }

  TEST_CASE("sliding window fit") {
    const SyntheticSeries s = portfolio_series(11);
    const ModelConfig c = ModelConfig::fixed_order(1.0, 0.01, 2.0, 0.5, 4, 1.0, 5);
    GlassoOptions serial;
    serial.exec = Execution::serial;
    const MapFit a = run_sliding_window(s.data, c, serial);
    const MapFit b = run_sliding_window(s.data, c);
    CHECK(a.beta_hat == b.beta_hat);
    REQUIRE(a.window_solutions.size() == static_cast<std::size_t>(s.data.T() - 4));
    for (int t = 0; t < 4; ++t) CHECK(a.beta_hat.col(t) == a.window_solutions.front().col(t));
    for (int t = 4; t < s.data.T(); ++t) {
      CHECK(a.beta_hat.col(t) == a.window_solutions[static_cast<std::size_t>(t - 4)].col(4));
      CHECK(a.kkt_residual[static_cast<std::size_t>(t)] < 1e-8);
    }
    // exact zeros define the default support
    CHECK((a.support == (a.beta_hat.array() != 0.0)).all());
    CHECK(a.support.count() > 0);
    CHECK(a.support.count() < a.support.size());

    CHECK_THROWS_AS(run_sliding_window(s.data.slice(0, 4), c), DomainError);
    CHECK_THROWS_AS(run_sliding_window(s.data, c.with_p(2)), DomainError);
  }

  TEST_CASE("larger gamma zeroes more groups in the portfolio sweep") {
    const SyntheticSeries s = portfolio_series(12);
    for (int d : {2, 6}) {
      long previous = -1;
      for (double gamma : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const MapFit fit = run_sliding_window(s.data, ModelConfig::fixed_order(1.0, 0.01, gamma, 0.5, d, 1.0, 5));
        long zeros = 0;
        for (const auto& win : fit.window_solutions) zeros += zero_groups(win);
        CHECK(zeros >= previous);
        previous = zeros;
      }
    }
  }
}
