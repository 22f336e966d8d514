#include "dynsparse/map_em.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "dynsparse/errors.hpp"

namespace dynsparse {

namespace {

std::vector<ConditionalLaw> coordinate_laws(const Eigen::MatrixXd& window, const ModelConfig& config) {
  std::vector<ConditionalLaw> laws;
  laws.reserve(static_cast<std::size_t>(window.rows()));
  std::vector<double> row(static_cast<std::size_t>(window.cols()));
  for (Eigen::Index j = 0; j < window.rows(); ++j) {
    for (Eigen::Index k = 0; k < window.cols(); ++k) row[static_cast<std::size_t>(k)] = window(j, k);
    laws.push_back(conditional_law(config, row));
  }
  return laws;
}

GhParams predictive(const ConditionalLaw& law) {
  const double s = std::sqrt(law.variance_factor);
  return GhParams(law.location, law.mixing.nu(), s * law.mixing.delta(), law.mixing.gamma() / s);
}

void check_shapes(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& window,
                  const ModelConfig& config) {
  if (X.rows() != y.size()) throw DomainError("map step: rows(X) != size(y)");
  if (window.rows() != X.cols()) throw DomainError("map step: window rows != predictor count");
  if (config.p() != X.cols()) throw DomainError("map step: config p != predictor count");
}

double objective_from_laws(const std::vector<ConditionalLaw>& laws, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& X, double sigma2, const Eigen::VectorXd& beta) {
  double prior = 0.0;
  for (std::size_t j = 0; j < laws.size(); ++j) {
    prior += gh_log_pdf(predictive(laws[j]), beta[static_cast<Eigen::Index>(j)]);
  }
  const double n = static_cast<double>(y.size());
  const double rss = (y - X * beta).squaredNorm();
  return prior - 0.5 * n * std::log(2.0 * M_PI * sigma2) - 0.5 * rss / sigma2;
}

Eigen::VectorXd m_step(const Eigen::MatrixXd& xtx, const Eigen::VectorXd& xty, double sigma2,
                       const std::vector<ConditionalLaw>& laws, const Eigen::VectorXd& weights) {
  const Eigen::Index p = xtx.rows();
  Eigen::MatrixXd a = xtx / sigma2;
  Eigen::VectorXd b = xty / sigma2;
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& law = laws[static_cast<std::size_t>(j)];
    const double prec = weights[j] / law.variance_factor;
    a(j, j) += prec;
    b[j] += prec * law.location;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    const double ridge = 1e-10 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
    a.diagonal().array() += ridge;
    llt.compute(a);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("em_map_step: M-step system is singular even after ridge " + std::to_string(ridge));
    }
  }
  return llt.solve(b);
}

}  // namespace

double map_step_objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& window, const ModelConfig& config,
                          const Eigen::VectorXd& beta) {
  check_shapes(y, X, window, config);
  const double sigma2 = config.sigma() * config.sigma();
  return objective_from_laws(coordinate_laws(window, config), y, X, sigma2, beta);
}

Eigen::VectorXd map_step_gradient(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& window, const ModelConfig& config,
                                  const Eigen::VectorXd& beta) {
  check_shapes(y, X, window, config);
  const double sigma2 = config.sigma() * config.sigma();
  const auto laws = coordinate_laws(window, config);
  Eigen::VectorXd grad = X.transpose() * (y - X * beta) / sigma2;
  for (std::size_t j = 0; j < laws.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    grad[jj] += gh_log_pdf_derivative(predictive(laws[j]), beta[jj]);
  }
  return grad;
}

EmStepResult em_map_step(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                         const Eigen::MatrixXd& window, const ModelConfig& config, double tol,
                         int max_iter) {
  check_shapes(y, X, window, config);
  if (!(tol >= 0.0) || max_iter < 1) throw DomainError("em_map_step: need tol >= 0 and max_iter >= 1");
  const double sigma2 = config.sigma() * config.sigma();
  const auto laws = coordinate_laws(window, config);
  const Eigen::Index p = X.cols();
  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::VectorXd xty = X.transpose() * y;

  Eigen::VectorXd weights(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const GigParams& mix = laws[static_cast<std::size_t>(j)].mixing;
    // 1 / E[tau] when the prior mean exists (always unless gamma = 0)
    const bool mean_exists = mix.gamma() > 0.0 || mix.nu() + 1.0 < 0.0;
    weights[j] = mean_exists ? 1.0 / gig_moment(mix, 1) : 1.0;
  }

  EmStepResult result;
  result.beta = m_step(xtx, xty, sigma2, laws, weights);
  double objective = objective_from_laws(laws, y, X, sigma2, result.beta);
  result.trace.push_back(objective);

  for (int iter = 1; iter <= max_iter; ++iter) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& law = laws[static_cast<std::size_t>(j)];
      const double r = result.beta[j] - law.location;
      const double delta_post =
          std::max(std::sqrt(law.mixing.delta() * law.mixing.delta() + r * r / law.variance_factor),
                   kEmDeltaFloor);
      const GigParams posterior(law.mixing.nu() - 0.5, delta_post, law.mixing.gamma());
      weights[j] = gig_moment(posterior, -1);
    }
    Eigen::VectorXd next = m_step(xtx, xty, sigma2, laws, weights);
    const double next_objective = objective_from_laws(laws, y, X, sigma2, next);
    result.beta = std::move(next);
    result.trace.push_back(next_objective);
    result.iterations = iter;
    if (!std::isfinite(next_objective)) {
      result.converged = next_objective == objective;
      break;
    }
    const double change = std::fabs(next_objective - objective);
    objective = next_objective;
    if (change <= tol * std::max(1.0, std::fabs(objective))) {
      result.converged = true;
      break;
    }
  }
  return result;
}

void apply_sparsity_threshold(MapFit& fit, std::optional<double> eps) {
  const double max_abs = fit.beta_hat.size() > 0 ? fit.beta_hat.cwiseAbs().maxCoeff() : 0.0;
  fit.sparsity_threshold = eps.value_or(1e-3 * max_abs);
  fit.support = fit.beta_hat.array().abs() > fit.sparsity_threshold;
}

MapFit run_online_map(const RegressionData& data, const ModelConfig& config, const EmOptions& options) {
  if (data.p() != config.p()) {
    throw DomainError("run_online_map: data has p=" + std::to_string(data.p()) + " but config p=" +
                      std::to_string(config.p()));
  }
  const int d = config.order();
  const int T = data.T();
  MapFit fit;
  fit.beta_hat = Eigen::MatrixXd::Zero(data.p(), T);
  fit.em_iters.resize(static_cast<std::size_t>(T));
  fit.objective_trace.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const int k = std::min(d, t);
    const Eigen::MatrixXd window = fit.beta_hat.middleCols(t - k, k);
    try {
      EmStepResult step = em_map_step(data.y(t), data.X(t), window, config, options.tol, options.max_iter);
      fit.beta_hat.col(t) = step.beta;
      fit.em_iters[static_cast<std::size_t>(t)] = step.iterations;
      fit.objective_trace[static_cast<std::size_t>(t)] = std::move(step.trace);
    } catch (const DomainError& e) {
      throw DomainError("run_online_map at t=" + std::to_string(data.label(t)) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("run_online_map at t=" + std::to_string(data.label(t)) + ": " + e.what());
    }
  }
  apply_sparsity_threshold(fit, options.eps_sparse);
  return fit;
}

}  // namespace dynsparse
