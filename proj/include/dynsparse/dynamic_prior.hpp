#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dynsparse/distributions.hpp"
#include "dynsparse/parallel.hpp"
#include "dynsparse/random.hpp"

namespace dynsparse {

/// Parameters of the d-order Markov sparsity prior plus the observation
/// noise. Exactly one of a fixed order d or a binomial-chain rate rho is
/// active.
class ModelConfig {
 public:
  static constexpr double kMaxAlpha = 1.0 - 1e-9;

  /// Throws DomainError if the GIG region is invalid, alpha is outside
  /// [0, kMaxAlpha], sigma <= 0, p < 1, or some conditional index
  /// nu - k/2 (k <= d) would be invalid at a zero window.
  static ModelConfig fixed_order(double nu, double delta, double gamma, double alpha, int d,
                                 double sigma, int p = 1);
  /// Time-varying order d_t | d_{t-1} ~ Bin(d_{t-1} + 1, rho). Requires
  /// delta > 0 since d_t is unbounded.
  static ModelConfig time_varying(double nu, double delta, double gamma, double alpha, double rho,
                                  double sigma, int p = 1);

  double nu() const { return nu_; }
  double delta() const { return delta_; }
  double gamma() const { return gamma_; }
  double alpha() const { return alpha_; }
  double sigma() const { return sigma_; }
  int p() const { return p_; }
  bool has_fixed_order() const { return d_.has_value(); }
  /// Throws UsageError in time-varying mode.
  int order() const;
  /// Throws UsageError in fixed-order mode.
  double rho() const;

  ModelConfig with_p(int p) const;

 private:
  ModelConfig() = default;
  void validate() const;

  double nu_ = 1.0;
  double delta_ = 0.0;
  double gamma_ = 1.0;
  double alpha_ = 0.0;
  double sigma_ = 1.0;
  int p_ = 1;
  std::optional<int> d_;
  std::optional<double> rho_;
};

/// The stationary AR(1) correlation over a window: entries alpha^{|i-j|}.
/// Its inverse is tridiagonal, so quadratic forms cost O(dim).
class WindowCorrelation {
 public:
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }
  Eigen::MatrixXd matrix() const;
  /// Lower Cholesky factor, closed form for the AR(1) structure.
  Eigen::MatrixXd cholesky_factor() const;
  double log_det() const;
  /// x^T Sigma^{-1} x.
  double quadratic_form(std::span<const double> x) const;

 private:
  friend WindowCorrelation build_sigma(int dim, double alpha);
  WindowCorrelation(int dim, double alpha) : dim_(dim), alpha_(alpha) {}
  int dim_;
  double alpha_;
};

/// Throws DomainError for dim < 1 or alpha outside [0, 1 - 1e-9].
WindowCorrelation build_sigma(int dim, double alpha);

double mahalanobis_norm(std::span<const double> x, const WindowCorrelation& corr);

/// beta_t given the previous k = window.size() values (oldest first):
/// beta_t | tau ~ Normal(location, variance_factor * tau), tau ~ mixing.
///
/// For k >= 1: location alpha * window.back(), variance_factor 1 - alpha^2,
/// mixing GIG(nu - k/2, sqrt(delta^2 + ||window||^2_{Sigma_k}), gamma).
/// For k = 0 the draw is the stationary GH(0, nu, delta, gamma).
///
/// Rescaling tau' = (1 - alpha^2) tau gives the equivalent form
/// tau' ~ GIG(nu - k/2, sqrt(1 - alpha^2) delta', gamma / sqrt(1 - alpha^2))
/// with beta_t | tau' ~ Normal(location, tau'). The variant that puts the
/// sqrt(1 - alpha^2) factors on the GIG parameters but keeps the
/// (1 - alpha^2) tau variance, or drops the factors while using variance
/// tau', does not marginalize to the conditional GH.
struct ConditionalLaw {
  double location;
  double variance_factor;
  GigParams mixing;
};

ConditionalLaw conditional_law(const ModelConfig& config, std::span<const double> window);

/// One-step predictive law beta_t | window as a GH bundle:
/// GH(alpha w_last, nu - k/2, sqrt(1-alpha^2) sqrt(delta^2 + ||w||^2), gamma / sqrt(1-alpha^2)).
GhParams conditional_gh(const ModelConfig& config, std::span<const double> window);

/// The mixing law of conditional_law (variance (1 - alpha^2) tau).
GigParams conditional_gig(const ModelConfig& config, std::span<const double> window);

struct SimulatedPath {
  Eigen::MatrixXd beta;  // p x T
  std::vector<int> order;  // d_t per step; constant in fixed-order mode
};

/// Draws p independent rows of the prior process. Row j uses the stream
/// derive_seed(seed, {j}); the d_t chain (time-varying mode) uses its own
/// stream, shared by all rows. d >= T draws the whole row jointly.
SimulatedPath simulate_path(const ModelConfig& config, int T, std::uint64_t seed,
                            Execution exec = Execution::parallel);

/// d_1 = d0, d_t ~ Bin(d_{t-1} + 1, rho).
std::vector<int> simulate_d_chain(double rho, int d0, int T, RandomStream& rng);

/// Sample autocorrelation at lags 1..max_lag (mean-centred, normalized by
/// the lag-0 autocovariance, 1/n convention). Throws DomainError for a
/// constant series or series.size() <= max_lag.
std::vector<double> autocorrelation(std::span<const double> series, int max_lag,
                                    Execution exec = Execution::parallel);

}  // namespace dynsparse
