#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dynsparse/random.hpp"

namespace dynsparse {

/// Generalized inverse Gaussian GIG(nu, delta, gamma), density
/// proportional to x^{nu-1} exp(-(delta^2/x + gamma^2 x)/2) on x > 0.
///
/// delta below kZeroDelta is snapped to exactly zero so the gamma limit is
/// used; (gamma/delta)^nu / K_nu(delta gamma) is an indeterminate form there.
class GigParams {
 public:
  static constexpr double kZeroDelta = 1e-12;

  /// Throws DomainError unless delta > 0, gamma > 0, or one of the
  /// boundary regions (delta = 0, nu > 0) / (gamma = 0, nu < 0) holds.
  GigParams(double nu, double delta, double gamma);

  double nu() const { return nu_; }
  double delta() const { return delta_; }
  double gamma() const { return gamma_; }
  double log_normalizer() const;

 private:
  double nu_;
  double delta_;
  double gamma_;
};

double gig_log_pdf(const GigParams& params, double x);

/// Hormann-Leydold rejection sampler: ratio-of-uniforms with or without a
/// mode shift, or a three-piece dominating function in the non-T-concave
/// corner. Rejection constants are bounded over the whole parameter space.
/// The delta = 0 and gamma = 0 boundaries use gamma / inverse-gamma draws.
double gig_sample(const GigParams& params, RandomStream& rng);

/// E[X^power]. Throws DomainError when the moment does not exist
/// (delta = 0 needs nu + power > 0, gamma = 0 needs nu + power < 0).
double gig_moment(const GigParams& params, int power);

/// Symmetric generalized hyperbolic law: normal with mean mu and GIG variance.
class GhParams {
 public:
  GhParams(double mu, double nu, double delta, double gamma);

  double mu() const { return mu_; }
  const GigParams& mixing() const { return mixing_; }
  double nu() const { return mixing_.nu(); }
  double delta() const { return mixing_.delta(); }
  double gamma() const { return mixing_.gamma(); }

 private:
  double mu_;
  GigParams mixing_;
};

/// Returns +inf at x = mu when delta = 0 and nu <= 1/2 (the density has a pole).
double gh_log_pdf(const GhParams& params, double x);
/// d/dx gh_log_pdf, through the Bessel ratio K_{nu-3/2}/K_{nu-1/2}.
double gh_log_pdf_derivative(const GhParams& params, double x);
double gh_sample(const GhParams& params, RandomStream& rng);

/// Multivariate GH: x | tau ~ Normal(mu, tau * sigma), tau ~ GIG(nu, delta, gamma).
class MghParams {
 public:
  /// Throws DomainError unless sigma is symmetric positive definite and
  /// matches mu in dimension.
  MghParams(Eigen::VectorXd mu, double nu, double delta, double gamma, Eigen::MatrixXd sigma);

  Eigen::Index dim() const { return mu_.size(); }
  const Eigen::VectorXd& mu() const { return mu_; }
  const GigParams& mixing() const { return mixing_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::LLT<Eigen::MatrixXd>& sigma_cholesky() const { return chol_; }
  double log_det_sigma() const { return log_det_; }

 private:
  Eigen::VectorXd mu_;
  GigParams mixing_;
  Eigen::MatrixXd sigma_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  double log_det_;
};

/// Log density. The normalizer's power of (2 pi) and the Bessel index shift
/// both use dim(x); log|sigma| enters as -1/2 log det.
double mgh_log_pdf(const MghParams& params, const Eigen::VectorXd& x);
Eigen::VectorXd mgh_sample(const MghParams& params, RandomStream& rng);

/// Log density of Normal(mean, variance) at x.
double normal_log_pdf(double x, double mean, double variance);

}  // namespace dynsparse
