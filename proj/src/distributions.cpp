#include "dynsparse/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "dynsparse/errors.hpp"
#include "dynsparse/special_math.hpp"

namespace dynsparse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

std::string gig_triple(double nu, double delta, double gamma) {
  std::ostringstream os;
  os.precision(17);
  os << "(nu=" << nu << ", delta=" << delta << ", gamma=" << gamma << ")";
  return os.str();
}

// Mode of x^{lambda-1} exp(-omega/2 (x + 1/x)).
double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// The three samplers below draw from the standardized density
// x^{lambda-1} exp(-omega/2 (x + 1/x)), lambda >= 0, omega > 0.

double rou_noshift(double lambda, double omega, RandomStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

double rou_shift(double lambda, double omega, RandomStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Extremes of (x - xm) sqrt(f(x)) are roots of y^3 + a y^2 + b y + c.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double arg = std::clamp(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)), -1.0, 1.0);
  const double fi = std::acos(arg);
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);
  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Non-T-concave corner: lambda < 1, omega small. Constant hat on [0, x0],
// power hat on [x0, 2/omega], exponential tail beyond.
double three_piece(double lambda, double omega, RandomStream& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  const double a0 = k0 * x0;
  double k1, a1, k2, a2;
  if (x0 >= 2.0 / omega) {
    k1 = 0.0;
    a1 = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    a2 = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    a1 = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                       : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    a2 = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = a0 + a1 + a2;
  const double tail_start = std::max(x0, 2.0 / omega);
  for (;;) {
    double v = total * rng.uniform();
    double x, hx;
    if (v <= a0) {
      x = x0 * v / a0;
      hx = k0;
    } else if ((v -= a0) <= a1) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= a1;
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * tail_start) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace

GigParams::GigParams(double nu, double delta, double gamma)
    : nu_(nu), delta_(delta < kZeroDelta ? 0.0 : delta), gamma_(gamma) {
  if (!std::isfinite(nu) || !std::isfinite(delta) || !std::isfinite(gamma) || delta < 0.0 ||
      gamma < 0.0) {
    throw DomainError("GigParams: parameters must be finite with delta, gamma >= 0 " +
                      gig_triple(nu, delta, gamma));
  }
  if (delta_ == 0.0 && gamma_ == 0.0) {
    throw DomainError("GigParams: delta and gamma cannot both be zero " + gig_triple(nu, delta, gamma));
  }
  if (delta_ == 0.0 && !(nu_ > 0.0)) {
    throw DomainError("GigParams: delta = 0 requires nu > 0 " + gig_triple(nu, delta, gamma));
  }
  if (gamma_ == 0.0 && !(nu_ < 0.0)) {
    throw DomainError("GigParams: gamma = 0 requires nu < 0 " + gig_triple(nu, delta, gamma));
  }
}

double GigParams::log_normalizer() const { return log_gig_normalizer(nu_, delta_, gamma_); }

double gig_log_pdf(const GigParams& params, double x) {
  if (!(x > 0.0)) throw DomainError("gig_log_pdf: x must be positive");
  const double d2 = params.delta() * params.delta();
  const double g2 = params.gamma() * params.gamma();
  return params.log_normalizer() + (params.nu() - 1.0) * std::log(x) - 0.5 * (d2 / x + g2 * x);
}

double gig_sample(const GigParams& params, RandomStream& rng) {
  const double nu = params.nu();
  const double delta = params.delta();
  const double gamma = params.gamma();
  if (delta == 0.0) {
    // Gamma(nu, rate gamma^2 / 2)
    const double log_x = rng.log_gamma_variate(nu) + std::log(2.0 / (gamma * gamma));
    return std::max(std::exp(log_x), std::numeric_limits<double>::min());
  }
  if (gamma == 0.0) {
    // Inverse gamma(-nu, scale delta^2 / 2)
    const double log_x = std::log(0.5 * delta * delta) - rng.log_gamma_variate(-nu);
    return std::max(std::exp(log_x), std::numeric_limits<double>::min());
  }
  const double lambda = std::fabs(nu);
  const double omega = delta * gamma;
  const double scale = delta / gamma;
  double x;
  if (lambda > 2.0 || omega > 3.0) {
    x = rou_shift(lambda, omega, rng);
  } else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    x = rou_noshift(lambda, omega, rng);
  } else {
    x = three_piece(lambda, omega, rng);
  }
  return nu < 0.0 ? scale / x : scale * x;
}

double gig_moment(const GigParams& params, int power) {
  if (power == 0) return 1.0;
  const double shifted = params.nu() + power;
  if (params.delta() == 0.0 && !(shifted > 0.0)) {
    throw DomainError("gig_moment: E[X^" + std::to_string(power) + "] does not exist for delta = 0, nu = " +
                      std::to_string(params.nu()));
  }
  if (params.gamma() == 0.0 && !(shifted < 0.0)) {
    throw DomainError("gig_moment: E[X^" + std::to_string(power) + "] does not exist for gamma = 0, nu = " +
                      std::to_string(params.nu()));
  }
  // C(nu) / C(nu + power) with C the normalizer of x^{nu-1} exp(...)
  return std::exp(params.log_normalizer() -
                  log_gig_normalizer(shifted, params.delta(), params.gamma()));
}

GhParams::GhParams(double mu, double nu, double delta, double gamma)
    : mu_(mu), mixing_(nu, delta, gamma) {
  if (!std::isfinite(mu)) throw DomainError("GhParams: location must be finite");
}

double gh_log_pdf(const GhParams& params, double x) {
  const GigParams& g = params.mixing();
  const double r = x - params.mu();
  const double q = std::sqrt(g.delta() * g.delta() + r * r);
  const double lambda = g.nu() - 0.5;
  if (q == 0.0) {
    // delta = 0 at the location: finite only when the shifted gamma integral converges
    if (!(lambda > 0.0)) return kInf;
    return g.log_normalizer() - 0.5 * kLogTwoPi - log_gig_normalizer(lambda, 0.0, g.gamma());
  }
  return g.log_normalizer() - 0.5 * kLogTwoPi - log_gig_normalizer(lambda, q, g.gamma());
}

double gh_log_pdf_derivative(const GhParams& params, double x) {
  const GigParams& g = params.mixing();
  const double r = x - params.mu();
  if (r == 0.0) return 0.0;
  const double q = std::sqrt(g.delta() * g.delta() + r * r);
  const double lambda = g.nu() - 0.5;
  if (g.gamma() == 0.0) {
    // density proportional to q^{2 lambda}
    return 2.0 * lambda * r / (q * q);
  }
  const double z = g.gamma() * q;
  return -g.gamma() * (r / q) * std::exp(log_bessel_k(lambda - 1.0, z) - log_bessel_k(lambda, z));
}

double gh_sample(const GhParams& params, RandomStream& rng) {
  const double tau = gig_sample(params.mixing(), rng);
  return params.mu() + std::sqrt(tau) * rng.normal();
}

MghParams::MghParams(Eigen::VectorXd mu, double nu, double delta, double gamma, Eigen::MatrixXd sigma)
    : mu_(std::move(mu)), mixing_(nu, delta, gamma), sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() != mu_.size() || mu_.size() == 0) {
    throw DomainError("MghParams: sigma must be square and match the dimension of mu");
  }
  if (!sigma_.isApprox(sigma_.transpose(), 1e-12)) {
    throw DomainError("MghParams: sigma must be symmetric");
  }
  chol_.compute(sigma_);
  if (chol_.info() != Eigen::Success) {
    throw DomainError("MghParams: sigma must be positive definite");
  }
  const Eigen::VectorXd diag = chol_.matrixL().toDenseMatrix().diagonal();
  if ((diag.array() <= 0.0).any()) throw DomainError("MghParams: sigma must be positive definite");
  log_det_ = 2.0 * diag.array().log().sum();
}

double mgh_log_pdf(const MghParams& params, const Eigen::VectorXd& x) {
  if (x.size() != params.dim()) {
    throw DomainError("mgh_log_pdf: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                      std::to_string(params.dim()) + ")");
  }
  const GigParams& g = params.mixing();
  const Eigen::VectorXd white = params.sigma_cholesky().matrixL().solve(x - params.mu());
  const double q = std::sqrt(g.delta() * g.delta() + white.squaredNorm());
  const double half_dim = 0.5 * static_cast<double>(params.dim());
  const double lambda = g.nu() - half_dim;
  const double base = g.log_normalizer() - half_dim * kLogTwoPi - 0.5 * params.log_det_sigma();
  if (q == 0.0) {
    if (!(lambda > 0.0)) return kInf;
    return base - log_gig_normalizer(lambda, 0.0, g.gamma());
  }
  return base - log_gig_normalizer(lambda, q, g.gamma());
}

Eigen::VectorXd mgh_sample(const MghParams& params, RandomStream& rng) {
  const double tau = gig_sample(params.mixing(), rng);
  Eigen::VectorXd z(params.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const Eigen::VectorXd scaled = params.sigma_cholesky().matrixL() * z;
  return params.mu() + std::sqrt(tau) * scaled;
}

double normal_log_pdf(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (kLogTwoPi + std::log(variance) + r * r / variance);
}

}  // namespace dynsparse
