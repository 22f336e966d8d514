#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>

namespace dynsparse {

/// A positive quantity stored as its natural logarithm. Zero is -inf.
class LogValue {
 public:
  constexpr LogValue() = default;
  constexpr explicit LogValue(double log_magnitude) : log_(log_magnitude) {}

  static constexpr LogValue zero() { return LogValue(-std::numeric_limits<double>::infinity()); }
  static LogValue from_value(double v);

  constexpr double log_magnitude() const { return log_; }
  double value() const { return std::exp(log_); }
  constexpr bool is_zero() const { return log_ == -std::numeric_limits<double>::infinity(); }

  friend constexpr LogValue operator*(LogValue a, LogValue b) { return LogValue(a.log_ + b.log_); }
  friend constexpr LogValue operator/(LogValue a, LogValue b) { return LogValue(a.log_ - b.log_); }
  friend LogValue operator+(LogValue a, LogValue b);

 private:
  double log_ = 0.0;
};

/// Natural log of the modified Bessel function of the third kind K_order(arg).
///
/// Temme's series for arg < 2 and Steed's continued fraction otherwise give
/// K_mu and K_{mu+1} for |mu| <= 1/2; the ratio K_{a+1}/K_a is then carried
/// up to |order| by forward recurrence, accumulated in log space so neither
/// large orders at tiny arguments nor e^{-arg} at large arguments overflow.
/// Throws DomainError for arg <= 0 or non-finite inputs.
double log_bessel_k(double order, double arg);

/// log of sum(exp(values)), -inf for an empty span.
double log_sum_exp(std::span<const double> values);

/// Log of the constant C with C * x^{nu-1} exp(-(delta^2/x + gamma^2 x)/2)
/// integrating to one over (0, inf). delta == 0 uses the gamma limit and
/// gamma == 0 the inverse-gamma limit. Throws DomainError outside
/// {delta > 0, gamma > 0} U {delta = 0, gamma > 0, nu > 0} U {gamma = 0, delta > 0, nu < 0}.
double log_gig_normalizer(double nu, double delta, double gamma);

/// Double-exponential (exp-sinh) quadrature over (0, inf).
///
/// The step is halved until two successive estimates agree to rel_tol.
/// Throws NumericalError if that does not happen within the level budget or
/// the integrand returns a non-finite value.
double integrate_positive_halfline(const std::function<double(double)>& f, double rel_tol = 1e-10);

/// Integral over the real line, split at `center` into two half-line
/// integrals. Place `center` near the bulk of the mass.
double integrate_real_line(const std::function<double(double)>& f, double center = 0.0,
                           double rel_tol = 1e-10);

/// Integral over a finite interval [a, b], via the substitution
/// x = a + (b - a) / (1 + s) onto (0, inf).
double integrate_interval(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-10);

}  // namespace dynsparse
