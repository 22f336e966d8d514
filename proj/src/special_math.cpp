#include "dynsparse/special_math.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "dynsparse/errors.hpp"

namespace dynsparse {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxSeriesTerms = 10000;

// Taylor coefficients of 1/Gamma(x) around 0: 1/Gamma(x) = sum_k c[k] x^k.
constexpr std::array<double, 29> kRecipGamma = {
    0.0,
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
    1.1866922547516003326e-18,
    1.4123806553180317816e-18,
};

// Temme's auxiliary gamma combinations for |mu| <= 1/2:
//   gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu),  gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2
struct TemmeGammas {
  double gam1, gam2, gampl, gammi;
};

TemmeGammas temme_gammas(double mu) {
  // 1/Gamma(1+x) = sum_{k>=1} c[k] x^{k-1}; even k feed gam1, odd k gam2.
  const double mu2 = mu * mu;
  double gam1 = 0.0, gam2 = 0.0, pw = 1.0;
  for (std::size_t k = 2; k < kRecipGamma.size(); k += 2, pw *= mu2) gam1 -= kRecipGamma[k] * pw;
  pw = 1.0;
  for (std::size_t k = 1; k < kRecipGamma.size(); k += 2, pw *= mu2) gam2 += kRecipGamma[k] * pw;
  return {gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1};
}

struct LowOrderK {
  double log_k_mu;  // log K_mu(x)
  double ratio;     // K_{mu+1}(x) / K_mu(x)
};

// Temme's series, x < 2, |mu| <= 1/2.
LowOrderK temme_series(double mu, double x) {
  const double x2 = 0.5 * x;
  const double pimu = std::numbers::pi * mu;
  const double fact = std::fabs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
  const double d = -std::log(x2);
  const double e = mu * d;
  const double fact2 = std::fabs(e) < kEps ? 1.0 : std::sinh(e) / e;
  const TemmeGammas g = temme_gammas(mu);
  double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
  double sum = ff;
  const double ee = std::exp(e);
  double p = 0.5 * ee / g.gampl;
  double q = 0.5 / (ee * g.gammi);
  double c = 1.0;
  const double dd = x2 * x2;
  double sum1 = p;
  const double mu2 = mu * mu;
  int i = 1;
  for (; i <= kMaxSeriesTerms; ++i) {
    ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
    c *= dd / i;
    p /= (i - mu);
    q /= (i + mu);
    const double del = c * ff;
    sum += del;
    sum1 += c * (p - i * ff);
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  if (i > kMaxSeriesTerms) {
    throw NumericalError("log_bessel_k: Temme series did not converge");
  }
  // K_{mu+1} = sum1 * 2/x; keep the ratio in log form for tiny x.
  const double log_ratio = std::log(sum1) - std::log(sum) + std::log(2.0 / x);
  return {std::log(sum), std::exp(log_ratio)};
}

// Steed's continued fraction (CF2), x >= 2, |mu| <= 1/2.
LowOrderK steed_cf2(double mu, double x) {
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  int i = 1;
  for (; i <= kMaxSeriesTerms; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::fabs(dels / s) < kEps) break;
  }
  if (i > kMaxSeriesTerms) {
    throw NumericalError("log_bessel_k: continued fraction did not converge");
  }
  h = a1 * h;
  const double log_k_mu = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x - std::log(s);
  const double ratio = (mu + x + 0.5 - h) / x;
  return {log_k_mu, ratio};
}

std::string describe(double order, double arg) {
  std::ostringstream os;
  os.precision(17);
  os << "order=" << order << ", arg=" << arg;
  return os.str();
}

}  // namespace

LogValue LogValue::from_value(double v) {
  if (v < 0.0 || std::isnan(v)) throw DomainError("LogValue: negative or NaN value");
  return LogValue(v == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(v));
}

LogValue operator+(LogValue a, LogValue b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const double hi = std::max(a.log_, b.log_);
  const double lo = std::min(a.log_, b.log_);
  return LogValue(hi + std::log1p(std::exp(lo - hi)));
}

double log_bessel_k(double order, double arg) {
  if (!std::isfinite(order) || !std::isfinite(arg) || arg <= 0.0) {
    throw DomainError("log_bessel_k: requires finite order and arg > 0 (" + describe(order, arg) + ")");
  }
  const double nu = std::fabs(order);
  const int steps = static_cast<int>(nu + 0.5);
  const double mu = nu - steps;  // in [-1/2, 1/2)

  // Recurrence ratios 2(mu+k)/x overflow only for arguments far below any
  // practical use; there the leading small-argument term is exact to O(x^2).
  if (arg < 1e-280 && nu >= 1.0) {
    return std::lgamma(nu) + (nu - 1.0) * std::log(2.0) - nu * std::log(arg);
  }

  const LowOrderK base = arg < 2.0 ? temme_series(mu, arg) : steed_cf2(mu, arg);
  double log_k = base.log_k_mu;
  double ratio = base.ratio;  // K_{mu+k+1} / K_{mu+k}
  for (int k = 0; k < steps; ++k) {
    log_k += std::log(ratio);
    ratio = 1.0 / ratio + 2.0 * (mu + k + 1) / arg;
  }
  if (!std::isfinite(log_k)) {
    throw NumericalError("log_bessel_k: non-finite result (" + describe(order, arg) + ")");
  }
  return log_k;
}

double log_sum_exp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

double log_gig_normalizer(double nu, double delta, double gamma) {
  if (!std::isfinite(nu) || !std::isfinite(delta) || !std::isfinite(gamma) || delta < 0.0 ||
      gamma < 0.0) {
    throw DomainError("log_gig_normalizer: non-finite or negative parameter");
  }
  if (delta == 0.0 && gamma == 0.0) {
    throw DomainError("log_gig_normalizer: delta and gamma cannot both be zero");
  }
  if (delta == 0.0) {
    if (!(nu > 0.0)) throw DomainError("log_gig_normalizer: delta = 0 requires nu > 0");
    // Gamma(shape nu, rate gamma^2/2)
    return nu * std::log(0.5 * gamma * gamma) - std::lgamma(nu);
  }
  if (gamma == 0.0) {
    if (!(nu < 0.0)) throw DomainError("log_gig_normalizer: gamma = 0 requires nu < 0");
    // Inverse gamma(shape -nu, scale delta^2/2)
    return -nu * std::log(0.5 * delta * delta) - std::lgamma(-nu);
  }
  return nu * (std::log(gamma) - std::log(delta)) - std::log(2.0) -
         log_bessel_k(nu, delta * gamma);
}

double integrate_positive_halfline(const std::function<double(double)>& f, double rel_tol) {
  // x = exp(pi/2 sinh t), dx = x pi/2 cosh t dt. |t| <= 6.8 keeps x within
  // roughly [1e-300, 1e300].
  constexpr double kTMax = 6.8;
  constexpr int kMaxLevel = 14;
  constexpr int kMinLevel = 4;
  const double half_pi = 0.5 * std::numbers::pi;

  auto term = [&](double t) {
    const double x = std::exp(half_pi * std::sinh(t));
    if (x == 0.0 || !std::isfinite(x)) return 0.0;
    const double w = half_pi * std::cosh(t) * x;
    const double fx = f(x);
    if (!std::isfinite(fx)) {
      throw NumericalError("integrate_positive_halfline: non-finite integrand at x=" + std::to_string(x));
    }
    return fx == 0.0 ? 0.0 : fx * w;
  };

  double h = 1.0;
  double sum = term(0.0);
  for (double t = h; t <= kTMax; t += h) sum += term(t) + term(-t);
  double estimate = sum * h;

  for (int level = 1; level <= kMaxLevel; ++level) {
    h *= 0.5;
    double added = 0.0;
    for (double t = h; t <= kTMax; t += 2.0 * h) added += term(t) + term(-t);
    sum += added;
    const double next = sum * h;
    const double change = std::fabs(next - estimate);
    estimate = next;
    if (level >= kMinLevel && change <= rel_tol * std::fabs(next)) return next;
    if (level >= kMinLevel && next == 0.0) return 0.0;
  }
  std::ostringstream os;
  os << "integrate_positive_halfline: no convergence to rel_tol=" << rel_tol
     << " after " << kMaxLevel << " levels (last estimate " << estimate << ")";
  throw NumericalError(os.str());
}

double integrate_real_line(const std::function<double(double)>& f, double center, double rel_tol) {
  return integrate_positive_halfline([&](double x) { return f(center + x) + f(center - x); },
                                     rel_tol);
}

double integrate_interval(const std::function<double(double)>& f, double a, double b,
                          double rel_tol) {
  if (!(b > a)) {
    if (a == b) return 0.0;
    return -integrate_interval(f, b, a, rel_tol);
  }
  const double width = b - a;
  return integrate_positive_halfline(
      [&](double s) {
        const double u = 1.0 / (1.0 + s);
        return f(a + width * u) * width * u * u;
      },
      rel_tol);
}

}  // namespace dynsparse
