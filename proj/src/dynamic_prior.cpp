#include "dynsparse/dynamic_prior.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dynsparse/errors.hpp"

namespace dynsparse {

namespace {

constexpr std::uint64_t kOrderChainStream = 0xd0c4a1ULL;

// One row of the process given the per-step window lengths.
void simulate_row(const ModelConfig& config, std::span<const int> window_length,
                  RandomStream& rng, double* row, long stride) {
  const int T = static_cast<int>(window_length.size());
  std::vector<double> history(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const int k = window_length[static_cast<std::size_t>(t)];
    const std::span<const double> window(history.data() + (t - k), static_cast<std::size_t>(k));
    const ConditionalLaw law = conditional_law(config, window);
    const double tau = gig_sample(law.mixing, rng);
    history[static_cast<std::size_t>(t)] = law.location + std::sqrt(law.variance_factor * tau) * rng.normal();
    row[t * stride] = history[static_cast<std::size_t>(t)];
  }
}

// Whole-row draw from mGH(0_T, nu, delta, gamma, Sigma_T): one shared scale,
// AR(1) Gaussian innovations.
void simulate_shared_row(const ModelConfig& config, int T, RandomStream& rng, double* row, long stride) {
  const GigParams mixing(config.nu(), config.delta(), config.gamma());
  const double tau = gig_sample(mixing, rng);
  const double a = config.alpha();
  const double innovation_sd = std::sqrt((1.0 - a * a) * tau);
  double prev = std::sqrt(tau) * rng.normal();
  row[0] = prev;
  for (int t = 1; t < T; ++t) {
    prev = a * prev + innovation_sd * rng.normal();
    row[t * stride] = prev;
  }
}

}  // namespace

ModelConfig ModelConfig::fixed_order(double nu, double delta, double gamma, double alpha, int d,
                                     double sigma, int p) {
  ModelConfig c;
  c.nu_ = nu;
  c.delta_ = delta;
  c.gamma_ = gamma;
  c.alpha_ = alpha;
  c.sigma_ = sigma;
  c.p_ = p;
  c.d_ = d;
  c.validate();
  return c;
}

ModelConfig ModelConfig::time_varying(double nu, double delta, double gamma, double alpha, double rho,
                                      double sigma, int p) {
  ModelConfig c;
  c.nu_ = nu;
  c.delta_ = delta;
  c.gamma_ = gamma;
  c.alpha_ = alpha;
  c.sigma_ = sigma;
  c.p_ = p;
  c.rho_ = rho;
  c.validate();
  return c;
}

ModelConfig ModelConfig::with_p(int p) const {
  ModelConfig c = *this;
  c.p_ = p;
  c.validate();
  return c;
}

int ModelConfig::order() const {
  if (!d_) throw UsageError("ModelConfig: no fixed order d in time-varying mode");
  return *d_;
}

double ModelConfig::rho() const {
  if (!rho_) throw UsageError("ModelConfig: no rho in fixed-order mode");
  return *rho_;
}

void ModelConfig::validate() const {
  // Stationary GIG region; throws with the triple on failure.
  const GigParams base(nu_, delta_, gamma_);
  if (!(alpha_ >= 0.0 && alpha_ <= kMaxAlpha)) {
    throw DomainError("ModelConfig: alpha must lie in [0, 1 - 1e-9], got " + std::to_string(alpha_));
  }
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw DomainError("ModelConfig: sigma must be positive");
  if (p_ < 1) throw DomainError("ModelConfig: p must be at least 1");
  if (d_.has_value() == rho_.has_value()) {
    throw DomainError("ModelConfig: exactly one of d and rho must be set");
  }
  if (d_) {
    if (*d_ < 0) throw DomainError("ModelConfig: d must be nonnegative");
    // With an all-zero window the conditional GIG keeps delta = 0, which
    // needs a positive index for every window length up to d.
    if (base.delta() == 0.0 && !(nu_ - 0.5 * *d_ > 0.0)) {
      throw DomainError("ModelConfig: delta = 0 requires nu - d/2 > 0 (nu=" + std::to_string(nu_) +
                        ", d=" + std::to_string(*d_) + ")");
    }
  } else {
    if (!(*rho_ >= 0.0 && *rho_ <= 1.0)) throw DomainError("ModelConfig: rho must lie in [0, 1]");
    if (base.delta() == 0.0) {
      throw DomainError("ModelConfig: time-varying order requires delta > 0");
    }
  }
}

Eigen::MatrixXd WindowCorrelation::matrix() const {
  Eigen::MatrixXd m(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) m(i, j) = std::pow(alpha_, std::abs(i - j));
  }
  return m;
}

Eigen::MatrixXd WindowCorrelation::cholesky_factor() const {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(dim_, dim_);
  const double s = std::sqrt(1.0 - alpha_ * alpha_);
  for (int i = 0; i < dim_; ++i) {
    l(i, 0) = std::pow(alpha_, i);
    for (int j = 1; j <= i; ++j) l(i, j) = s * std::pow(alpha_, i - j);
  }
  return l;
}

double WindowCorrelation::log_det() const {
  return (dim_ - 1) * std::log1p(-alpha_ * alpha_);
}

double WindowCorrelation::quadratic_form(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) {
    throw DomainError("WindowCorrelation: vector of length " + std::to_string(x.size()) +
                      " against window dimension " + std::to_string(dim_));
  }
  if (x.empty()) return 0.0;
  // x1^2 + sum_i (x_i - alpha x_{i-1})^2 / (1 - alpha^2)
  double innovations = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double e = x[i] - alpha_ * x[i - 1];
    innovations += e * e;
  }
  return x[0] * x[0] + innovations / (1.0 - alpha_ * alpha_);
}

WindowCorrelation build_sigma(int dim, double alpha) {
  if (dim < 1) throw DomainError("build_sigma: dim must be at least 1");
  if (!(alpha >= 0.0)) throw DomainError("build_sigma: alpha must be nonnegative");
  if (alpha > ModelConfig::kMaxAlpha) {
    throw DomainError("build_sigma: alpha = " + std::to_string(alpha) + " makes the window correlation singular");
  }
  return WindowCorrelation(dim, alpha);
}

double mahalanobis_norm(std::span<const double> x, const WindowCorrelation& corr) {
  return std::sqrt(corr.quadratic_form(x));
}

ConditionalLaw conditional_law(const ModelConfig& config, std::span<const double> window) {
  if (window.empty()) {
    return {0.0, 1.0, GigParams(config.nu(), config.delta(), config.gamma())};
  }
  const int k = static_cast<int>(window.size());
  const double a = config.alpha();
  double quad = 0.0;
  for (int i = 1; i < k; ++i) {
    const double e = window[static_cast<std::size_t>(i)] - a * window[static_cast<std::size_t>(i - 1)];
    quad += e * e;
  }
  quad = window[0] * window[0] + quad / (1.0 - a * a);
  const double delta_w = std::sqrt(config.delta() * config.delta() + quad);
  return {a * window.back(), 1.0 - a * a, GigParams(config.nu() - 0.5 * k, delta_w, config.gamma())};
}

GhParams conditional_gh(const ModelConfig& config, std::span<const double> window) {
  const ConditionalLaw law = conditional_law(config, window);
  const double s = std::sqrt(law.variance_factor);
  return GhParams(law.location, law.mixing.nu(), s * law.mixing.delta(), law.mixing.gamma() / s);
}

GigParams conditional_gig(const ModelConfig& config, std::span<const double> window) {
  return conditional_law(config, window).mixing;
}

SimulatedPath simulate_path(const ModelConfig& config, int T, std::uint64_t seed, Execution exec) {
  if (T < 1) throw DomainError("simulate_path: T must be at least 1");
  const int p = config.p();
  SimulatedPath out;
  out.beta.resize(p, T);

  std::vector<int> window_length(static_cast<std::size_t>(T));
  bool shared = false;
  if (config.has_fixed_order()) {
    const int d = config.order();
    out.order.assign(static_cast<std::size_t>(T), d);
    shared = d >= T - 1 && T > 1 && d > 0;
    for (int t = 0; t < T; ++t) window_length[static_cast<std::size_t>(t)] = std::min(d, t);
  } else {
    RandomStream chain_rng(derive_seed(seed, {kOrderChainStream}));
    out.order = simulate_d_chain(config.rho(), 0, T, chain_rng);
    for (int t = 0; t < T; ++t) {
      window_length[static_cast<std::size_t>(t)] = std::min(out.order[static_cast<std::size_t>(t)], t);
    }
  }

  const long stride = out.beta.outerStride();
  for_each_index(exec, static_cast<std::size_t>(p), [&](std::size_t j) {
    RandomStream rng(derive_seed(seed, {j}));
    double* row = out.beta.data() + j;
    if (shared) {
      simulate_shared_row(config, T, rng, row, stride);
    } else {
      simulate_row(config, window_length, rng, row, stride);
    }
  });
  return out;
}

std::vector<int> simulate_d_chain(double rho, int d0, int T, RandomStream& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("simulate_d_chain: rho must lie in [0, 1]");
  if (d0 < 0 || T < 1) throw DomainError("simulate_d_chain: need d0 >= 0 and T >= 1");
  std::vector<int> d(static_cast<std::size_t>(T));
  d[0] = d0;
  for (std::size_t t = 1; t < d.size(); ++t) d[t] = rng.binomial(d[t - 1] + 1, rho);
  return d;
}

std::vector<double> autocorrelation(std::span<const double> series, int max_lag, Execution exec) {
  const std::size_t n = series.size();
  if (max_lag < 1 || n <= static_cast<std::size_t>(max_lag)) {
    throw DomainError("autocorrelation: series length must exceed max_lag >= 1");
  }
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> centred(n);
  double c0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centred[i] = series[i] - mean;
    c0 += centred[i] * centred[i];
  }
  if (!(c0 > 0.0)) throw DomainError("autocorrelation: undefined for a constant series");
  std::vector<double> acf(static_cast<std::size_t>(max_lag));
  for_each_index(exec, acf.size(), [&](std::size_t idx) {
    const std::size_t lag = idx + 1;
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) c += centred[i] * centred[i + lag];
    acf[idx] = c / c0;
  });
  return acf;
}

}  // namespace dynsparse
