#include "dynsparse/random.hpp"

#include <cmath>

#include "dynsparse/errors.hpp"

namespace dynsparse {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double RandomStream::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  // Marsaglia polar method
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

double RandomStream::exponential() { return -std::log(uniform()); }

double RandomStream::log_gamma_variate(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw DomainError("RandomStream::gamma: shape must be positive and finite");
  }
  if (shape < 1.0) {
    // G(a) = G(a + 1) U^{1/a}
    return log_gamma_variate(shape + 1.0) + std::log(uniform()) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

double RandomStream::gamma(double shape) { return std::exp(log_gamma_variate(shape)); }

int RandomStream::binomial(int trials, double p) {
  if (trials < 0 || !(p >= 0.0 && p <= 1.0)) {
    throw DomainError("RandomStream::binomial: need trials >= 0 and p in [0, 1]");
  }
  if (p == 0.0) return 0;
  if (p == 1.0) return trials;
  int successes = 0;
  for (int i = 0; i < trials; ++i) successes += uniform() < p ? 1 : 0;
  return successes;
}

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t step : path) h = splitmix64(h ^ splitmix64(step + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace dynsparse
