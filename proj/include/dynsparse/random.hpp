#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dynsparse {

/// A seeded random stream with the handful of variate generators the
/// samplers need. The generators are written out here rather than taken
/// from <random> distributions so that a given seed yields the same draws
/// under every standard library.
///
/// A stream is not thread-safe; give each concurrent context its own,
/// derived with derive_seed().
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential();
  /// Gamma(shape, rate 1), Marsaglia-Tsang with the shape < 1 boost.
  double gamma(double shape);
  /// log of a Gamma(shape, 1) draw; exact in the far left tail where the
  /// draw itself would underflow.
  double log_gamma_variate(double shape);
  /// Binomial(trials, p) as a sum of Bernoulli draws.
  int binomial(int trials, double p);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Deterministic child seed from a root seed and a path of indices
/// (splitmix64 mixing); distinct paths give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

}  // namespace dynsparse
