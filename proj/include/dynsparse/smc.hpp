#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dynsparse/dynamic_prior.hpp"
#include "dynsparse/parallel.hpp"
#include "dynsparse/random.hpp"
#include "dynsparse/regression_data.hpp"

namespace dynsparse {

enum class ResampleMode {
  every_step,     // systematic resampling at every t
  ess_threshold,  // only when ESS < N / 2
};

struct SmcOptions {
  int n_particles = 1000;
  /// Per-step noise scale sigma_t; empty means config.sigma() throughout.
  std::vector<double> sigma_t;
  ResampleMode resample = ResampleMode::every_step;
  Execution exec = Execution::parallel;
};

/// One generation of the particle system. Particle i of generation t
/// descends from particle ancestor[i] of generation t - 1.
struct Generation {
  Eigen::MatrixXd beta;  // p x N
  Eigen::MatrixXd tau;   // p x N, prior variance of beta_t given the window
  std::vector<int> order;
  std::vector<int> ancestor;  // -1 at t = 0
  std::vector<double> log_weight;  // normalized, after weighting
};

/// The last k values (generations t-k+1..t) along the lineage of particle i
/// of generation t, as a k x p matrix with the oldest row first. Never reads
/// across lineages.
void lineage_window(std::span<const Generation> generations, int t, int i, int k, Eigen::MatrixXd& out);

struct Proposal {
  Eigen::VectorXd beta;
  Eigen::VectorXd tau;  // prior variance per coordinate
  int order = 0;
  double log_weight = 0.0;
};

/// One proposal from the locally optimal kernel.
///
/// d_t: fixed mode min(d, t_index); time-varying mode 0 at t_index = 0,
/// else Bin(prev_order + 1, rho). The prior for beta_{j,t} is then
/// Normal(m_j, v_j) with m_j, v_j from conditional_law over the last d_t
/// rows of `history` (k x p, oldest first) and a GIG draw, and
///   beta_t ~ Normal(m + P^{-1} X'(y - X m) / sigma^2, P^{-1}),  P = D_v^{-1} + X'X / sigma^2,
///   log_weight = log Normal(y; X m, X D_v X' + sigma^2 I).
/// The weight does not depend on the sampled beta_t.
Proposal propose_step(const Eigen::MatrixXd& history, int prev_order, int t_index, const Eigen::VectorXd& y,
                      const Eigen::MatrixXd& X, const ModelConfig& config, double sigma, RandomStream& rng);

/// Systematic resampling: out[i] = the index whose cumulative normalized
/// weight first exceeds (i + u) / N, for u in [0, 1).
void systematic_resample(std::span<const double> log_weights, double u, std::span<int> out);

/// 1 / sum W_i^2 for normalized weights given in log space.
double effective_sample_size(std::span<const double> log_weights);

struct SmcResult {
  Eigen::MatrixXd trajectory;  // p x T, one lineage drawn by terminal weight
  std::vector<int> order;      // d_t along that lineage
  double log_evidence = 0.0;   // log Z-hat = sum_t log(sum_i W_{t-1,i} w_{t,i})
  std::vector<double> log_evidence_increments;
  std::vector<double> ess;  // before resampling, per t
  Eigen::MatrixXd lineage_mean;  // terminal-weighted mean over all lineages
};

/// Runs t = 1..T. Slot i draws from its own stream derive_seed(seed, {i}),
/// resampling from derive_seed(seed, {tag}); serial and parallel runs are
/// identical. Throws NumericalError naming t if every weight is zero.
SmcResult smc_run(const RegressionData& data, const ModelConfig& config, const SmcOptions& options,
                  std::uint64_t seed);

/// Full genealogy variant of smc_run for diagnostics and tests.
SmcResult smc_run(const RegressionData& data, const ModelConfig& config, const SmcOptions& options,
                  std::uint64_t seed, std::vector<Generation>& generations);

struct PosteriorChain {
  std::vector<Eigen::MatrixXd> trajectories;  // state after each iteration
  std::vector<std::vector<int>> orders;
  std::vector<double> log_evidence;           // of the state after each iteration
  std::vector<double> proposed_log_evidence;  // -inf when the run failed
  std::vector<bool> accepted;
  std::vector<std::string> warnings;

  std::size_t size() const { return trajectories.size(); }
  /// Fraction accepted over iterations 2..M; NaN when M = 1.
  double acceptance_rate() const;
};

/// Particle independent Metropolis-Hastings. Iteration m runs SMC with
/// seed derive_seed(seed, {m}); iteration 1 is accepted unconditionally,
/// later ones with probability min(1, Z*/Z). A failed run is a rejection
/// plus a warning; a failed first run throws.
PosteriorChain pimh_run(const RegressionData& data, const ModelConfig& config, const SmcOptions& options,
                        int iterations, std::uint64_t seed);

struct PosteriorSummary {
  Eigen::MatrixXd mean;  // p x T
  std::vector<double> probs;
  std::vector<Eigen::MatrixXd> quantiles;  // one p x T matrix per prob, type-7 interpolation
  Eigen::MatrixXd order_frequency;         // T x (max d + 1)
  std::vector<double> order_median;
  std::vector<double> order_mean;
  std::vector<double> log_evidence;
  double acceptance_rate = 0.0;
};

/// Summaries over chain iterations [burn_in, M). Throws DomainError for an
/// empty range or probs outside (0, 1).
PosteriorSummary posterior_summary(const PosteriorChain& chain, std::span<const double> probs, int burn_in = 0);

/// Type-7 sample quantile (linear interpolation between order statistics).
double quantile_type7(std::vector<double> values, double prob);

}  // namespace dynsparse
