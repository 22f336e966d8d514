#include "dynsparse/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "dynsparse/errors.hpp"
#include "dynsparse/special_math.hpp"

namespace dynsparse {

namespace {

constexpr std::uint64_t kResampleStream = 0x5e5a3b1e00000001ULL;
constexpr std::uint64_t kAcceptStream = 0xacce97000000002ULL;
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
// Floor on the prior variance; a GIG draw that underflows pins beta_j to m_j.
constexpr double kMinVariance = 1e-300;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Workspace {
  Eigen::MatrixXd window;
  Eigen::MatrixXd precision;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::VectorXd resid;
  Eigen::VectorXd score;
  Eigen::VectorXd shift;
  Eigen::VectorXd noise;
  Eigen::LLT<Eigen::MatrixXd> llt;

  void reserve(Eigen::Index p, Eigen::Index n) {
    precision.resize(p, p);
    mean.resize(p);
    variance.resize(p);
    score.resize(p);
    shift.resize(p);
    noise.resize(p);
    resid.resize(n);
  }
};

int draw_order(const ModelConfig& config, int prev_order, int t_index, RandomStream& rng) {
  if (config.has_fixed_order()) return std::min(config.order(), t_index);
  if (t_index == 0) return 0;
  return rng.binomial(prev_order + 1, config.rho());
}

// Draws one particle into beta_out / tau_out and returns its log weight.
// fetch(k, out) fills out (k x p) with the lineage's last k values.
template <class Fetch>
double propose_kernel(Fetch&& fetch, int prev_order, int t_index, const Eigen::VectorXd& y,
                      const Eigen::MatrixXd& X, const Eigen::MatrixXd& xtx, const ModelConfig& config,
                      double sigma, RandomStream& rng, Workspace& ws, double* beta_out, double* tau_out,
                      int& order_out) {
  const Eigen::Index p = X.cols();
  const Eigen::Index n = X.rows();
  ws.reserve(p, n);
  const int k = draw_order(config, prev_order, t_index, rng);
  order_out = k;
  fetch(k, ws.window);

  double log_det_prior = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const std::span<const double> column(ws.window.data() + j * k, static_cast<std::size_t>(k));
    const ConditionalLaw law = conditional_law(config, column);
    const double tau = gig_sample(law.mixing, rng);
    const double v = std::max(law.variance_factor * tau, kMinVariance);
    ws.mean[j] = law.location;
    ws.variance[j] = v;
    log_det_prior += std::log(v);
  }

  const double s2 = sigma * sigma;
  ws.precision = xtx / s2;
  ws.precision.diagonal() += ws.variance.cwiseInverse();
  ws.llt.compute(ws.precision);
  if (ws.llt.info() != Eigen::Success) {
    throw NumericalError("propose_step: proposal precision is not positive definite (diagonal range [" +
                         std::to_string(ws.precision.diagonal().minCoeff()) + ", " +
                         std::to_string(ws.precision.diagonal().maxCoeff()) + "])");
  }
  ws.resid = y - X * ws.mean;
  ws.score.noalias() = X.transpose() * ws.resid / s2;
  ws.shift = ws.llt.solve(ws.score);

  double log_det_precision = 0.0;
  const auto& factor = ws.llt.matrixLLT();
  for (Eigen::Index j = 0; j < p; ++j) log_det_precision += 2.0 * std::log(factor(j, j));
  // Normal(y; X m, X D_v X' + s2 I) through the determinant lemma and Woodbury.
  const double quad = ws.resid.squaredNorm() / s2 - ws.score.dot(ws.shift);
  const double nn = static_cast<double>(n);
  const double log_weight =
      -0.5 * (nn * kLogTwoPi + nn * std::log(s2) + log_det_prior + log_det_precision + quad);

  for (Eigen::Index j = 0; j < p; ++j) ws.noise[j] = rng.normal();
  ws.llt.matrixU().solveInPlace(ws.noise);
  for (Eigen::Index j = 0; j < p; ++j) {
    beta_out[j] = ws.mean[j] + ws.shift[j] + ws.noise[j];
    tau_out[j] = ws.variance[j];
  }
  return log_weight;
}

Workspace& thread_workspace() {
  thread_local Workspace ws;
  return ws;
}

double sorted_quantile(const std::vector<double>& sorted, double prob) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void lineage_window(std::span<const Generation> generations, int t, int i, int k, Eigen::MatrixXd& out) {
  if (k < 0 || k > t + 1 || t >= static_cast<int>(generations.size())) {
    throw DomainError("lineage_window: window of " + std::to_string(k) + " values before generation " +
                      std::to_string(t));
  }
  const Eigen::Index p = generations[static_cast<std::size_t>(t)].beta.rows();
  out.resize(k, p);
  int index = i;
  for (int r = k - 1; r >= 0; --r) {
    const Generation& g = generations[static_cast<std::size_t>(t - (k - 1 - r))];
    out.row(r) = g.beta.col(index).transpose();
    index = g.ancestor[static_cast<std::size_t>(index)];
  }
}

Proposal propose_step(const Eigen::MatrixXd& history, int prev_order, int t_index, const Eigen::VectorXd& y,
                      const Eigen::MatrixXd& X, const ModelConfig& config, double sigma, RandomStream& rng) {
  if (X.rows() != y.size() || X.cols() != config.p()) throw DomainError("propose_step: dimension mismatch");
  if (history.rows() > 0 && history.cols() != X.cols()) throw DomainError("propose_step: history must be k x p");
  if (!(sigma > 0.0)) throw DomainError("propose_step: sigma must be positive");
  Proposal out;
  out.beta.resize(X.cols());
  out.tau.resize(X.cols());
  Workspace ws;
  auto fetch = [&](int k, Eigen::MatrixXd& window) {
    if (k > history.rows()) {
      throw DomainError("propose_step: d_t = " + std::to_string(k) + " exceeds the " +
                        std::to_string(history.rows()) + " history rows supplied");
    }
    window = history.bottomRows(k);
  };
  const Eigen::MatrixXd xtx = X.transpose() * X;
  out.log_weight = propose_kernel(fetch, prev_order, t_index, y, X, xtx, config, sigma, rng, ws,
                                  out.beta.data(), out.tau.data(), out.order);
  return out;
}

void systematic_resample(std::span<const double> log_weights, double u, std::span<int> out) {
  if (log_weights.empty() || out.empty()) throw DomainError("systematic_resample: empty input");
  if (!(u >= 0.0 && u < 1.0)) throw DomainError("systematic_resample: u must lie in [0, 1)");
  const double norm = log_sum_exp(log_weights);
  if (!std::isfinite(norm)) throw NumericalError("systematic_resample: weights are all zero");
  const double count = static_cast<double>(out.size());
  double cumulative = std::exp(log_weights[0] - norm);
  std::size_t src = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double target = (static_cast<double>(i) + u) / count;
    while (cumulative <= target && src + 1 < log_weights.size()) {
      ++src;
      cumulative += std::exp(log_weights[src] - norm);
    }
    out[i] = static_cast<int>(src);
  }
}

double effective_sample_size(std::span<const double> log_weights) {
  const double norm = log_sum_exp(log_weights);
  double sum_sq = 0.0;
  for (double lw : log_weights) sum_sq += std::exp(2.0 * (lw - norm));
  return 1.0 / sum_sq;
}

SmcResult smc_run(const RegressionData& data, const ModelConfig& config, const SmcOptions& options,
                  std::uint64_t seed) {
  std::vector<Generation> generations;
  return smc_run(data, config, options, seed, generations);
}

SmcResult smc_run(const RegressionData& data, const ModelConfig& config, const SmcOptions& options,
                  std::uint64_t seed, std::vector<Generation>& generations) {
  const int N = options.n_particles;
  const int T = data.T();
  const Eigen::Index p = data.p();
  if (N < 2) throw DomainError("smc_run: need at least 2 particles");
  if (T < 1) throw DomainError("smc_run: empty data");
  if (p != config.p()) throw DomainError("smc_run: data and config disagree on p");
  if (!options.sigma_t.empty()) {
    if (static_cast<int>(options.sigma_t.size()) != T) throw DomainError("smc_run: sigma_t must have T entries");
    for (double s : options.sigma_t) {
      if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("smc_run: sigma_t entries must be positive");
    }
  }

  std::vector<RandomStream> streams;
  streams.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) streams.emplace_back(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
  RandomStream resample_rng(derive_seed(seed, {kResampleStream}));

  generations.assign(static_cast<std::size_t>(T), Generation{});
  SmcResult result;
  result.log_evidence_increments.resize(static_cast<std::size_t>(T));
  result.ess.resize(static_cast<std::size_t>(T));
  const auto count = static_cast<std::size_t>(N);
  std::vector<double> carried(count, -std::log(static_cast<double>(N)));
  std::vector<double> combined(count);

  for (int t = 0; t < T; ++t) {
    Generation& g = generations[static_cast<std::size_t>(t)];
    g.beta.resize(p, N);
    g.tau.resize(p, N);
    g.order.resize(count);
    g.ancestor.assign(count, -1);
    g.log_weight.resize(count);

    if (t > 0) {
      const Generation& prev = generations[static_cast<std::size_t>(t - 1)];
      const double ess = effective_sample_size(prev.log_weight);
      result.ess[static_cast<std::size_t>(t)] = ess;
      if (options.resample == ResampleMode::every_step || ess < 0.5 * N) {
        systematic_resample(prev.log_weight, resample_rng.uniform(), g.ancestor);
        std::fill(carried.begin(), carried.end(), -std::log(static_cast<double>(N)));
      } else {
        for (int i = 0; i < N; ++i) g.ancestor[static_cast<std::size_t>(i)] = i;
        carried = prev.log_weight;
      }
    } else {
      result.ess[0] = N;
    }

    const double sigma = options.sigma_t.empty() ? config.sigma() : options.sigma_t[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd& X = data.X(t);
    const Eigen::VectorXd& y = data.y(t);
    const Eigen::MatrixXd xtx = X.transpose() * X;
    const std::span<const Generation> lineage(generations.data(), static_cast<std::size_t>(t));

    for_each_index(options.exec, count, [&](std::size_t i) {
      const int parent = g.ancestor[i];
      const int prev_order = t > 0 ? generations[static_cast<std::size_t>(t - 1)].order[static_cast<std::size_t>(parent)] : 0;
      auto fetch = [&](int k, Eigen::MatrixXd& window) {
        if (k == 0) {
          window.resize(0, p);
        } else {
          lineage_window(lineage, t - 1, parent, k, window);
        }
      };
      const auto col = static_cast<Eigen::Index>(i);
      const double increment =
          propose_kernel(fetch, prev_order, t, y, X, xtx, config, sigma, streams[i], thread_workspace(),
                         g.beta.col(col).data(), g.tau.col(col).data(), g.order[i]);
      if (std::isnan(increment)) {
        throw NumericalError("smc_run: NaN weight at t=" + std::to_string(data.label(t)));
      }
      combined[i] = carried[i] + increment;
    });

    const double log_z = log_sum_exp(combined);
    if (!std::isfinite(log_z)) {
      throw NumericalError("smc_run: all particle weights vanished at t=" + std::to_string(data.label(t)));
    }
    result.log_evidence_increments[static_cast<std::size_t>(t)] = log_z;
    result.log_evidence += log_z;
    for (std::size_t i = 0; i < count; ++i) g.log_weight[i] = combined[i] - log_z;
  }

  // Terminal draw and trace-back.
  const Generation& last = generations.back();
  std::vector<int> pick(1);
  systematic_resample(last.log_weight, resample_rng.uniform(), pick);
  result.trajectory.resize(p, T);
  result.order.resize(static_cast<std::size_t>(T));
  int index = pick[0];
  for (int t = T - 1; t >= 0; --t) {
    const Generation& g = generations[static_cast<std::size_t>(t)];
    result.trajectory.col(t) = g.beta.col(index);
    result.order[static_cast<std::size_t>(t)] = g.order[static_cast<std::size_t>(index)];
    index = g.ancestor[static_cast<std::size_t>(index)];
  }

  // Terminal weights pushed back through the genealogy.
  result.lineage_mean = Eigen::MatrixXd::Zero(p, T);
  std::vector<double> mass(count);
  for (std::size_t i = 0; i < count; ++i) mass[i] = std::exp(last.log_weight[i]);
  std::vector<double> parent_mass(count);
  for (int t = T - 1; t >= 0; --t) {
    const Generation& g = generations[static_cast<std::size_t>(t)];
    std::fill(parent_mass.begin(), parent_mass.end(), 0.0);
    for (std::size_t i = 0; i < count; ++i) {
      if (mass[i] == 0.0) continue;
      result.lineage_mean.col(t) += mass[i] * g.beta.col(static_cast<Eigen::Index>(i));
      if (t > 0) parent_mass[static_cast<std::size_t>(g.ancestor[i])] += mass[i];
    }
    mass.swap(parent_mass);
  }
  return result;
}

double PosteriorChain::acceptance_rate() const {
  if (accepted.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto hits = std::count(accepted.begin() + 1, accepted.end(), true);
  return static_cast<double>(hits) / static_cast<double>(accepted.size() - 1);
}

PosteriorChain pimh_run(const RegressionData& data, const ModelConfig& config, const SmcOptions& options,
                        int iterations, std::uint64_t seed) {
  if (iterations < 1) throw DomainError("pimh_run: need at least one iteration");
  RandomStream accept_rng(derive_seed(seed, {kAcceptStream}));
  PosteriorChain chain;
  const auto M = static_cast<std::size_t>(iterations);
  chain.trajectories.reserve(M);
  chain.orders.reserve(M);
  for (int m = 1; m <= iterations; ++m) {
    SmcResult proposal;
    bool ok = true;
    try {
      proposal = smc_run(data, config, options, derive_seed(seed, {static_cast<std::uint64_t>(m)}));
    } catch (const NumericalError& e) {
      if (m == 1) throw NumericalError(std::string("pimh_run: first iteration failed: ") + e.what());
      chain.warnings.push_back("iteration " + std::to_string(m) + " rejected: " + e.what());
      ok = false;
    }
    // Consume the uniform on every iteration so later decisions do not shift.
    const double log_u = std::log(accept_rng.uniform());
    const bool accept = ok && (m == 1 || log_u < proposal.log_evidence - chain.log_evidence.back());
    chain.proposed_log_evidence.push_back(ok ? proposal.log_evidence : kNegInf);
    chain.accepted.push_back(accept);
    if (accept) {
      chain.trajectories.push_back(std::move(proposal.trajectory));
      chain.orders.push_back(std::move(proposal.order));
      chain.log_evidence.push_back(proposal.log_evidence);
    } else {
      chain.trajectories.push_back(chain.trajectories.back());
      chain.orders.push_back(chain.orders.back());
      chain.log_evidence.push_back(chain.log_evidence.back());
    }
  }
  return chain;
}

double quantile_type7(std::vector<double> values, double prob) {
  if (values.empty()) throw DomainError("quantile_type7: empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile_type7: prob must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  return sorted_quantile(values, prob);
}

PosteriorSummary posterior_summary(const PosteriorChain& chain, std::span<const double> probs, int burn_in) {
  const int M = static_cast<int>(chain.size());
  if (burn_in < 0 || burn_in >= M) throw DomainError("posterior_summary: empty chain after burn-in");
  for (double q : probs) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("posterior_summary: probs must lie in (0, 1)");
  }
  const Eigen::Index p = chain.trajectories.front().rows();
  const Eigen::Index T = chain.trajectories.front().cols();
  const auto kept = static_cast<std::size_t>(M - burn_in);

  PosteriorSummary out;
  out.probs.assign(probs.begin(), probs.end());
  out.mean = Eigen::MatrixXd::Zero(p, T);
  out.quantiles.assign(probs.size(), Eigen::MatrixXd(p, T));
  std::vector<double> values(kept);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index t = 0; t < T; ++t) {
      for (std::size_t m = 0; m < kept; ++m) values[m] = chain.trajectories[m + static_cast<std::size_t>(burn_in)](j, t);
      double sum = 0.0;
      for (double v : values) sum += v;
      out.mean(j, t) = sum / static_cast<double>(kept);
      std::sort(values.begin(), values.end());
      for (std::size_t q = 0; q < probs.size(); ++q) out.quantiles[q](j, t) = sorted_quantile(values, probs[q]);
    }
  }

  int max_order = 0;
  for (std::size_t m = static_cast<std::size_t>(burn_in); m < chain.orders.size(); ++m) {
    for (int d : chain.orders[m]) max_order = std::max(max_order, d);
  }
  out.order_frequency = Eigen::MatrixXd::Zero(T, max_order + 1);
  out.order_median.resize(static_cast<std::size_t>(T));
  out.order_mean.resize(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    for (std::size_t m = 0; m < kept; ++m) {
      const int d = chain.orders[m + static_cast<std::size_t>(burn_in)][static_cast<std::size_t>(t)];
      values[m] = d;
      out.order_frequency(t, d) += 1.0 / static_cast<double>(kept);
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    out.order_mean[static_cast<std::size_t>(t)] = sum / static_cast<double>(kept);
    std::sort(values.begin(), values.end());
    out.order_median[static_cast<std::size_t>(t)] = sorted_quantile(values, 0.5);
  }
  out.log_evidence = chain.log_evidence;
  out.acceptance_rate = chain.acceptance_rate();
  return out;
}

}  // namespace dynsparse
