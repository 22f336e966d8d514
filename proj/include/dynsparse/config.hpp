#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynsparse/dynamic_prior.hpp"
#include "dynsparse/parallel.hpp"
#include "dynsparse/smc.hpp"

namespace dynsparse {

enum class Command { simulate, generate, fit_map, fit_glasso, fit_smc, acf, verify };

/// Throws UsageError for an unknown name.
Command parse_command(std::string_view name);
std::string command_name(Command command);
/// Commands whose output depends on a random seed.
bool is_stochastic(Command command);

using KeyValues = std::map<std::string, std::string>;

/// Every recognised configuration key, in manifest order.
const std::vector<std::string>& config_keys();

/// Flat `key = value` lines; `#` starts a comment. Throws ParseError with
/// the line number for malformed lines, unknown keys, or repeated keys.
KeyValues parse_config_text(std::string_view text);
KeyValues read_config_file(const std::filesystem::path& path);

/// Fully resolved settings for one invocation.
struct RunConfig {
  Command command = Command::simulate;

  double nu = 1.0;
  double delta = 0.0;
  double gamma = 1.0;
  double alpha = 0.0;
  double sigma = 1.0;
  std::optional<int> d;  // set unless rho is
  std::optional<double> rho;
  int p = 1;     // simulate only; fits take p from the data
  int T = 1000;  // simulate and acf

  int n_particles = 1000;
  int n_iters = 1000;
  int burn_in = 0;
  ResampleMode resample = ResampleMode::every_step;
  double tol = 1e-8;
  std::optional<int> max_iter;  // 100 for EM, 10^4 sweeps for group lasso
  std::optional<double> eps_sparse;
  std::vector<double> probs{0.05, 0.5, 0.95};
  std::optional<std::uint64_t> seed;
  int max_lag = 300;
  std::string generator = "piecewise";
  Execution execution = Execution::parallel;

  std::filesystem::path data_path;
  std::filesystem::path out_dir = ".";

  /// Model for predictor count p. Throws UsageError if the parameters are invalid.
  ModelConfig model(int predictors) const;
  /// Every key with its resolved value, formatted canonically.
  KeyValues resolved() const;
};

/// Merges file values with overrides (overrides win) on top of defaults and
/// validates. Throws UsageError naming the offending key. The seed is
/// mandatory for stochastic commands and data_path for fits.
RunConfig resolve_config(Command command, const KeyValues& file_values, const KeyValues& overrides);

}  // namespace dynsparse
