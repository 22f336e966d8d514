#include "dynsparse/config.hpp"

#include <algorithm>
#include <charconv>

#include "dynsparse/csv_io.hpp"
#include "dynsparse/errors.hpp"

namespace dynsparse {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double as_double(const std::string& key, const std::string& value) {
  const auto v = parse_double(value);
  if (!v) throw UsageError("config key '" + key + "': expected a number, found '" + value + "'");
  return *v;
}

long long as_integer(const std::string& key, const std::string& value) {
  const std::string_view cell = trim(value);
  long long v = 0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw UsageError("config key '" + key + "': expected an integer, found '" + value + "'");
  }
  return v;
}

int as_int_at_least(const std::string& key, const std::string& value, int floor) {
  const long long v = as_integer(key, value);
  if (v < floor || v > 1'000'000'000) {
    throw UsageError("config key '" + key + "': must be an integer >= " + std::to_string(floor));
  }
  return static_cast<int>(v);
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "simulate") return Command::simulate;
  if (name == "generate") return Command::generate;
  if (name == "fit-map") return Command::fit_map;
  if (name == "fit-glasso") return Command::fit_glasso;
  if (name == "fit-smc") return Command::fit_smc;
  if (name == "acf") return Command::acf;
  if (name == "verify") return Command::verify;
  throw UsageError("unknown subcommand '" + std::string(name) + "'");
}

std::string command_name(Command command) {
  switch (command) {
    case Command::simulate: return "simulate";
    case Command::generate: return "generate";
    case Command::fit_map: return "fit-map";
    case Command::fit_glasso: return "fit-glasso";
    case Command::fit_smc: return "fit-smc";
    case Command::acf: return "acf";
    case Command::verify: return "verify";
  }
  return "unknown";
}

bool is_stochastic(Command command) {
  return command == Command::simulate || command == Command::generate || command == Command::fit_smc ||
         command == Command::acf;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "nu",       "delta",      "gamma",   "alpha",   "d",        "rho",       "sigma",   "p",
      "T",        "n_particles", "n_iters", "burn_in", "resample", "tol",       "max_iter", "eps_sparse",
      "probs",    "seed",       "max_lag", "generator", "execution", "data_path", "out_dir"};
  return keys;
}

KeyValues parse_config_text(std::string_view text) {
  const auto& keys = config_keys();
  KeyValues out;
  long number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto pos = text.find('\n', start);
    const auto end = pos == std::string_view::npos ? text.size() : pos;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++number;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", number);
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ParseError("unknown key '" + key + "'", number);
    if (!out.emplace(key, value).second) throw ParseError("key '" + key + "' given twice", number);
  }
  return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  try {
    return parse_config_text(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

ModelConfig RunConfig::model(int predictors) const {
  try {
    if (rho) return ModelConfig::time_varying(nu, delta, gamma, alpha, *rho, sigma, predictors);
    return ModelConfig::fixed_order(nu, delta, gamma, alpha, d.value_or(0), sigma, predictors);
  } catch (const DomainError& e) {
    throw UsageError(std::string("invalid model parameters: ") + e.what());
  }
}

KeyValues RunConfig::resolved() const {
  KeyValues out;
  out["nu"] = format_double(nu);
  out["delta"] = format_double(delta);
  out["gamma"] = format_double(gamma);
  out["alpha"] = format_double(alpha);
  out["d"] = d ? std::to_string(*d) : "";
  out["rho"] = rho ? format_double(*rho) : "";
  out["sigma"] = format_double(sigma);
  out["p"] = std::to_string(p);
  out["T"] = std::to_string(T);
  out["n_particles"] = std::to_string(n_particles);
  out["n_iters"] = std::to_string(n_iters);
  out["burn_in"] = std::to_string(burn_in);
  out["resample"] = resample == ResampleMode::every_step ? "every" : "ess";
  out["tol"] = format_double(tol);
  out["max_iter"] = max_iter ? std::to_string(*max_iter) : "";
  out["eps_sparse"] = eps_sparse ? format_double(*eps_sparse) : "";
  out["probs"] = join_doubles(probs);
  out["seed"] = seed ? std::to_string(*seed) : "";
  out["max_lag"] = std::to_string(max_lag);
  out["generator"] = generator;
  out["execution"] = execution == Execution::parallel ? "parallel" : "serial";
  out["data_path"] = data_path.generic_string();
  out["out_dir"] = out_dir.generic_string();
  return out;
}

RunConfig resolve_config(Command command, const KeyValues& file_values, const KeyValues& overrides) {
  KeyValues merged = file_values;
  for (const auto& [k, v] : overrides) merged[k] = v;
  const auto& keys = config_keys();
  for (const auto& [k, v] : merged) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw UsageError("unknown config key '" + k + "'");
  }
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = merged.find(key);
    return it == merged.end() || it->second.empty() ? nullptr : &it->second;
  };

  RunConfig c;
  c.command = command;
  if (auto v = get("nu")) c.nu = as_double("nu", *v);
  if (auto v = get("delta")) c.delta = as_double("delta", *v);
  if (auto v = get("gamma")) c.gamma = as_double("gamma", *v);
  if (auto v = get("alpha")) c.alpha = as_double("alpha", *v);
  if (auto v = get("sigma")) c.sigma = as_double("sigma", *v);
  if (auto v = get("p")) c.p = as_int_at_least("p", *v, 1);
  if (auto v = get("T")) c.T = as_int_at_least("T", *v, 1);
  if (auto v = get("d")) c.d = *v == "T" ? c.T : as_int_at_least("d", *v, 0);
  if (auto v = get("rho")) c.rho = as_double("rho", *v);
  if (c.d && c.rho) throw UsageError("config keys 'd' and 'rho' are mutually exclusive");
  if (auto v = get("n_particles")) c.n_particles = as_int_at_least("n_particles", *v, 2);
  if (auto v = get("n_iters")) c.n_iters = as_int_at_least("n_iters", *v, 1);
  if (auto v = get("burn_in")) c.burn_in = as_int_at_least("burn_in", *v, 0);
  if (c.burn_in >= c.n_iters) throw UsageError("config key 'burn_in' must be below n_iters");
  if (auto v = get("resample")) {
    if (*v == "every") {
      c.resample = ResampleMode::every_step;
    } else if (*v == "ess") {
      c.resample = ResampleMode::ess_threshold;
    } else {
      throw UsageError("config key 'resample': expected every or ess");
    }
  }
  if (auto v = get("tol")) {
    c.tol = as_double("tol", *v);
    if (!(c.tol > 0.0)) throw UsageError("config key 'tol' must be positive");
  }
  if (auto v = get("max_iter")) c.max_iter = as_int_at_least("max_iter", *v, 1);
  if (auto v = get("eps_sparse")) {
    c.eps_sparse = as_double("eps_sparse", *v);
    if (*c.eps_sparse < 0.0) throw UsageError("config key 'eps_sparse' must be nonnegative");
  }
  if (auto v = get("probs")) {
    c.probs.clear();
    std::string_view rest = *v;
    while (true) {
      const auto comma = rest.find(',');
      const std::string cell(trim(rest.substr(0, comma)));
      const double q = as_double("probs", cell);
      if (!(q > 0.0 && q < 1.0)) throw UsageError("config key 'probs': entries must lie in (0, 1)");
      c.probs.push_back(q);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (!std::is_sorted(c.probs.begin(), c.probs.end())) throw UsageError("config key 'probs' must be increasing");
  }
  if (auto v = get("seed")) {
    const long long s = as_integer("seed", *v);
    if (s < 0) throw UsageError("config key 'seed' must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = get("max_lag")) c.max_lag = as_int_at_least("max_lag", *v, 1);
  if (auto v = get("generator")) {
    if (*v != "piecewise" && *v != "portfolio") throw UsageError("config key 'generator': expected piecewise or portfolio");
    c.generator = *v;
  }
  if (auto v = get("execution")) {
    if (*v == "parallel") {
      c.execution = Execution::parallel;
    } else if (*v == "serial") {
      c.execution = Execution::serial;
    } else {
      throw UsageError("config key 'execution': expected parallel or serial");
    }
  }
  if (auto v = get("data_path")) c.data_path = *v;
  if (auto v = get("out_dir")) c.out_dir = *v;

  if (is_stochastic(command) && !c.seed) {
    throw UsageError("subcommand '" + command_name(command) + "' needs a seed for reproducibility");
  }
  const bool fit = command == Command::fit_map || command == Command::fit_glasso || command == Command::fit_smc;
  if (fit) {
    if (c.data_path.empty()) throw UsageError("subcommand '" + command_name(command) + "' needs data_path");
    if (!std::filesystem::is_regular_file(c.data_path)) {
      throw UsageError("data_path '" + c.data_path.string() + "' is not a readable file");
    }
  }
  if ((command == Command::fit_map || command == Command::fit_glasso) && c.rho) {
    throw UsageError("subcommand '" + command_name(command) + "' needs a fixed order d, not rho");
  }
  if (command == Command::acf && c.max_lag >= c.T) throw UsageError("config key 'max_lag' must be below T");
  if (command != Command::verify && command != Command::generate) c.model(c.p);
  return c;
}

}  // namespace dynsparse
