#include "dynsparse/run.hpp"

#include <sstream>

#include "json.hpp"

#include "dynsparse/csv_io.hpp"
#include "dynsparse/dynamic_prior.hpp"
#include "dynsparse/errors.hpp"
#include "dynsparse/group_lasso.hpp"
#include "dynsparse/map_em.hpp"
#include "dynsparse/smc.hpp"
#include "dynsparse/synthetic.hpp"

namespace dynsparse {

namespace {

constexpr std::uint64_t kObservationStream = 0x0b5e7a7100000003ULL;
constexpr std::string_view kFilesMarker = "[files]\n";

std::string manifest_core(const RunConfig& config) {
  std::string core = "version=" + std::string(kVersion) + "\ncommand=" + command_name(config.command) + "\n";
  // out_dir only says where the files go, so reruns elsewhere stay byte-identical.
  for (const auto& [key, value] : config.resolved()) {
    if (key != "out_dir") core += key + "=" + value + "\n";
  }
  return core;
}

// Collects file bodies, then writes them stamped plus the manifest.
class OutputSet {
 public:
  explicit OutputSet(const RunConfig& config) : dir_(config.out_dir), core_(manifest_core(config)) {}

  void add(std::string name, std::string body) { files_.emplace_back(std::move(name), std::move(body)); }

  std::vector<std::filesystem::path> commit() {
    std::filesystem::create_directories(dir_);
    const std::string hash = sha256_hex(core_);
    std::string manifest = core_;
    manifest += kFilesMarker;
    std::vector<std::filesystem::path> written;
    for (const auto& [name, body] : files_) {
      const auto path = dir_ / name;
      write_text_file(path, stamp(hash, body));
      manifest += name + "=" + sha256_hex(body) + "\n";
      written.push_back(path);
    }
    const auto manifest_path = dir_ / "manifest.txt";
    write_text_file(manifest_path, manifest);
    written.push_back(manifest_path);
    std::filesystem::remove(dir_ / "error.json");
    return written;
  }

 private:
  std::filesystem::path dir_;
  std::string core_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string path_csv(const Eigen::MatrixXd& beta, const std::vector<long>& labels, const std::vector<int>* order) {
  std::ostringstream out;
  out << "t,j,beta" << (order ? ",d" : "") << '\n';
  for (Eigen::Index t = 0; t < beta.cols(); ++t) {
    for (Eigen::Index j = 0; j < beta.rows(); ++j) {
      out << labels[static_cast<std::size_t>(t)] << ',' << j + 1 << ',' << format_double(beta(j, t));
      if (order) out << ',' << (*order)[static_cast<std::size_t>(t)];
      out << '\n';
    }
  }
  return out.str();
}

std::vector<long> default_labels(Eigen::Index T) {
  std::vector<long> labels(static_cast<std::size_t>(T));
  for (std::size_t t = 0; t < labels.size(); ++t) labels[t] = static_cast<long>(t + 1);
  return labels;
}

std::vector<EstimateRow> map_rows(const RegressionData& data, const MapFit& fit) {
  std::vector<EstimateRow> rows;
  for (int t = 0; t < data.T(); ++t) {
    for (int j = 0; j < data.p(); ++j) {
      rows.push_back({data.label(t), j + 1, fit.beta_hat(j, t), std::nullopt, std::nullopt, fit.support(j, t)});
    }
  }
  return rows;
}

void run_simulate(const RunConfig& c, OutputSet& out, std::ostream& log) {
  const ModelConfig model = c.model(c.p);
  const SimulatedPath path = simulate_path(model, c.T, *c.seed, c.execution);
  out.add("path.csv", path_csv(path.beta, default_labels(c.T), &path.order));
  const RegressionData obs = observe_directly(path.beta, c.sigma, derive_seed(*c.seed, {kObservationStream}));
  out.add("observations.csv", data_csv_body(obs));
  log << "simulated " << c.p << " x " << c.T << " path\n";
}

void run_generate(const RunConfig& c, OutputSet& out, std::ostream& log) {
  const SyntheticSeries series =
      c.generator == "portfolio" ? portfolio_series(*c.seed, c.T, c.sigma) : piecewise_signal(*c.seed, c.sigma);
  out.add("data.csv", data_csv_body(series.data));
  out.add("truth.csv", path_csv(series.truth, series.data.labels(), nullptr));
  std::string changes = "t\n";
  for (int t : series.change_points) changes += std::to_string(series.data.label(t)) + "\n";
  out.add("change_points.csv", changes);
  log << "generated " << c.generator << " series, T=" << series.data.T() << "\n";
}

void run_fit_map(const RunConfig& c, OutputSet& out, std::ostream& log) {
  const RegressionData data = load_data(c.data_path);
  const ModelConfig model = c.model(data.p());
  const MapFit fit = run_online_map(data, model, {c.tol, c.max_iter.value_or(100), c.eps_sparse});
  out.add("estimates.csv", estimates_csv_body(map_rows(data, fit)));
  std::ostringstream diag;
  std::ostringstream trace;
  diag << "t,em_iters,objective\n";
  trace << "t,iteration,objective\n";
  for (int t = 0; t < data.T(); ++t) {
    const auto& tr = fit.objective_trace[static_cast<std::size_t>(t)];
    diag << data.label(t) << ',' << fit.em_iters[static_cast<std::size_t>(t)] << ',' << format_double(tr.back()) << '\n';
    for (std::size_t i = 0; i < tr.size(); ++i) trace << data.label(t) << ',' << i << ',' << format_double(tr[i]) << '\n';
  }
  out.add("diagnostics.csv", diag.str());
  out.add("objective_trace.csv", trace.str());
  log << "fit-map: T=" << data.T() << " p=" << data.p() << " threshold=" << format_double(fit.sparsity_threshold) << "\n";
}

void run_fit_glasso(const RunConfig& c, OutputSet& out, std::ostream& log) {
  const RegressionData data = load_data(c.data_path);
  const ModelConfig model = c.model(data.p());
  GlassoOptions options;
  options.tol = c.tol;
  options.max_iter = c.max_iter.value_or(10000);
  options.eps_sparse = c.eps_sparse.value_or(0.0);
  options.exec = c.execution;
  const MapFit fit = run_sliding_window(data, model, options);
  out.add("estimates.csv", estimates_csv_body(map_rows(data, fit)));
  std::ostringstream diag;
  diag << "t,sweeps,kkt_residual,zero_groups\n";
  for (int t = 0; t < data.T(); ++t) {
    const auto zeros = (fit.beta_hat.col(t).array() == 0.0).count();
    diag << data.label(t) << ',' << fit.em_iters[static_cast<std::size_t>(t)] << ','
         << format_double(fit.kkt_residual[static_cast<std::size_t>(t)]) << ',' << zeros << '\n';
  }
  out.add("diagnostics.csv", diag.str());
  std::ostringstream windows;
  windows << "window_end,j,offset,beta\n";
  const int d = model.order();
  for (std::size_t w = 0; w < fit.window_solutions.size(); ++w) {
    const auto& sol = fit.window_solutions[w];
    const long end = data.label(d + static_cast<int>(w));
    for (Eigen::Index j = 0; j < sol.rows(); ++j) {
      for (Eigen::Index s = 0; s < sol.cols(); ++s) {
        windows << end << ',' << j + 1 << ',' << s - d << ',' << format_double(sol(j, s)) << '\n';
      }
    }
  }
  out.add("windows.csv", windows.str());
  log << "fit-glasso: T=" << data.T() << " p=" << data.p() << " d=" << d << "\n";
}

void run_fit_smc(const RunConfig& c, OutputSet& out, std::ostream& log) {
  const RegressionData data = load_data(c.data_path);
  const ModelConfig model = c.model(data.p());
  SmcOptions options;
  options.n_particles = c.n_particles;
  options.resample = c.resample;
  options.exec = c.execution;
  const PosteriorChain chain = pimh_run(data, model, options, c.n_iters, *c.seed);
  const PosteriorSummary summary = posterior_summary(chain, c.probs, c.burn_in);

  std::vector<EstimateRow> rows;
  const auto& lower = summary.quantiles.front();
  const auto& upper = summary.quantiles.back();
  for (int t = 0; t < data.T(); ++t) {
    for (int j = 0; j < data.p(); ++j) {
      const bool support = c.eps_sparse ? std::abs(summary.mean(j, t)) > *c.eps_sparse
                                        : (lower(j, t) > 0.0 || upper(j, t) < 0.0);
      rows.push_back({data.label(t), j + 1, summary.mean(j, t), lower(j, t), upper(j, t), support});
    }
  }
  out.add("estimates.csv", estimates_csv_body(rows));

  std::ostringstream quantiles;
  quantiles << "t,j,prob,value\n";
  for (int t = 0; t < data.T(); ++t) {
    for (int j = 0; j < data.p(); ++j) {
      for (std::size_t q = 0; q < summary.probs.size(); ++q) {
        quantiles << data.label(t) << ',' << j + 1 << ',' << format_double(summary.probs[q]) << ','
                  << format_double(summary.quantiles[q](j, t)) << '\n';
      }
    }
  }
  out.add("quantiles.csv", quantiles.str());

  std::ostringstream order;
  order << "t,median,mean";
  for (Eigen::Index d = 0; d < summary.order_frequency.cols(); ++d) order << ",p_d" << d;
  order << '\n';
  for (int t = 0; t < data.T(); ++t) {
    order << data.label(t) << ',' << format_double(summary.order_median[static_cast<std::size_t>(t)]) << ','
          << format_double(summary.order_mean[static_cast<std::size_t>(t)]);
    for (Eigen::Index d = 0; d < summary.order_frequency.cols(); ++d) order << ',' << format_double(summary.order_frequency(t, d));
    order << '\n';
  }
  out.add("order_posterior.csv", order.str());

  std::ostringstream evidence;
  evidence << "iteration,log_evidence,proposed_log_evidence,accepted\n";
  for (std::size_t m = 0; m < chain.size(); ++m) {
    evidence << m + 1 << ',' << format_double(chain.log_evidence[m]) << ','
             << format_double(chain.proposed_log_evidence[m]) << ',' << (chain.accepted[m] ? 1 : 0) << '\n';
  }
  out.add("evidence.csv", evidence.str());

  std::ostringstream diag;
  diag << "key,value\n";
  diag << "acceptance_rate," << format_double(summary.acceptance_rate) << '\n';
  diag << "failed_iterations," << chain.warnings.size() << '\n';
  out.add("diagnostics.csv", diag.str());
  for (const auto& w : chain.warnings) log << "warning: " << w << '\n';
  log << "fit-smc: M=" << c.n_iters << " N=" << c.n_particles << " acceptance=" << summary.acceptance_rate << "\n";
}

void run_acf(const RunConfig& c, OutputSet& out, std::ostream& log) {
  const ModelConfig model = c.model(c.p);
  const SimulatedPath path = simulate_path(model, c.T, *c.seed, c.execution);
  std::vector<std::vector<double>> acfs;
  for (Eigen::Index j = 0; j < path.beta.rows(); ++j) {
    std::vector<double> squared(static_cast<std::size_t>(c.T));
    for (int t = 0; t < c.T; ++t) squared[static_cast<std::size_t>(t)] = path.beta(j, t) * path.beta(j, t);
    acfs.push_back(autocorrelation(squared, c.max_lag, c.execution));
  }
  std::ostringstream table;
  table << "lag";
  for (std::size_t j = 0; j < acfs.size(); ++j) table << ",acf_" << j + 1;
  table << '\n';
  for (int lag = 1; lag <= c.max_lag; ++lag) {
    table << lag;
    for (const auto& a : acfs) table << ',' << format_double(a[static_cast<std::size_t>(lag - 1)]);
    table << '\n';
  }
  out.add("acf.csv", table.str());
  log << "acf of squared path, T=" << c.T << " max_lag=" << c.max_lag << "\n";
}

std::string error_type(const std::exception& error) {
  if (dynamic_cast<const ParseError*>(&error)) return "parse";
  if (dynamic_cast<const UsageError*>(&error)) return "usage";
  if (dynamic_cast<const VerificationError*>(&error)) return "verification";
  if (dynamic_cast<const NumericalError*>(&error)) return "numerical";
  if (dynamic_cast<const DomainError*>(&error)) return "domain";
  return "internal";
}

}  // namespace

std::vector<std::filesystem::path> execute(const RunConfig& config, std::ostream& log) {
  if (config.command == Command::verify) {
    const int n = verify_outputs(config.out_dir);
    log << "verified " << n << " files in " << config.out_dir.string() << "\n";
    return {};
  }
  OutputSet out(config);
  switch (config.command) {
    case Command::simulate: run_simulate(config, out, log); break;
    case Command::generate: run_generate(config, out, log); break;
    case Command::fit_map: run_fit_map(config, out, log); break;
    case Command::fit_glasso: run_fit_glasso(config, out, log); break;
    case Command::fit_smc: run_fit_smc(config, out, log); break;
    case Command::acf: run_acf(config, out, log); break;
    case Command::verify: break;
  }
  return out.commit();
}

int verify_outputs(const std::filesystem::path& dir) {
  const std::string manifest = read_text_file(dir / "manifest.txt");
  const auto marker = manifest.find(kFilesMarker);
  if (marker == std::string::npos) throw VerificationError("manifest.txt has no file list");
  const std::string hash = sha256_hex(std::string_view(manifest).substr(0, marker));
  std::istringstream listing(manifest.substr(marker + kFilesMarker.size()));
  std::string line;
  int checked = 0;
  while (std::getline(listing, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw VerificationError("malformed manifest entry '" + line + "'");
    const std::string name = line.substr(0, eq);
    std::pair<std::string, std::string> parts;
    try {
      parts = split_stamp(read_text_file(dir / name));
    } catch (const Error& e) {
      throw VerificationError(name + ": " + e.what());
    }
    if (parts.first != hash) throw VerificationError(name + ": stamped with a different manifest");
    if (sha256_hex(parts.second) != line.substr(eq + 1)) throw VerificationError(name + ": contents changed since the run");
    ++checked;
  }
  return checked;
}

int exit_status_for(const std::exception& error) {
  if (dynamic_cast<const UsageError*>(&error) || dynamic_cast<const ParseError*>(&error)) return 2;
  return 1;
}

std::string error_record(const std::exception& error) {
  const nlohmann::json record = {
      {"error", {{"type", error_type(error)}, {"message", error.what()}, {"exit_status", exit_status_for(error)}}}};
  return record.dump();
}

int run(const RunConfig& config, std::ostream& log, std::ostream& err) {
  try {
    execute(config, log);
    return 0;
  } catch (const std::exception& e) {
    const std::string record = error_record(e);
    err << record << '\n';
    if (config.command != Command::verify) {
      std::error_code ec;
      std::filesystem::create_directories(config.out_dir, ec);
      if (!ec) {
        try {
          write_text_file(config.out_dir / "error.json", record + "\n");
        } catch (const Error&) {
          // the record already went to err
        }
      }
    }
    return exit_status_for(e);
  }
}

}  // namespace dynsparse
