// Command-line front end: one subcommand per run, settings from an optional
// key=value file with --key overrides.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "dynsparse/config.hpp"
#include "dynsparse/errors.hpp"
#include "dynsparse/run.hpp"

namespace {

struct SubcommandArgs {
  std::string config_file;
  std::map<std::string, std::string> overrides;
};

const char* describe(dynsparse::Command command) {
  using dynsparse::Command;
  switch (command) {
    case Command::simulate: return "Draw paths from the dynamic sparsity prior";
    case Command::generate: return "Write a bundled synthetic data set (piecewise or portfolio)";
    case Command::fit_map: return "Online approximate MAP by EM";
    case Command::fit_glasso: return "Sliding-window group lasso";
    case Command::fit_smc: return "Particle independent Metropolis-Hastings over SMC runs";
    case Command::acf: return "Autocorrelation of squared simulated paths";
    case Command::verify: return "Check output files in out_dir against their manifest";
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  using dynsparse::Command;
  CLI::App app{"Dynamic sparse regression with generalized hyperbolic priors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dynsparse::kVersion));

  const Command commands[] = {Command::simulate, Command::generate, Command::fit_map, Command::fit_glasso,
                              Command::fit_smc,  Command::acf,      Command::verify};
  std::map<CLI::App*, Command> by_app;
  std::map<Command, SubcommandArgs> args;
  for (Command command : commands) {
    CLI::App* sub = app.add_subcommand(dynsparse::command_name(command), describe(command));
    SubcommandArgs& a = args[command];
    sub->add_option("-c,--config", a.config_file, "key=value configuration file")->check(CLI::ExistingFile);
    for (const auto& key : dynsparse::config_keys()) {
      sub->add_option_function<std::string>(
          "--" + key, [&a, key](const std::string& value) { a.overrides[key] = value; },
          "override config key " + key);
    }
    by_app[sub] = command;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    const dynsparse::UsageError usage(e.what());
    std::cerr << dynsparse::error_record(usage) << '\n';
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const Command command = by_app.at(chosen);
  const SubcommandArgs& a = args.at(command);
  dynsparse::RunConfig config;
  try {
    const dynsparse::KeyValues file_values =
        a.config_file.empty() ? dynsparse::KeyValues{} : dynsparse::read_config_file(a.config_file);
    config = dynsparse::resolve_config(command, file_values, a.overrides);
  } catch (const std::exception& e) {
    std::cerr << dynsparse::error_record(e) << '\n';
    return dynsparse::exit_status_for(e);
  }
  return dynsparse::run(config, std::cout, std::cerr);
}
