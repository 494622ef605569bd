// spc: gradient-projection solver for the integral-state-constrained
// stochastic heat control problems, with convergence and table harnesses.

#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "spc/cli.hpp"
#include "spc/parallel.hpp"

namespace {

struct Flags {
  std::map<std::string, std::optional<std::string>> values;
  bool unit_auxiliary_diffusion = false;
  std::string config_file;
};

void add_common(CLI::App* cmd, Flags& f) {
  const std::pair<const char*, const char*> options[] = {
      {"--problem", "example1 or example2"},
      {"--beta", "noise amplitude"},
      {"--mu", "multiplier of the manufactured solution"},
      {"--gamma", "diffusion coefficient (example2)"},
      {"--lambda", "time-growth parameter (example2)"},
      {"--delta", "constraint level(s), comma separated"},
      {"--rule", "tau=h | tau=h^2 | tau=h^4 | tau=h/sqrt2 | tau=h^2/2"},
      {"--h", "cell widths, e.g. 1/40,1/45"},
      {"--tau", "explicit time steps (one, or one per h)"},
      {"--paths", "Monte Carlo paths"},
      {"--seed", "master seed"},
      {"--rho", "step size (0: 0.9/(alpha+e^T))"},
      {"--eps0", "stopping tolerance"},
      {"--max-iter", "iteration cap"},
      {"--output", "output directory"},
      {"--estimator", "mean-field or monte-carlo"},
      {"--threads", "worker threads (default: SPC_NUM_THREADS or all)"},
  };
  for (const auto& [name, help] : options) {
    auto& slot = f.values[std::string(name).substr(2)];
    cmd->add_option_function<std::string>(name, [&slot](const std::string& v) { slot = v; }, help);
  }
  cmd->add_flag("--unit-auxiliary-diffusion", f.unit_auxiliary_diffusion,
                "solve the m~/q~ systems with unit diffusion instead of gamma");
  cmd->add_option("--config", f.config_file, "JSON config file; flags override it");
}

}  // namespace

int main(int argc, char** argv) {
  spc::apply_thread_env();

  CLI::App app{"Integral-state-constrained stochastic parabolic optimal control"};
  app.require_subcommand(1);
  // -h is taken by the mesh width.
  app.set_help_flag("--help", "print this help and exit");
  Flags flags;
  std::string command;
  for (const char* name : {"solve", "convergence", "constraint-table", "verify"}) {
    static const std::map<std::string, std::string> help = {
        {"solve", "one optimization run: iterations.csv, fields.csv, summary.json"},
        {"convergence", "errors against the exact solution over resolutions: errors.csv, orders.json"},
        {"constraint-table", "converged constraint integrals per delta and resolution: table.csv"},
        {"verify", "residuals of the manufactured solution: residuals.csv"}};
    auto* sub = app.add_subcommand(name, help.at(name));
    add_common(sub, flags);
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return spc::cli::exit_config;
  }

  try {
    nlohmann::json file = nlohmann::json::object();
    if (!flags.config_file.empty()) file = nlohmann::json::parse(spc::cli::read_file(flags.config_file));
    if (!file.is_object()) throw spc::cli::ConfigError("config file must hold a JSON object");
    // Keys may use dashes or underscores; flags are applied last so they win.
    auto normal = [](std::string k) {
      std::replace(k.begin(), k.end(), '-', '_');
      return k;
    };
    nlohmann::json normalized = nlohmann::json::object();
    for (const auto& [key, value] : file.items()) normalized[normal(key)] = value;
    for (const auto& [key, value] : flags.values)
      if (value) normalized[normal(key)] = *value;
    if (flags.unit_auxiliary_diffusion) normalized["unit_auxiliary_diffusion"] = true;
    normalized["command"] = command;
    const spc::cli::RunConfig config = spc::cli::config_from_json(normalized.dump());
    return spc::cli::run(config, std::cout);
  } catch (const spc::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return spc::cli::exit_config;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return spc::cli::exit_config;
  }
}
