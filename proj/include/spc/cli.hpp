#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spc/analysis.hpp"

namespace spc::cli {

/// Rejected configuration; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3 };

enum class Command { solve, convergence, constraint_table, verify };

struct RunConfig {
  Command command = Command::solve;
  std::string problem = "example1";
  ProblemParameters params;
  /// Constraint levels; empty keeps the problem's own delta.
  std::vector<double> deltas;
  /// One of tau=h, tau=h^2, tau=h^4, tau=h/sqrt2, tau=h^2/2; ignored when
  /// explicit tau values are given.
  std::string rule;
  /// Cell widths as written ("1/40"); the mesh diameter h follows from them.
  std::vector<std::string> h;
  std::vector<std::string> tau;
  int paths = 2000;
  std::uint64_t seed = 7;
  double rho = 0.0;
  double eps0 = 1e-6;
  int max_iter = 2000;
  std::string output = ".";
  MeanEstimator estimator = MeanEstimator::mean_field;
  int threads = 0;
  bool unit_auxiliary_diffusion = false;
};

/// Accepts "0.025", "1/40", "2.5e-2".
double parse_number(const std::string& text);
std::vector<std::string> split_list(const std::string& text);

Command parse_command(const std::string& name);
std::string command_name(Command command);
MeanEstimator parse_estimator(const std::string& name);
std::string estimator_name(MeanEstimator estimator);

/// Builds a config from JSON text (keys as in the flag names, dashes or
/// underscores). Unknown keys are rejected.
RunConfig config_from_json(const std::string& json_text);
std::string read_file(const std::string& path);

/// Fills defaults that depend on the command and problem, then checks the
/// whole config.
void finalize(RunConfig& config);

/// Meshes and time steps for the configured h list and tau rule.
std::vector<Resolution> make_resolutions(const RunConfig& config, const ManufacturedProblem& problem);

/// Shortest decimal that round-trips to the same double.
std::string shortest(double value);
/// d.ddddd mantissa with the exponent written E-k for k >= 0 and E+k above,
/// e.g. 0.199913 -> 1.99913E-1, 1 -> 1.00000E-0.
std::string table_scientific(double value);

/// Executes the command, writing artifacts under config.output and a short
/// log to `log`. Returns the process exit status.
int run(const RunConfig& config, std::ostream& log);

}  // namespace spc::cli
