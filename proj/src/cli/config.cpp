#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spc/cli.hpp"

namespace spc::cli {

namespace {

using nlohmann::json;

const std::vector<std::string> default_h = {"1/40", "1/45", "1/50", "1/60", "1/70"};
const std::vector<std::string> rules = {"tau=h", "tau=h^2", "tau=h^4", "tau=h/sqrt2", "tau=h^2/2"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double plain_number(const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + text + "'");
  }
  if (used != t.size()) throw ConfigError("not a number: '" + text + "'");
  return v;
}

std::vector<std::string> string_list(const json& v, const std::string& key) {
  if (v.is_string()) return split_list(v.get<std::string>());
  if (v.is_number()) return {shortest(v.get<double>())};
  if (!v.is_array()) throw ConfigError("'" + key + "' must be a list or a comma-separated string");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (item.is_string())
      out.push_back(trim(item.get<std::string>()));
    else if (item.is_number())
      out.push_back(shortest(item.get<double>()));
    else
      throw ConfigError("'" + key + "' entries must be numbers or strings");
  }
  return out;
}

double number(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_number(v.get<std::string>());
  throw ConfigError("'" + key + "' must be a number");
}

long long integer(const json& v, const std::string& key) {
  const double d = number(v, key);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError("'" + key + "' must be an integer");
  return static_cast<long long>(d);
}

}  // namespace

double parse_number(const std::string& text) {
  const std::string t = trim(text);
  const auto slash = t.find('/');
  if (slash == std::string::npos) return plain_number(t);
  const double num = plain_number(t.substr(0, slash));
  const double den = plain_number(t.substr(slash + 1));
  if (den == 0.0) throw ConfigError("division by zero in '" + text + "'");
  return num / den;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty entry in list '" + text + "'");
    out.push_back(item);
  }
  return out;
}

Command parse_command(const std::string& name) {
  if (name == "solve") return Command::solve;
  if (name == "convergence") return Command::convergence;
  if (name == "constraint-table" || name == "constraint_table") return Command::constraint_table;
  if (name == "verify") return Command::verify;
  throw ConfigError("unknown command '" + name + "'");
}

std::string command_name(Command command) {
  switch (command) {
    case Command::solve: return "solve";
    case Command::convergence: return "convergence";
    case Command::constraint_table: return "constraint-table";
    case Command::verify: return "verify";
  }
  return "?";
}

MeanEstimator parse_estimator(const std::string& name) {
  if (name == "mean-field" || name == "mean_field") return MeanEstimator::mean_field;
  if (name == "monte-carlo" || name == "monte_carlo") return MeanEstimator::monte_carlo;
  throw ConfigError("unknown estimator '" + name + "' (expected mean-field or monte-carlo)");
}

std::string estimator_name(MeanEstimator estimator) {
  return estimator == MeanEstimator::mean_field ? "mean-field" : "monte-carlo";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig config_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig c;
  for (const auto& [raw_key, v] : doc.items()) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "command") {
      c.command = parse_command(v.get<std::string>());
    } else if (key == "problem") {
      if (!v.is_string()) throw ConfigError("'problem' must be a string");
      c.problem = v.get<std::string>();
    } else if (key == "beta") {
      c.params.beta = number(v, key);
    } else if (key == "mu") {
      c.params.mu = number(v, key);
    } else if (key == "gamma") {
      c.params.gamma = number(v, key);
    } else if (key == "lambda") {
      c.params.lambda = number(v, key);
    } else if (key == "delta") {
      c.deltas.clear();
      for (const auto& s : string_list(v, key)) c.deltas.push_back(parse_number(s));
    } else if (key == "rule") {
      if (!v.is_string()) throw ConfigError("'rule' must be a string");
      c.rule = v.get<std::string>();
    } else if (key == "h") {
      c.h = string_list(v, key);
    } else if (key == "tau") {
      c.tau = string_list(v, key);
    } else if (key == "paths") {
      c.paths = static_cast<int>(integer(v, key));
    } else if (key == "seed") {
      const long long s = integer(v, key);
      if (s < 0) throw ConfigError("'seed' must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "rho") {
      c.rho = number(v, key);
    } else if (key == "eps0") {
      c.eps0 = number(v, key);
    } else if (key == "max_iter") {
      c.max_iter = static_cast<int>(integer(v, key));
    } else if (key == "output") {
      if (!v.is_string()) throw ConfigError("'output' must be a string");
      c.output = v.get<std::string>();
    } else if (key == "estimator") {
      c.estimator = parse_estimator(v.get<std::string>());
    } else if (key == "threads") {
      c.threads = static_cast<int>(integer(v, key));
    } else if (key == "unit_auxiliary_diffusion") {
      if (!v.is_boolean()) throw ConfigError("'unit_auxiliary_diffusion' must be true or false");
      c.unit_auxiliary_diffusion = v.get<bool>();
    } else {
      throw ConfigError("unknown config key '" + raw_key + "'");
    }
  }
  return c;
}

void finalize(RunConfig& c) {
  if (c.problem != "example1" && c.problem != "example2")
    throw ConfigError("unknown problem '" + c.problem + "' (expected example1 or example2)");
  if (c.rule.empty()) c.rule = c.problem == "example1" ? "tau=h" : "tau=h/sqrt2";
  if (std::find(rules.begin(), rules.end(), c.rule) == rules.end())
    throw ConfigError("unknown tau rule '" + c.rule + "'");
  if (c.h.empty()) c.h = c.command == Command::solve ? std::vector<std::string>{"1/40"} : default_h;
  if (c.deltas.empty() && c.command == Command::constraint_table)
    c.deltas = c.problem == "example1" ? std::vector<double>{0.2, 0.1, -0.1, -0.2} : std::vector<double>{1, 0.5, -0.5, -1};

  if (c.paths < 1) throw ConfigError("paths must be at least 1");
  if (c.command == Command::convergence && c.paths < 2) throw ConfigError("convergence needs at least 2 paths");
  if (!(c.eps0 > 0.0)) throw ConfigError("eps0 must be positive");
  if (c.max_iter < 1) throw ConfigError("max-iter must be at least 1");
  if (!(c.rho >= 0.0) || !std::isfinite(c.rho)) throw ConfigError("rho must be non-negative (0 selects the default)");
  if (c.threads < 0) throw ConfigError("threads must be non-negative");
  if (!c.tau.empty() && c.tau.size() != 1 && c.tau.size() != c.h.size())
    throw ConfigError("give one tau or one tau per h value");
  if (c.command == Command::solve && c.h.size() != 1) throw ConfigError("solve takes exactly one h value");
  if (c.command == Command::solve && c.deltas.size() > 1) throw ConfigError("solve takes at most one delta");
  if (c.command == Command::convergence && !c.deltas.empty())
    throw ConfigError("convergence uses the problem's own delta; drop --delta");
  for (double d : c.deltas)
    if (!std::isfinite(d)) throw ConfigError("delta values must be finite");
  if (c.output.empty()) throw ConfigError("output directory must not be empty");
}

std::vector<Resolution> make_resolutions(const RunConfig& c, const ManufacturedProblem& problem) {
  const double T = problem.spec.horizon;
  std::vector<Resolution> out;
  for (std::size_t i = 0; i < c.h.size(); ++i) {
    const double width = parse_number(c.h[i]);
    if (!(width > 0.0)) throw ConfigError("h must be positive: '" + c.h[i] + "'");
    const double cells_real = 1.0 / width;
    const long cells = std::lround(cells_real);
    if (cells < 2 || std::abs(cells_real - static_cast<double>(cells)) > 1e-9 * cells_real)
      throw ConfigError("h = '" + c.h[i] + "' must be 1/k for an integer k >= 2");

    Resolution r;
    r.cells = static_cast<int>(cells);
    r.h = problem.dim == 1 ? 1.0 / r.cells : std::sqrt(2.0) / r.cells;
    double tau = 0.0;
    if (!c.tau.empty()) {
      tau = parse_number(c.tau.size() == 1 ? c.tau[0] : c.tau[i]);
    } else if (c.rule == "tau=h") {
      tau = r.h;
    } else if (c.rule == "tau=h^2") {
      tau = r.h * r.h;
    } else if (c.rule == "tau=h^4") {
      tau = r.h * r.h * r.h * r.h;
    } else if (c.rule == "tau=h/sqrt2") {
      tau = r.h / std::sqrt(2.0);
    } else {
      tau = r.h * r.h / 2.0;
    }
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    const double steps_real = T / tau;
    const double steps = std::round(steps_real);
    if (steps < 1.0 || std::abs(steps_real - steps) > 1e-9 * steps_real)
      throw ConfigError("tau = " + shortest(tau) + " (h = " + c.h[i] + ", " + c.rule +
                        ") does not divide the horizon into whole steps");
    if (steps > 1e8) throw ConfigError("tau = " + shortest(tau) + " needs too many steps");
    r.steps = static_cast<int>(steps);
    r.tau = T / r.steps;
    out.push_back(r);
  }
  return out;
}

}  // namespace spc::cli
