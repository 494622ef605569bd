#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <tuple>

#include <json.hpp>

#include "spc/cli.hpp"
#include "spc/errors.hpp"
#include "spc/parallel.hpp"

namespace spc::cli {

namespace {

using nlohmann::ordered_json;

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::string str(int v) { return std::to_string(v); }
std::string str(std::uint64_t v) { return std::to_string(v); }
std::string str(double v) { return shortest(v); }
std::string str(bool v) { return v ? "true" : "false"; }

OptimizerConfig optimizer_config(const RunConfig& c) {
  OptimizerConfig o;
  o.rho = c.rho;
  o.eps0 = c.eps0;
  o.max_iter = c.max_iter;
  o.unit_auxiliary_diffusion = c.unit_auxiliary_diffusion;
  return o;
}

ExperimentOptions experiment_options(const RunConfig& c) {
  ExperimentOptions o;
  o.optimizer = optimizer_config(c);
  o.estimator = c.estimator;
  o.paths = c.paths;
  o.seed = c.seed;
  return o;
}

std::string cell_label(const Resolution& r) {
  return "cells=" + std::to_string(r.cells) + " steps=" + std::to_string(r.steps);
}

const std::vector<std::string> iteration_columns = {"iter", "mu", "step_error", "constraint_integral", "cost_J"};

std::vector<std::string> iteration_row(const IterationRecord& r) {
  return {str(r.iter), str(r.mu), str(r.step_error), str(r.constraint_integral), str(r.cost)};
}

ordered_json problem_json(const ManufacturedProblem& p) {
  ordered_json j;
  j["name"] = p.name;
  j["alpha"] = p.spec.alpha;
  j["gamma"] = p.spec.gamma;
  j["beta"] = p.beta;
  if (p.name == "example2") j["lambda"] = p.lambda;
  j["exact_mu"] = p.exact_mu;
  j["delta"] = p.spec.delta;
  if (p.name == "example1") j["target_reading"] = to_string(p.reading);
  return j;
}

int run_solve(const RunConfig& c, ManufacturedProblem problem, std::ostream& log) {
  if (!c.deltas.empty()) problem.spec.delta = c.deltas.front();
  const Resolution res = make_resolutions(c, problem).front();
  const FemSystem system(problem.make_mesh(res.cells));
  const TimeGrid grid = make_time_grid(problem.spec.horizon, res.steps);
  const Scheme scheme(problem.spec, system, grid);
  std::optional<BrownianEnsemble> ensemble;
  if (c.estimator == MeanEstimator::monte_carlo) ensemble = BrownianEnsemble::sample(c.paths, grid, c.seed);
  const MeanSources sources = scheme.mean_sources(c.estimator, ensemble ? &*ensemble : nullptr);
  const GpResult result = gp_iterate(scheme, optimizer_config(c), sources);

  const std::filesystem::path dir(c.output);
  {
    Csv csv(dir / "iterations.csv", iteration_columns);
    for (const auto& r : result.records) csv.row(iteration_row(r));
  }
  {
    Csv csv(dir / "fields.csv", {"level", "t", "node", "x", "y", "control", "state_mean", "adjoint_mean"});
    const Mesh& mesh = system.mesh();
    for (int n = 0; n <= grid.steps; ++n) {
      for (Eigen::Index i = 0; i < system.size(); ++i) {
        const Point& p = mesh.nodes[mesh.interior_nodes[i]];
        csv.row({str(n), str(grid.t(n)), str(static_cast<int>(i)), str(p.x), str(p.y), str(result.control[n][i]),
                 str(result.state_mean[n][i]), str(result.adjoint_mean[n][i])});
      }
    }
  }
  const double integral = constraint_integral(result.state_mean, system, grid);
  ordered_json summary;
  summary["problem"] = problem_json(problem);
  summary["h"] = res.h;
  summary["tau"] = res.tau;
  summary["cells"] = res.cells;
  summary["steps"] = res.steps;
  summary["estimator"] = estimator_name(c.estimator);
  if (c.estimator == MeanEstimator::monte_carlo) {
    summary["paths"] = c.paths;
    summary["seed"] = c.seed;
  }
  summary["rho"] = result.rho;
  summary["iterations"] = result.records.size();
  summary["converged"] = result.converged;
  summary["mu"] = result.mu;
  summary["constraint_integral"] = integral;
  summary["qtilde_integral"] = result.qtilde_integral;
  write_json(dir / "summary.json", summary);

  log << "solve " << problem.name << " " << cell_label(res) << ": " << result.records.size() << " iterations, "
      << (result.converged ? "converged" : "NOT converged") << ", mu=" << shortest(result.mu)
      << ", integral=" << shortest(integral) << " (delta=" << shortest(problem.spec.delta) << ")\n";
  return exit_ok;
}

ordered_json fit_json(const std::vector<std::pair<double, double>>& points) {
  for (const auto& [x, e] : points)
    if (!(x > 0.0) || !(e > 0.0)) return nullptr;
  std::vector<double> xs;
  for (const auto& pt : points) xs.push_back(pt.first);
  if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) return nullptr;
  const OrderFit fit = fit_order(points);
  ordered_json j;
  j["slope"] = fit.slope;
  j["r_squared"] = fit.r_squared;
  return j;
}

int run_convergence_cmd(const RunConfig& c, const ManufacturedProblem& problem, std::ostream& log) {
  const auto resolutions = make_resolutions(c, problem);
  ExperimentOptions options = experiment_options(c);
  const std::filesystem::path dir(c.output);
  Csv iters(dir / "convergence_iterations.csv", {"h", "tau", "iter", "mu", "step_error", "constraint_integral", "cost_J"});
  options.on_result = [&](const Resolution& r, double, const GpResult& g) {
    for (const auto& rec : g.records) {
      auto row = iteration_row(rec);
      row.insert(row.begin(), {str(r.h), str(r.tau)});
      iters.row(row);
    }
  };

  std::vector<ErrorReport> reports;
  for (const auto& res : resolutions) {
    try {
      reports.push_back(run_convergence(problem, {res}, options).front());
    } catch (const NumericalError& e) {
      throw NumericalError(cell_label(res) + ": " + e.what());
    } catch (const InvalidState& e) {
      throw InvalidState(cell_label(res) + ": " + e.what());
    }
    const auto& r = reports.back();
    log << cell_label(res) << " h=" << shortest(r.h) << " tau=" << shortest(r.tau) << " state=" << shortest(r.strong_l2_state)
        << " adjoint=" << shortest(r.strong_l2_adjoint) << " control=" << shortest(r.strong_l2_control)
        << " mu_err=" << shortest(r.mu_error) << (r.converged ? "" : " [not converged]") << "\n";
  }

  Csv csv(dir / "errors.csv", {"h", "tau", "paths", "seed", "strong_l2_state", "strong_l2_adjoint", "strong_l2_control",
                               "h1_state", "h1_adjoint", "mu_error", "mu", "iterations", "converged"});
  for (const auto& r : reports)
    csv.row({str(r.h), str(r.tau), str(r.paths), str(r.seed), str(r.strong_l2_state), str(r.strong_l2_adjoint),
             str(r.strong_l2_control), str(r.h1_state), str(r.h1_adjoint), str(r.mu_error), str(r.mu),
             str(r.iterations), str(r.converged)});

  const std::vector<std::pair<std::string, double ErrorReport::*>> quantities = {
      {"strong_l2_state", &ErrorReport::strong_l2_state}, {"strong_l2_adjoint", &ErrorReport::strong_l2_adjoint},
      {"strong_l2_control", &ErrorReport::strong_l2_control}, {"h1_state", &ErrorReport::h1_state},
      {"h1_adjoint", &ErrorReport::h1_adjoint}, {"mu_error", &ErrorReport::mu_error}};
  ordered_json orders;
  orders["problem"] = problem_json(problem);
  orders["rule"] = c.tau.empty() ? c.rule : "explicit";
  orders["estimator"] = estimator_name(c.estimator);
  orders["paths"] = c.paths;
  orders["seed"] = c.seed;
  for (const auto& [axis, scale] : {std::pair{"vs_h", &ErrorReport::h}, std::pair{"vs_tau", &ErrorReport::tau}}) {
    ordered_json fits;
    for (const auto& [name, field] : quantities) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& r : reports) pts.emplace_back(r.*scale, r.*field);
      fits[name] = reports.size() >= 2 ? fit_json(pts) : nullptr;
    }
    orders[axis] = fits;
  }
  write_json(dir / "orders.json", orders);
  log << "orders: " << orders["vs_tau"].dump() << "\n";
  return exit_ok;
}

int run_table(const RunConfig& c, const ManufacturedProblem& problem, std::ostream& log) {
  const auto resolutions = make_resolutions(c, problem);
  ExperimentOptions options = experiment_options(c);
  std::map<std::tuple<double, int, int>, std::vector<IterationRecord>> records;
  std::map<double, Trajectory> profiles;
  const Resolution first = resolutions.front();
  options.on_result = [&](const Resolution& r, double delta, const GpResult& g) {
    records[{delta, r.cells, r.steps}] = g.records;
    if (r.cells == first.cells && r.steps == first.steps) profiles[delta] = g.state_mean;
  };

  const auto cells = constraint_table(problem, c.deltas, resolutions, options);
  const std::filesystem::path dir(c.output);
  {
    Csv csv(dir / "table.csv", {"delta", "h", "tau", "cells", "steps", "integral", "integral_sci", "mu", "iterations",
                                "converged"});
    for (const auto& cell : cells)
      csv.row({str(cell.delta), str(cell.resolution.h), str(cell.resolution.tau), str(cell.resolution.cells),
               str(cell.resolution.steps), str(cell.integral), table_scientific(cell.integral), str(cell.mu),
               str(cell.iterations), str(cell.converged)});
  }
  {
    std::vector<std::string> header = {"delta"};
    for (const auto& r : resolutions) header.push_back("cells=" + std::to_string(r.cells));
    Csv csv(dir / "table_wide.csv", header);
    const std::size_t R = resolutions.size();
    for (std::size_t d = 0; d < c.deltas.size(); ++d) {
      std::vector<std::string> row = {str(c.deltas[d])};
      for (std::size_t k = 0; k < R; ++k) row.push_back(table_scientific(cells[d * R + k].integral));
      csv.row(row);
    }
  }
  {
    Csv csv(dir / "table_iterations.csv",
            {"delta", "cells", "steps", "iter", "mu", "step_error", "constraint_integral", "cost_J"});
    for (double delta : c.deltas)
      for (const auto& r : resolutions)
        for (const auto& rec : records[{delta, r.cells, r.steps}]) {
          auto row = iteration_row(rec);
          row.insert(row.begin(), {str(delta), str(r.cells), str(r.steps)});
          csv.row(row);
        }
  }
  {
    const FemSystem system(problem.make_mesh(first.cells));
    const TimeGrid grid = make_time_grid(problem.spec.horizon, first.steps);
    const Mesh& mesh = system.mesh();
    Csv csv(dir / "profiles.csv", {"delta", "level", "t", "node", "x", "y", "state_mean"});
    for (double delta : c.deltas) {
      const Trajectory& x = profiles.at(delta);
      for (int n = 0; n <= grid.steps; ++n)
        for (Eigen::Index i = 0; i < system.size(); ++i) {
          const Point& p = mesh.nodes[mesh.interior_nodes[i]];
          csv.row({str(delta), str(n), str(grid.t(n)), str(static_cast<int>(i)), str(p.x), str(p.y), str(x[n][i])});
        }
    }
  }
  const std::size_t R = resolutions.size();
  for (std::size_t d = 0; d < c.deltas.size(); ++d) {
    log << "delta=" << shortest(c.deltas[d]);
    for (std::size_t k = 0; k < R; ++k) log << "  " << table_scientific(cells[d * R + k].integral);
    log << "\n";
  }
  return exit_ok;
}

int run_verify(const RunConfig& c, const ManufacturedProblem& problem, std::ostream& log) {
  const std::filesystem::path dir(c.output);
  const int samples = 1000;
  const double tol = 1e-8;
  Csv csv(dir / "residuals.csv", {"case", "reading", "samples", "state_drift", "state_diffusion", "adjoint_drift",
                                  "optimality", "initial", "affine_split", "max", "pass", "expected"});
  bool ok = true;
  auto report = [&](const std::string& name, const ManufacturedProblem& p, bool expect_pass) {
    const ManufacturedResidual r = verify_manufactured(p, samples, c.seed);
    const bool pass = r.max() <= tol;
    if (name != "alternative_reading") ok = ok && (pass == expect_pass);
    csv.row({name, p.name == "example1" ? to_string(p.reading) : "-", str(r.samples), str(r.state_drift),
             str(r.state_diffusion), str(r.adjoint_drift), str(r.optimality), str(r.initial), str(r.affine_split),
             str(r.max()), str(pass), expect_pass ? "pass" : "fail"});
    log << name << ": max residual " << shortest(r.max()) << (pass ? " (pass)" : " (fail)") << "\n";
  };

  report("selected", problem, true);
  if (problem.name == "example1") {
    const auto other = problem.reading == TargetReading::beta_scaled ? TargetReading::literal : TargetReading::beta_scaled;
    report("alternative_reading", example1(problem.beta, problem.exact_mu, other), problem.beta == 1.0);
  }
  ManufacturedProblem faulty = problem;
  const auto base = faulty.spec.forcing_affine->base;
  faulty.spec.forcing_affine->base = [base](double t, const Point& x) { return base(t, x) + 1.0; };
  const auto forcing = faulty.spec.forcing;
  faulty.spec.forcing = [forcing](double t, const Point& x, double w) { return forcing(t, x, w) + 1.0; };
  report("fault_forcing_plus_one", faulty, false);
  return ok ? exit_ok : exit_numerical;
}

}  // namespace

int run(const RunConfig& config, std::ostream& log) {
  try {
    RunConfig c = config;
    finalize(c);
    if (c.threads > 0) set_num_threads(c.threads);
    try {
      std::filesystem::create_directories(c.output);
    } catch (const std::filesystem::filesystem_error& e) {
      throw ConfigError("cannot use output directory '" + c.output + "': " + e.code().message());
    }
    const ManufacturedProblem problem = make_problem(c.problem, c.params);
    switch (c.command) {
      case Command::solve: return run_solve(c, problem, log);
      case Command::convergence: return run_convergence_cmd(c, problem, log);
      case Command::constraint_table: return run_table(c, problem, log);
      case Command::verify: return run_verify(c, problem, log);
    }
    return exit_config;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const InvalidArgument& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const InvalidState& e) {
    log << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_numerical;
  }
}

}  // namespace spc::cli
