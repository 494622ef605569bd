#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "spc/optimizer.hpp"
#include "spc/problems.hpp"

namespace spc {

struct ErrorReport {
  /// sqrt(max_n E ||X(t_n) - X_h^n||^2), exact state sampled at the path's W(t_n).
  double strong_l2_state = 0.0;
  /// sqrt(max_n ||E Y(t_n) - y^n||^2) over n = 0..N.
  double strong_l2_adjoint = 0.0;
  /// sqrt(max_n ||U(t_n) - u^n||^2) over n = 0..N-1.
  double strong_l2_control = 0.0;
  /// sqrt(tau sum_{n=0}^{N-1} E ||grad(X(t_{n+1}) - X_h^{n+1})||^2).
  double h1_state = 0.0;
  /// sqrt(tau sum_{n=0}^{N-1} ||grad(E Y(t_n) - y^n)||^2).
  double h1_adjoint = 0.0;
  double mu_error = 0.0;
  double mu = 0.0;
  double h = 0.0;
  double tau = 0.0;
  int paths = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
};

/// Numerical solution fields compared by compute_errors().
struct SolutionBundle {
  const Trajectory* control = nullptr;
  const Trajectory* adjoint_mean = nullptr;
  double mu = 0.0;
};

/// Errors against the manufactured solution. Per-path states are produced
/// and reduced on the fly. exact_x must be affine in w.
ErrorReport compute_errors(const ManufacturedProblem& problem, const Scheme& scheme, const SolutionBundle& solution,
                           const BrownianEnsemble& ensemble);
/// Same, from materialized per-path states.
ErrorReport compute_errors(const ManufacturedProblem& problem, const Scheme& scheme, const SolutionBundle& solution,
                           const BrownianEnsemble& ensemble, const PathEnsembleTrajectory& states);

struct OrderFit {
  std::vector<std::pair<double, double>> points;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (log x, log e).
OrderFit fit_order(std::vector<std::pair<double, double>> points);

/// One discretization level: cells per direction and time steps. h is the
/// mesh diameter.
struct Resolution {
  int cells = 0;
  int steps = 0;
  double h = 0.0;
  double tau = 0.0;
};

struct ExperimentOptions {
  OptimizerConfig optimizer;
  MeanEstimator estimator = MeanEstimator::mean_field;
  int paths = 2000;
  std::uint64_t seed = 7;
  /// Called once per finished optimizer run, serialized, in no fixed order.
  std::function<void(const Resolution&, double delta, const GpResult&)> on_result;
};

/// Solves the problem at each resolution and measures the errors.
std::vector<ErrorReport> run_convergence(const ManufacturedProblem& problem, const std::vector<Resolution>& resolutions,
                                         const ExperimentOptions& options);

struct TableCell {
  double delta = 0.0;
  Resolution resolution;
  double integral = 0.0;
  double mu = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Converged constraint integrals per (delta, resolution), row-major in
/// delta. Cells run in parallel. Throws InvalidState if a cell ends
/// infeasible by more than 1e-8.
std::vector<TableCell> constraint_table(const ManufacturedProblem& problem, const std::vector<double>& deltas,
                                        const std::vector<Resolution>& resolutions, const ExperimentOptions& options);

}  // namespace spc
