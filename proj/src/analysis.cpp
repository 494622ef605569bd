#include "spc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>

#include "spc/errors.hpp"
#include "spc/paths.hpp"

namespace spc {

namespace {

// Exact field g(x) = base(x) + w * slope(x) at one time level, as nodal
// interpolants plus the pieces of int |grad g - grad v_h|^2 that do not
// depend on v_h, all integrated with the element rule.
struct ExactLevel {
  Vector base;
  Vector slope;
  Vector grad_base;   // int grad(phi_i) . grad(base)
  Vector grad_slope;  // int grad(phi_i) . grad(slope)
  double bb = 0.0;
  double bs = 0.0;
  double ss = 0.0;
};

using GradientAt = std::function<std::pair<Point, Point>(const Point&)>;

void gradient_data(const FemSystem& system, const GradientAt& grads, ExactLevel& out) {
  const Mesh& m = system.mesh();
  out.grad_base = Vector::Zero(system.size());
  out.grad_slope = Vector::Zero(system.size());
  const int nv = m.vertices_per_element();
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto phi = shape_gradients(m, e);
    const auto& el = m.elements[e];
    for (const auto& q : element_quadrature(m, e)) {
      const auto [gb, gs] = grads(q.x);
      out.bb += q.weight * (gb.x * gb.x + gb.y * gb.y);
      out.bs += q.weight * (gb.x * gs.x + gb.y * gs.y);
      out.ss += q.weight * (gs.x * gs.x + gs.y * gs.y);
      for (int a = 0; a < nv; ++a) {
        const int i = m.interior_index[el[a]];
        if (i < 0) continue;
        out.grad_base[i] += q.weight * (phi[a].x * gb.x + phi[a].y * gb.y);
        out.grad_slope[i] += q.weight * (phi[a].x * gs.x + phi[a].y * gs.y);
      }
    }
  }
}

std::vector<ExactLevel> exact_state_levels(const ManufacturedProblem& problem, const FemSystem& system,
                                           const TimeGrid& grid) {
  std::vector<ExactLevel> levels(grid.levels());
#pragma omp parallel for schedule(static)
  for (int n = 0; n < grid.levels(); ++n) {
    const double t = grid.t(n);
    ExactLevel& L = levels[n];
    L.base = system.interpolate([&](const Point& x) { return problem.exact_x(t, x, 0.0); });
    L.slope = system.interpolate([&](const Point& x) { return problem.exact_x(t, x, 1.0); }) - L.base;
    gradient_data(system,
                  [&](const Point& x) {
                    const Point g0 = problem.exact_x_grad(t, x, 0.0);
                    const Point g1 = problem.exact_x_grad(t, x, 1.0);
                    return std::make_pair(g0, Point{g1.x - g0.x, g1.y - g0.y});
                  },
                  L);
  }
  return levels;
}

double max_mean_over_levels(const std::vector<double>& per_path_level, int paths, int levels) {
  std::vector<double> column(paths);
  double worst = 0.0;
  for (int n = 0; n < levels; ++n) {
    for (int p = 0; p < paths; ++p) column[p] = per_path_level[static_cast<std::size_t>(p) * levels + n];
    worst = std::max(worst, mc_mean(column));
  }
  return worst;
}

void check_inputs(const ManufacturedProblem& problem, const Scheme& scheme, const SolutionBundle& solution,
                  const BrownianEnsemble& ensemble) {
  if (!problem.exact_x || !problem.exact_x_grad || !problem.exact_u || !problem.exact_y || !problem.exact_y_grad)
    throw InvalidArgument("compute_errors: problem lacks exact solutions");
  if (!solution.control || !solution.adjoint_mean) throw InvalidArgument("compute_errors: missing solution fields");
  const int L = scheme.grid().levels();
  if (solution.control->levels() != L || solution.adjoint_mean->levels() != L)
    throw InvalidArgument("compute_errors: solution does not match the grid");
  if (ensemble.steps() != scheme.grid().steps) throw InvalidArgument("compute_errors: ensemble does not match the grid");
}

// Fills everything except the per-path state errors.
ErrorReport deterministic_errors(const ManufacturedProblem& problem, const Scheme& scheme,
                                 const SolutionBundle& solution, const BrownianEnsemble& ensemble) {
  const FemSystem& sys = scheme.system();
  const TimeGrid& grid = scheme.grid();
  const SparseMatrix& M = sys.mass();
  const SparseMatrix& A = sys.stiffness();
  ErrorReport r;
  r.h = sys.mesh().h;
  r.tau = grid.tau;
  r.paths = ensemble.paths();
  r.seed = ensemble.seed();
  r.mu = solution.mu;
  r.mu_error = std::abs(solution.mu - problem.exact_mu);

  double adj = 0.0;
  double adj_h1 = 0.0;
  double ctl = 0.0;
  for (int n = 0; n <= grid.steps; ++n) {
    const double t = grid.t(n);
    const Vector& y = (*solution.adjoint_mean)[n];
    const Vector e = y - sys.interpolate([&](const Point& x) { return problem.exact_y(t, x); });
    adj = std::max(adj, e.dot(M * e));
    if (n == grid.steps) break;
    ExactLevel L;
    gradient_data(sys, [&](const Point& x) { return std::make_pair(problem.exact_y_grad(t, x), Point{}); }, L);
    adj_h1 += std::max(0.0, y.dot(A * y) - 2.0 * y.dot(L.grad_base) + L.bb);
    const Vector eu = (*solution.control)[n] - sys.interpolate([&](const Point& x) { return problem.exact_u(t, x); });
    ctl = std::max(ctl, eu.dot(M * eu));
  }
  r.strong_l2_adjoint = std::sqrt(adj);
  r.h1_adjoint = std::sqrt(grid.tau * adj_h1);
  r.strong_l2_control = std::sqrt(ctl);
  return r;
}

// Squared L2 error per level and the summed H1 error of one path.
struct PathErrorKernel {
  const FemSystem& sys;
  const std::vector<ExactLevel>& exact;
  const BrownianEnsemble& ensemble;
  int levels;

  double operator()(int p, const Trajectory& x, double* l2_out) const {
    const SparseMatrix& M = sys.mass();
    const SparseMatrix& A = sys.stiffness();
    double h1 = 0.0;
    Vector e(sys.size());
    for (int n = 0; n < levels; ++n) {
      const double w = ensemble.w(p, n);
      const ExactLevel& L = exact[n];
      e = x[n] - L.base - w * L.slope;
      l2_out[n] = e.dot(M * e);
      if (n == 0) continue;
      const double grad_sq = x[n].dot(A * x[n]) - 2.0 * x[n].dot(L.grad_base) - 2.0 * w * x[n].dot(L.grad_slope) +
                             L.bb + 2.0 * w * L.bs + w * w * L.ss;
      h1 += std::max(0.0, grad_sq);
    }
    return h1;
  }
};

ErrorReport finish(ErrorReport r, const std::vector<double>& l2, const std::vector<double>& h1, int paths,
                   int levels, double tau) {
  r.strong_l2_state = std::sqrt(max_mean_over_levels(l2, paths, levels));
  r.h1_state = std::sqrt(tau * mc_mean(h1));
  return r;
}

}  // namespace

ErrorReport compute_errors(const ManufacturedProblem& problem, const Scheme& scheme, const SolutionBundle& solution,
                           const BrownianEnsemble& ensemble) {
  check_inputs(problem, scheme, solution, ensemble);
  const int P = ensemble.paths();
  const int L = scheme.grid().levels();
  const auto exact = exact_state_levels(problem, scheme.system(), scheme.grid());
  const PathErrorKernel kernel{scheme.system(), exact, ensemble, L};
  std::vector<double> l2(static_cast<std::size_t>(P) * L);
  std::vector<double> h1(P);
  scheme.visit_paths(*solution.control, ensemble, [&](int p, const Trajectory& x) {
    h1[p] = kernel(p, x, l2.data() + static_cast<std::size_t>(p) * L);
  });
  return finish(deterministic_errors(problem, scheme, solution, ensemble), l2, h1, P, L, scheme.grid().tau);
}

ErrorReport compute_errors(const ManufacturedProblem& problem, const Scheme& scheme, const SolutionBundle& solution,
                           const BrownianEnsemble& ensemble, const PathEnsembleTrajectory& states) {
  check_inputs(problem, scheme, solution, ensemble);
  const int P = ensemble.paths();
  const int L = scheme.grid().levels();
  if (static_cast<int>(states.size()) != P) throw InvalidArgument("compute_errors: one state per path required");
  for (const auto& s : states)
    if (s.levels() != L || s.field_size() != scheme.system().size())
      throw InvalidArgument("compute_errors: path state does not match the grid");
  const auto exact = exact_state_levels(problem, scheme.system(), scheme.grid());
  const PathErrorKernel kernel{scheme.system(), exact, ensemble, L};
  std::vector<double> l2(static_cast<std::size_t>(P) * L);
  std::vector<double> h1(P);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < P; ++p) h1[p] = kernel(p, states[p], l2.data() + static_cast<std::size_t>(p) * L);
  return finish(deterministic_errors(problem, scheme, solution, ensemble), l2, h1, P, L, scheme.grid().tau);
}

OrderFit fit_order(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw InvalidArgument("fit_order: need at least two points");
  for (const auto& [x, e] : points)
    if (!(x > 0.0) || !(e > 0.0) || !std::isfinite(x) || !std::isfinite(e))
      throw InvalidArgument("fit_order: scales and errors must be positive and finite");
  const double n = static_cast<double>(points.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, e] : points) {
    mx += std::log(x);
    my += std::log(e);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [x, e] : points) {
    const double dx = std::log(x) - mx;
    const double dy = std::log(e) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_order: scales must not all coincide");
  OrderFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = std::move(points);
  return fit;
}

std::vector<ErrorReport> run_convergence(const ManufacturedProblem& problem, const std::vector<Resolution>& resolutions,
                                         const ExperimentOptions& options) {
  if (resolutions.empty()) throw InvalidArgument("run_convergence: no resolutions");
  std::vector<ErrorReport> reports;
  reports.reserve(resolutions.size());
  for (const auto& res : resolutions) {
    const FemSystem system(problem.make_mesh(res.cells));
    const TimeGrid grid = make_time_grid(problem.spec.horizon, res.steps);
    const Scheme scheme(problem.spec, system, grid);
    const auto ensemble = BrownianEnsemble::sample(options.paths, grid, options.seed);
    const MeanSources sources = scheme.mean_sources(options.estimator, &ensemble);
    const GpResult result = gp_iterate(scheme, options.optimizer, sources);
    if (options.on_result) options.on_result(res, problem.spec.delta, result);
    ErrorReport r = compute_errors(problem, scheme, {&result.control, &result.adjoint_mean, result.mu}, ensemble);
    r.iterations = static_cast<int>(result.records.size());
    r.converged = result.converged;
    reports.push_back(r);
  }
  return reports;
}

std::vector<TableCell> constraint_table(const ManufacturedProblem& problem, const std::vector<double>& deltas,
                                        const std::vector<Resolution>& resolutions, const ExperimentOptions& options) {
  if (deltas.empty() || resolutions.empty()) throw InvalidArgument("constraint_table: empty delta or resolution list");
  const int R = static_cast<int>(resolutions.size());
  const int cells = static_cast<int>(deltas.size()) * R;
  std::vector<TableCell> table(cells);
  std::exception_ptr failure;
  std::mutex lock;

#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < cells; ++c) {
    try {
      const Resolution& res = resolutions[c % R];
      ProblemSpec spec = problem.spec;
      spec.delta = deltas[c / R];
      const FemSystem system(problem.make_mesh(res.cells));
      const TimeGrid grid = make_time_grid(spec.horizon, res.steps);
      const Scheme scheme(spec, system, grid);
      std::optional<BrownianEnsemble> ensemble;
      if (options.estimator == MeanEstimator::monte_carlo)
        ensemble = BrownianEnsemble::sample(options.paths, grid, options.seed);
      const MeanSources sources = scheme.mean_sources(options.estimator, ensemble ? &*ensemble : nullptr);
      const GpResult result = gp_iterate(scheme, options.optimizer, sources);
      if (options.on_result) {
        std::lock_guard<std::mutex> guard(lock);
        options.on_result(res, spec.delta, result);
      }
      TableCell& cell = table[c];
      cell.delta = spec.delta;
      cell.resolution = res;
      cell.integral = constraint_integral(result.state_mean, system, grid);
      cell.mu = result.mu;
      cell.iterations = static_cast<int>(result.records.size());
      cell.converged = result.converged;
      if (cell.integral > spec.delta + 1e-8)
        throw InvalidState("infeasible result, integral=" + std::to_string(cell.integral));
    } catch (...) {
      const Resolution& res = resolutions[c % R];
      const std::string where = "cell delta=" + std::to_string(deltas[c / R]) + " cells=" + std::to_string(res.cells) +
                                " steps=" + std::to_string(res.steps) + ": ";
      std::exception_ptr annotated;
      try {
        throw;
      } catch (const NumericalError& e) {
        annotated = std::make_exception_ptr(NumericalError(where + e.what()));
      } catch (const InvalidState& e) {
        annotated = std::make_exception_ptr(InvalidState(where + e.what()));
      } catch (...) {
        annotated = std::current_exception();
      }
      std::lock_guard<std::mutex> guard(lock);
      if (!failure) failure = annotated;
    }
  }
  if (failure) std::rethrow_exception(failure);
  return table;
}

}  // namespace spc
