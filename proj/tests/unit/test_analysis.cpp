#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "spc/analysis.hpp"
#include "spc/errors.hpp"
#include "spc/parallel.hpp"

using namespace spc;
using std::numbers::pi;

namespace {

struct Exact {
  Trajectory control;
  Trajectory adjoint;
};

Exact sampled_exact(const ManufacturedProblem& p, const FemSystem& sys, const TimeGrid& grid) {
  Exact e{Trajectory(grid.levels(), sys.size()), Trajectory(grid.levels(), sys.size())};
  for (int n = 0; n < grid.levels(); ++n) {
    const double t = grid.t(n);
    e.control[n] = sys.interpolate([&](const Point& x) { return p.exact_u(t, x); });
    e.adjoint[n] = sys.interpolate([&](const Point& x) { return p.exact_y(t, x); });
  }
  return e;
}

}  // namespace

TEST(FitOrder, Examples) {
  const OrderFit a = fit_order({{0.1, 0.3}, {0.05, 0.15}, {0.02, 0.06}});
  EXPECT_NEAR(a.slope, 1.0, 1e-12);
  EXPECT_NEAR(a.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(std::exp(a.intercept), 3.0, 1e-12);
  const OrderFit b = fit_order({{0.5, 0.25}, {0.25, 0.0625}, {0.1, 0.01}});
  EXPECT_NEAR(b.slope, 2.0, 1e-12);
  EXPECT_EQ(b.points.size(), 3u);
}

TEST(FitOrder, ScaleInvariant) {
  const std::vector<std::pair<double, double>> pts = {{0.1, 0.31}, {0.07, 0.2}, {0.05, 0.16}, {0.02, 0.05}};
  auto scaled = pts;
  for (auto& [x, e] : scaled) e *= 17.5;
  const OrderFit a = fit_order(pts);
  const OrderFit b = fit_order(scaled);
  EXPECT_NEAR(a.slope, b.slope, 1e-12);
  EXPECT_NEAR(a.r_squared, b.r_squared, 1e-12);
  EXPECT_LT(a.r_squared, 1.0);
}

TEST(FitOrder, RejectsBadInput) {
  EXPECT_THROW(fit_order({{0.1, 1.0}}), InvalidArgument);
  EXPECT_THROW(fit_order({{0.1, 1.0}, {0.2, 0.0}}), InvalidArgument);
  EXPECT_THROW(fit_order({{-0.1, 1.0}, {0.2, 1.0}}), InvalidArgument);
  EXPECT_THROW(fit_order({{0.1, 1.0}, {0.1, 2.0}}), InvalidArgument);
}

TEST(ComputeErrors, ExactInputsHitTheInterpolationFloor) {
  const ManufacturedProblem p = example1();
  const FemSystem sys = assemble(p.make_mesh(20));
  const TimeGrid grid = make_time_grid(1.0, 20);
  const Scheme scheme(p.spec, sys, grid);
  const Exact ex = sampled_exact(p, sys, grid);
  const BrownianEnsemble e = BrownianEnsemble::sample(50, grid, 3);
  const ErrorReport r = compute_errors(p, scheme, {&ex.control, &ex.adjoint, p.exact_mu}, e);
  EXPECT_LE(r.strong_l2_control, 1e-14);
  EXPECT_LE(r.strong_l2_adjoint, 1e-14);
  EXPECT_EQ(r.mu_error, 0.0);
  // Gradient of the interpolation error: about h |y''| / sqrt(12).
  EXPECT_GT(r.h1_adjoint, 0.0);
  EXPECT_LE(r.h1_adjoint, 0.05);
  EXPECT_GT(r.strong_l2_state, 0.0);
  EXPECT_EQ(r.paths, 50);
  EXPECT_EQ(r.seed, 3u);
  EXPECT_NEAR(r.h, 1.0 / 20, 1e-15);
  EXPECT_DOUBLE_EQ(r.tau, 1.0 / 20);
}

TEST(ComputeErrors, DoublingTheDeviationDoublesTheErrors) {
  const ManufacturedProblem p = example2();
  const FemSystem sys = assemble(p.make_mesh(6));
  const TimeGrid grid = make_time_grid(1.0, 6);
  const Scheme scheme(p.spec, sys, grid);
  const Exact ex = sampled_exact(p, sys, grid);
  Trajectory u1 = ex.control, y1 = ex.adjoint, u2 = ex.control, y2 = ex.adjoint;
  for (int n = 0; n < grid.levels(); ++n) {
    const Vector d = sys.interpolate([n](const Point& x) { return 0.1 * n * x.x * (1 - x.y); });
    u1[n] += d;
    u2[n] += 2 * d;
    y1[n] -= 3 * d;
    y2[n] -= 6 * d;
  }
  const BrownianEnsemble e = BrownianEnsemble::sample(4, grid, 1);
  const ErrorReport a = compute_errors(p, scheme, {&u1, &y1, p.exact_mu + 0.1}, e);
  const ErrorReport b = compute_errors(p, scheme, {&u2, &y2, p.exact_mu + 0.2}, e);
  EXPECT_NEAR(b.strong_l2_control, 2 * a.strong_l2_control, 1e-13);
  EXPECT_NEAR(b.strong_l2_adjoint, 2 * a.strong_l2_adjoint, 1e-13);
  EXPECT_NEAR(b.mu_error, 2 * a.mu_error, 1e-13);
}

TEST(ComputeErrors, StreamingMatchesMaterialized) {
  const ManufacturedProblem p = example1();
  const FemSystem sys = assemble(p.make_mesh(12));
  const TimeGrid grid = make_time_grid(1.0, 12);
  const Scheme scheme(p.spec, sys, grid);
  const Exact ex = sampled_exact(p, sys, grid);
  const BrownianEnsemble e = BrownianEnsemble::sample(64, grid, 8);
  const SolutionBundle s{&ex.control, &ex.adjoint, 0.9};
  const ErrorReport a = compute_errors(p, scheme, s, e);
  const ErrorReport b = compute_errors(p, scheme, s, e, scheme.forward_paths(ex.control, e));
  EXPECT_NEAR(a.strong_l2_state, b.strong_l2_state, 1e-14);
  EXPECT_NEAR(a.h1_state, b.h1_state, 1e-13);
  EXPECT_EQ(a.mu_error, b.mu_error);
}

TEST(ComputeErrors, StateErrorAgainstDirectDefinition) {
  // Direct evaluation: interpolate the exact state at each path's W and
  // reduce with strong_error_norm.
  const ManufacturedProblem p = example1();
  const FemSystem sys = assemble(p.make_mesh(10));
  const TimeGrid grid = make_time_grid(1.0, 10);
  const Scheme scheme(p.spec, sys, grid);
  const Exact ex = sampled_exact(p, sys, grid);
  const BrownianEnsemble e = BrownianEnsemble::sample(20, grid, 5);
  auto states = scheme.forward_paths(ex.control, e);
  for (int q = 0; q < e.paths(); ++q)
    for (int n = 0; n < grid.levels(); ++n)
      states[q][n] -= sys.interpolate([&](const Point& x) { return p.exact_x(grid.t(n), x, e.w(q, n)); });
  const ErrorReport r = compute_errors(p, scheme, {&ex.control, &ex.adjoint, 1.0}, e);
  EXPECT_NEAR(r.strong_l2_state, strong_error_norm(states, sys), 1e-13);
}

TEST(ComputeErrors, H1NormsConvergeToContinuousNorms) {
  // With a zero numerical adjoint the H1 error is the discrete-time gradient
  // norm of the exact adjoint: pi^2/2 * tau sum t^2 (1-t)^2 for example 1.
  const ManufacturedProblem p = example1();
  const int N = 200;
  const FemSystem sys = assemble(p.make_mesh(64));
  const TimeGrid grid = make_time_grid(1.0, N);
  const Scheme scheme(p.spec, sys, grid);
  const Trajectory zero = scheme.zero_control();
  const BrownianEnsemble e = BrownianEnsemble::zeros(2, grid);
  const ErrorReport r = compute_errors(p, scheme, {&zero, &zero, 1.0}, e);
  double s = 0.0;
  for (int n = 0; n < N; ++n) {
    const double t = grid.t(n);
    s += grid.tau * t * t * (1 - t) * (1 - t);
  }
  EXPECT_NEAR(r.h1_adjoint, std::sqrt(pi * pi / 2 * s), 1e-9);
  // The L2 adjoint error is max_n ||Y(t_n)||, nodal interpolant in the M norm.
  EXPECT_NEAR(r.strong_l2_adjoint, 0.25 / std::sqrt(2.0), 2e-4);
}

TEST(ComputeErrors, RejectsMissingFields) {
  const ManufacturedProblem p = example1();
  const FemSystem sys = assemble(p.make_mesh(4));
  const TimeGrid grid = make_time_grid(1.0, 4);
  const Scheme scheme(p.spec, sys, grid);
  const Trajectory zero = scheme.zero_control();
  const BrownianEnsemble e = BrownianEnsemble::zeros(2, grid);
  EXPECT_THROW(compute_errors(p, scheme, {nullptr, &zero, 1.0}, e), InvalidArgument);
  const Trajectory short_one(3, sys.size());
  EXPECT_THROW(compute_errors(p, scheme, {&short_one, &zero, 1.0}, e), InvalidArgument);
  EXPECT_THROW(compute_errors(p, scheme, {&zero, &zero, 1.0}, BrownianEnsemble::zeros(2, make_time_grid(1.0, 3))),
               InvalidArgument);
}

TEST(Convergence, SeedStability) {
  const ManufacturedProblem p = example1();
  const Resolution res{40, 40, 1.0 / 40, 1.0 / 40};
  ExperimentOptions o;
  o.paths = 2000;
  o.seed = 7;
  const double a = run_convergence(p, {res}, o).front().strong_l2_state;
  o.seed = 99;
  const double b = run_convergence(p, {res}, o).front().strong_l2_state;
  EXPECT_LT(std::max(a, b) / std::min(a, b), 2.0);
}

TEST(Convergence, ReportsEveryResolutionAndIteration) {
  const ManufacturedProblem p = example1();
  ExperimentOptions o;
  o.paths = 50;
  int calls = 0;
  o.on_result = [&](const Resolution&, double delta, const GpResult& r) {
    ++calls;
    EXPECT_EQ(delta, p.spec.delta);
    EXPECT_TRUE(r.converged);
  };
  const auto reports = run_convergence(p, {{10, 10, 0.1, 0.1}, {20, 20, 0.05, 0.05}}, o);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(calls, 2);
  EXPECT_GT(reports[0].strong_l2_control, reports[1].strong_l2_control);
  for (const auto& r : reports) {
    EXPECT_GE(r.strong_l2_state, 0.0);
    EXPECT_GE(r.h1_state, 0.0);
    EXPECT_GT(r.iterations, 0);
  }
}

TEST(ConstraintTable, Example1Shape) {
  const ManufacturedProblem p = example1();
  ExperimentOptions o;
  const std::vector<double> deltas = {0.2, 0.1, -0.1, -0.2, 10.0};
  const std::vector<Resolution> res = {{20, 20, 0.05, 0.05}, {40, 40, 0.025, 0.025}};
  const auto cells = constraint_table(p, deltas, res, o);
  ASSERT_EQ(cells.size(), deltas.size() * res.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const TableCell& c = cells[i];
    EXPECT_EQ(c.delta, deltas[i / res.size()]);
    EXPECT_EQ(c.resolution.cells, res[i % res.size()].cells);
    EXPECT_TRUE(c.converged);
    EXPECT_LE(c.integral, c.delta + 1e-8);
    if (c.delta < 1.0) {
      EXPECT_NEAR(c.integral, c.delta, 1e-8);
      EXPECT_GT(c.mu, 0.0);
    } else {
      EXPECT_EQ(c.mu, 0.0);
      EXPECT_NEAR(c.integral, 1 / pi, 0.02);
    }
  }
}

TEST(ConstraintTable, IndependentOfThreadCount) {
  const ManufacturedProblem p = example1();
  ExperimentOptions o;
  o.estimator = MeanEstimator::monte_carlo;
  o.paths = 200;
  const std::vector<Resolution> res = {{10, 10, 0.1, 0.1}, {16, 16, 1.0 / 16, 1.0 / 16}};
  const int saved = num_threads();
  set_num_threads(1);
  const auto a = constraint_table(p, {0.2, 0.1}, res, o);
  set_num_threads(3);
  const auto b = constraint_table(p, {0.2, 0.1}, res, o);
  set_num_threads(saved);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].integral, b[i].integral);
    EXPECT_EQ(a[i].mu, b[i].mu);
    EXPECT_EQ(a[i].iterations, b[i].iterations);
  }
}

TEST(ConstraintTable, RejectsEmptyInput) {
  EXPECT_THROW(constraint_table(example1(), {}, {{4, 4, 0.25, 0.25}}, {}), InvalidArgument);
  EXPECT_THROW(run_convergence(example1(), {}, {}), InvalidArgument);
}
