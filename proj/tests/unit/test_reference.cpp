#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spc/parallel.hpp"
#include "spc/problems.hpp"
#include "spc/reference.hpp"

using namespace spc;

TEST(Reference, SamplingIsBitIdentical) {
  const TimeGrid grid = make_time_grid(1.0, 17);
  for (int threads : {1, 2, 4}) {
    set_num_threads(threads);
    const BrownianEnsemble a = BrownianEnsemble::sample(123, grid, 77);
    const BrownianEnsemble b = reference::sample(123, grid, 77);
    for (int p = 0; p < 123; ++p)
      for (int n = 0; n <= 17; ++n) ASSERT_EQ(a.w(p, n), b.w(p, n));
  }
}

TEST(Reference, ForwardPathsAgree) {
  for (const auto& prob : {example1(), example2()}) {
    const FemSystem sys = assemble(prob.make_mesh(prob.dim == 1 ? 24 : 8));
    const TimeGrid grid = make_time_grid(1.0, 12);
    const Scheme scheme(prob.spec, sys, grid);
    Trajectory u = scheme.zero_control();
    for (int n = 0; n < grid.levels(); ++n)
      u[n] = sys.interpolate([&](const Point& x) { return prob.exact_u(grid.t(n), x); });
    const BrownianEnsemble e = BrownianEnsemble::sample(30, grid, 4);
    const auto fast = scheme.forward_paths(u, e);
    const auto slow = reference::forward_paths(scheme, u, e);
    for (int p = 0; p < 30; ++p)
      for (int n = 0; n < grid.levels(); ++n)
        EXPECT_LE((fast[p][n] - slow[p][n]).norm(), 1e-12 * (1 + slow[p][n].norm())) << prob.name;
  }
}

TEST(Reference, ReductionsAgree) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(3.0, 2.0);
  std::vector<double> v(10007);
  for (auto& x : v) x = normal(rng);
  EXPECT_NEAR(mc_mean(v), reference::mc_mean(v), 1e-12 * std::abs(reference::mc_mean(v)));

  const FemSystem sys = assemble(make_interval_mesh(0, 1, 9));
  std::vector<Trajectory> errs(40, Trajectory(6, sys.size()));
  for (auto& t : errs)
    for (auto& f : t)
      for (auto& c : f) c = normal(rng);
  EXPECT_NEAR(strong_error_norm(errs, sys), reference::strong_error_norm(errs, sys), 1e-13);
}

TEST(Reference, LsmcAgrees) {
  const TimeGrid grid = make_time_grid(1.0, 10);
  const BrownianEnsemble e = BrownianEnsemble::sample(500, grid, 9);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int level : {0, 3, 9}) {
    std::vector<Vector> payoff(500, Vector::Zero(5));
    for (int p = 0; p < 500; ++p)
      for (int i = 0; i < 5; ++i) payoff[p][i] = i * e.w(p, level + 1) + normal(rng) + 2.0;
    for (auto est : {ZEstimator::plain, ZEstimator::centered}) {
      const ZEstimate a = lsmc_z_estimate(e, level, payoff, est);
      const ZEstimate b = reference::lsmc_z_estimate(e, level, payoff, est);
      EXPECT_EQ(a.fallback, b.fallback);
      EXPECT_LE((a.coefficients - b.coefficients).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE((a.intercept_stderr - b.intercept_stderr).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Reference, ThreadCountDoesNotChangeLsmc) {
  const TimeGrid grid = make_time_grid(1.0, 8);
  const BrownianEnsemble e = BrownianEnsemble::sample(300, grid, 3);
  std::vector<Vector> payoff(300, Vector::Zero(7));
  for (int p = 0; p < 300; ++p)
    for (int i = 0; i < 7; ++i) payoff[p][i] = std::sin(i + e.w(p, 5)) * e.increment(p, 4);
  set_num_threads(1);
  const ZEstimate a = lsmc_z_estimate(e, 4, payoff);
  set_num_threads(3);
  const ZEstimate b = lsmc_z_estimate(e, 4, payoff);
  EXPECT_EQ((a.coefficients - b.coefficients).norm(), 0.0);
}
