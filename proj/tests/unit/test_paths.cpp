#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spc/errors.hpp"
#include "spc/parallel.hpp"
#include "spc/paths.hpp"

using namespace spc;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

}  // namespace

TEST(Ensemble, ShapeAndIncrementMoments) {
  const TimeGrid grid = make_time_grid(1.0, 40);
  const BrownianEnsemble e = BrownianEnsemble::sample(2000, grid, 7);
  EXPECT_EQ(e.paths(), 2000);
  EXPECT_EQ(e.steps(), 40);
  std::vector<double> all;
  for (int p = 0; p < e.paths(); ++p)
    for (double d : e.increments(p)) all.push_back(d);
  ASSERT_EQ(all.size(), 80000u);
  EXPECT_LE(std::abs(mean_of(all)), 4 * std::sqrt(grid.tau / all.size()));
  EXPECT_NEAR(variance_of(all), grid.tau, 0.1 * grid.tau);
}

TEST(Ensemble, TerminalValueVariance) {
  const TimeGrid grid = make_time_grid(1.0, 40);
  const BrownianEnsemble e = BrownianEnsemble::sample(4000, grid, 9);
  std::vector<double> wT;
  for (int p = 0; p < e.paths(); ++p) wT.push_back(e.w(p, 40));
  EXPECT_NEAR(variance_of(wT), 1.0, 0.1);
}

TEST(Ensemble, PrefixSums) {
  const TimeGrid grid = make_time_grid(1.0, 10);
  const BrownianEnsemble e = BrownianEnsemble::sample(3, grid, 1);
  for (int p = 0; p < 3; ++p) {
    EXPECT_EQ(e.w(p, 0), 0.0);
    double w = 0;
    for (int n = 0; n < 10; ++n) {
      w += e.increment(p, n);
      EXPECT_EQ(e.w(p, n + 1), w);
    }
  }
}

TEST(Ensemble, SameSeedIsBitExact) {
  const TimeGrid grid = make_time_grid(1.0, 25);
  const BrownianEnsemble a = BrownianEnsemble::sample(300, grid, 42);
  const BrownianEnsemble b = BrownianEnsemble::sample(300, grid, 42);
  const BrownianEnsemble c = BrownianEnsemble::sample(300, grid, 43);
  bool differs = false;
  for (int p = 0; p < 300; ++p)
    for (int n = 0; n < 25; ++n) {
      EXPECT_EQ(a.increment(p, n), b.increment(p, n));
      differs = differs || a.increment(p, n) != c.increment(p, n);
    }
  EXPECT_TRUE(differs);
}

TEST(Ensemble, PathIndependentOfEnsembleSize) {
  const TimeGrid grid = make_time_grid(1.0, 12);
  const BrownianEnsemble small = BrownianEnsemble::sample(5, grid, 3);
  const BrownianEnsemble large = BrownianEnsemble::sample(50, grid, 3);
  for (int p = 0; p < 5; ++p)
    for (int n = 0; n < 12; ++n) EXPECT_EQ(small.increment(p, n), large.increment(p, n));
}

TEST(Ensemble, IndependentOfThreadCount) {
  const TimeGrid grid = make_time_grid(1.0, 30);
  const int saved = num_threads();
  set_num_threads(1);
  const BrownianEnsemble a = BrownianEnsemble::sample(257, grid, 5);
  set_num_threads(4);
  const BrownianEnsemble b = BrownianEnsemble::sample(257, grid, 5);
  set_num_threads(saved);
  for (int p = 0; p < 257; ++p)
    for (int n = 0; n < 30; ++n) ASSERT_EQ(a.increment(p, n), b.increment(p, n));
}

TEST(Ensemble, ZerosAndNegation) {
  const TimeGrid grid = make_time_grid(1.0, 4);
  const BrownianEnsemble z = BrownianEnsemble::zeros(3, grid);
  for (int p = 0; p < 3; ++p)
    for (int n = 0; n < 4; ++n) EXPECT_EQ(z.increment(p, n), 0.0);
  const BrownianEnsemble e = BrownianEnsemble::sample(3, grid, 8);
  const BrownianEnsemble m = e.negated();
  for (int p = 0; p < 3; ++p)
    for (int n = 0; n < 4; ++n) EXPECT_EQ(m.increment(p, n), -e.increment(p, n));
}

TEST(Ensemble, RejectsBadInput) {
  const TimeGrid grid = make_time_grid(1.0, 4);
  EXPECT_THROW(BrownianEnsemble::sample(0, grid, 1), InvalidArgument);
  EXPECT_THROW(BrownianEnsemble::from_increments(2, grid, std::vector<double>(7)), InvalidArgument);
}

TEST(McMean, Examples) {
  const std::vector<double> same(17, 2.5);
  EXPECT_EQ(mc_mean(same), 2.5);
  EXPECT_EQ(mc_mean(std::vector<double>{1.0, -1.0}), 0.0);
  EXPECT_THROW(mc_mean(std::vector<double>{}), InvalidArgument);
  EXPECT_THROW(mc_mean(std::span<const Vector>{}), InvalidArgument);
}

TEST(McMean, CltBound) {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal;
  std::vector<double> v(100000);
  for (auto& x : v) x = normal(rng);
  EXPECT_LE(std::abs(mc_mean(v)), 4.0 / std::sqrt(v.size()));
}

TEST(McMean, PairwiseSumIsAccurate) {
  // 1 + many tiny values: plain left-to-right summation loses them.
  std::vector<double> v(1 << 20, 1e-16);
  v[0] = 1.0;
  const double exact = 1.0 + (v.size() - 1) * 1e-16;
  EXPECT_NEAR(pairwise_sum(v), exact, 1e-15);
}

TEST(McMean, FieldMean) {
  std::vector<Vector> f = {Vector::Constant(3, 1.0), Vector::Constant(3, 3.0)};
  EXPECT_EQ((mc_mean(std::span<const Vector>(f)) - Vector::Constant(3, 2.0)).norm(), 0.0);
}

TEST(StrongErrorNorm, Examples) {
  const FemSystem s = assemble(make_interval_mesh(0, 1, 2));
  std::vector<Trajectory> zero(3, Trajectory(4, 1));
  EXPECT_EQ(strong_error_norm(zero, s), 0.0);

  std::vector<Trajectory> one(1, Trajectory(1, 1));
  one[0][0] = Vector::Ones(1);
  EXPECT_NEAR(strong_error_norm(one, s), std::sqrt(1.0 / 3), 1e-15);

  std::vector<Trajectory> e(2, Trajectory(3, 1));
  e[0][1] = Vector::Constant(1, 0.5);
  e[1][2] = Vector::Constant(1, -2.0);
  const double base = strong_error_norm(e, s);
  for (auto& t : e)
    for (auto& v : t) v *= 2.0;
  EXPECT_NEAR(strong_error_norm(e, s), 2 * base, 1e-14);
  // max over levels of the path mean: level 2 has (0 + 4)/2 * (1/3).
  EXPECT_NEAR(base, std::sqrt(2.0 / 3), 1e-15);
}

TEST(StrongErrorNorm, RejectsMismatch) {
  const FemSystem s = assemble(make_interval_mesh(0, 1, 4));
  std::vector<Trajectory> bad = {Trajectory(2, 3), Trajectory(3, 3)};
  EXPECT_THROW(strong_error_norm(bad, s), InvalidArgument);
  std::vector<Trajectory> wrong_size = {Trajectory(2, 2)};
  EXPECT_THROW(strong_error_norm(wrong_size, s), InvalidArgument);
  EXPECT_THROW(strong_error_norm(std::vector<Trajectory>{}, s), InvalidArgument);
}
