#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spc/fem.hpp"
#include "spc/grid.hpp"
#include "spc/trajectory.hpp"

namespace spc {

/// P independent Brownian paths on a uniform time grid, stored as
/// increments dW_{n+1} = W(t_{n+1}) - W(t_n) ~ N(0, tau) plus prefix sums.
///
/// Path p is drawn from its own substream seeded by (seed, p), so a path is
/// identical regardless of the ensemble size or the worker schedule.
class BrownianEnsemble {
 public:
  static BrownianEnsemble sample(int paths, const TimeGrid& grid, std::uint64_t seed);
  /// Degenerate ensemble with every increment equal to zero.
  static BrownianEnsemble zeros(int paths, const TimeGrid& grid);
  /// Row-major P x N increments.
  static BrownianEnsemble from_increments(int paths, const TimeGrid& grid, std::vector<double> increments,
                                          std::uint64_t seed = 0);

  /// The substream behind sample(): N increments of path `path`.
  static std::vector<double> path_increments(std::uint64_t seed, int path, int steps, double tau);

  int paths() const { return paths_; }
  int steps() const { return steps_; }
  double tau() const { return tau_; }
  std::uint64_t seed() const { return seed_; }

  /// dW_{n+1} for n = 0..N-1.
  double increment(int p, int n) const { return increments_[static_cast<std::size_t>(p) * steps_ + n]; }
  /// W(t_n) for n = 0..N.
  double w(int p, int n) const { return prefix_[static_cast<std::size_t>(p) * (steps_ + 1) + n]; }
  std::span<const double> increments(int p) const {
    return {increments_.data() + static_cast<std::size_t>(p) * steps_, static_cast<std::size_t>(steps_)};
  }

  /// Antithetic partner: every increment negated.
  BrownianEnsemble negated() const;

 private:
  BrownianEnsemble(int paths, int steps, double tau, std::uint64_t seed, std::vector<double> increments);

  int paths_ = 0;
  int steps_ = 0;
  double tau_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<double> increments_;
  std::vector<double> prefix_;
};

/// Pairwise summation with a fixed tree over the index order.
double pairwise_sum(std::span<const double> values);

/// Arithmetic mean across paths.
double mc_mean(std::span<const double> values);
Vector mc_mean(std::span<const Vector> fields);

/// sqrt( max_n mean_p e_p(t_n)^T M e_p(t_n) ).
double strong_error_norm(std::span<const Trajectory> errors, const FemSystem& system);

}  // namespace spc
