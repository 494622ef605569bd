#pragma once

#include <Eigen/Dense>
#include <span>

#include "spc/fem.hpp"
#include "spc/paths.hpp"

namespace spc {

/// How the conditional expectation E[payoff * dW_{n+1} | F_{t_n}] is regressed.
///
/// `plain` regresses payoff * dW directly on {1, W(t_n)}. `centered` first
/// regresses payoff on {1, W(t_n)} and subtracts that fit before multiplying by
/// dW; the subtracted part is F_{t_n}-measurable, so the estimator stays
/// unbiased while losing the variance of the large measurable component.
enum class ZEstimator { plain, centered };

struct ZEstimate {
  /// Per node: {intercept, slope} of the fit c0 + c1 * W(t_n).
  Eigen::MatrixX2d coefficients;
  /// Standard error of the intercept per node.
  Vector intercept_stderr;
  /// True when W(t_n) is degenerate (e.g. n = 0) and the basis was reduced to {1}.
  bool fallback = false;

  /// Fitted conditional expectation at W(t_n) = w.
  Vector evaluate(double w) const { return coefficients.col(0) + w * coefficients.col(1); }
};

/// Least-squares Monte Carlo estimate of Z at level n from per-path payoffs
/// taken at level n+1. Parallel over nodes.
ZEstimate lsmc_z_estimate(const BrownianEnsemble& ensemble, int level, std::span<const Vector> payoff,
                          ZEstimator estimator = ZEstimator::centered);

}  // namespace spc
