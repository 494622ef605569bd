#pragma once

// Serial, formula-by-formula versions of the parallel kernels. They rebuild
// every right-hand side from the problem closures instead of the cached loads
// and are kept for cross-checking and benchmarking only.

#include <span>

#include "spc/lsmc.hpp"
#include "spc/paths.hpp"
#include "spc/spde.hpp"

namespace spc::reference {

BrownianEnsemble sample(int paths, const TimeGrid& grid, std::uint64_t seed);

PathEnsembleTrajectory forward_paths(const Scheme& scheme, const Trajectory& control,
                                     const BrownianEnsemble& ensemble);

/// Plain left-to-right summation.
double mc_mean(std::span<const double> values);

double strong_error_norm(std::span<const Trajectory> errors, const FemSystem& system);

/// Dense QR least squares, node by node.
ZEstimate lsmc_z_estimate(const BrownianEnsemble& ensemble, int level, std::span<const Vector> payoff,
                          ZEstimator estimator);

}  // namespace spc::reference
