#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "spc/spde.hpp"

namespace spc {

/// Step size inside the first certified contraction branch: 0.9 / (alpha + e^T).
double default_rho(double alpha, double horizon);

struct OptimizerConfig {
  /// Step size; non-positive selects default_rho().
  double rho = 0.0;
  double eps0 = 1e-6;
  int max_iter = 2000;
  /// Initial control; zero when absent.
  std::optional<Trajectory> u0;
  /// Solve the auxiliary m~/q~ systems with unit diffusion regardless of the
  /// problem's gamma. Off by default: with gamma != 1 the literal systems are
  /// inconsistent with the state operator and the projection misses delta.
  bool unit_auxiliary_diffusion = false;
  /// Observer called with (i, u^i) before each iteration and once with the
  /// returned control.
  std::function<void(int, const Trajectory&)> on_iterate;
};

struct IterationRecord {
  int iter = 0;
  double mu = 0.0;
  double step_error = 0.0;
  /// Constraint integral of the state after projection.
  double constraint_integral = 0.0;
  double cost = 0.0;
};

struct GpResult {
  Trajectory control;
  Trajectory state_mean;
  /// Full mean adjoint y~ + mu m~ at the returned control.
  Trajectory adjoint_mean;
  double mu = 0.0;
  double rho = 0.0;
  bool converged = false;
  double qtilde_integral = 0.0;
  std::vector<IterationRecord> records;
};

/// tau * sum_{n=0}^{N-1} load(1)^T x^{n+1}: space-time integral of a
/// right-point valued field. The caller subtracts delta.
double constraint_integral(const Trajectory& x_mean, const FemSystem& system, const TimeGrid& grid);

/// max(integral_half - delta, 0) / (rho * qtilde_integral). Throws
/// InvalidState when rho * qtilde_integral <= 0.
double select_multiplier(double integral_half, double delta, double rho, double qtilde_integral);

/// sqrt(tau * sum_{n=0}^{N-1} ||a^n - b^n||_M^2) over left-point levels.
double control_distance(const Trajectory& a, const Trajectory& b, const FemSystem& system, const TimeGrid& grid);

/// Discrete cost (1/2) tau sum_n [ ||x^{n+1} - xd^{n+1}||_M^2 + alpha ||u^n||_M^2 ]
/// of the expected state against the expected target.
double discrete_cost(const Trajectory& control, const Trajectory& x_mean, const MeanSources& sources, double alpha,
                     const FemSystem& system, const TimeGrid& grid);

/// The projection onto {u : integral of E[X(u)] <= delta}: v -> v - rho mu(v) m~.
/// m~ and q~ are control-independent and computed once.
class ConstraintProjector {
 public:
  ConstraintProjector(const Scheme& scheme, const MeanSources& sources, double rho, double diffusion);

  struct Result {
    Trajectory control;
    double mu = 0.0;
    double integral_before = 0.0;
  };

  Result project(const Trajectory& v) const;
  /// Same, reusing a known constraint integral of E[X(v)].
  Result project(const Trajectory& v, double integral_of_v) const;

  const Trajectory& mtilde() const { return mtilde_; }
  const Trajectory& qtilde() const { return qtilde_; }
  double qtilde_integral() const { return qtilde_integral_; }
  double rho() const { return rho_; }

 private:
  const Scheme* scheme_;
  const MeanSources* sources_;
  double rho_;
  Trajectory mtilde_;
  Trajectory qtilde_;
  double qtilde_integral_;
};

/// Gradient projection iteration on the expected-value optimality system.
GpResult gp_iterate(const Scheme& scheme, const OptimizerConfig& config, const MeanSources& sources);
GpResult gp_iterate(const Scheme& scheme, const OptimizerConfig& config);

struct ContractionCertificate {
  bool admissible = false;
  double lambda = 0.0;
  /// 1: rho <= 1/(alpha+e^T), 2: up to 2/(alpha+2e^T), 0: rejected.
  int branch = 0;
};

/// F(rho) = rho^2 (alpha+1)(alpha+2e^T) - rho(2 alpha + 2) + 1.
double contraction_polynomial(double alpha, double horizon, double rho);
ContractionCertificate contraction_certificate(double alpha, double horizon, double rho);

}  // namespace spc
