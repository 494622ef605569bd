#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spc/fem.hpp"
#include "spc/grid.hpp"
#include "spc/paths.hpp"
#include "spc/trajectory.hpp"

namespace spc {

using SpaceTimeFunction = std::function<double(double t, const Point& x)>;
/// Coefficient that may depend on the Brownian value w = W(t) of the path.
using NoisyFunction = std::function<double(double t, const Point& x, double w)>;

/// g(t, x, w) = base(t, x) + w * slope(t, x).
struct AffineInNoise {
  SpaceTimeFunction base;
  SpaceTimeFunction slope;
};

/// Data of the controlled stochastic heat equation
///   dX = [gamma Lap X + f + U] dt + sigma dW,  X(0) = x0,
/// the tracking target X_d, the regularization alpha and the constraint level
/// delta on the space-time integral of E[X].
struct ProblemSpec {
  double alpha = 1.0;
  double delta = 0.0;
  double horizon = 1.0;
  double gamma = 1.0;
  SpaceFunction x0;
  SpaceTimeFunction sigma;
  NoisyFunction forcing;
  NoisyFunction target;
  /// E[f(t, x, W_t)] and E[X_d(t, x, W_t)]; required by the expected-value
  /// recursions.
  SpaceTimeFunction mean_forcing;
  SpaceTimeFunction mean_target;
  /// Optional affine-in-w splits of forcing/target. When present, per-path
  /// load vectors are built from two shared loads instead of per-path
  /// quadrature.
  std::optional<AffineInNoise> forcing_affine;
  std::optional<AffineInNoise> target_affine;

  void validate() const;
};

enum class MeanEstimator { mean_field, monte_carlo };

/// Control-independent inputs of the expected-value recursions.
struct MeanSources {
  /// n = 0..N-1: tau * load(E f(t_n)) + E[dW_{n+1}] load(sigma(t_n)).
  std::vector<Vector> forward;
  /// n = 0..N: nodal L2 projection of E X_d(t_n).
  std::vector<Vector> target;
  /// Projection of x0.
  Vector initial;
  MeanEstimator estimator = MeanEstimator::mean_field;
};

/// Binds a problem to a discretization: caches the factorized implicit Euler
/// operator (M + tau*gamma*A) and the per-level load vectors. The FemSystem
/// must outlive the Scheme. All const members are safe to call concurrently.
class Scheme {
 public:
  Scheme(ProblemSpec spec, const FemSystem& system, const TimeGrid& grid);

  const ProblemSpec& spec() const { return spec_; }
  const FemSystem& system() const { return *system_; }
  const TimeGrid& grid() const { return grid_; }
  const EulerOperator& state_operator() const { return *state_op_; }

  /// Exact expectations (W enters affinely with zero mean).
  const MeanSources& exact_mean_sources() const;
  /// Path averages over an ensemble; equals the mean of forward_paths exactly
  /// by linearity.
  MeanSources sampled_mean_sources(const BrownianEnsemble& ensemble) const;
  MeanSources mean_sources(MeanEstimator estimator, const BrownianEnsemble* ensemble) const;

  Trajectory zero_control() const { return Trajectory(grid_.levels(), system_->size()); }

  /// Noise-free recursion for E[X].
  Trajectory forward_mean(const Trajectory& control) const;
  Trajectory forward_mean(const Trajectory& control, const MeanSources& sources) const;

  /// Backward recursion for E[Y]:
  ///   (M + tau gamma A) y^n = M y^{n+1} + tau M (x^{n+1} - P xd^{n+1}) + tau mu load(1),  y^N = 0.
  Trajectory backward_mean_adjoint(const Trajectory& x_mean, double mu) const;
  Trajectory backward_mean_adjoint(const Trajectory& x_mean, double mu, const MeanSources& sources) const;

  /// State of one path.
  Trajectory forward_path(const Trajectory& control, const BrownianEnsemble& ensemble, int path) const;

  using PathVisitor = std::function<void(int path, const Trajectory& state)>;
  /// Solves every path in parallel and hands each trajectory to `visit`.
  /// The visitor runs concurrently for distinct paths and must only touch
  /// path-indexed storage.
  void visit_paths(const Trajectory& control, const BrownianEnsemble& ensemble, const PathVisitor& visit) const;

  PathEnsembleTrajectory forward_paths(const Trajectory& control, const BrownianEnsemble& ensemble) const;

  /// Per-path right-hand side pieces at step n (exposed for the serial
  /// reference and tests).
  Vector forcing_load(int n, double w) const;
  const Vector& noise_load(int n) const { return sigma_loads_[n]; }
  Vector target_load(int n, double w) const;

 private:
  void check_control(const Trajectory& control) const;
  void forward_into(const std::vector<Vector>& control_terms, const BrownianEnsemble* ensemble,
                    int path, const std::vector<Vector>* mean_forward, Trajectory& out, Vector& rhs) const;
  std::vector<Vector> control_terms(const Trajectory& control) const;

  ProblemSpec spec_;
  const FemSystem* system_;
  TimeGrid grid_;
  std::shared_ptr<const EulerOperator> state_op_;
  Vector initial_;
  std::vector<Vector> sigma_loads_;
  std::vector<Vector> forcing_base_loads_;
  std::vector<Vector> forcing_slope_loads_;
  std::vector<Vector> target_base_loads_;
  std::vector<Vector> target_slope_loads_;
  std::optional<MeanSources> exact_sources_;
};

PathEnsembleTrajectory forward_paths(const ProblemSpec& spec, const FemSystem& system, const TimeGrid& grid,
                                     const Trajectory& control, const BrownianEnsemble& ensemble);
Trajectory forward_mean(const ProblemSpec& spec, const FemSystem& system, const TimeGrid& grid,
                        const Trajectory& control);
Trajectory backward_mean_adjoint(const ProblemSpec& spec, const FemSystem& system, const TimeGrid& grid,
                                 const Trajectory& x_mean, double mu);

/// Backward auxiliary solve with unit source:
///   (M + tau d A) m^n = M m^{n+1} + tau load(1),  m^N = 0.
/// `diffusion` d defaults to 1 as in the algorithm statement.
Trajectory mtilde_solve(const FemSystem& system, const TimeGrid& grid, double diffusion = 1.0);

/// State response to the control m~:
///   (M + tau d A) q^{n+1} = M q^n + tau M m^n,  q^0 = 0.
Trajectory qtilde_solve(const FemSystem& system, const TimeGrid& grid, const Trajectory& mtilde,
                        double diffusion = 1.0);

}  // namespace spc
