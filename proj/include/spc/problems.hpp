#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "spc/spde.hpp"

namespace spc {

/// Two readings of the first example's target term 2(t + W): literally, or
/// with W scaled by beta as everywhere else in that example.
enum class TargetReading { beta_scaled, literal };

using GradientFunction = std::function<Point(double t, const Point& x, double w)>;

/// A problem with a known optimal solution. exact_x/exact_y_path are
/// pathwise (w = W(t)); exact_u/exact_y are the deterministic control and
/// the expected adjoint.
struct ManufacturedProblem {
  std::string name;
  int dim = 1;
  ProblemSpec spec;
  SpaceTimeFunction exact_u;
  NoisyFunction exact_x;
  GradientFunction exact_x_grad;
  SpaceTimeFunction exact_y;
  std::function<Point(double t, const Point& x)> exact_y_grad;
  NoisyFunction exact_y_path;
  double exact_mu = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  double gamma = 1.0;
  TargetReading reading = TargetReading::beta_scaled;

  /// Uniform mesh of the problem's domain with `cells` cells per direction.
  Mesh make_mesh(int cells) const;
};

/// 1D problem on [0, 1], T = 1, alpha = 1, gamma = 1, delta = 1/pi.
ManufacturedProblem example1(double beta = 0.1, double mu = 1.0,
                             TargetReading reading = TargetReading::beta_scaled);

/// 2D problem on the unit square, T = 1, alpha = 1,
/// delta = (17 lambda + 28) / (3 pi^2).
ManufacturedProblem example2(double gamma = 0.2, double lambda = 0.2, double beta = 0.5, double mu = 0.8);

/// Builds a problem by name ("example1", "example2"); unset parameters keep
/// their defaults.
struct ProblemParameters {
  std::optional<double> beta;
  std::optional<double> mu;
  std::optional<double> gamma;
  std::optional<double> lambda;
};
ManufacturedProblem make_problem(const std::string& name, const ProblemParameters& params = {});

struct ManufacturedResidual {
  double state_drift = 0.0;
  double state_diffusion = 0.0;
  double adjoint_drift = 0.0;
  /// E[Y] + alpha U at w = 0.
  double optimality = 0.0;
  double initial = 0.0;
  /// Mismatch between the pathwise closures and their affine splits.
  double affine_split = 0.0;
  int samples = 0;

  double max() const;
};

/// Checks the exact solution against the problem data at random (t, x, w):
/// Ito drift and diffusion of the state, the adjoint drift
///   dY = -[gamma Lap Y + X - X_d + mu] dt + Z dW,
/// the optimality relation and the initial value. Derivatives are 8th-order
/// central differences.
ManufacturedResidual verify_manufactured(const ManufacturedProblem& problem, int samples = 1000,
                                         std::uint64_t seed = 1);

/// The reading of the first example whose adjoint residual vanishes
/// (beta_scaled when both do, i.e. beta = 1). Throws InvalidState when
/// neither does.
TargetReading select_example1_reading(double beta = 0.1, double mu = 1.0, int samples = 1000);

std::string to_string(TargetReading reading);

/// Space-time integral of E[X] = exact_x(t, x, 0) by tensor Gauss quadrature.
double mean_state_integral(const ManufacturedProblem& problem, int panels = 16);

}  // namespace spc
