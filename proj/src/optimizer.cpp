#include "spc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spc/errors.hpp"

namespace spc {

double default_rho(double alpha, double horizon) { return 0.9 / (alpha + std::exp(horizon)); }

double constraint_integral(const Trajectory& x_mean, const FemSystem& system, const TimeGrid& grid) {
  if (x_mean.levels() != grid.levels() || x_mean.field_size() != system.size())
    throw InvalidArgument("constraint_integral: state does not match the grid");
  const Vector& one = system.unit_load();
  double s = 0.0;
  for (int n = 0; n < grid.steps; ++n) s += one.dot(x_mean[n + 1]);
  return grid.tau * s;
}

double select_multiplier(double integral_half, double delta, double rho, double qtilde_integral) {
  const double denom = rho * qtilde_integral;
  if (!(denom > 0.0))
    throw InvalidState("select_multiplier: rho * integral of q~ must be positive, got " + std::to_string(denom));
  return std::max(integral_half - delta, 0.0) / denom;
}

double control_distance(const Trajectory& a, const Trajectory& b, const FemSystem& system, const TimeGrid& grid) {
  double s = 0.0;
  for (int n = 0; n < grid.steps; ++n) {
    const Vector d = a[n] - b[n];
    s += d.dot(system.mass() * d);
  }
  return std::sqrt(grid.tau * s);
}

double discrete_cost(const Trajectory& control, const Trajectory& x_mean, const MeanSources& sources, double alpha,
                     const FemSystem& system, const TimeGrid& grid) {
  const SparseMatrix& M = system.mass();
  double s = 0.0;
  for (int n = 0; n < grid.steps; ++n) {
    const Vector e = x_mean[n + 1] - sources.target[n + 1];
    s += e.dot(M * e) + alpha * control[n].dot(M * control[n]);
  }
  return 0.5 * grid.tau * s;
}

ConstraintProjector::ConstraintProjector(const Scheme& scheme, const MeanSources& sources, double rho,
                                         double diffusion)
    : scheme_(&scheme),
      sources_(&sources),
      rho_(rho),
      mtilde_(mtilde_solve(scheme.system(), scheme.grid(), diffusion)),
      qtilde_(qtilde_solve(scheme.system(), scheme.grid(), mtilde_, diffusion)),
      qtilde_integral_(constraint_integral(qtilde_, scheme.system(), scheme.grid())) {
  if (!(rho > 0.0)) throw InvalidArgument("projector: rho must be positive");
}

ConstraintProjector::Result ConstraintProjector::project(const Trajectory& v) const {
  const Trajectory x = scheme_->forward_mean(v, *sources_);
  return project(v, constraint_integral(x, scheme_->system(), scheme_->grid()));
}

ConstraintProjector::Result ConstraintProjector::project(const Trajectory& v, double integral_of_v) const {
  Result r;
  r.integral_before = integral_of_v;
  r.mu = select_multiplier(integral_of_v, scheme_->spec().delta, rho_, qtilde_integral_);
  r.control = v;
  if (r.mu > 0.0) {
    const double shift = rho_ * r.mu;
    for (int n = 0; n < r.control.levels(); ++n) r.control[n] -= shift * mtilde_[n];
  }
  return r;
}

GpResult gp_iterate(const Scheme& scheme, const OptimizerConfig& config) {
  return gp_iterate(scheme, config, scheme.exact_mean_sources());
}

GpResult gp_iterate(const Scheme& scheme, const OptimizerConfig& config, const MeanSources& sources) {
  const ProblemSpec& spec = scheme.spec();
  const FemSystem& sys = scheme.system();
  const TimeGrid& grid = scheme.grid();
  if (!(config.eps0 > 0.0)) throw InvalidArgument("gp_iterate: eps0 must be positive");
  if (config.max_iter < 1) throw InvalidArgument("gp_iterate: max_iter must be at least 1");

  const double rho = config.rho > 0.0 ? config.rho : default_rho(spec.alpha, spec.horizon);
  const double aux = config.unit_auxiliary_diffusion ? 1.0 : spec.gamma;
  const ConstraintProjector projector(scheme, sources, rho, aux);

  GpResult out;
  out.rho = rho;
  out.qtilde_integral = projector.qtilde_integral();

  Trajectory u = config.u0 ? *config.u0 : scheme.zero_control();
  Trajectory x = scheme.forward_mean(u, sources);
  double mu = 0.0;
  for (int i = 0; i < config.max_iter; ++i) {
    if (config.on_iterate) config.on_iterate(i, u);
    const Trajectory y = scheme.backward_mean_adjoint(x, 0.0, sources);
    Trajectory half = u;
    for (int n = 0; n < grid.steps; ++n) half[n] = u[n] - rho * (spec.alpha * u[n] + y[n]);

    auto projected = projector.project(half);
    Trajectory x_next = scheme.forward_mean(projected.control, sources);

    IterationRecord rec;
    rec.iter = i;
    rec.mu = projected.mu;
    rec.step_error = control_distance(projected.control, u, sys, grid);
    rec.constraint_integral = constraint_integral(x_next, sys, grid);
    rec.cost = discrete_cost(projected.control, x_next, sources, spec.alpha, sys, grid);
    if (!std::isfinite(rec.step_error) || !std::isfinite(rec.cost))
      throw NumericalError("gp_iterate: iteration " + std::to_string(i) + " produced a non-finite iterate");
    out.records.push_back(rec);

    mu = projected.mu;
    u = std::move(projected.control);
    x = std::move(x_next);
    if (rec.step_error <= config.eps0) {
      out.converged = true;
      break;
    }
  }
  if (config.on_iterate) config.on_iterate(static_cast<int>(out.records.size()), u);

  out.mu = mu;
  out.adjoint_mean = scheme.backward_mean_adjoint(x, mu, sources);
  out.control = std::move(u);
  out.state_mean = std::move(x);
  return out;
}

double contraction_polynomial(double alpha, double horizon, double rho) {
  const double eT = std::exp(horizon);
  return rho * rho * (alpha + 1.0) * (alpha + 2.0 * eT) - rho * (2.0 * alpha + 2.0) + 1.0;
}

ContractionCertificate contraction_certificate(double alpha, double horizon, double rho) {
  ContractionCertificate c;
  if (!(rho > 0.0) || !(alpha > 0.0)) return c;
  const double eT = std::exp(horizon);
  if (rho <= 1.0 / (alpha + eT)) {
    c.lambda = 1.0 - rho * alpha;
    c.branch = 1;
  } else if (rho < 2.0 / (alpha + 2.0 * eT)) {
    const double F = contraction_polynomial(alpha, horizon, rho);
    if (!(F > 0.0)) return c;
    c.lambda = std::sqrt(F);
    c.branch = 2;
  } else {
    return c;
  }
  c.admissible = c.lambda > 0.0 && c.lambda < 1.0;
  if (!c.admissible) c.branch = 0;
  return c;
}

}  // namespace spc
