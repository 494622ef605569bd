#include "spc/spde.hpp"

#include <exception>
#include <mutex>
#include <string>

#include "spc/errors.hpp"

namespace spc {

void ProblemSpec::validate() const {
  if (!(alpha > 0.0)) throw InvalidArgument("problem: alpha must be positive");
  if (!(horizon > 0.0)) throw InvalidArgument("problem: horizon must be positive");
  if (!(gamma > 0.0)) throw InvalidArgument("problem: gamma must be positive");
  if (!x0) throw InvalidArgument("problem: missing initial value x0");
  if (!sigma) throw InvalidArgument("problem: missing noise coefficient sigma");
  if (!forcing && !forcing_affine) throw InvalidArgument("problem: missing forcing f");
  if (!target && !target_affine) throw InvalidArgument("problem: missing target X_d");
}

namespace {

void check_grid_against_spec(const ProblemSpec& spec, const TimeGrid& grid) {
  if (std::abs(grid.horizon - spec.horizon) > 1e-12 * spec.horizon)
    throw InvalidArgument("scheme: time grid horizon does not match the problem horizon");
}

}  // namespace

Scheme::Scheme(ProblemSpec spec, const FemSystem& system, const TimeGrid& grid)
    : spec_(std::move(spec)), system_(&system), grid_(grid) {
  spec_.validate();
  check_grid_against_spec(spec_, grid_);
  state_op_ = system.euler_operator(grid_.tau * spec_.gamma);
  initial_ = system.l2_project(spec_.x0);

  const int N = grid_.steps;
  sigma_loads_.reserve(N);
  for (int n = 0; n < N; ++n) {
    const double t = grid_.t(n);
    sigma_loads_.push_back(system.load([&](const Point& x) { return spec_.sigma(t, x); }));
  }
  if (spec_.forcing_affine) {
    for (int n = 0; n < N; ++n) {
      const double t = grid_.t(n);
      forcing_base_loads_.push_back(system.load([&](const Point& x) { return spec_.forcing_affine->base(t, x); }));
      forcing_slope_loads_.push_back(system.load([&](const Point& x) { return spec_.forcing_affine->slope(t, x); }));
    }
  }
  if (spec_.target_affine) {
    for (int n = 0; n <= N; ++n) {
      const double t = grid_.t(n);
      target_base_loads_.push_back(system.load([&](const Point& x) { return spec_.target_affine->base(t, x); }));
      target_slope_loads_.push_back(system.load([&](const Point& x) { return spec_.target_affine->slope(t, x); }));
    }
  }

  const bool have_mean_forcing = spec_.forcing_affine.has_value() || static_cast<bool>(spec_.mean_forcing);
  const bool have_mean_target = spec_.target_affine.has_value() || static_cast<bool>(spec_.mean_target);
  if (have_mean_forcing && have_mean_target) {
    MeanSources s;
    s.estimator = MeanEstimator::mean_field;
    s.initial = initial_;
    s.forward.reserve(N);
    for (int n = 0; n < N; ++n) {
      if (spec_.forcing_affine) {
        s.forward.push_back(grid_.tau * forcing_base_loads_[n]);
      } else {
        const double t = grid_.t(n);
        s.forward.push_back(grid_.tau * system.load([&](const Point& x) { return spec_.mean_forcing(t, x); }));
      }
    }
    s.target.reserve(N + 1);
    for (int n = 0; n <= N; ++n) {
      if (spec_.target_affine) {
        s.target.push_back(system.solve_mass(target_base_loads_[n]));
      } else {
        const double t = grid_.t(n);
        s.target.push_back(system.l2_project([&](const Point& x) { return spec_.mean_target(t, x); }));
      }
    }
    exact_sources_ = std::move(s);
  }
}

const MeanSources& Scheme::exact_mean_sources() const {
  if (!exact_sources_)
    throw InvalidArgument("scheme: mean forcing/target not provided; expected-value recursions unavailable");
  return *exact_sources_;
}

Vector Scheme::forcing_load(int n, double w) const {
  if (spec_.forcing_affine) return forcing_base_loads_[n] + w * forcing_slope_loads_[n];
  const double t = grid_.t(n);
  return system_->load([&](const Point& x) { return spec_.forcing(t, x, w); });
}

Vector Scheme::target_load(int n, double w) const {
  if (spec_.target_affine) return target_base_loads_[n] + w * target_slope_loads_[n];
  const double t = grid_.t(n);
  return system_->load([&](const Point& x) { return spec_.target(t, x, w); });
}

MeanSources Scheme::sampled_mean_sources(const BrownianEnsemble& ensemble) const {
  const int N = grid_.steps;
  if (ensemble.steps() != N) throw InvalidArgument("sampled sources: ensemble does not match the time grid");
  const int P = ensemble.paths();
  MeanSources s;
  s.estimator = MeanEstimator::monte_carlo;
  s.initial = initial_;
  std::vector<double> column(P);
  auto mean_w = [&](int n) {
    for (int p = 0; p < P; ++p) column[p] = ensemble.w(p, n);
    return mc_mean(column);
  };
  auto mean_dw = [&](int n) {
    for (int p = 0; p < P; ++p) column[p] = ensemble.increment(p, n);
    return mc_mean(column);
  };
  s.forward.resize(N);
  for (int n = 0; n < N; ++n) {
    Vector f;
    if (spec_.forcing_affine) {
      f = forcing_load(n, mean_w(n));
    } else {
      std::vector<Vector> loads(P);
#pragma omp parallel for schedule(static)
      for (int p = 0; p < P; ++p) loads[p] = forcing_load(n, ensemble.w(p, n));
      f = mc_mean(loads);
    }
    s.forward[n] = grid_.tau * f + mean_dw(n) * sigma_loads_[n];
  }
  s.target.resize(N + 1);
  for (int n = 0; n <= N; ++n) {
    Vector d;
    if (spec_.target_affine) {
      d = target_load(n, mean_w(n));
    } else {
      std::vector<Vector> loads(P);
#pragma omp parallel for schedule(static)
      for (int p = 0; p < P; ++p) loads[p] = target_load(n, ensemble.w(p, n));
      d = mc_mean(loads);
    }
    s.target[n] = system_->solve_mass(d);
  }
  return s;
}

MeanSources Scheme::mean_sources(MeanEstimator estimator, const BrownianEnsemble* ensemble) const {
  if (estimator == MeanEstimator::mean_field) return exact_mean_sources();
  if (!ensemble) throw InvalidArgument("monte-carlo estimator needs an ensemble");
  return sampled_mean_sources(*ensemble);
}

void Scheme::check_control(const Trajectory& control) const {
  if (control.levels() != grid_.levels())
    throw InvalidArgument("control has " + std::to_string(control.levels()) + " levels, expected " +
                          std::to_string(grid_.levels()));
  if (control.field_size() != system_->size()) throw InvalidArgument("control field length does not match the mesh");
}

std::vector<Vector> Scheme::control_terms(const Trajectory& control) const {
  std::vector<Vector> terms(grid_.steps);
  for (int n = 0; n < grid_.steps; ++n) terms[n] = grid_.tau * (system_->mass() * control[n]);
  return terms;
}

void Scheme::forward_into(const std::vector<Vector>& cterms, const BrownianEnsemble* ensemble,
                          int path, const std::vector<Vector>* mean_forward, Trajectory& out, Vector& rhs) const {
  const SparseMatrix& M = system_->mass();
  const int N = grid_.steps;
  const double tau = grid_.tau;
  out[0] = initial_;
  for (int n = 0; n < N; ++n) {
    rhs.noalias() = M * out[n];
    if (mean_forward) {
      rhs += (*mean_forward)[n];
    } else {
      const double w = ensemble->w(path, n);
      if (spec_.forcing_affine) {
        rhs += tau * (forcing_base_loads_[n] + w * forcing_slope_loads_[n]);
      } else {
        rhs += tau * forcing_load(n, w);
      }
    }
    rhs += cterms[n];
    if (ensemble) rhs += ensemble->increment(path, n) * sigma_loads_[n];
    state_op_->solve(rhs, out[n + 1]);
  }
}

Trajectory Scheme::forward_mean(const Trajectory& control) const { return forward_mean(control, exact_mean_sources()); }

Trajectory Scheme::forward_mean(const Trajectory& control, const MeanSources& sources) const {
  check_control(control);
  if (static_cast<int>(sources.forward.size()) != grid_.steps)
    throw InvalidArgument("forward_mean: sources do not match the time grid");
  Trajectory out(grid_.levels(), system_->size());
  Vector rhs(system_->size());
  const auto cterms = control_terms(control);
  forward_into(cterms, nullptr, 0, &sources.forward, out, rhs);
  return out;
}

Trajectory Scheme::backward_mean_adjoint(const Trajectory& x_mean, double mu) const {
  return backward_mean_adjoint(x_mean, mu, exact_mean_sources());
}

Trajectory Scheme::backward_mean_adjoint(const Trajectory& x_mean, double mu, const MeanSources& sources) const {
  check_control(x_mean);
  const int N = grid_.steps;
  const double tau = grid_.tau;
  const SparseMatrix& M = system_->mass();
  Trajectory y(grid_.levels(), system_->size());
  Vector rhs(system_->size());
  for (int n = N - 1; n >= 0; --n) {
    rhs.noalias() = M * y[n + 1];
    rhs.noalias() += tau * (M * (x_mean[n + 1] - sources.target[n + 1]));
    if (mu != 0.0) rhs += (tau * mu) * system_->unit_load();
    state_op_->solve(rhs, y[n]);
  }
  return y;
}

Trajectory Scheme::forward_path(const Trajectory& control, const BrownianEnsemble& ensemble, int path) const {
  check_control(control);
  if (ensemble.steps() != grid_.steps) throw InvalidArgument("forward_path: ensemble does not match the time grid");
  Trajectory out(grid_.levels(), system_->size());
  Vector rhs(system_->size());
  forward_into(control_terms(control), &ensemble, path, nullptr, out, rhs);
  return out;
}

void Scheme::visit_paths(const Trajectory& control, const BrownianEnsemble& ensemble, const PathVisitor& visit) const {
  check_control(control);
  if (ensemble.steps() != grid_.steps) throw InvalidArgument("forward_paths: ensemble does not match the time grid");
  const auto cterms = control_terms(control);
  const int P = ensemble.paths();
  std::exception_ptr failure;
  std::mutex failure_lock;
#pragma omp parallel
  {
    Trajectory state(grid_.levels(), system_->size());
    Vector rhs(system_->size());
#pragma omp for schedule(static)
    for (int p = 0; p < P; ++p) {
      try {
        forward_into(cterms, &ensemble, p, nullptr, state, rhs);
        visit(p, state);
      } catch (...) {
        std::lock_guard<std::mutex> guard(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

PathEnsembleTrajectory Scheme::forward_paths(const Trajectory& control, const BrownianEnsemble& ensemble) const {
  PathEnsembleTrajectory out(ensemble.paths());
  visit_paths(control, ensemble, [&](int p, const Trajectory& state) { out[p] = state; });
  return out;
}

PathEnsembleTrajectory forward_paths(const ProblemSpec& spec, const FemSystem& system, const TimeGrid& grid,
                                     const Trajectory& control, const BrownianEnsemble& ensemble) {
  return Scheme(spec, system, grid).forward_paths(control, ensemble);
}

Trajectory forward_mean(const ProblemSpec& spec, const FemSystem& system, const TimeGrid& grid,
                        const Trajectory& control) {
  return Scheme(spec, system, grid).forward_mean(control);
}

Trajectory backward_mean_adjoint(const ProblemSpec& spec, const FemSystem& system, const TimeGrid& grid,
                                 const Trajectory& x_mean, double mu) {
  return Scheme(spec, system, grid).backward_mean_adjoint(x_mean, mu);
}

Trajectory mtilde_solve(const FemSystem& system, const TimeGrid& grid, double diffusion) {
  if (!(diffusion > 0.0)) throw InvalidArgument("mtilde: diffusion must be positive");
  const auto op = system.euler_operator(grid.tau * diffusion);
  const int N = grid.steps;
  Trajectory m(grid.levels(), system.size());
  Vector rhs(system.size());
  for (int n = N - 1; n >= 0; --n) {
    rhs.noalias() = system.mass() * m[n + 1];
    rhs += grid.tau * system.unit_load();
    op->solve(rhs, m[n]);
  }
  return m;
}

Trajectory qtilde_solve(const FemSystem& system, const TimeGrid& grid, const Trajectory& mtilde, double diffusion) {
  if (!(diffusion > 0.0)) throw InvalidArgument("qtilde: diffusion must be positive");
  if (mtilde.levels() != grid.levels() || mtilde.field_size() != system.size())
    throw InvalidArgument("qtilde: mtilde does not match the grid");
  const auto op = system.euler_operator(grid.tau * diffusion);
  const int N = grid.steps;
  Trajectory q(grid.levels(), system.size());
  Vector rhs(system.size());
  for (int n = 0; n < N; ++n) {
    rhs.noalias() = system.mass() * q[n];
    rhs.noalias() += grid.tau * (system.mass() * mtilde[n]);
    op->solve(rhs, q[n + 1]);
  }
  return q;
}

}  // namespace spc
