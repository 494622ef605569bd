#include "spc/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "spc/errors.hpp"

namespace spc {

namespace {

constexpr double pi = std::numbers::pi;

// 8th-order central differences.
constexpr std::array<double, 4> d1 = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
constexpr std::array<double, 5> d2 = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
constexpr double fd_step = 1e-2;

template <class F>
double first_derivative(F&& f, double s) {
  double acc = 0.0;
  for (int k = 1; k <= 4; ++k) acc += d1[k - 1] * (f(s + k * fd_step) - f(s - k * fd_step));
  return acc / fd_step;
}

template <class F>
double second_derivative(F&& f, double s) {
  double acc = d2[0] * f(s);
  for (int k = 1; k <= 4; ++k) acc += d2[k] * (f(s + k * fd_step) + f(s - k * fd_step));
  return acc / (fd_step * fd_step);
}

double laplacian(const std::function<double(const Point&)>& g, const Point& x, int dim) {
  double lap = second_derivative([&](double s) { return g({s, x.y}); }, x.x);
  if (dim == 2) lap += second_derivative([&](double s) { return g({x.x, s}); }, x.y);
  return lap;
}

NoisyFunction from_affine(const AffineInNoise& a) {
  return [a](double t, const Point& x, double w) { return a.base(t, x) + w * a.slope(t, x); };
}

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> gl_nodes = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                            0.9061798459386640};
constexpr std::array<double, 5> gl_weights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                              0.4786286704993665, 0.2369268850561891};

std::vector<std::pair<double, double>> composite_rule(double a, double b, int panels) {
  std::vector<std::pair<double, double>> rule;
  const double w = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * w;
    for (int k = 0; k < 5; ++k) rule.emplace_back(mid + 0.5 * w * gl_nodes[k], 0.5 * w * gl_weights[k]);
  }
  return rule;
}

}  // namespace

Mesh ManufacturedProblem::make_mesh(int cells) const {
  if (dim == 1) return make_interval_mesh(0.0, 1.0, cells);
  return make_rectangle_mesh({0.0, 0.0}, {1.0, 1.0}, cells, cells);
}

ManufacturedProblem example1(double beta, double mu, TargetReading reading) {
  const double T = 1.0;
  ManufacturedProblem p;
  p.name = "example1";
  p.dim = 1;
  p.beta = beta;
  p.gamma = 1.0;
  p.exact_mu = mu;
  p.reading = reading;

  ProblemSpec& s = p.spec;
  s.alpha = 1.0;
  s.horizon = T;
  s.gamma = 1.0;
  s.delta = 1.0 / pi;
  s.x0 = [](const Point&) { return 0.0; };
  s.sigma = [beta](double, const Point& x) { return beta * std::sin(pi * x.x); };
  s.forcing_affine = AffineInNoise{
      [T](double t, const Point& x) { return std::sin(pi * x.x) * (1.0 + t * (t - T) + pi * pi * t); },
      [beta](double, const Point& x) { return std::sin(pi * x.x) * pi * pi * beta; }};
  // The 2(t + W) term carries a W slope of 2 beta or 2.
  const double target_w = reading == TargetReading::beta_scaled ? 2.0 * beta : 2.0;
  s.target_affine = AffineInNoise{
      [T, mu](double t, const Point& x) {
        return std::sin(pi * x.x) * (t - T + 2.0 * t - pi * pi * (t - T) * t) + mu;
      },
      [T, beta, target_w](double t, const Point& x) {
        return std::sin(pi * x.x) * (target_w - pi * pi * (t - T) * beta);
      }};
  s.forcing = from_affine(*s.forcing_affine);
  s.target = from_affine(*s.target_affine);
  s.mean_forcing = s.forcing_affine->base;
  s.mean_target = s.target_affine->base;

  p.exact_u = [T](double t, const Point& x) { return t * (T - t) * std::sin(pi * x.x); };
  p.exact_x = [beta](double t, const Point& x, double w) { return (t + beta * w) * std::sin(pi * x.x); };
  p.exact_x_grad = [beta](double t, const Point& x, double w) {
    return Point{(t + beta * w) * pi * std::cos(pi * x.x), 0.0};
  };
  p.exact_y = [T](double t, const Point& x) { return -t * (T - t) * std::sin(pi * x.x); };
  p.exact_y_grad = [T](double t, const Point& x) { return Point{-t * (T - t) * pi * std::cos(pi * x.x), 0.0}; };
  p.exact_y_path = [T, beta](double t, const Point& x, double w) {
    return -(T - t) * (t + beta * w) * std::sin(pi * x.x);
  };
  return p;
}

ManufacturedProblem example2(double gamma, double lambda, double beta, double mu) {
  const double T = 1.0;
  ManufacturedProblem p;
  p.name = "example2";
  p.dim = 2;
  p.beta = beta;
  p.lambda = lambda;
  p.gamma = gamma;
  p.exact_mu = mu;

  auto bump = [](const Point& x) { return std::sin(pi * x.x) * std::sin(pi * x.y); };
  auto g = [](double t) { return (1.0 + t) * (1.0 + t); };

  ProblemSpec& s = p.spec;
  s.alpha = 1.0;
  s.horizon = T;
  s.gamma = gamma;
  s.delta = (17.0 * lambda + 28.0) / (3.0 * pi * pi);
  s.x0 = bump;
  s.sigma = [=](double t, const Point& x) { return beta * bump(x) * g(t); };
  s.forcing_affine = AffineInNoise{
      [=](double t, const Point& x) {
        const double a = 1.0 + lambda * t;
        return g(t) * bump(x) * (2.0 * gamma * pi * pi * a + (t - T) * a + 2.0 * a / (1.0 + t) + lambda);
      },
      [=](double t, const Point& x) {
        return g(t) * bump(x) * beta * (2.0 * gamma * pi * pi + 2.0 / (1.0 + t));
      }};
  s.target_affine = AffineInNoise{
      [=](double t, const Point& x) {
        const double a = 1.0 + lambda * t;
        return g(t) * bump(x) * (a * (2.0 * gamma * pi * pi * (T - t) + 2.0 + 2.0 * (t - T) / (1.0 + t)) +
                                 lambda * (t - T)) +
               mu;
      },
      [=](double t, const Point& x) {
        return g(t) * bump(x) * beta * (2.0 * gamma * pi * pi * (T - t) + 2.0 + 2.0 * (t - T) / (1.0 + t));
      }};
  s.forcing = from_affine(*s.forcing_affine);
  s.target = from_affine(*s.target_affine);
  s.mean_forcing = s.forcing_affine->base;
  s.mean_target = s.target_affine->base;

  p.exact_u = [=](double t, const Point& x) { return (T - t) * (1.0 + lambda * t) * bump(x) * g(t); };
  p.exact_x = [=](double t, const Point& x, double w) { return (1.0 + lambda * t + beta * w) * bump(x) * g(t); };
  p.exact_x_grad = [=](double t, const Point& x, double w) {
    const double c = (1.0 + lambda * t + beta * w) * g(t) * pi;
    return Point{c * std::cos(pi * x.x) * std::sin(pi * x.y), c * std::sin(pi * x.x) * std::cos(pi * x.y)};
  };
  p.exact_y = [=](double t, const Point& x) { return -(T - t) * (1.0 + lambda * t) * bump(x) * g(t); };
  p.exact_y_grad = [=](double t, const Point& x) {
    const double c = -(T - t) * (1.0 + lambda * t) * g(t) * pi;
    return Point{c * std::cos(pi * x.x) * std::sin(pi * x.y), c * std::sin(pi * x.x) * std::cos(pi * x.y)};
  };
  p.exact_y_path = [=](double t, const Point& x, double w) {
    return -(T - t) * (1.0 + lambda * t + beta * w) * bump(x) * g(t);
  };
  return p;
}

ManufacturedProblem make_problem(const std::string& name, const ProblemParameters& params) {
  if (name == "example1") {
    if (params.gamma && *params.gamma != 1.0) throw InvalidArgument("example1 has fixed gamma = 1");
    if (params.lambda) throw InvalidArgument("example1 has no lambda parameter");
    const double beta = params.beta.value_or(0.1);
    const double mu = params.mu.value_or(1.0);
    return example1(beta, mu, select_example1_reading(beta, mu, 200));
  }
  if (name == "example2")
    return example2(params.gamma.value_or(0.2), params.lambda.value_or(0.2), params.beta.value_or(0.5),
                    params.mu.value_or(0.8));
  throw InvalidArgument("unknown problem '" + name + "' (expected example1 or example2)");
}

double ManufacturedResidual::max() const {
  return std::max({state_drift, state_diffusion, adjoint_drift, optimality, initial, affine_split});
}

ManufacturedResidual verify_manufactured(const ManufacturedProblem& problem, int samples, std::uint64_t seed) {
  const ProblemSpec& s = problem.spec;
  if (!problem.exact_x || !problem.exact_u || !problem.exact_y_path || !problem.exact_y)
    throw InvalidArgument("verify: problem lacks exact solutions");
  const NoisyFunction forcing = s.forcing ? s.forcing : from_affine(*s.forcing_affine);
  const NoisyFunction target = s.target ? s.target : from_affine(*s.target_affine);
  const double mu = problem.exact_mu;
  const int dim = problem.dim;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> wdist(-2.0, 2.0);

  ManufacturedResidual r;
  r.samples = samples;
  for (int k = 0; k < samples; ++k) {
    const double t = s.horizon * unit(rng);
    Point x{unit(rng), dim == 2 ? unit(rng) : 0.0};
    const double w = wdist(rng);

    // X and Y are affine in w, so the Ito correction vanishes and the drift
    // is the partial time derivative at fixed w.
    const double xt = first_derivative([&](double tt) { return problem.exact_x(tt, x, w); }, t);
    const double lap_x = laplacian([&](const Point& y) { return problem.exact_x(t, y, w); }, x, dim);
    const double drift = s.gamma * lap_x + forcing(t, x, w) + problem.exact_u(t, x);
    r.state_drift = std::max(r.state_drift, std::abs(xt - drift));

    const double xw = first_derivative([&](double ww) { return problem.exact_x(t, x, ww); }, w);
    r.state_diffusion = std::max(r.state_diffusion, std::abs(xw - s.sigma(t, x)));

    const double yt = first_derivative([&](double tt) { return problem.exact_y_path(tt, x, w); }, t);
    const double lap_y = laplacian([&](const Point& y) { return problem.exact_y_path(t, y, w); }, x, dim);
    const double adj = yt + s.gamma * lap_y + problem.exact_x(t, x, w) - target(t, x, w) + mu;
    r.adjoint_drift = std::max(r.adjoint_drift, std::abs(adj));

    r.optimality = std::max(r.optimality, std::abs(problem.exact_y_path(t, x, 0.0) + s.alpha * problem.exact_u(t, x)));
    r.optimality = std::max(r.optimality, std::abs(problem.exact_y(t, x) + s.alpha * problem.exact_u(t, x)));
    r.initial = std::max(r.initial, std::abs(problem.exact_x(0.0, x, 0.0) - s.x0(x)));

    if (s.forcing_affine && s.forcing)
      r.affine_split = std::max(r.affine_split, std::abs(from_affine(*s.forcing_affine)(t, x, w) - s.forcing(t, x, w)));
    if (s.target_affine && s.target)
      r.affine_split = std::max(r.affine_split, std::abs(from_affine(*s.target_affine)(t, x, w) - s.target(t, x, w)));
  }
  return r;
}

TargetReading select_example1_reading(double beta, double mu, int samples) {
  const double tol = 1e-8;
  const bool scaled = verify_manufactured(example1(beta, mu, TargetReading::beta_scaled), samples).max() <= tol;
  const bool literal = verify_manufactured(example1(beta, mu, TargetReading::literal), samples).max() <= tol;
  if (!scaled && !literal) throw InvalidState("neither target reading satisfies the adjoint equation");
  // At beta = 1 the readings coincide.
  return scaled ? TargetReading::beta_scaled : TargetReading::literal;
}

std::string to_string(TargetReading reading) {
  return reading == TargetReading::beta_scaled ? "beta_scaled" : "literal";
}

double mean_state_integral(const ManufacturedProblem& problem, int panels) {
  const auto time_rule = composite_rule(0.0, problem.spec.horizon, panels);
  const auto space_rule = composite_rule(0.0, 1.0, panels);
  double total = 0.0;
  for (const auto& [t, wt] : time_rule) {
    double inner = 0.0;
    if (problem.dim == 1) {
      for (const auto& [x, wx] : space_rule) inner += wx * problem.exact_x(t, {x, 0.0}, 0.0);
    } else {
      for (const auto& [x, wx] : space_rule)
        for (const auto& [y, wy] : space_rule) inner += wx * wy * problem.exact_x(t, {x, y}, 0.0);
    }
    total += wt * inner;
  }
  return total;
}

}  // namespace spc
