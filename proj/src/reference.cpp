#include "spc/reference.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "spc/errors.hpp"

namespace spc::reference {

BrownianEnsemble sample(int paths, const TimeGrid& grid, std::uint64_t seed) {
  std::vector<double> inc;
  inc.reserve(static_cast<std::size_t>(paths) * grid.steps);
  for (int p = 0; p < paths; ++p) {
    const auto row = BrownianEnsemble::path_increments(seed, p, grid.steps, grid.tau);
    inc.insert(inc.end(), row.begin(), row.end());
  }
  return BrownianEnsemble::from_increments(paths, grid, std::move(inc), seed);
}

PathEnsembleTrajectory forward_paths(const Scheme& scheme, const Trajectory& control,
                                     const BrownianEnsemble& ensemble) {
  const FemSystem& sys = scheme.system();
  const ProblemSpec& spec = scheme.spec();
  const TimeGrid& grid = scheme.grid();
  const int N = grid.steps;
  const double tau = grid.tau;
  const EulerOperator op(sys.mass(), sys.stiffness(), tau * spec.gamma);
  const Vector x0 = sys.l2_project(spec.x0);

  PathEnsembleTrajectory out;
  out.reserve(ensemble.paths());
  for (int p = 0; p < ensemble.paths(); ++p) {
    Trajectory x(grid.levels(), sys.size());
    x[0] = x0;
    for (int n = 0; n < N; ++n) {
      const double t = grid.t(n);
      const double w = ensemble.w(p, n);
      const Vector f = sys.load([&](const Point& pt) {
        return spec.forcing ? spec.forcing(t, pt, w) : spec.forcing_affine->base(t, pt) + w * spec.forcing_affine->slope(t, pt);
      });
      const Vector s = sys.load([&](const Point& pt) { return spec.sigma(t, pt); });
      const Vector rhs = sys.mass() * x[n] + tau * f + tau * (sys.mass() * control[n]) + ensemble.increment(p, n) * s;
      x[n + 1] = op.solve(rhs);
    }
    out.push_back(std::move(x));
  }
  return out;
}

double mc_mean(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("mc_mean: no paths");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double strong_error_norm(std::span<const Trajectory> errors, const FemSystem& system) {
  if (errors.empty()) throw InvalidArgument("strong_error_norm: no paths");
  double worst = 0.0;
  for (int n = 0; n < errors.front().levels(); ++n) {
    double s = 0.0;
    for (const auto& e : errors) s += e[n].dot(system.mass() * e[n]);
    worst = std::max(worst, s / static_cast<double>(errors.size()));
  }
  return std::sqrt(worst);
}

ZEstimate lsmc_z_estimate(const BrownianEnsemble& ensemble, int level, std::span<const Vector> payoff,
                          ZEstimator estimator) {
  const int P = ensemble.paths();
  const Eigen::Index nodes = payoff.front().size();
  Eigen::VectorXd w(P);
  Eigen::VectorXd dw(P);
  for (int p = 0; p < P; ++p) {
    w[p] = ensemble.w(p, level);
    dw[p] = ensemble.increment(p, level);
  }
  const double spread = (w.array() - w.mean()).square().sum();
  const bool degenerate = !(spread > 1e-20 * P);
  Eigen::MatrixXd basis(P, degenerate ? 1 : 2);
  basis.col(0).setOnes();
  if (!degenerate) basis.col(1) = w;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);

  ZEstimate out;
  out.coefficients.setZero(nodes, 2);
  out.intercept_stderr.resize(nodes);
  out.fallback = degenerate;
  const Eigen::MatrixXd gram_inv = (basis.transpose() * basis).inverse();
  for (Eigen::Index i = 0; i < nodes; ++i) {
    Eigen::VectorXd v(P);
    for (int p = 0; p < P; ++p) v[p] = payoff[p][i];
    Eigen::VectorXd y;
    if (estimator == ZEstimator::centered) {
      const Eigen::VectorXd c = qr.solve(v);
      y = (v - basis * c).cwiseProduct(dw);
    } else {
      y = v.cwiseProduct(dw);
    }
    const Eigen::VectorXd c = qr.solve(y);
    out.coefficients(i, 0) = c[0];
    if (!degenerate) out.coefficients(i, 1) = c[1];
    const double rss = (y - basis * c).squaredNorm();
    const double s2 = rss / (P - basis.cols());
    out.intercept_stderr[i] = std::sqrt(s2 * gram_inv(0, 0));
  }
  return out;
}

}  // namespace spc::reference
