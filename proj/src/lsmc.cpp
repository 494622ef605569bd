#include "spc/lsmc.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "spc/errors.hpp"

namespace spc {

namespace {

struct LineFit {
  double intercept = 0.0;  // value at W = 0
  double slope = 0.0;
  double intercept_stderr = 0.0;
};

// Least squares of y on {1, W} with W centred at its sample mean; `centred`
// holds W_p - mean, `sww` its sum of squares.
LineFit fit_line(std::span<const double> y, std::span<const double> centred, double w_mean, double sww,
                 bool degenerate) {
  const auto P = static_cast<double>(y.size());
  LineFit fit;
  const double a = pairwise_sum(y) / P;
  double b = 0.0;
  if (!degenerate) {
    double sxy = 0.0;
    for (std::size_t p = 0; p < y.size(); ++p) sxy += centred[p] * y[p];
    b = sxy / sww;
  }
  double rss = 0.0;
  for (std::size_t p = 0; p < y.size(); ++p) {
    const double r = y[p] - a - b * centred[p];
    rss += r * r;
  }
  const double dof = P - (degenerate ? 1.0 : 2.0);
  const double s2 = dof > 0.0 ? rss / dof : std::numeric_limits<double>::infinity();
  fit.intercept = a - b * w_mean;
  fit.slope = b;
  fit.intercept_stderr = std::sqrt(s2 * (1.0 / P + (degenerate ? 0.0 : w_mean * w_mean / sww)));
  return fit;
}

}  // namespace

ZEstimate lsmc_z_estimate(const BrownianEnsemble& ensemble, int level, std::span<const Vector> payoff,
                          ZEstimator estimator) {
  const int P = ensemble.paths();
  if (level < 0 || level >= ensemble.steps()) throw InvalidArgument("lsmc: level out of range");
  if (static_cast<int>(payoff.size()) != P) throw InvalidArgument("lsmc: need one payoff field per path");
  if (P < 2) throw InvalidArgument("lsmc: need at least two paths");
  const Eigen::Index nodes = payoff.front().size();
  for (const auto& v : payoff)
    if (v.size() != nodes) throw InvalidArgument("lsmc: payoff fields have different lengths");

  std::vector<double> w(P);
  std::vector<double> dw(P);
  for (int p = 0; p < P; ++p) {
    w[p] = ensemble.w(p, level);
    dw[p] = ensemble.increment(p, level);
  }
  const double w_mean = mc_mean(w);
  std::vector<double> centred(P);
  double sww = 0.0;
  for (int p = 0; p < P; ++p) {
    centred[p] = w[p] - w_mean;
    sww += centred[p] * centred[p];
  }
  const bool degenerate = !(sww > 1e-20 * P);

  ZEstimate out;
  out.coefficients.resize(nodes, 2);
  out.intercept_stderr.resize(nodes);
  out.fallback = degenerate;

#pragma omp parallel
  {
    std::vector<double> v(P);
    std::vector<double> y(P);
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < nodes; ++i) {
      for (int p = 0; p < P; ++p) v[p] = payoff[p][i];
      if (estimator == ZEstimator::centered) {
        const LineFit mean_fit = fit_line(v, centred, w_mean, sww, degenerate);
        for (int p = 0; p < P; ++p) y[p] = (v[p] - mean_fit.intercept - mean_fit.slope * w[p]) * dw[p];
      } else {
        for (int p = 0; p < P; ++p) y[p] = v[p] * dw[p];
      }
      const LineFit z = fit_line(y, centred, w_mean, sww, degenerate);
      out.coefficients(i, 0) = z.intercept;
      out.coefficients(i, 1) = z.slope;
      out.intercept_stderr[i] = z.intercept_stderr;
    }
  }
  return out;
}

}  // namespace spc
