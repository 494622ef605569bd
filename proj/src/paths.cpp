#include "spc/paths.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <string>

#include "spc/errors.hpp"
#include "spc/parallel.hpp"

namespace spc {

int num_threads() { return omp_get_max_threads(); }

void set_num_threads(int n) {
  if (n >= 1) omp_set_num_threads(n);
}

void apply_thread_env() {
  if (const char* env = std::getenv("SPC_NUM_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) set_num_threads(n);
  }
}

// ---------------------------------------------------------------------------

BrownianEnsemble::BrownianEnsemble(int paths, int steps, double tau, std::uint64_t seed,
                                   std::vector<double> increments)
    : paths_(paths), steps_(steps), tau_(tau), seed_(seed), increments_(std::move(increments)) {
  prefix_.assign(static_cast<std::size_t>(paths_) * (steps_ + 1), 0.0);
  for (int p = 0; p < paths_; ++p) {
    double w = 0.0;
    double* row = prefix_.data() + static_cast<std::size_t>(p) * (steps_ + 1);
    for (int n = 0; n < steps_; ++n) {
      w += increment(p, n);
      row[n + 1] = w;
    }
  }
}

std::vector<double> BrownianEnsemble::path_increments(std::uint64_t seed, int path, int steps, double tau) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), 0x5eedu};
  std::mt19937_64 engine(seq);
  std::normal_distribution<double> normal(0.0, std::sqrt(tau));
  std::vector<double> out(steps);
  for (auto& v : out) v = normal(engine);
  return out;
}

BrownianEnsemble BrownianEnsemble::sample(int paths, const TimeGrid& grid, std::uint64_t seed) {
  if (paths < 1) throw InvalidArgument("sample: path count must be >= 1");
  const int steps = grid.steps;
  std::vector<double> inc(static_cast<std::size_t>(paths) * steps);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < paths; ++p) {
    const auto row = path_increments(seed, p, steps, grid.tau);
    std::copy(row.begin(), row.end(), inc.begin() + static_cast<std::ptrdiff_t>(p) * steps);
  }
  return BrownianEnsemble(paths, steps, grid.tau, seed, std::move(inc));
}

BrownianEnsemble BrownianEnsemble::zeros(int paths, const TimeGrid& grid) {
  if (paths < 1) throw InvalidArgument("zeros: path count must be >= 1");
  return BrownianEnsemble(paths, grid.steps, grid.tau, 0,
                          std::vector<double>(static_cast<std::size_t>(paths) * grid.steps, 0.0));
}

BrownianEnsemble BrownianEnsemble::from_increments(int paths, const TimeGrid& grid, std::vector<double> increments,
                                                   std::uint64_t seed) {
  if (paths < 1) throw InvalidArgument("from_increments: path count must be >= 1");
  if (increments.size() != static_cast<std::size_t>(paths) * grid.steps)
    throw InvalidArgument("from_increments: expected P*N increments");
  return BrownianEnsemble(paths, grid.steps, grid.tau, seed, std::move(increments));
}

BrownianEnsemble BrownianEnsemble::negated() const {
  std::vector<double> inc(increments_.size());
  std::transform(increments_.begin(), increments_.end(), inc.begin(), [](double v) { return -v; });
  return BrownianEnsemble(paths_, steps_, tau_, seed_, std::move(inc));
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kPairwiseBlock = 8;

Vector pairwise_vector_sum(std::span<const Vector> v) {
  if (v.size() <= kPairwiseBlock) {
    Vector s = v.front();
    for (std::size_t i = 1; i < v.size(); ++i) s += v[i];
    return s;
  }
  const std::size_t half = v.size() / 2;
  Vector s = pairwise_vector_sum(v.first(half));
  s += pairwise_vector_sum(v.subspan(half));
  return s;
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= kPairwiseBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mc_mean(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("mc_mean: no paths");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

Vector mc_mean(std::span<const Vector> fields) {
  if (fields.empty()) throw InvalidArgument("mc_mean: no paths");
  for (const auto& f : fields)
    if (f.size() != fields.front().size()) throw InvalidArgument("mc_mean: inconsistent field lengths");
  return pairwise_vector_sum(fields) / static_cast<double>(fields.size());
}

double strong_error_norm(std::span<const Trajectory> errors, const FemSystem& system) {
  if (errors.empty()) throw InvalidArgument("strong_error_norm: no paths");
  const int levels = errors.front().levels();
  for (const auto& e : errors) {
    if (e.levels() != levels) throw InvalidArgument("strong_error_norm: paths have different level counts");
    if (levels > 0 && e.field_size() != system.size())
      throw InvalidArgument("strong_error_norm: field length does not match the system");
  }
  const int paths = static_cast<int>(errors.size());
  // Column-major by level so each level's per-path values are contiguous.
  std::vector<double> sq(static_cast<std::size_t>(levels) * paths);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < paths; ++p) {
    for (int n = 0; n < levels; ++n) {
      const Vector& e = errors[p][n];
      sq[static_cast<std::size_t>(n) * paths + p] = e.dot(system.mass() * e);
    }
  }
  double worst = 0.0;
  for (int n = 0; n < levels; ++n) {
    const std::span<const double> col(sq.data() + static_cast<std::size_t>(n) * paths, paths);
    worst = std::max(worst, mc_mean(col));
  }
  return std::sqrt(worst);
}

}  // namespace spc
