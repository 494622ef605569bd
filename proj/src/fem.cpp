#include "spc/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "spc/errors.hpp"

namespace spc {

std::vector<QuadraturePoint> element_quadrature(const Mesh& mesh, std::size_t e) {
  const auto& el = mesh.elements[e];
  const double vol = mesh.element_volume(e);
  std::vector<QuadraturePoint> qp;
  if (mesh.dim == 1) {
    static const double g = 0.5 * std::sqrt(3.0 / 5.0);
    static const std::array<double, 3> s = {0.5 - g, 0.5, 0.5 + g};
    static const std::array<double, 3> w = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    const Point& a = mesh.nodes[el[0]];
    const Point& b = mesh.nodes[el[1]];
    qp.reserve(3);
    for (int q = 0; q < 3; ++q) {
      QuadraturePoint p;
      p.x = {a.x + s[q] * (b.x - a.x), 0.0};
      p.weight = w[q] * vol;
      p.shape = {1.0 - s[q], s[q], 0.0};
      qp.push_back(p);
    }
    return qp;
  }
  const Point& a = mesh.nodes[el[0]];
  const Point& b = mesh.nodes[el[1]];
  const Point& c = mesh.nodes[el[2]];
  static const std::array<std::array<double, 3>, 3> bary = {{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}};
  qp.reserve(3);
  for (const auto& l : bary) {
    QuadraturePoint p;
    p.x = {l[0] * a.x + l[1] * b.x + l[2] * c.x, l[0] * a.y + l[1] * b.y + l[2] * c.y};
    p.weight = vol / 3.0;
    p.shape = l;
    qp.push_back(p);
  }
  return qp;
}

std::array<Point, 3> shape_gradients(const Mesh& mesh, std::size_t e) {
  const auto& el = mesh.elements[e];
  if (mesh.dim == 1) {
    const double len = mesh.nodes[el[1]].x - mesh.nodes[el[0]].x;
    return {Point{-1.0 / len, 0.0}, Point{1.0 / len, 0.0}, Point{}};
  }
  const Point& a = mesh.nodes[el[0]];
  const Point& b = mesh.nodes[el[1]];
  const Point& c = mesh.nodes[el[2]];
  const double twice_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  return {Point{(b.y - c.y) / twice_area, (c.x - b.x) / twice_area},
          Point{(c.y - a.y) / twice_area, (a.x - c.x) / twice_area},
          Point{(a.y - b.y) / twice_area, (b.x - a.x) / twice_area}};
}

// ---------------------------------------------------------------------------

EulerOperator::EulerOperator(const SparseMatrix& mass, const SparseMatrix& stiffness, double coefficient,
                             SolverKind kind)
    : coefficient_(coefficient), kind_(kind) {
  if (!(coefficient >= 0.0)) throw InvalidArgument("euler operator: coefficient must be >= 0");
  operator_ = mass + coefficient * stiffness;
  operator_.makeCompressed();
  if (kind_ == SolverKind::direct) {
    direct_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(operator_);
    if (direct_->info() != Eigen::Success) {
      // Factorization trouble: fall through to CG on every solve.
      direct_.reset();
      kind_ = SolverKind::conjugate_gradient;
    }
  }
}

Vector EulerOperator::solve(const Vector& rhs) const {
  Vector out;
  solve(rhs, out);
  return out;
}

void EulerOperator::solve(const Vector& rhs, Vector& out) const {
  if (rhs.size() != operator_.rows())
    throw InvalidArgument("euler solve: rhs length does not match the operator");
  if (direct_) {
    out = direct_->solve(rhs);
    return;
  }
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(10 * static_cast<int>(operator_.rows()));
  cg.compute(operator_);
  out = cg.solve(rhs);
  if (cg.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "euler solve: conjugate gradient did not converge (relative residual " << cg.error() << " after "
        << cg.iterations() << " iterations)";
    throw NumericalError(msg.str());
  }
}

// ---------------------------------------------------------------------------

struct FemSystem::Cache {
  std::mutex lock;
  std::map<double, std::shared_ptr<const EulerOperator>> operators;
};

FemSystem::FemSystem(Mesh mesh) : mesh_(std::make_shared<const Mesh>(std::move(mesh))), cache_(std::make_shared<Cache>()) {
  const Mesh& m = *mesh_;
  const auto n = static_cast<Eigen::Index>(m.interior_count());
  if (n == 0) throw InvalidArgument("assemble: mesh has no interior nodes");

  std::vector<Eigen::Triplet<double>> mt;
  std::vector<Eigen::Triplet<double>> at;
  const int nv = m.vertices_per_element();
  mt.reserve(m.element_count() * nv * nv);
  at.reserve(m.element_count() * nv * nv);
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const double vol = m.element_volume(e);
    const auto grads = shape_gradients(m, e);
    const auto& el = m.elements[e];
    // Exact P1 mass: vol/6 * (1 + delta_ij) in 1D, vol/12 * (1 + delta_ij) in 2D.
    const double mscale = (m.dim == 1) ? vol / 6.0 : vol / 12.0;
    for (int i = 0; i < nv; ++i) {
      const int gi = m.interior_index[el[i]];
      if (gi < 0) continue;
      for (int j = 0; j < nv; ++j) {
        const int gj = m.interior_index[el[j]];
        if (gj < 0) continue;
        mt.emplace_back(gi, gj, mscale * (i == j ? 2.0 : 1.0));
        at.emplace_back(gi, gj, vol * (grads[i].x * grads[j].x + grads[i].y * grads[j].y));
      }
    }
  }
  mass_.resize(n, n);
  stiffness_.resize(n, n);
  mass_.setFromTriplets(mt.begin(), mt.end());
  stiffness_.setFromTriplets(at.begin(), at.end());
  mass_.makeCompressed();
  stiffness_.makeCompressed();

  mass_solver_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(mass_);
  if (mass_solver_->info() != Eigen::Success) throw NumericalError("assemble: mass matrix factorization failed");
  unit_load_ = load([](const Point&) { return 1.0; });
}

FemSystem assemble(const Mesh& mesh) { return FemSystem(mesh); }

Vector FemSystem::load(const SpaceFunction& g) const {
  const Mesh& m = *mesh_;
  Vector b = Vector::Zero(size());
  const int nv = m.vertices_per_element();
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto& el = m.elements[e];
    for (const auto& q : element_quadrature(m, e)) {
      const double gq = g(q.x) * q.weight;
      for (int i = 0; i < nv; ++i) {
        const int gi = m.interior_index[el[i]];
        if (gi >= 0) b[gi] += gq * q.shape[i];
      }
    }
  }
  return b;
}

Vector FemSystem::l2_project(const SpaceFunction& g) const { return solve_mass(load(g)); }

Vector FemSystem::interpolate(const SpaceFunction& g) const {
  const Mesh& m = *mesh_;
  Vector v(size());
  for (Eigen::Index i = 0; i < size(); ++i) v[i] = g(m.nodes[m.interior_nodes[i]]);
  return v;
}

Vector FemSystem::solve_mass(const Vector& rhs) const {
  if (rhs.size() != size()) throw InvalidArgument("mass solve: rhs length mismatch");
  Vector x = mass_solver_->solve(rhs);
  if (mass_solver_->info() != Eigen::Success) throw NumericalError("mass solve failed");
  return x;
}

std::shared_ptr<const EulerOperator> FemSystem::euler_operator(double coefficient) const {
  std::lock_guard<std::mutex> guard(cache_->lock);
  auto it = cache_->operators.find(coefficient);
  if (it != cache_->operators.end()) return it->second;
  if (cache_->operators.size() >= 8) cache_->operators.clear();
  auto op = std::make_shared<const EulerOperator>(mass_, stiffness_, coefficient);
  cache_->operators.emplace(coefficient, op);
  return op;
}

Vector FemSystem::euler_solve(double tau, const Vector& rhs) const {
  if (!(tau > 0.0)) throw InvalidArgument("euler solve: tau must be positive");
  return euler_operator(tau)->solve(rhs);
}

Norms FemSystem::norms(const Vector& x) const {
  if (x.size() != size()) throw InvalidArgument("norms: field length mismatch");
  return {std::sqrt(std::max(0.0, x.dot(mass_ * x))), std::sqrt(std::max(0.0, x.dot(stiffness_ * x)))};
}

double FemSystem::mass_inner(const Vector& a, const Vector& b) const { return a.dot(mass_ * b); }

}  // namespace spc
