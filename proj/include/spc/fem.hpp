#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "spc/grid.hpp"

namespace spc {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using SpaceFunction = std::function<double(const Point&)>;

/// A quadrature point in physical coordinates together with the P1 shape
/// values of the element's vertices at that point.
struct QuadraturePoint {
  Point x;
  double weight = 0.0;
  std::array<double, 3> shape{};
};

/// Degree-2 exact rule: 3-point Gauss on segments, edge midpoints on
/// triangles. Weights include the element volume.
std::vector<QuadraturePoint> element_quadrature(const Mesh& mesh, std::size_t e);

/// Constant gradients of the vertex shape functions on element e.
std::array<Point, 3> shape_gradients(const Mesh& mesh, std::size_t e);

enum class SolverKind { direct, conjugate_gradient };

/// Factorization of (M + c A) for a fixed coefficient c (c = tau * gamma for
/// the implicit Euler step). solve() is const and safe to call concurrently.
class EulerOperator {
 public:
  EulerOperator(const SparseMatrix& mass, const SparseMatrix& stiffness, double coefficient,
                SolverKind kind = SolverKind::direct);

  double coefficient() const { return coefficient_; }
  SolverKind kind() const { return kind_; }
  const SparseMatrix& matrix() const { return operator_; }

  Vector solve(const Vector& rhs) const;
  void solve(const Vector& rhs, Vector& out) const;

 private:
  double coefficient_;
  SolverKind kind_;
  SparseMatrix operator_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> direct_;
};

struct Norms {
  double l2 = 0.0;
  double h1 = 0.0;
};

/// P1 mass and stiffness operators over the interior nodes of a mesh
/// (homogeneous Dirichlet data eliminated). Immutable once assembled.
class FemSystem {
 public:
  explicit FemSystem(Mesh mesh);

  const Mesh& mesh() const { return *mesh_; }
  Eigen::Index size() const { return mass_.rows(); }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness() const { return stiffness_; }

  /// b_i = integral of g * phi_i.
  Vector load(const SpaceFunction& g) const;
  /// load(1), cached.
  const Vector& unit_load() const { return unit_load_; }

  /// Discrete L2 projection onto the interior P1 space: M p = load(g).
  Vector l2_project(const SpaceFunction& g) const;
  /// Nodal interpolant at interior nodes.
  Vector interpolate(const SpaceFunction& g) const;
  Vector solve_mass(const Vector& rhs) const;

  /// Shared factorization of (M + coefficient * A); cached per coefficient.
  std::shared_ptr<const EulerOperator> euler_operator(double coefficient) const;
  /// Solves (M + tau A) x = rhs.
  Vector euler_solve(double tau, const Vector& rhs) const;

  Norms norms(const Vector& x) const;
  double mass_inner(const Vector& a, const Vector& b) const;

 private:
  struct Cache;

  std::shared_ptr<const Mesh> mesh_;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
  Vector unit_load_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> mass_solver_;
  std::shared_ptr<Cache> cache_;
};

/// Assembles the interior operators; rejects meshes without interior nodes.
FemSystem assemble(const Mesh& mesh);

}  // namespace spc
