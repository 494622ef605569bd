#include "spc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spc/errors.hpp"

namespace spc {

TimeGrid make_time_grid(double horizon, int steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw InvalidArgument("time grid: horizon must be positive, got " + std::to_string(horizon));
  if (steps < 1)
    throw InvalidArgument("time grid: step count must be >= 1, got " + std::to_string(steps));
  return TimeGrid{horizon, steps, horizon / steps};
}

namespace {

void classify(Mesh& mesh) {
  mesh.interior_index.assign(mesh.nodes.size(), -1);
  mesh.interior_nodes.clear();
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    if (!mesh.boundary[i]) {
      mesh.interior_index[i] = static_cast<int>(mesh.interior_nodes.size());
      mesh.interior_nodes.push_back(static_cast<int>(i));
    }
  }
  double h = 0.0;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) h = std::max(h, mesh.element_diameter(e));
  mesh.h = h;
}

}  // namespace

Mesh make_interval_mesh(double a, double b, int cells) {
  if (!(a < b)) throw InvalidArgument("interval mesh: need a < b");
  if (cells < 1) throw InvalidArgument("interval mesh: cells must be >= 1");
  Mesh mesh;
  mesh.dim = 1;
  mesh.lower = {a, 0.0};
  mesh.upper = {b, 0.0};
  mesh.domain_volume_ = b - a;
  const double tol = 1e-12 * (b - a);
  const double dx = (b - a) / cells;
  mesh.nodes.resize(cells + 1);
  mesh.boundary.resize(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    const double x = (i == cells) ? b : a + i * dx;
    mesh.nodes[i] = {x, 0.0};
    mesh.boundary[i] = std::abs(x - a) <= tol || std::abs(x - b) <= tol;
  }
  mesh.elements.reserve(cells);
  for (int i = 0; i < cells; ++i) mesh.elements.push_back({i, i + 1, -1});
  classify(mesh);
  return mesh;
}

Mesh make_rectangle_mesh(Point lo, Point hi, int cells_x, int cells_y) {
  if (!(lo.x < hi.x) || !(lo.y < hi.y))
    throw InvalidArgument("rectangle mesh: corner_min must be < corner_max componentwise");
  if (cells_x < 1 || cells_y < 1) throw InvalidArgument("rectangle mesh: cell counts must be >= 1");
  Mesh mesh;
  mesh.dim = 2;
  mesh.lower = lo;
  mesh.upper = hi;
  mesh.domain_volume_ = (hi.x - lo.x) * (hi.y - lo.y);
  const double tol = 1e-12 * std::max(hi.x - lo.x, hi.y - lo.y);
  const double dx = (hi.x - lo.x) / cells_x;
  const double dy = (hi.y - lo.y) / cells_y;
  const int nx = cells_x + 1;
  const int ny = cells_y + 1;
  mesh.nodes.resize(static_cast<std::size_t>(nx) * ny);
  mesh.boundary.resize(mesh.nodes.size());
  for (int j = 0; j < ny; ++j) {
    const double y = (j == cells_y) ? hi.y : lo.y + j * dy;
    for (int i = 0; i < nx; ++i) {
      const double x = (i == cells_x) ? hi.x : lo.x + i * dx;
      const std::size_t k = static_cast<std::size_t>(j) * nx + i;
      mesh.nodes[k] = {x, y};
      mesh.boundary[k] = std::abs(x - lo.x) <= tol || std::abs(x - hi.x) <= tol ||
                         std::abs(y - lo.y) <= tol || std::abs(y - hi.y) <= tol;
    }
  }
  mesh.elements.reserve(2 * static_cast<std::size_t>(cells_x) * cells_y);
  for (int j = 0; j < cells_y; ++j) {
    for (int i = 0; i < cells_x; ++i) {
      const int ll = j * nx + i;
      const int lr = ll + 1;
      const int ul = ll + nx;
      const int ur = ul + 1;
      // Counter-clockwise on both sides of the ll-ur diagonal.
      mesh.elements.push_back({ll, lr, ur});
      mesh.elements.push_back({ll, ur, ul});
    }
  }
  classify(mesh);
  return mesh;
}

double Mesh::element_signed_volume(std::size_t e) const {
  const auto& el = elements[e];
  const Point& a = nodes[el[0]];
  const Point& b = nodes[el[1]];
  if (dim == 1) return b.x - a.x;
  const Point& c = nodes[el[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double Mesh::element_volume(std::size_t e) const { return std::abs(element_signed_volume(e)); }

double Mesh::element_diameter(std::size_t e) const {
  const auto& el = elements[e];
  const int nv = vertices_per_element();
  double d = 0.0;
  for (int i = 0; i < nv; ++i)
    for (int j = i + 1; j < nv; ++j) {
      const Point& p = nodes[el[i]];
      const Point& q = nodes[el[j]];
      d = std::max(d, std::hypot(p.x - q.x, p.y - q.y));
    }
  return d;
}

}  // namespace spc
