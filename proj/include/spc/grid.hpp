#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace spc {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform partition 0 = t_0 < ... < t_N = T.
struct TimeGrid {
  double horizon = 0.0;
  int steps = 0;
  double tau = 0.0;

  /// t_n = n * tau, with t_N pinned to the horizon.
  double t(int n) const { return n == steps ? horizon : n * tau; }
  int levels() const { return steps + 1; }
};

TimeGrid make_time_grid(double horizon, int steps);

/// Simplicial mesh of an interval (2-node segments) or a rectangle
/// (3-node triangles). Immutable after construction.
struct Mesh {
  int dim = 1;
  std::vector<Point> nodes;
  /// Node indices per element; segments use the first two slots only.
  std::vector<std::array<int, 3>> elements;
  std::vector<bool> boundary;
  double h = 0.0;
  /// node -> dense interior index, or -1 for boundary nodes.
  std::vector<int> interior_index;
  /// interior index -> node.
  std::vector<int> interior_nodes;

  int vertices_per_element() const { return dim + 1; }
  std::size_t node_count() const { return nodes.size(); }
  std::size_t element_count() const { return elements.size(); }
  std::size_t interior_count() const { return interior_nodes.size(); }

  /// Length (1D) or area (2D) of element e.
  double element_volume(std::size_t e) const;
  /// Signed area in 2D, signed length in 1D.
  double element_signed_volume(std::size_t e) const;
  double element_diameter(std::size_t e) const;
  double domain_volume() const { return domain_volume_; }

  Point lower;
  Point upper;

 private:
  friend Mesh make_interval_mesh(double, double, int);
  friend Mesh make_rectangle_mesh(Point, Point, int, int);
  double domain_volume_ = 0.0;
};

Mesh make_interval_mesh(double a, double b, int cells);

/// Structured triangulation; every cell is split along its
/// lower-left to upper-right diagonal.
Mesh make_rectangle_mesh(Point corner_min, Point corner_max, int cells_x, int cells_y);

}  // namespace spc
