#pragma once

#include <vector>

#include "spc/fem.hpp"

namespace spc {

/// Nodal fields indexed by time level 0..N. Controls are read at left points
/// (levels 0..N-1), states at right points (levels 1..N).
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(int levels, Eigen::Index field_size) : fields_(levels, Vector::Zero(field_size)) {}

  static Trajectory constant(int levels, const Vector& value) {
    Trajectory t;
    t.fields_.assign(levels, value);
    return t;
  }

  int levels() const { return static_cast<int>(fields_.size()); }
  int steps() const { return levels() - 1; }
  Eigen::Index field_size() const { return fields_.empty() ? 0 : fields_.front().size(); }

  Vector& operator[](int n) { return fields_[n]; }
  const Vector& operator[](int n) const { return fields_[n]; }

  auto begin() { return fields_.begin(); }
  auto end() { return fields_.end(); }
  auto begin() const { return fields_.begin(); }
  auto end() const { return fields_.end(); }

 private:
  std::vector<Vector> fields_;
};

using PathEnsembleTrajectory = std::vector<Trajectory>;

}  // namespace spc
