#pragma once

#include "olrhc/linsys.hpp"

#include <vector>

namespace olrhc {

/**
 * Input constraint set U = {u : F u <= b}. Must be bounded; may be empty, in
 * which case solvers report infeasibility instead of throwing here.
 */
class PolytopeU {
 public:
  PolytopeU() = default;
  PolytopeU(Matrix F, Vector b);
  static PolytopeU box(const Vector& lo, const Vector& hi);

  int dim() const { return static_cast<int>(F_.cols()); }
  const Matrix& F() const { return F_; }
  const Vector& b() const { return b_; }
  bool is_box() const { return is_box_; }
  bool empty() const { return empty_; }
  const std::vector<Vector>& vertices() const { return vertices_; }
  /// Axis-aligned bounding box of the polytope (from the vertex list).
  const Vector& lower() const { return lo_; }
  const Vector& upper() const { return hi_; }
  double max_norm() const { return max_norm_; }

  bool contains(const Vector& u, double tol = 1e-8) const;
  /// sum_k max{(F u - b)_k, 0}
  double violation(const Vector& u) const;

  /// Euclidean projection. Exact clipping for boxes, Dykstra otherwise.
  Vector project(const Vector& u) const;

  /// Uniform sample by rejection from the bounding box.
  Vector sample(Rng& rng) const;

 private:
  void analyse();

  Matrix F_;
  Vector b_;
  bool is_box_ = false;
  bool empty_ = false;
  Vector lo_;
  Vector hi_;
  std::vector<Vector> vertices_;
  double max_norm_ = 0.0;
};

/// Free-function form of PolytopeU::project.
Vector project_polytope(const Vector& u, const PolytopeU& U);

}  // namespace olrhc
