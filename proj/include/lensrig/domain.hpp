#pragma once

#include <functional>
#include <memory>
#include <string>

#include "lensrig/core.hpp"

namespace lensrig {

/// Implicit surface used by the flow's exit detection. `value` is positive
/// on the enclosed ("inside") region; an exit is the first down-crossing.
struct Surface {
  std::string id;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
};

Surface sphere_surface(const Vec& center, double radius, std::string id = "sphere");

/// Compact domain M = { rho_b >= 0 } with a marked boundary point p.
/// Concrete kinds cover the workbench geometries; `Implicit` takes closures.
class Domain {
 public:
  static Domain disk(int dim, double radius = 1.0, Vec center = Vec());
  /// Half space { x . normal <= offset }; boundary is the plane.
  static Domain half_space(int dim, Vec normal, double offset);
  static Domain implicit(int dim,
                         std::function<double(const Vec&)> rho,
                         std::function<Vec(const Vec&)> grad,
                         std::function<Mat(const Vec&)> hess);

  int dim() const { return dim_; }

  double rho(const Vec& x) const { return rho_(x); }
  Vec grad_rho(const Vec& x) const { return grad_(x); }
  Mat hess_rho(const Vec& x) const { return hess_(x); }
  bool inside(const Vec& x) const { return rho_(x) >= 0.0; }

  Surface boundary_surface() const;

  /// Signed g0-distance to the boundary, positive outside M. Exact for the
  /// disk and half space; Newton projection for implicit domains.
  double signed_outward_distance(const Vec& x) const;
  /// Closest boundary point (foot of the normal through x).
  Vec project_to_boundary(const Vec& x) const;

  /// Inward unit normal at a boundary point.
  Vec inward_normal(const Vec& x) const;
  /// Normal curvature of the boundary at a boundary point in tangent
  /// direction t (unit); positive for the disk seen from inside.
  double boundary_curvature(const Vec& x, const Vec& t) const;

  /// Walk along the boundary from a boundary point by arclength s in unit
  /// tangent direction t (project-and-march; exact for disk/half space).
  Vec boundary_walk(const Vec& x, const Vec& t, double s) const;

  const Vec& marked_point() const { return p_; }
  void set_marked_point(const Vec& p);
  const std::string& kind() const { return kind_; }

  double diameter_hint() const { return diam_; }

 private:
  Domain() = default;
  int dim_ = 0;
  std::string kind_;
  std::function<double(const Vec&)> rho_;
  std::function<Vec(const Vec&)> grad_;
  std::function<Mat(const Vec&)> hess_;
  Vec p_;
  double diam_ = 2.0;
  // disk parameters when kind_ == "disk"
  Vec center_;
  double radius_ = 1.0;
  // half-space parameters
  Vec normal_;
  double offset_ = 0.0;
};

}  // namespace lensrig
