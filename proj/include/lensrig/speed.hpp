#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lensrig/core.hpp"

namespace lensrig {

struct FieldSample {
  double value = 0.0;
  Vec grad;
  Mat hess;
};

/// Axis-aligned box; the "extended domain" on which fields are evaluable.
struct Box {
  Vec lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x, double slack = 0.0) const {
    for (int k = 0; k < dim(); ++k)
      if (x[k] < lo[k] - slack || x[k] > hi[k] + slack) return false;
    return true;
  }
  double diameter() const { return (hi - lo).norm(); }
  static Box cube(int dim, double half_width) {
    Box b;
    b.lo = Vec::Constant(dim, -half_width);
    b.hi = Vec::Constant(dim, half_width);
    return b;
  }
  Box inflated(double m) const {
    Box b = *this;
    b.lo.array() -= m;
    b.hi.array() += m;
    return b;
  }
};

/// Scalar field with gradient and Hessian (the unknown f = c^2 - ~c^2 and
/// friends). Implementations must be pure and thread-safe.
class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual int dim() const = 0;
  virtual FieldSample eval(const Vec& x) const = 0;
};

using ScalarFieldPtr = std::shared_ptr<const ScalarField>;

struct SpeedSample {
  double c = 0.0;  // [length/time]
  Vec grad;
  Mat hess;
};

/// Sound speed c on an extended domain. c > 0 wherever evaluated; all
/// evaluators are deterministic and safe for concurrent use.
class SpeedField {
 public:
  virtual ~SpeedField() = default;

  virtual SpeedSample eval(const Vec& x) const = 0;

  int dim() const { return box_.dim(); }
  const Box& box() const { return box_; }
  double margin() const { return margin_; }
  const std::string& tag() const { return tag_; }
  bool contains(const Vec& x, double slack = 0.0) const { return box_.contains(x, slack); }

  void check_inside(const Vec& x) const {
    if (!contains(x))
      throw Error(ErrorCode::OutOfDomain, "speed field evaluated outside extended domain");
  }

 protected:
  SpeedField(Box box, double margin, std::string tag)
      : box_(box), margin_(margin), tag_(std::move(tag)) {}

 private:
  Box box_;
  double margin_;
  std::string tag_;
};

using SpeedFieldPtr = std::shared_ptr<const SpeedField>;

// ---- closed-form builders -------------------------------------------------

struct GaussBump {
  double amplitude = 0.0;
  Vec center;
  double sigma = 0.1;
};

/// c = value, everywhere on box.
SpeedFieldPtr constant_speed(int dim, double value, Box box);

/// Radial polynomial c(r) = a - b r^2 about the origin (Herglotz for our
/// test ranges). Caller picks a box where c stays positive.
SpeedFieldPtr radial_speed(int dim, double a, double b, Box box);

/// base plus a sum of Gaussian bumps amp * exp(-|x-x0|^2 / sigma^2).
SpeedFieldPtr with_bumps(SpeedFieldPtr base, std::vector<GaussBump> bumps);

/// Arbitrary closed form from value/gradient/Hessian closures.
SpeedFieldPtr closed_form_speed(
    Box box, double margin, std::string tag,
    std::function<SpeedSample(const Vec&)> fn);

// ---- tensor-product grid fields -------------------------------------------

/// Uniform tensor-product grid with C^2 cubic B-spline interpolation
/// (not-a-knot ends). Shared by grid speeds and grid scalar fields.
class BsplineGrid {
 public:
  BsplineGrid() = default;
  /// values laid out with the last axis fastest.
  BsplineGrid(Vec origin, Vec spacing, std::vector<int> counts,
              std::vector<double> values);

  int dim() const { return static_cast<int>(counts_.size()); }
  const Vec& origin() const { return origin_; }
  const Vec& spacing() const { return spacing_; }
  const std::vector<int>& counts() const { return counts_; }
  const std::vector<double>& values() const { return values_; }

  Box grid_box() const;
  bool inside(const Vec& x) const;
  FieldSample eval(const Vec& x) const;  // value, gradient, Hessian

 private:
  Vec origin_, spacing_;
  std::vector<int> counts_;
  std::vector<double> values_;  // raw samples (kept for IO round trips)
  std::vector<double> coefs_;   // spline coefficients, (count+2) per axis
  std::vector<int> cstride_;
  void build_coefficients();
};

class GridSpeed : public SpeedField {
 public:
  GridSpeed(BsplineGrid grid, double margin, std::string tag);
  SpeedSample eval(const Vec& x) const override;
  const BsplineGrid& grid() const { return grid_; }

 private:
  BsplineGrid grid_;
};

/// Sample an existing field onto a grid covering `box` with `count` nodes
/// per axis (margin is recorded metadata; box should already include it).
std::shared_ptr<const GridSpeed> grid_speed_from(
    const SpeedField& src, Box box, int count_per_axis, double margin);

std::shared_ptr<const GridSpeed> grid_speed_from_values(
    Vec origin, Vec spacing, std::vector<int> counts,
    std::vector<double> values, double margin, std::string tag = "grid");

// ---- scalar fields ---------------------------------------------------------

/// f := c^2 - ~c^2, with analytic derivatives from the two speed samples.
ScalarFieldPtr squared_speed_difference(SpeedFieldPtr c, SpeedFieldPtr c_tilde);

ScalarFieldPtr closed_form_scalar(int dim, std::function<FieldSample(const Vec&)> fn);

/// Grid-backed scalar field, zero outside the grid box.
ScalarFieldPtr grid_scalar(BsplineGrid grid, bool zero_outside = true);

// ---- speed-grid file format ------------------------------------------------

/// Text header (dimension, extents, spacing, margin) followed by raw
/// little-endian float64 samples, last axis fastest. See README.
void save_speed_grid(const GridSpeed& g, const std::string& path);
std::shared_ptr<const GridSpeed> load_speed_grid(const std::string& path);

}  // namespace lensrig
