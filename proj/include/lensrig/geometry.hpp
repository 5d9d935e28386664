#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lensrig/core.hpp"
#include "lensrig/domain.hpp"
#include "lensrig/metric.hpp"
#include "lensrig/speed.hpp"

namespace lensrig {

/// Hamiltonian H = 1/2 c^2 g0^{ij} xi_i xi_j and its vector field
///   V = (c^2 g0^{-1} xi, -1/2 d_x c^2 |xi|_{g0}^2).
/// DV is the 2n x 2n Jacobian of V, used by the variational equations.
class HamiltonianSystem {
 public:
  HamiltonianSystem(SpeedFieldPtr speed, BackgroundMetric metric);

  int dim() const { return n_; }
  const SpeedField& speed() const { return *speed_; }
  SpeedFieldPtr speed_ptr() const { return speed_; }
  const BackgroundMetric& metric() const { return metric_; }

  double hamiltonian(const PhasePoint& z) const;
  PhaseVec vector_field(const PhasePoint& z) const;
  PhaseMat vector_field_jacobian(const PhasePoint& z) const;
  /// H and V together (one speed evaluation).
  void hamiltonian_and_field(const PhasePoint& z, double& H, PhaseVec& V) const;

  bool contains(const Vec& x, double slack = 0.0) const { return speed_->contains(x, slack); }

 private:
  SpeedFieldPtr speed_;
  BackgroundMetric metric_;
  int n_;
};

/// Covector at x in the g0-direction dir, normalized onto the level H = 1/2.
PhasePoint unit_covector(const HamiltonianSystem& sys, const Vec& x, const Vec& dir);

struct LevelFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
};

/// Half the second derivative of -(sigma o gamma) at t=0 along the geodesic
/// through the phase point z (assumed tangent to the level set of sigma at
/// z.x). Positive means the level set is strictly convex seen from the
/// sublevel side: tangent rays immediately move to smaller sigma.
double convexity_scalar_at(const HamiltonianSystem& sys, const Vec& grad_sigma,
                           const Mat& hess_sigma, const PhasePoint& z);

/// Same, from a level function and a tangent direction omega at x (omega is
/// projected onto the tangent space of the level set and unit-normalized).
/// Throws DegenerateFoliation when grad sigma vanishes at x.
double convexity_scalar(const HamiltonianSystem& sys, const LevelFunction& sigma,
                        const Vec& x, const Vec& omega);

/// Foliation rho with strictly convex level sets sweeping M.
struct FoliationSpec {
  LevelFunction rho;
  double t_min = 0.0;
  double t_max = 1.0;                 // levels validated on [t_min, t_max)
  std::string residual_set = "point"; // what rho^{-1}([T,inf)) is
};

struct FoliationSamplingPlan {
  int levels = 12;
  int points_per_level = 24;
  int directions_per_point = 4;
  int coverage_samples = 400;
  std::uint64_t seed = 7;
};

struct FoliationReport {
  bool pass = false;
  double min_alpha = 0.0;
  double min_grad_norm = 0.0;
  double coverage_fraction = 0.0;  // sampled points of M with rho in (0, T]
  int samples = 0;
  std::string note;
};

FoliationReport foliation_validate(const HamiltonianSystem& sys, const Domain& domain,
                                   const FoliationSpec& spec,
                                   const FoliationSamplingPlan& plan);

}  // namespace lensrig
