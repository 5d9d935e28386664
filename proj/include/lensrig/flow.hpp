#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lensrig/core.hpp"
#include "lensrig/domain.hpp"
#include "lensrig/geometry.hpp"

namespace lensrig {

enum class StopCause { reached_tmax, out_of_domain, exited };

/// Sampled bicharacteristic Z(t) = (X(t), Xi(t)) with optional 2n x 2n flow
/// Jacobians dZ/dz(t). Nodes are uniformly spaced except possibly the last.
struct Trajectory {
  std::vector<double> t;
  std::vector<PhaseVec> z;
  std::vector<PhaseMat> jac;  // empty unless requested
  StopCause cause = StopCause::reached_tmax;
  double step = 0.0;

  int dim() const { return z.empty() ? 0 : static_cast<int>(z.front().size()) / 2; }
  std::size_t nodes() const { return t.size(); }
  bool with_jacobian() const { return !jac.empty(); }
  PhasePoint state(std::size_t k) const { return PhasePoint::unpack(z[k]); }
};

struct ExitRecord {
  bool found = false;
  double tau = 0.0;          // [time]
  PhasePoint z_exit;
  PhaseMat jac_exit;         // only if the trace carried Jacobians
  std::string surface_id;
};

/// Classical RK4 at fixed step h; co-integrates dY/dt = DV(Z) Y, Y(0) = I
/// when with_jacobian is set. Leaving the speed field's extended domain
/// stops the trace and marks the partial trajectory out_of_domain.
Trajectory integrate(const HamiltonianSystem& sys, const PhasePoint& z0, double tmax,
                     double h, bool with_jacobian);

/// Flow Jacobian dZ(T, z0)/dz0 alone (no node storage).
PhaseMat flow_jacobian(const HamiltonianSystem& sys, const PhasePoint& z0, double T,
                       double h);

/// End state Z(T, z0) alone.
PhasePoint flow_state(const HamiltonianSystem& sys, const PhasePoint& z0, double T,
                      double h);

/// Trace until the first down-crossing of `surface` (value positive inside),
/// refine the crossing with bisection+secant on a cubic dense-output
/// interpolant to |dt| <= 1e-12, and truncate the trajectory there with the
/// refined exit appended as the final node. Returns exited/reached_tmax.
struct ExitTrace {
  Trajectory trajectory;       // nodes up to and including the refined exit
  ExitRecord exit;             // found == false when trapped within tmax
};

ExitTrace trace_to_exit(const HamiltonianSystem& sys, const Surface& surface,
                        const PhasePoint& z0, double tmax, double h,
                        bool with_jacobian);

/// Exit time to a surface; Trapped when no crossing occurs before tmax.
ExitRecord exit_time(const HamiltonianSystem& sys, const Surface& surface,
                     const PhasePoint& z0, double tmax, double h);

/// Inverse of a symplectic matrix via Y^{-1} = -Omega Y^T Omega.
PhaseMat symplectic_inverse(const PhaseMat& Y);
PhaseMat symplectic_form(int n);

// ---- two-point shooting -----------------------------------------------------

enum class ConnectStatus { ok, ambiguous, no_convergence };

struct ConnectResult {
  ConnectStatus status = ConnectStatus::no_convergence;
  PhasePoint z_init;   // unit-level covector at x, pointing inward
  double length = 0.0; // travel time = g-distance for the found connector
  double residual = 0.0;
  int newton_iterations = 0;
};

struct ConnectOptions {
  double h = 2e-3;
  double tmax = 0.0;          // 0: derived from domain diameter and min speed
  double tol_factor = 1e-9;   // target |exit - y| <= tol_factor * diameter
  int max_newton = 18;
  int multistart = 3;
};

/// Shooting method for the minimizing connector between boundary points.
ConnectResult connect(const HamiltonianSystem& sys, const Domain& domain, const Vec& x,
                      const Vec& y, const ConnectOptions& opt = {});

/// Default trapping budget: 10 x domain diameter / min sampled speed.
double trapped_budget(const HamiltonianSystem& sys, const Domain& domain);

/// Write nodes as rows "t x.. xi.. [jac row-major..]" for debugging.
void export_trajectory(const Trajectory& tr, const std::string& path);

}  // namespace lensrig
