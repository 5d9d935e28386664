#include "lensrig/geometry.hpp"

#include <cmath>

namespace lensrig {

HamiltonianSystem::HamiltonianSystem(SpeedFieldPtr speed, BackgroundMetric metric)
    : speed_(std::move(speed)), metric_(std::move(metric)), n_(speed_->dim()) {
  if (metric_.dim() != n_)
    throw Error(ErrorCode::ConfigError, "speed/metric dimension mismatch");
}

double HamiltonianSystem::hamiltonian(const PhasePoint& z) const {
  const SpeedSample s = speed_->eval(z.x);
  if (metric_.is_euclidean()) return 0.5 * s.c * s.c * z.xi.squaredNorm();
  const MetricSample m = metric_.eval(z.x);
  return 0.5 * s.c * s.c * z.xi.dot(m.ginv * z.xi);
}

void HamiltonianSystem::hamiltonian_and_field(const PhasePoint& z, double& H,
                                              PhaseVec& V) const {
  const SpeedSample s = speed_->eval(z.x);
  const double c2 = s.c * s.c;
  const Vec dc2 = 2.0 * s.c * s.grad;
  V.resize(2 * n_);
  if (metric_.is_euclidean()) {
    const double xi2 = z.xi.squaredNorm();
    H = 0.5 * c2 * xi2;
    V.head(n_) = c2 * z.xi;
    V.tail(n_) = -0.5 * xi2 * dc2;
    return;
  }
  const MetricSample m = metric_.eval(z.x);
  const Vec gixi = m.ginv * z.xi;
  const double xi2 = z.xi.dot(gixi);
  H = 0.5 * c2 * xi2;
  V.head(n_) = c2 * gixi;
  Vec vxi = -0.5 * xi2 * dc2;
  for (int k = 0; k < n_; ++k) vxi[k] -= 0.5 * c2 * z.xi.dot(m.dginv[k] * z.xi);
  V.tail(n_) = vxi;
}

PhaseVec HamiltonianSystem::vector_field(const PhasePoint& z) const {
  double H;
  PhaseVec V;
  hamiltonian_and_field(z, H, V);
  return V;
}

PhaseMat HamiltonianSystem::vector_field_jacobian(const PhasePoint& z) const {
  const SpeedSample s = speed_->eval(z.x);
  const double c2 = s.c * s.c;
  const Vec dc2 = 2.0 * s.c * s.grad;
  const Mat d2c2 = 2.0 * (s.grad * s.grad.transpose() + s.c * s.hess);
  PhaseMat J = PhaseMat::Zero(2 * n_, 2 * n_);
  if (metric_.is_euclidean()) {
    const double xi2 = z.xi.squaredNorm();
    // d(c^2 xi)/dx = xi dc2^T, d(c^2 xi)/dxi = c^2 I
    J.topLeftCorner(n_, n_) = z.xi * dc2.transpose();
    J.topRightCorner(n_, n_) = c2 * Mat::Identity(n_, n_);
    J.bottomLeftCorner(n_, n_) = -0.5 * xi2 * d2c2;
    J.bottomRightCorner(n_, n_) = -dc2 * z.xi.transpose();
    return J;
  }
  const MetricSample m = metric_.eval(z.x);
  const Vec gixi = m.ginv * z.xi;
  const double xi2 = z.xi.dot(gixi);
  Mat A = Mat::Zero(n_, n_), B = Mat::Zero(n_, n_), C = Mat::Zero(n_, n_),
      D = Mat::Zero(n_, n_);
  for (int mcol = 0; mcol < n_; ++mcol) {
    const Vec dgx = m.dginv[mcol] * z.xi;
    A.col(mcol) = dc2[mcol] * gixi + c2 * dgx;
    // dV_xi,i/dx_m
    for (int i = 0; i < n_; ++i) {
      double v = -0.5 * d2c2(i, mcol) * xi2;
      v -= 0.5 * dc2[i] * z.xi.dot(dgx);
      v -= 0.5 * dc2[mcol] * z.xi.dot(m.dginv[i] * z.xi);
      v -= 0.5 * c2 * z.xi.dot(metric_.d2ginv(z.x, i, mcol) * z.xi);
      C(i, mcol) = v;
    }
  }
  B = c2 * m.ginv;
  for (int i = 0; i < n_; ++i)
    D.row(i) = -dc2[i] * gixi.transpose() -
               c2 * (m.dginv[i] * z.xi).transpose();
  J.topLeftCorner(n_, n_) = A;
  J.topRightCorner(n_, n_) = B;
  J.bottomLeftCorner(n_, n_) = C;
  J.bottomRightCorner(n_, n_) = D;
  return J;
}

PhasePoint unit_covector(const HamiltonianSystem& sys, const Vec& x, const Vec& dir) {
  if (dir.norm() < 1e-14)
    throw Error(ErrorCode::DegenerateInput, "zero direction in unit_covector");
  const SpeedSample s = sys.speed().eval(x);
  PhasePoint z;
  z.x = x;
  if (sys.metric().is_euclidean()) {
    z.xi = dir / (dir.norm() * s.c);
    return z;
  }
  const MetricSample m = sys.metric().eval(x);
  Vec d = dir;
  const double len = std::sqrt(d.dot(m.g * d));  // |dir|_{g0}
  d /= len;
  z.xi = (m.g * d) / s.c;  // xi = g0 d / c, so H(z) = 1/2
  return z;
}

double convexity_scalar_at(const HamiltonianSystem& sys, const Vec& grad_sigma,
                           const Mat& hess_sigma, const PhasePoint& z) {
  if (grad_sigma.norm() < 1e-14)
    throw Error(ErrorCode::DegenerateFoliation, "vanishing level gradient");
  const int n = sys.dim();
  const PhaseVec V = sys.vector_field(z);
  const PhaseMat DV = sys.vector_field_jacobian(z);
  const Vec xdot = V.head(n);
  // xddot = DV_xx xdot + DV_xxi xidot
  const Vec xddot = DV.topLeftCorner(n, n) * xdot + DV.topRightCorner(n, n) * V.tail(n);
  const double d2 = xdot.dot(hess_sigma * xdot) + grad_sigma.dot(xddot);
  return -0.5 * d2;
}

double convexity_scalar(const HamiltonianSystem& sys, const LevelFunction& sigma,
                        const Vec& x, const Vec& omega) {
  const Vec g = sigma.grad(x);
  if (g.norm() < 1e-14)
    throw Error(ErrorCode::DegenerateFoliation, "vanishing level gradient");
  // The spatial velocity through unit_covector is parallel to the input
  // direction, so tangency d sigma(xdot) = 0 is plain orthogonality to g.
  Vec t = omega;
  t -= (t.dot(g) / g.squaredNorm()) * g;
  if (t.norm() < 1e-12)
    throw Error(ErrorCode::DegenerateInput, "direction parallel to level normal");
  const PhasePoint z = unit_covector(sys, x, t);
  return convexity_scalar_at(sys, g, sigma.hess(x), z);
}

FoliationReport foliation_validate(const HamiltonianSystem& sys, const Domain& domain,
                                   const FoliationSpec& spec,
                                   const FoliationSamplingPlan& plan) {
  FoliationReport rep;
  rep.min_alpha = std::numeric_limits<double>::max();
  rep.min_grad_norm = std::numeric_limits<double>::max();
  Rng rng(plan.seed);
  const int n = sys.dim();

  int coverage_in = 0, coverage_total = 0;
  // coverage: rejection-sample M within the domain's bounding region
  for (int i = 0; i < plan.coverage_samples; ++i) {
    Vec x(n);
    for (int k = 0; k < n; ++k) x[k] = rng.uniform(-1.0, 1.0) * domain.diameter_hint();
    if (!domain.inside(x)) continue;
    ++coverage_total;
    const double t = spec.rho.value(x);
    if (t > spec.t_min && t <= spec.t_max + 1e-12) ++coverage_in;
  }
  rep.coverage_fraction = coverage_total ? double(coverage_in) / coverage_total : 0.0;

  for (int li = 0; li < plan.levels; ++li) {
    const double t =
        spec.t_min + (spec.t_max - spec.t_min) * (li + 0.5) / plan.levels;
    for (int pi = 0; pi < plan.points_per_level; ++pi) {
      // find a point on the level set: start from a random M point, walk rho
      Vec x(n);
      bool found = false;
      for (int attempt = 0; attempt < 40 && !found; ++attempt) {
        for (int k = 0; k < n; ++k)
          x[k] = rng.uniform(-1.0, 1.0) * domain.diameter_hint();
        if (!domain.inside(x)) continue;
        for (int it = 0; it < 60; ++it) {
          const double r = spec.rho.value(x) - t;
          const Vec g = spec.rho.grad(x);
          const double g2 = g.squaredNorm();
          if (g2 < 1e-18) break;
          x -= (r / g2) * g;
          if (std::abs(r) < 1e-12) {
            found = domain.inside(x) && std::abs(spec.rho.value(x) - t) < 1e-9;
            break;
          }
        }
      }
      if (!found) continue;
      const Vec g = spec.rho.grad(x);
      rep.min_grad_norm = std::min(rep.min_grad_norm, g.norm());
      for (int di = 0; di < plan.directions_per_point; ++di) {
        Vec w(n);
        for (int k = 0; k < n; ++k) w[k] = rng.normal();
        w -= (w.dot(g) / g.squaredNorm()) * g;
        if (w.norm() < 1e-10) continue;
        try {
          const double a = convexity_scalar(sys, spec.rho, x, w);
          rep.min_alpha = std::min(rep.min_alpha, a);
          ++rep.samples;
        } catch (const Error&) {
          // skip degenerate samples; they count against coverage only
        }
      }
    }
  }
  if (rep.samples == 0) {
    rep.pass = false;
    rep.note = "no valid level-set samples";
    return rep;
  }
  rep.pass = rep.min_alpha > 0.0 && rep.min_grad_norm > 0.0;
  return rep;
}

}  // namespace lensrig
