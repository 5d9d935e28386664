#include "lensrig/domain.hpp"

#include <cmath>

namespace lensrig {

Surface sphere_surface(const Vec& center, double radius, std::string id) {
  Surface s;
  s.id = std::move(id);
  s.value = [center, radius](const Vec& x) { return radius * radius - (x - center).squaredNorm(); };
  s.grad = [center](const Vec& x) { return Vec(-2.0 * (x - center)); };
  return s;
}

Domain Domain::disk(int dim, double radius, Vec center) {
  Domain d;
  d.dim_ = dim;
  d.kind_ = "disk";
  if (center.size() == 0) center = Vec::Zero(dim);
  d.center_ = center;
  d.radius_ = radius;
  d.diam_ = 2.0 * radius;
  d.rho_ = [center, radius](const Vec& x) { return radius - (x - center).norm(); };
  d.grad_ = [center](const Vec& x) {
    const Vec r = x - center;
    const double n = r.norm();
    return Vec(-r / (n > 0 ? n : 1.0));
  };
  d.hess_ = [center, dim](const Vec& x) {
    const Vec r = x - center;
    const double n = r.norm();
    const Vec rh = r / (n > 0 ? n : 1.0);
    return Mat(-(Mat::Identity(dim, dim) - rh * rh.transpose()) / (n > 0 ? n : 1.0));
  };
  d.p_ = center;
  d.p_[0] += radius;
  return d;
}

Domain Domain::half_space(int dim, Vec normal, double offset) {
  Domain d;
  d.dim_ = dim;
  d.kind_ = "half_space";
  normal.normalize();
  d.normal_ = normal;
  d.offset_ = offset;
  d.diam_ = 2.0;
  d.rho_ = [normal, offset](const Vec& x) { return offset - normal.dot(x); };
  d.grad_ = [normal](const Vec&) { return Vec(-normal); };
  d.hess_ = [dim](const Vec&) { return Mat(Mat::Zero(dim, dim)); };
  d.p_ = offset * normal;
  return d;
}

Domain Domain::implicit(int dim, std::function<double(const Vec&)> rho,
                        std::function<Vec(const Vec&)> grad,
                        std::function<Mat(const Vec&)> hess) {
  Domain d;
  d.dim_ = dim;
  d.kind_ = "implicit";
  d.rho_ = std::move(rho);
  d.grad_ = std::move(grad);
  d.hess_ = std::move(hess);
  d.p_ = Vec::Zero(dim);
  return d;
}

Surface Domain::boundary_surface() const {
  Surface s;
  s.id = "boundary";
  s.value = rho_;
  s.grad = grad_;
  return s;
}

Vec Domain::project_to_boundary(const Vec& x) const {
  if (kind_ == "disk") {
    Vec r = x - center_;
    const double n = r.norm();
    if (n < 1e-14) {
      r = Vec::Zero(dim_);
      r[0] = 1.0;
      return center_ + radius_ * r;
    }
    return center_ + (radius_ / n) * r;
  }
  if (kind_ == "half_space") return x - (normal_.dot(x) - offset_) * normal_;
  // Newton along the gradient of rho
  Vec y = x;
  for (int it = 0; it < 50; ++it) {
    const double r = rho_(y);
    const Vec g = grad_(y);
    const double g2 = g.squaredNorm();
    if (g2 < 1e-20) throw Error(ErrorCode::DegenerateInput, "flat rho in projection");
    y -= (r / g2) * g;
    if (std::abs(r) < 1e-13) break;
  }
  return y;
}

double Domain::signed_outward_distance(const Vec& x) const {
  if (kind_ == "disk") return (x - center_).norm() - radius_;
  if (kind_ == "half_space") return normal_.dot(x) - offset_;
  const Vec y = project_to_boundary(x);
  const double d = (x - y).norm();
  return rho_(x) >= 0.0 ? -d : d;
}

Vec Domain::inward_normal(const Vec& x) const {
  Vec g = grad_rho(x);  // points inward (rho increases into M)
  const double n = g.norm();
  if (n < 1e-14) throw Error(ErrorCode::DegenerateInput, "degenerate boundary normal");
  return g / n;
}

double Domain::boundary_curvature(const Vec& x, const Vec& t) const {
  // normal curvature kappa = -t' H(rho) t / |grad rho|, positive for the
  // disk seen from inside
  const Vec g = grad_rho(x);
  const Mat H = hess_rho(x);
  return -t.dot(H * t) / g.norm();
}

Vec Domain::boundary_walk(const Vec& x, const Vec& t, double s) const {
  if (kind_ == "disk") {
    // rotate within the plane spanned by (x-center, t)
    const Vec r = x - center_;
    Vec e1 = r / r.norm();
    Vec tt = t - t.dot(e1) * e1;
    const double tn = tt.norm();
    if (tn < 1e-14) throw Error(ErrorCode::DegenerateInput, "tangent parallel to normal");
    tt /= tn;
    const double phi = s / radius_;
    return center_ + radius_ * (std::cos(phi) * e1 + std::sin(phi) * tt);
  }
  if (kind_ == "half_space") {
    Vec tt = t - t.dot(normal_) * normal_;
    tt.normalize();
    return x + s * tt;
  }
  // march-and-project with small steps
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(s) / 1e-3)));
  const double ds = s / steps;
  Vec y = x;
  Vec dir = t;
  for (int i = 0; i < steps; ++i) {
    const Vec nrm = inward_normal(y);
    dir -= dir.dot(nrm) * nrm;
    const double dn = dir.norm();
    if (dn < 1e-14) throw Error(ErrorCode::DegenerateInput, "tangent collapse in walk");
    dir /= dn;
    y = project_to_boundary(y + ds * dir);
  }
  return y;
}

void Domain::set_marked_point(const Vec& p) {
  if (std::abs(rho_(p)) > 1e-9)
    throw Error(ErrorCode::DegenerateInput, "marked point not on boundary");
  p_ = p;
}

}  // namespace lensrig
