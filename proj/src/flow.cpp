#include "lensrig/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lensrig {

namespace {

struct VarState {
  PhaseVec z;
  PhaseMat Y;  // 0x0 when Jacobians are off
};

// One RK4 step of (z, Y). Throws OutOfDomain through the speed eval when a
// stage leaves the extended domain.
void rk4_step(const HamiltonianSystem& sys, VarState& s, double h, bool with_jac) {
  const auto rhs = [&](const VarState& u, PhaseVec& dz, PhaseMat& dY) {
    const PhasePoint p = PhasePoint::unpack(u.z);
    if (with_jac) {
      const PhaseMat J = sys.vector_field_jacobian(p);
      dz = sys.vector_field(p);
      dY = J * u.Y;
    } else {
      dz = sys.vector_field(p);
    }
  };
  PhaseVec k1, k2, k3, k4;
  PhaseMat K1, K2, K3, K4;
  VarState tmp = s;
  rhs(s, k1, K1);
  tmp.z = s.z + 0.5 * h * k1;
  if (with_jac) tmp.Y = s.Y + 0.5 * h * K1;
  rhs(tmp, k2, K2);
  tmp.z = s.z + 0.5 * h * k2;
  if (with_jac) tmp.Y = s.Y + 0.5 * h * K2;
  rhs(tmp, k3, K3);
  tmp.z = s.z + h * k3;
  if (with_jac) tmp.Y = s.Y + h * K3;
  rhs(tmp, k4, K4);
  s.z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (with_jac) s.Y += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
}

// Cubic Hermite on one step interval, local parameter u in [0,1].
PhaseVec hermite(const PhaseVec& z0, const PhaseVec& d0, const PhaseVec& z1,
                 const PhaseVec& d1, double dt, double u) {
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  return h00 * z0 + (h10 * dt) * d0 + h01 * z1 + (h11 * dt) * d1;
}

PhaseMat hermite_mat(const PhaseMat& z0, const PhaseMat& d0, const PhaseMat& z1,
                     const PhaseMat& d1, double dt, double u) {
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  return h00 * z0 + (h10 * dt) * d0 + h01 * z1 + (h11 * dt) * d1;
}

}  // namespace

Trajectory integrate(const HamiltonianSystem& sys, const PhasePoint& z0, double tmax,
                     double h, bool with_jacobian) {
  if (h <= 0.0) throw Error(ErrorCode::DegenerateInput, "nonpositive step");
  const int n = sys.dim();
  Trajectory tr;
  tr.step = h;
  VarState s;
  s.z = z0.packed();
  if (with_jacobian) s.Y = PhaseMat::Identity(2 * n, 2 * n);
  double t = 0.0;
  tr.t.push_back(t);
  tr.z.push_back(s.z);
  if (with_jacobian) tr.jac.push_back(s.Y);
  const std::size_t max_nodes = static_cast<std::size_t>(std::ceil(tmax / h)) + 2;
  tr.t.reserve(max_nodes);
  tr.z.reserve(max_nodes);
  while (t < tmax - 1e-15) {
    const double step = std::min(h, tmax - t);
    VarState next = s;
    try {
      rk4_step(sys, next, step, with_jacobian);
      if (!sys.contains(PhasePoint::unpack(next.z).x)) {
        tr.cause = StopCause::out_of_domain;
        return tr;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutOfDomain) {
        tr.cause = StopCause::out_of_domain;
        return tr;
      }
      throw;
    }
    s = next;
    t += step;
    tr.t.push_back(t);
    tr.z.push_back(s.z);
    if (with_jacobian) tr.jac.push_back(s.Y);
  }
  tr.cause = StopCause::reached_tmax;
  return tr;
}

PhaseMat flow_jacobian(const HamiltonianSystem& sys, const PhasePoint& z0, double T,
                       double h) {
  const int n = sys.dim();
  VarState s;
  s.z = z0.packed();
  s.Y = PhaseMat::Identity(2 * n, 2 * n);
  double t = 0.0;
  const double dir = T >= 0 ? 1.0 : -1.0;
  const double Tabs = std::abs(T);
  while (t < Tabs - 1e-15) {
    const double step = std::min(h, Tabs - t);
    rk4_step(sys, s, dir * step, true);
    t += step;
  }
  return s.Y;
}

PhasePoint flow_state(const HamiltonianSystem& sys, const PhasePoint& z0, double T,
                      double h) {
  VarState s;
  s.z = z0.packed();
  double t = 0.0;
  const double dir = T >= 0 ? 1.0 : -1.0;
  const double Tabs = std::abs(T);
  while (t < Tabs - 1e-15) {
    const double step = std::min(h, Tabs - t);
    rk4_step(sys, s, dir * step, false);
    t += step;
  }
  return PhasePoint::unpack(s.z);
}

PhaseMat symplectic_form(int n) {
  PhaseMat O = PhaseMat::Zero(2 * n, 2 * n);
  O.topRightCorner(n, n) = Mat::Identity(n, n);
  O.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return O;
}

PhaseMat symplectic_inverse(const PhaseMat& Y) {
  const int n = static_cast<int>(Y.rows()) / 2;
  const PhaseMat O = symplectic_form(n);
  return -O * Y.transpose() * O;
}

ExitTrace trace_to_exit(const HamiltonianSystem& sys, const Surface& surface,
                        const PhasePoint& z0, double tmax, double h,
                        bool with_jacobian) {
  ExitTrace out;
  const int n = sys.dim();
  Trajectory& tr = out.trajectory;
  tr.step = h;
  VarState s;
  s.z = z0.packed();
  if (with_jacobian) s.Y = PhaseMat::Identity(2 * n, 2 * n);
  double t = 0.0;
  tr.t.push_back(0.0);
  tr.z.push_back(s.z);
  if (with_jacobian) tr.jac.push_back(s.Y);

  double prev_val = surface.value(z0.x);
  bool was_inside = prev_val > 0.0;
  while (t < tmax - 1e-15) {
    const double step = std::min(h, tmax - t);
    VarState next = s;
    try {
      rk4_step(sys, next, step, with_jacobian);
      if (!sys.contains(PhasePoint::unpack(next.z).x)) {
        tr.cause = StopCause::out_of_domain;
        return out;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutOfDomain) {
        tr.cause = StopCause::out_of_domain;
        return out;
      }
      throw;
    }
    const double val = surface.value(PhasePoint::unpack(next.z).x);
    const bool crossing = was_inside && val <= 0.0;
    if (!was_inside && val > 1e-14) was_inside = true;  // entered the region

    if (crossing) {
      // refine on [t, t+step] with bisection+secant on the Hermite interpolant
      const PhasePoint pa = PhasePoint::unpack(s.z);
      const PhasePoint pb = PhasePoint::unpack(next.z);
      const PhaseVec da = sys.vector_field(pa);
      const PhaseVec db = sys.vector_field(pb);
      auto sval = [&](double u) {
        const PhaseVec zu = hermite(s.z, da, next.z, db, step, u);
        return surface.value(PhasePoint::unpack(zu).x);
      };
      double ua = 0.0, ub = 1.0, fa = prev_val, fb = val;
      double u = ub;
      for (int it = 0; it < 200; ++it) {
        // secant proposal, safeguarded by the bracket
        double us = ub - fb * (ub - ua) / (fb - fa);
        if (!(us > ua && us < ub)) us = 0.5 * (ua + ub);
        const double fs = sval(us);
        if (fs > 0.0) {
          ua = us;
          fa = fs;
        } else {
          ub = us;
          fb = fs;
        }
        u = 0.5 * (ua + ub);
        if ((ub - ua) * step < 1e-12) break;
      }
      const double texit = t + u * step;
      const PhaseVec zexit = hermite(s.z, da, next.z, db, step, u);
      tr.t.push_back(texit);
      tr.z.push_back(zexit);
      out.exit.found = true;
      out.exit.tau = texit;
      out.exit.z_exit = PhasePoint::unpack(zexit);
      out.exit.surface_id = surface.id;
      if (with_jacobian) {
        const PhaseMat Da = sys.vector_field_jacobian(pa) * s.Y;
        const PhaseMat Db = sys.vector_field_jacobian(pb) * next.Y;
        const PhaseMat Ye = hermite_mat(s.Y, Da, next.Y, Db, step, u);
        tr.jac.push_back(Ye);
        out.exit.jac_exit = Ye;
      }
      tr.cause = StopCause::exited;
      return out;
    }

    s = next;
    t += step;
    prev_val = val;
    tr.t.push_back(t);
    tr.z.push_back(s.z);
    if (with_jacobian) tr.jac.push_back(s.Y);
  }
  tr.cause = StopCause::reached_tmax;
  return out;  // exit.found == false: trapped within budget
}

ExitRecord exit_time(const HamiltonianSystem& sys, const Surface& surface,
                     const PhasePoint& z0, double tmax, double h) {
  return trace_to_exit(sys, surface, z0, tmax, h, false).exit;
}

double trapped_budget(const HamiltonianSystem& sys, const Domain& domain) {
  // sample min speed on a coarse grid around the domain
  double cmin = std::numeric_limits<double>::max();
  const int n = sys.dim();
  const int m = 5;
  Vec x(n);
  std::vector<int> idx(n, 0);
  const double R = domain.diameter_hint();
  bool done = false;
  while (!done) {
    for (int k = 0; k < n; ++k) x[k] = -0.5 * R + R * idx[k] / (m - 1);
    if (domain.inside(x) && sys.contains(x)) cmin = std::min(cmin, sys.speed().eval(x).c);
    done = true;
    for (int k = n - 1; k >= 0; --k) {
      if (++idx[k] < m) {
        done = false;
        break;
      }
      idx[k] = 0;
    }
  }
  if (cmin == std::numeric_limits<double>::max()) cmin = 1.0;
  return 10.0 * domain.diameter_hint() / cmin;
}

// ---- shooting ---------------------------------------------------------------

namespace {

// Orthonormal tangent frame at a unit vector nu (deterministic).
std::vector<Vec> tangent_frame(const Vec& nu) {
  const int n = static_cast<int>(nu.size());
  std::vector<Vec> frame;
  int smallest = 0;
  for (int k = 1; k < n; ++k)
    if (std::abs(nu[k]) < std::abs(nu[smallest])) smallest = k;
  Vec e = Vec::Zero(n);
  e[smallest] = 1.0;
  Vec t1 = e - e.dot(nu) * nu;
  t1.normalize();
  frame.push_back(t1);
  if (n == 3) {
    Vec t2(3);
    t2[0] = nu[1] * t1[2] - nu[2] * t1[1];
    t2[1] = nu[2] * t1[0] - nu[0] * t1[2];
    t2[2] = nu[0] * t1[1] - nu[1] * t1[0];
    frame.push_back(t2);
  }
  return frame;
}

}  // namespace

ConnectResult connect(const HamiltonianSystem& sys, const Domain& domain, const Vec& x,
                      const Vec& y, const ConnectOptions& opt) {
  ConnectResult best;
  const int n = sys.dim();
  if ((x - y).norm() < 1e-14)
    throw Error(ErrorCode::DegenerateInput, "coincident endpoints in connect");
  const double diam = domain.diameter_hint();
  const double tol = opt.tol_factor * diam;
  const double tmax = opt.tmax > 0 ? opt.tmax : trapped_budget(sys, domain);
  const Surface bd = domain.boundary_surface();
  const Vec nu = domain.inward_normal(x);
  const Vec chord = (y - x).normalized();
  // frame at the target for measuring the residual
  const Vec nuy = domain.inward_normal(y);
  const std::vector<Vec> yframe = tangent_frame(nuy);
  const int npar = n - 1;

  // initial direction: reflect the chord to point strictly inward
  Vec d0 = chord;
  if (d0.dot(nu) < 0.05) d0 += (0.05 - d0.dot(nu)) * nu;
  d0.normalize();
  const std::vector<Vec> xframe = tangent_frame(nu);

  // Directions are parameterized as d(a) = normalize(d0 + sum a_k t_k) with
  // t_k the tangent frame at x; monotone near a = 0 and well scaled.
  auto direction = [&](const Eigen::Vector2d& a) {
    Vec d = d0;
    for (int k = 0; k < npar; ++k) d += a[k] * xframe[k];
    d.normalize();
    // keep strictly inward
    if (d.dot(nu) < 1e-3) d += (1e-3 - d.dot(nu)) * nu;
    d.normalize();
    return d;
  };

  struct Shot {
    bool ok = false;
    Eigen::Vector2d res = Eigen::Vector2d::Zero();
    double norm = 1e300;
    double length = 0.0;
    PhasePoint z0;
  };
  auto shoot = [&](const Eigen::Vector2d& a) {
    Shot sh;
    const Vec d = direction(a);
    const PhasePoint z0 = unit_covector(sys, x, d);
    // step a touch below the requested h for short chords
    const double hh = std::min(opt.h, std::max(1e-4, (y - x).norm() / 40.0));
    const ExitRecord er = exit_time(sys, bd, z0, tmax, hh);
    if (!er.found) return sh;
    sh.ok = true;
    const Vec diff = er.z_exit.x - y;
    for (int k = 0; k < npar; ++k) sh.res[k] = diff.dot(yframe[k]);
    sh.norm = diff.norm();
    sh.length = er.tau;
    sh.z0 = z0;
    return sh;
  };

  std::vector<Eigen::Vector2d> starts;
  starts.emplace_back(Eigen::Vector2d::Zero());
  for (int m = 1; m < opt.multistart; ++m) {
    Eigen::Vector2d a = Eigen::Vector2d::Zero();
    a[0] = (m % 2 ? 0.15 : -0.15) * ((m + 1) / 2);
    starts.push_back(a);
  }

  std::vector<ConnectResult> solutions;
  for (const auto& start : starts) {
    Eigen::Vector2d a = start;
    Shot cur = shoot(a);
    if (!cur.ok) continue;
    int it = 0;
    for (; it < opt.max_newton && cur.norm > tol; ++it) {
      // finite-difference Jacobian in the active parameters
      Eigen::Matrix2d J = Eigen::Matrix2d::Identity();
      const double fd = 1e-7;
      for (int k = 0; k < npar; ++k) {
        Eigen::Vector2d ap = a;
        ap[k] += fd;
        const Shot sp = shoot(ap);
        if (!sp.ok) break;
        for (int r = 0; r < npar; ++r) J(r, k) = (sp.res[r] - cur.res[r]) / fd;
      }
      Eigen::Vector2d step = Eigen::Vector2d::Zero();
      if (npar == 1) {
        if (std::abs(J(0, 0)) < 1e-14) break;
        step[0] = -cur.res[0] / J(0, 0);
      } else {
        const double det = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0);
        if (std::abs(det) < 1e-16) break;
        step = -J.inverse() * cur.res;
      }
      // damped update
      double lambda = 1.0;
      Shot trial;
      for (int half = 0; half < 5; ++half) {
        trial = shoot(a + lambda * step);
        if (trial.ok && trial.norm < cur.norm) break;
        lambda *= 0.5;
      }
      if (!trial.ok || trial.norm >= cur.norm) break;  // stagnation
      a += lambda * step;
      cur = trial;
    }
    if (cur.ok && cur.norm <= tol) {
      ConnectResult r;
      r.status = ConnectStatus::ok;
      r.z_init = cur.z0;
      r.length = cur.length;
      r.residual = cur.norm;
      r.newton_iterations = it;
      solutions.push_back(r);
    }
  }
  if (solutions.empty()) {
    best.status = ConnectStatus::no_convergence;
    return best;
  }
  std::sort(solutions.begin(), solutions.end(),
            [](const ConnectResult& a, const ConnectResult& b) { return a.length < b.length; });
  best = solutions.front();
  for (std::size_t i = 1; i < solutions.size(); ++i)
    if (solutions[i].length > best.length + 1e-6 * diam) {
      best.status = ConnectStatus::ambiguous;  // distinct local solution found
      break;
    }
  return best;
}

void export_trajectory(const Trajectory& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  char buf[32];
  for (std::size_t k = 0; k < tr.nodes(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", tr.t[k]);
    out << buf;
    for (int i = 0; i < tr.z[k].size(); ++i) {
      std::snprintf(buf, sizeof buf, " %.17g", tr.z[k][i]);
      out << buf;
    }
    if (tr.with_jacobian()) {
      const auto& Y = tr.jac[k];
      for (int r = 0; r < Y.rows(); ++r)
        for (int c = 0; c < Y.cols(); ++c) {
          std::snprintf(buf, sizeof buf, " %.17g", Y(r, c));
          out << buf;
        }
    }
    out << "\n";
  }
}

}  // namespace lensrig
