#include <doctest.h>

#include <cstdio>

#include "lensrig/speed.hpp"

using namespace lensrig;

namespace {

SpeedFieldPtr test_bump_field() {
  Box box = Box::cube(2, 1.5);
  auto base = constant_speed(2, 1.0, box);
  GaussBump b;
  b.amplitude = 0.05;
  b.center = make_vec(0.3, -0.2);
  b.sigma = 0.25;
  return with_bumps(base, {b});
}

}  // namespace

TEST_CASE("closed-form speeds carry analytic derivatives") {
  auto f = test_bump_field();
  const Vec x = make_vec(0.21, -0.07);
  const SpeedSample s = f->eval(x);
  const double h = 1e-5;
  for (int k = 0; k < 2; ++k) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const double fd = (f->eval(xp).c - f->eval(xm).c) / (2 * h);
    CHECK(s.grad[k] == doctest::Approx(fd).epsilon(1e-7));
    for (int l = 0; l < 2; ++l) {
      const double fd2 = (f->eval(xp).grad[l] - f->eval(xm).grad[l]) / (2 * h);
      CHECK(s.hess(k, l) == doctest::Approx(fd2).epsilon(1e-6));
    }
  }
}

TEST_CASE("grid interpolation reproduces smooth speeds to spline accuracy") {
  auto f = test_bump_field();
  auto g = grid_speed_from(*f, Box::cube(2, 1.4), 96, 0.3);
  Rng rng(11);
  double emax = 0, gmax = 0, hmax = 0;
  for (int i = 0; i < 200; ++i) {
    Vec x = make_vec(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const SpeedSample a = f->eval(x);
    const SpeedSample b = g->eval(x);
    emax = std::max(emax, std::abs(a.c - b.c));
    gmax = std::max(gmax, (a.grad - b.grad).norm());
    hmax = std::max(hmax, (a.hess - b.hess).norm());
  }
  CHECK(emax < 2e-7);
  CHECK(gmax < 2e-5);
  CHECK(hmax < 5e-3);
}

TEST_CASE("spline value, gradient and Hessian are continuous across cells") {
  auto f = test_bump_field();
  auto g = grid_speed_from(*f, Box::cube(2, 1.2), 32, 0.2);
  const auto& grid = g->grid();
  // straddle an interior cell boundary along axis 0
  const double xc = grid.origin()[0] + 10 * grid.spacing()[0];
  const double eps = 1e-9;
  const Vec xl = make_vec(xc - eps, 0.123);
  const Vec xr = make_vec(xc + eps, 0.123);
  const SpeedSample a = g->eval(xl);
  const SpeedSample b = g->eval(xr);
  CHECK(std::abs(a.c - b.c) < 1e-10);
  CHECK((a.grad - b.grad).norm() < 1e-7);
  CHECK((a.hess - b.hess).norm() < 1e-4);  // C^2: Hessian continuous
}

TEST_CASE("grid speed rejects evaluation outside the extended domain") {
  auto f = test_bump_field();
  auto g = grid_speed_from(*f, Box::cube(2, 1.0), 16, 0.1);
  CHECK_THROWS_AS((void)g->eval(make_vec(1.5, 0.0)), Error);
}

TEST_CASE("squared speed difference matches direct evaluation") {
  auto c = test_bump_field();
  auto ct = constant_speed(2, 1.0, Box::cube(2, 1.5));
  auto f = squared_speed_difference(c, ct);
  const Vec x = make_vec(0.28, -0.18);
  const FieldSample s = f->eval(x);
  const double cv = c->eval(x).c, tv = ct->eval(x).c;
  CHECK(s.value == doctest::Approx(cv * cv - tv * tv).epsilon(1e-14));
  const double h = 1e-6;
  Vec xp = x;
  xp[0] += h;
  Vec xm = x;
  xm[0] -= h;
  const double fd = (f->eval(xp).value - f->eval(xm).value) / (2 * h);
  CHECK(s.grad[0] == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("speed grid file round-trips bit-exactly") {
  auto f = test_bump_field();
  auto g = grid_speed_from(*f, Box::cube(2, 1.1), 24, 0.15);
  const std::string path = "/tmp/lensrig_test_grid.bin";
  save_speed_grid(*g, path);
  auto g2 = load_speed_grid(path);
  REQUIRE(g2->grid().values().size() == g->grid().values().size());
  for (std::size_t i = 0; i < g->grid().values().size(); ++i)
    CHECK(g->grid().values()[i] == g2->grid().values()[i]);
  CHECK(g2->margin() == g->margin());
  // spline rebuild is deterministic: same evaluations
  const Vec x = make_vec(0.4, 0.7);
  CHECK(g->eval(x).c == g2->eval(x).c);
  std::remove(path.c_str());
}

TEST_CASE("3-d grids interpolate and differentiate") {
  Box box = Box::cube(3, 1.2);
  auto base = constant_speed(3, 1.0, box);
  GaussBump b;
  b.amplitude = 0.08;
  b.center = make_vec(0.2, 0.1, -0.15);
  b.sigma = 0.35;
  auto f = with_bumps(base, {b});
  auto g = grid_speed_from(*f, Box::cube(3, 1.0), 28, 0.2);
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    Vec x = make_vec(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8));
    const SpeedSample a = f->eval(x);
    const SpeedSample c = g->eval(x);
    CHECK(std::abs(a.c - c.c) < 5e-6);
    CHECK((a.grad - c.grad).norm() < 5e-4);
  }
}
