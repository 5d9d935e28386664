#include "lensrig/speed.hpp"

#include <Eigen/LU>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lensrig {

namespace {

// Cardinal cubic B-spline centered at 0, support (-2, 2), and derivatives.
inline double bsp(double t) {
  const double a = std::abs(t);
  if (a < 1.0) return (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0;
  if (a < 2.0) {
    const double u = 2.0 - a;
    return u * u * u / 6.0;
  }
  return 0.0;
}
inline double bsp_d(double t) {
  const double a = std::abs(t);
  const double s = t < 0 ? -1.0 : 1.0;
  if (a < 1.0) return s * (-12.0 * a + 9.0 * a * a) / 6.0;
  if (a < 2.0) {
    const double u = 2.0 - a;
    return s * (-0.5) * u * u;
  }
  return 0.0;
}
inline double bsp_dd(double t) {
  const double a = std::abs(t);
  if (a < 1.0) return -2.0 + 3.0 * a;
  if (a < 2.0) return 2.0 - a;
  return 0.0;
}

// Interpolating coefficient solve along one axis, not-a-knot end rows.
// Unknowns c_{-1},...,c_{n}; conditions (c_{i-1}+4c_i+c_{i+1})/6 = f_i and
// vanishing third-derivative jump at knots 1 and n-2.
Eigen::PartialPivLU<Eigen::MatrixXd> spline_matrix(int n) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 2, n + 2);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 1.0 / 6.0;
    A(i, i + 1) = 4.0 / 6.0;
    A(i, i + 2) = 1.0 / 6.0;
  }
  auto notaknot = [&](int row, int knot) {
    // fourth difference of coefficients centered at `knot` (+1 for ghost)
    const int j = knot + 1;
    A(row, j - 2) += 1.0;
    A(row, j - 1) += -4.0;
    A(row, j) += 6.0;
    A(row, j + 1) += -4.0;
    A(row, j + 2) += 1.0;
  };
  if (n >= 4) {
    notaknot(n, 1);
    notaknot(n + 1, n - 2);
  } else {
    // short axes fall back to natural ends
    A(n, 0) = 1.0;
    A(n, 1) = -2.0;
    A(n, 2) = 1.0;
    A(n + 1, n - 1) = 1.0;
    A(n + 1, n) = -2.0;
    A(n + 1, n + 1) = 1.0;
  }
  return Eigen::PartialPivLU<Eigen::MatrixXd>(A);
}

}  // namespace

BsplineGrid::BsplineGrid(Vec origin, Vec spacing, std::vector<int> counts,
                         std::vector<double> values)
    : origin_(std::move(origin)),
      spacing_(std::move(spacing)),
      counts_(std::move(counts)),
      values_(std::move(values)) {
  std::size_t total = 1;
  for (int c : counts_) {
    if (c < 4) throw Error(ErrorCode::ConfigError, "grid needs >= 4 nodes per axis");
    total *= static_cast<std::size_t>(c);
  }
  if (total != values_.size())
    throw Error(ErrorCode::ConfigError, "grid value count mismatch");
  build_coefficients();
}

void BsplineGrid::build_coefficients() {
  const int d = dim();
  // coefficient array dims: counts + 2 per axis, last axis fastest
  std::vector<int> cdims(d);
  for (int k = 0; k < d; ++k) cdims[k] = counts_[k] + 2;
  cstride_.assign(d, 1);
  for (int k = d - 2; k >= 0; --k) cstride_[k] = cstride_[k + 1] * cdims[k + 1];
  std::size_t ctotal = 1;
  for (int k = 0; k < d; ++k) ctotal *= static_cast<std::size_t>(cdims[k]);
  coefs_.assign(ctotal, 0.0);

  // seed coefficients with values (ghost layers zero), then sweep axes
  std::vector<int> vstride(d, 1);
  for (int k = d - 2; k >= 0; --k) vstride[k] = vstride[k + 1] * counts_[k + 1];
  {
    std::vector<int> idx(d, 0);
    for (std::size_t v = 0; v < values_.size(); ++v) {
      std::size_t coff = 0;
      for (int k = 0; k < d; ++k) coff += static_cast<std::size_t>(idx[k] + 1) * cstride_[k];
      coefs_[coff] = values_[v];
      for (int k = d - 1; k >= 0; --k) {
        if (++idx[k] < counts_[k]) break;
        idx[k] = 0;
      }
    }
  }

  for (int axis = 0; axis < d; ++axis) {
    const int n = counts_[axis];
    auto lu = spline_matrix(n);
    Eigen::VectorXd rhs(n + 2), sol(n + 2);
    // iterate over all lines along `axis`
    std::vector<int> idx(d, 0);
    bool done = false;
    while (!done) {
      std::size_t base = 0;
      for (int k = 0; k < d; ++k)
        if (k != axis) base += static_cast<std::size_t>(idx[k]) * cstride_[k];
      // data currently sits at offsets (i+1) along axis
      for (int i = 0; i < n; ++i)
        rhs[i] = coefs_[base + static_cast<std::size_t>(i + 1) * cstride_[axis]];
      rhs[n] = 0.0;
      rhs[n + 1] = 0.0;
      sol = lu.solve(rhs);
      for (int i = 0; i < n + 2; ++i)
        coefs_[base + static_cast<std::size_t>(i) * cstride_[axis]] = sol[i];
      // advance the multi-index skipping `axis`
      done = true;
      for (int k = d - 1; k >= 0; --k) {
        if (k == axis) continue;
        if (++idx[k] < counts_[k] + 2) {
          done = false;
          break;
        }
        idx[k] = 0;
      }
    }
  }
}

Box BsplineGrid::grid_box() const {
  Box b;
  const int d = dim();
  b.lo = origin_;
  b.hi = origin_;
  for (int k = 0; k < d; ++k) b.hi[k] += spacing_[k] * (counts_[k] - 1);
  return b;
}

bool BsplineGrid::inside(const Vec& x) const {
  for (int k = 0; k < dim(); ++k) {
    const double u = (x[k] - origin_[k]) / spacing_[k];
    if (u < 0.0 || u > counts_[k] - 1) return false;
  }
  return true;
}

FieldSample BsplineGrid::eval(const Vec& x) const {
  const int d = dim();
  FieldSample out;
  out.grad = Vec::Zero(d);
  out.hess = Mat::Zero(d, d);

  int cell[3];
  double w[3][4], wd[3][4], wdd[3][4];
  for (int k = 0; k < d; ++k) {
    double u = (x[k] - origin_[k]) / spacing_[k];
    if (u < 0.0 || u > counts_[k] - 1)
      throw Error(ErrorCode::OutOfDomain, "grid interpolation outside grid");
    int i = static_cast<int>(std::floor(u));
    if (i > counts_[k] - 2) i = counts_[k] - 2;
    cell[k] = i;
    const double inv_h = 1.0 / spacing_[k];
    for (int m = 0; m < 4; ++m) {
      // basis centered at knot j = i - 1 + m; coefficient index j + 1 = i + m
      const double t = u - (i - 1 + m);
      w[k][m] = bsp(t);
      wd[k][m] = bsp_d(t) * inv_h;
      wdd[k][m] = bsp_dd(t) * inv_h * inv_h;
    }
  }

  int span[3] = {d > 0 ? 4 : 1, d > 1 ? 4 : 1, d > 2 ? 4 : 1};
  for (int a = 0; a < span[0]; ++a)
    for (int b = 0; b < span[1]; ++b)
      for (int c = 0; c < span[2]; ++c) {
        std::size_t off = static_cast<std::size_t>(cell[0] + a) * cstride_[0];
        if (d > 1) off += static_cast<std::size_t>(cell[1] + b) * cstride_[1];
        if (d > 2) off += static_cast<std::size_t>(cell[2] + c) * cstride_[2];
        const double coef = coefs_[off];
        if (coef == 0.0) continue;
        const int mi[3] = {a, b, c};
        double wv[3], gv[3], hv[3];
        for (int k = 0; k < d; ++k) {
          wv[k] = w[k][mi[k]];
          gv[k] = wd[k][mi[k]];
          hv[k] = wdd[k][mi[k]];
        }
        double prod = coef;
        for (int k = 0; k < d; ++k) prod *= wv[k];
        out.value += prod;
        for (int k = 0; k < d; ++k) {
          double gp = coef;
          for (int m = 0; m < d; ++m) gp *= (m == k) ? gv[m] : wv[m];
          out.grad[k] += gp;
          for (int l = k; l < d; ++l) {
            double hp = coef;
            if (l == k) {
              for (int m = 0; m < d; ++m) hp *= (m == k) ? hv[m] : wv[m];
            } else {
              for (int m = 0; m < d; ++m)
                hp *= (m == k) ? gv[m] : ((m == l) ? gv[m] : wv[m]);
            }
            out.hess(k, l) += hp;
          }
        }
      }
  for (int k = 0; k < d; ++k)
    for (int l = k + 1; l < d; ++l) out.hess(l, k) = out.hess(k, l);
  return out;
}

// ---- speed field implementations -------------------------------------------

namespace {

class ClosedFormSpeed final : public SpeedField {
 public:
  ClosedFormSpeed(Box box, double margin, std::string tag,
                  std::function<SpeedSample(const Vec&)> fn)
      : SpeedField(box, margin, std::move(tag)), fn_(std::move(fn)) {}
  SpeedSample eval(const Vec& x) const override {
    check_inside(x);
    return fn_(x);
  }

 private:
  std::function<SpeedSample(const Vec&)> fn_;
};

}  // namespace

SpeedFieldPtr closed_form_speed(Box box, double margin, std::string tag,
                                std::function<SpeedSample(const Vec&)> fn) {
  return std::make_shared<ClosedFormSpeed>(box, margin, std::move(tag), std::move(fn));
}

SpeedFieldPtr constant_speed(int dim, double value, Box box) {
  if (value <= 0.0) throw Error(ErrorCode::ConfigError, "speed must be positive");
  return closed_form_speed(box, 0.25 * box.diameter(), "constant",
                           [value, dim](const Vec&) {
                             SpeedSample s;
                             s.c = value;
                             s.grad = Vec::Zero(dim);
                             s.hess = Mat::Zero(dim, dim);
                             return s;
                           });
}

SpeedFieldPtr radial_speed(int dim, double a, double b, Box box) {
  return closed_form_speed(box, 0.25 * box.diameter(), "radial",
                           [a, b, dim](const Vec& x) {
                             SpeedSample s;
                             s.c = a - b * x.squaredNorm();
                             s.grad = -2.0 * b * x;
                             s.hess = -2.0 * b * Mat::Identity(dim, dim);
                             if (s.c <= 0.0)
                               throw Error(ErrorCode::OutOfDomain,
                                           "radial speed nonpositive here");
                             return s;
                           });
}

SpeedFieldPtr with_bumps(SpeedFieldPtr base, std::vector<GaussBump> bumps) {
  const int d = base->dim();
  Box box = base->box();
  double margin = base->margin();
  std::string tag = base->tag() + "+bumps";
  return closed_form_speed(
      box, margin, std::move(tag), [base, bumps, d](const Vec& x) {
        SpeedSample s = base->eval(x);
        for (const auto& bp : bumps) {
          const Vec r = x - bp.center;
          const double q = r.squaredNorm() / (bp.sigma * bp.sigma);
          const double e = bp.amplitude * std::exp(-q);
          s.c += e;
          const Vec ge = (-2.0 / (bp.sigma * bp.sigma)) * e * r;
          s.grad += ge;
          s.hess += (-2.0 / (bp.sigma * bp.sigma)) *
                    (e * Mat::Identity(d, d) + r * ge.transpose());
        }
        return s;
      });
}

GridSpeed::GridSpeed(BsplineGrid grid, double margin, std::string tag)
    : SpeedField(grid.grid_box(), margin, std::move(tag)), grid_(std::move(grid)) {
  for (double v : grid_.values())
    if (v <= 0.0) throw Error(ErrorCode::ConfigError, "grid speed must be positive");
}

SpeedSample GridSpeed::eval(const Vec& x) const {
  check_inside(x);
  const FieldSample f = grid_.eval(x);
  SpeedSample s;
  s.c = f.value;
  s.grad = f.grad;
  s.hess = f.hess;
  if (s.c <= 0.0) throw Error(ErrorCode::OutOfDomain, "interpolated speed nonpositive");
  return s;
}

std::shared_ptr<const GridSpeed> grid_speed_from(const SpeedField& src, Box box,
                                                 int count_per_axis, double margin) {
  const int d = box.dim();
  std::vector<int> counts(d, count_per_axis);
  Vec spacing(d);
  for (int k = 0; k < d; ++k) spacing[k] = (box.hi[k] - box.lo[k]) / (count_per_axis - 1);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= counts[k];
  std::vector<double> values(total);
  std::vector<int> idx(d, 0);
  Vec x(d);
  for (std::size_t v = 0; v < total; ++v) {
    for (int k = 0; k < d; ++k) x[k] = box.lo[k] + spacing[k] * idx[k];
    values[v] = src.eval(x).c;
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < counts[k]) break;
      idx[k] = 0;
    }
  }
  BsplineGrid g(box.lo, spacing, counts, std::move(values));
  return std::make_shared<GridSpeed>(std::move(g), margin, src.tag() + ":grid");
}

std::shared_ptr<const GridSpeed> grid_speed_from_values(Vec origin, Vec spacing,
                                                        std::vector<int> counts,
                                                        std::vector<double> values,
                                                        double margin, std::string tag) {
  BsplineGrid g(std::move(origin), std::move(spacing), std::move(counts), std::move(values));
  return std::make_shared<GridSpeed>(std::move(g), margin, std::move(tag));
}

// ---- scalar fields ----------------------------------------------------------

namespace {

class LambdaScalar final : public ScalarField {
 public:
  LambdaScalar(int dim, std::function<FieldSample(const Vec&)> fn)
      : dim_(dim), fn_(std::move(fn)) {}
  int dim() const override { return dim_; }
  FieldSample eval(const Vec& x) const override { return fn_(x); }

 private:
  int dim_;
  std::function<FieldSample(const Vec&)> fn_;
};

class GridScalar final : public ScalarField {
 public:
  GridScalar(BsplineGrid grid, bool zero_outside)
      : grid_(std::move(grid)), zero_outside_(zero_outside) {}
  int dim() const override { return grid_.dim(); }
  FieldSample eval(const Vec& x) const override {
    if (!grid_.inside(x)) {
      if (zero_outside_) {
        FieldSample f;
        f.grad = Vec::Zero(dim());
        f.hess = Mat::Zero(dim(), dim());
        return f;
      }
      throw Error(ErrorCode::OutOfDomain, "scalar grid evaluated outside");
    }
    return grid_.eval(x);
  }

 private:
  BsplineGrid grid_;
  bool zero_outside_;
};

}  // namespace

ScalarFieldPtr squared_speed_difference(SpeedFieldPtr c, SpeedFieldPtr ct) {
  const int d = c->dim();
  return std::make_shared<LambdaScalar>(d, [c, ct, d](const Vec& x) {
    const SpeedSample a = c->eval(x);
    const SpeedSample b = ct->eval(x);
    FieldSample f;
    f.value = a.c * a.c - b.c * b.c;
    f.grad = 2.0 * (a.c * a.grad - b.c * b.grad);
    f.hess = 2.0 * (a.grad * a.grad.transpose() + a.c * a.hess) -
             2.0 * (b.grad * b.grad.transpose() + b.c * b.hess);
    return f;
  });
}

ScalarFieldPtr closed_form_scalar(int dim, std::function<FieldSample(const Vec&)> fn) {
  return std::make_shared<LambdaScalar>(dim, std::move(fn));
}

ScalarFieldPtr grid_scalar(BsplineGrid grid, bool zero_outside) {
  return std::make_shared<GridScalar>(std::move(grid), zero_outside);
}

// ---- grid file IO -----------------------------------------------------------

void save_speed_grid(const GridSpeed& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  const auto& gr = g.grid();
  const int d = gr.dim();
  out << "lensrig-speedgrid 1\n";
  out << "dim " << d << "\n";
  out << "counts";
  for (int k = 0; k < d; ++k) out << " " << gr.counts()[k];
  out << "\norigin";
  char buf[64];
  for (int k = 0; k < d; ++k) {
    std::snprintf(buf, sizeof buf, " %.17g", gr.origin()[k]);
    out << buf;
  }
  out << "\nspacing";
  for (int k = 0; k < d; ++k) {
    std::snprintf(buf, sizeof buf, " %.17g", gr.spacing()[k]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", g.margin());
  out << "\nmargin " << buf << "\n";
  out << "layout float64-le last-axis-fastest\nend\n";
  const auto& vals = gr.values();
  out.write(reinterpret_cast<const char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(double)));
}

std::shared_ptr<const GridSpeed> load_speed_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line, word;
  std::getline(in, line);
  if (line != "lensrig-speedgrid 1")
    throw Error(ErrorCode::IoError, "bad speed grid magic in " + path);
  int d = 0;
  std::vector<int> counts;
  Vec origin, spacing;
  double margin = 0.0;
  while (std::getline(in, line) && line != "end") {
    std::istringstream ls(line);
    ls >> word;
    if (word == "dim") {
      ls >> d;
      origin = Vec::Zero(d);
      spacing = Vec::Zero(d);
      counts.assign(d, 0);
    } else if (word == "counts") {
      for (int k = 0; k < d; ++k) ls >> counts[k];
    } else if (word == "origin") {
      for (int k = 0; k < d; ++k) ls >> origin[k];
    } else if (word == "spacing") {
      for (int k = 0; k < d; ++k) ls >> spacing[k];
    } else if (word == "margin") {
      ls >> margin;
    } else if (word == "layout") {
      // informative only
    } else {
      throw Error(ErrorCode::IoError, "unknown speed grid header field " + word);
    }
  }
  if (d < 2 || d > 3) throw Error(ErrorCode::IoError, "bad dim in " + path);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(counts[k]);
  std::vector<double> values(total);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(total * sizeof(double)));
  if (!in) throw Error(ErrorCode::IoError, "truncated speed grid data in " + path);
  return grid_speed_from_values(origin, spacing, counts, std::move(values), margin,
                                "grid:" + path);
}

}  // namespace lensrig
