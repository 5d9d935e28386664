#include "lensrig/metric.hpp"

namespace lensrig {

BackgroundMetric BackgroundMetric::euclidean(int dim) {
  BackgroundMetric m;
  m.dim_ = dim;
  m.euclidean_ = true;
  return m;
}

BackgroundMetric BackgroundMetric::general(int dim, Evaluator ev, SecondDerivative d2) {
  BackgroundMetric m;
  m.dim_ = dim;
  m.euclidean_ = false;
  m.eval_ = std::move(ev);
  m.d2_ = std::move(d2);
  return m;
}

MetricSample BackgroundMetric::eval(const Vec& x) const {
  if (euclidean_) {
    MetricSample s;
    s.g = Mat::Identity(dim_, dim_);
    s.ginv = Mat::Identity(dim_, dim_);
    for (int k = 0; k < dim_; ++k) s.dginv[k] = Mat::Zero(dim_, dim_);
    return s;
  }
  return eval_(x);
}

Mat BackgroundMetric::d2ginv(const Vec& x, int k, int l) const {
  if (euclidean_) return Mat::Zero(dim_, dim_);
  if (d2_) return d2_(x, k, l);
  // central difference of dginv in direction l
  const double h = 1e-5;
  Vec xp = x, xm = x;
  xp[l] += h;
  xm[l] -= h;
  return (eval_(xp).dginv[k] - eval_(xm).dginv[k]) / (2.0 * h);
}

}  // namespace lensrig
