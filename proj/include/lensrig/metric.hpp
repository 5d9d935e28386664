#pragma once

#include <array>
#include <functional>

#include "lensrig/core.hpp"

namespace lensrig {

/// Pointwise data of the background metric g0: the matrix, its inverse and
/// the spatial derivatives of the inverse, d_k g0^{ij}.
struct MetricSample {
  Mat g;
  Mat ginv;
  std::array<Mat, 3> dginv;  // indexed by the derivative direction k < dim
};

class BackgroundMetric {
 public:
  using Evaluator = std::function<MetricSample(const Vec&)>;
  // Second derivatives d_l d_k g0^{ij}; only needed by the variational
  // equations. If absent they are taken by central differences of dginv.
  using SecondDerivative = std::function<Mat(const Vec&, int k, int l)>;

  static BackgroundMetric euclidean(int dim);
  static BackgroundMetric general(int dim, Evaluator ev, SecondDerivative d2 = nullptr);

  int dim() const { return dim_; }
  bool is_euclidean() const { return euclidean_; }

  MetricSample eval(const Vec& x) const;
  /// d_l d_k g0^{-1} at x.
  Mat d2ginv(const Vec& x, int k, int l) const;

 private:
  BackgroundMetric() = default;
  int dim_ = 0;
  bool euclidean_ = true;
  Evaluator eval_;
  SecondDerivative d2_;
};

}  // namespace lensrig
