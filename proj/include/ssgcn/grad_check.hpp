#pragma once

#include "ssgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace ssgcn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
  bool passed = false;
};

// Central-difference check of `analytic` against loss(). The closure reads the
// current values of *params[i] and must be deterministic (no dropout).
// Relative error is |a - n| / max(|a|, |n|, scale_floor); the floor keeps
// entries whose true gradient is ~0 from dividing noise by noise.
template <class LossFn>
GradCheckReport grad_check(LossFn&& loss, std::span<Eigen::MatrixXd* const> params,
                           std::span<const Eigen::MatrixXd> analytic, double h, double tolerance,
                           double scale_floor = 1e-4) {
  if (params.size() != analytic.size()) throw Error("grad_check: parameter/gradient count mismatch");
  GradCheckReport r;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Eigen::MatrixXd& p = *params[t];
    const Eigen::MatrixXd& a = analytic[t];
    if (a.rows() != p.rows() || a.cols() != p.cols()) throw Error("grad_check: gradient shape mismatch");
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double saved = p(i, j);
        p(i, j) = saved + h;
        const double up = loss();
        p(i, j) = saved - h;
        const double down = loss();
        p(i, j) = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(a(i, j)), std::abs(numeric), scale_floor});
        r.max_rel_error = std::max(r.max_rel_error, std::abs(a(i, j) - numeric) / denom);
        ++r.entries;
      }
  }
  r.passed = r.max_rel_error < tolerance;
  return r;
}

}  // namespace ssgcn
