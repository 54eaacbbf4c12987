#pragma once

#include <string>

#include "intinv/common.hpp"

namespace intinv {

struct NewtonSettings {
  int max_iterations = 60;
  double step_tolerance = 1e-14;
  double residual_tolerance = 1e-13;
};

/// Jacobian of a generic residual F : VecX<S> -> VecX<S> at a double point.
template <class F>
Mat residual_jacobian(F&& residual, const Vec& y) {
  const Vec r = residual(y);
  Mat jac(r.size(), y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) jac.col(i) = eps_part(residual(seed(y, i)));
  return jac;
}

/// Newton iteration for F(y) = 0 on doubles; F must accept VecX<double> and VecX<D1>.
template <class F>
Vec newton_solve(F&& residual, Vec y, const NewtonSettings& settings = {}, const char* what = "newton") {
  for (int it = 0; it < settings.max_iterations; ++it) {
    const Vec r = residual(y);
    if (!r.allFinite()) throw NewtonError(std::string(what) + ": non-finite residual");
    const Mat jac = residual_jacobian(residual, y);
    Vec step;
    try {
      step = solve<double>(jac, r);
    } catch (const DegeneracyError&) {
      throw NewtonError(std::string(what) + ": singular Jacobian");
    }
    y -= step;
    const double scale = 1.0 + y.lpNorm<Eigen::Infinity>();
    if (step.lpNorm<Eigen::Infinity>() <= settings.step_tolerance * scale &&
        r.lpNorm<Eigen::Infinity>() <= 1e3 * settings.residual_tolerance * scale)
      return y;
    if (r.lpNorm<Eigen::Infinity>() <= settings.residual_tolerance &&
        step.lpNorm<Eigen::Infinity>() <= 1e-10 * scale) {
      // One more step costs nothing and squares the error.
      const Vec r2 = residual(y);
      y -= solve<double>(residual_jacobian(residual, y), r2);
      return y;
    }
  }
  const Vec r = residual(y);
  if (r.lpNorm<Eigen::Infinity>() <= 1e3 * settings.residual_tolerance) return y;
  throw NewtonError(std::string(what) + ": no convergence");
}

/// Given a converged double root and its Jacobian, re-solves at dual level S by
/// chord iterations; each iteration fixes one more derivative order.
template <class S, class F>
VecX<S> chord_polish(F&& residual, const Vec& root, const Mat& jac_inverse) {
  VecX<S> y = root.template cast<S>();
  if constexpr (dual_depth<S>::value == 0) {
    return y;
  } else {
    const MatX<S> jinv = jac_inverse.template cast<S>();
    for (int it = 0; it <= dual_depth<S>::value; ++it) y -= jinv * residual(y);
    return y;
  }
}

}  // namespace intinv
