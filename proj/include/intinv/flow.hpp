#pragma once

// Fixed-step classical RK4 integration, dense output, flow maps and flow
// Jacobians. The generic integrator runs on any scalar of the dual tower, so a
// flow map evaluated on Dual numbers yields the exact derivative of the
// discrete RK4 map (the variational equation integrated by the same scheme).

#include <cmath>
#include <string>
#include <vector>

#include "intinv/exterior.hpp"

namespace intinv {

struct FlowSettings {
  double step = kDefaultStep;
  /// Attach a Richardson half-step error estimate to dense trajectories.
  bool error_estimate = true;
};

/// Number of fixed steps covering a span of the given length.
inline int step_count(double span, double step) {
  if (!(step > 0.0)) throw PreconditionError("integration step must be positive");
  const double n = std::ceil(std::abs(span) / step - 1e-9);
  return std::max(1, static_cast<int>(n));
}

template <class S, class F>
VecX<S> rk4_step(const F& f, const S& t, const VecX<S>& x, const S& h) {
  const S half = h * 0.5;
  const VecX<S> k1 = f(t, x);
  const VecX<S> k2 = f(S(t + half), VecX<S>(x + half * k1));
  const VecX<S> k3 = f(S(t + half), VecX<S>(x + half * k2));
  const VecX<S> k4 = f(S(t + h), VecX<S>(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <class S>
bool all_finite(const VecX<S>& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(value_of(x(i)))) return false;
  return true;
}

/// Integrates x' = f(t, x) from t0 to t1 with ceil(|t1 - t0| / step) equal steps.
/// t0 and t1 may carry dual parts; the step count depends only on their values.
template <class S, class F>
VecX<S> rk4_integrate(const F& f, const S& t0, const S& t1, VecX<S> x, double step) {
  const double span = value_of(t1) - value_of(t0);
  if (span == 0.0 && value_of(t1 - t0) == 0.0 && dual_depth<S>::value == 0) return x;
  const int n = step_count(span, step);
  const S h = (t1 - t0) / static_cast<double>(n);
  S t = t0;
  for (int i = 0; i < n; ++i) {
    VecX<S> next = rk4_step(f, t, x, h);
    if (!all_finite(next))
      throw DivergenceError("non-finite state during integration", value_of(t));
    x = std::move(next);
    t = t0 + h * static_cast<double>(i + 1);
  }
  return x;
}

/// Adapts a VectorField to the generic integrator.
inline auto field_rhs(const VectorField& v) {
  return [&v](const auto& t, const auto& x) { return v.map()(t, x); };
}

/// Stored knots with cubic Hermite dense output.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::vector<double> times, std::vector<Vec> states, std::vector<Vec> rates,
             double error_estimate);

  /// Dense output; t must lie within the stored span.
  Vec at(double t) const;
  /// Derivative of the dense output.
  Vec rate_at(double t) const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<Vec>& states() const { return states_; }
  const std::vector<Vec>& rates() const { return rates_; }
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }
  const Vec& final_state() const { return states_.back(); }
  int dim() const { return states_.empty() ? 0 : static_cast<int>(states_.front().size()); }
  /// Richardson estimate (16/15)|x_h - x_{h/2}| of the final-state error; NaN when not computed.
  double error_estimate() const { return error_estimate_; }
  /// Index i with times[i] <= t <= times[i+1] (times ascending or descending).
  std::size_t interval(double t) const;

 private:
  std::vector<double> times_;
  std::vector<Vec> states_;
  std::vector<Vec> rates_;
  double error_estimate_ = std::nan("");
};

/// Integrates v from (t0, x0) to t1 storing every knot; t1 < t0 integrates backwards.
Trajectory integrate_flow(const VectorField& v, const Vec& x0, double t0, double t1,
                          const FlowSettings& settings = {});

/// Endpoint G^{t1}_{t0}(x0) only.
Vec flow_point(const VectorField& v, const Vec& x0, double t0, double t1, double step = kDefaultStep);

enum class JacobianMethod { variational, finite_difference };

struct FlowJacobian {
  Mat matrix;
  JacobianMethod method = JacobianMethod::variational;
};

FlowJacobian flow_jacobian(const VectorField& v, const Vec& x0, double t0, double t1,
                           JacobianMethod method = JacobianMethod::variational,
                           double step = kDefaultStep, double h_fd = kDefaultFdStep);

/// Image of a point and of tangent vectors (columns) under G^{t1}_{t0}.
struct TangentFlow {
  Vec point;
  Mat tangents;
};

TangentFlow flow_with_tangents(const VectorField& v, const Vec& x0, const Mat& tangents, double t0,
                               double t1, double step = kDefaultStep);

/// Same at several times; integration marches through the sorted times from t0
/// in each direction, so each result depends on the whole requested grid.
std::vector<TangentFlow> flow_with_tangents(const VectorField& v, const Vec& x0, const Mat& tangents,
                                            double t0, const std::vector<double>& times,
                                            double step = kDefaultStep);

/// G^{t1}_{t0} as an object.
class FlowMap {
 public:
  FlowMap(VectorField v, double t0, double t1, double step = kDefaultStep)
      : v_(std::move(v)), t0_(t0), t1_(t1), step_(step) {}

  Vec operator()(const Vec& x) const { return flow_point(v_, x, t0_, t1_, step_); }
  Mat jacobian(const Vec& x, JacobianMethod method = JacobianMethod::variational) const {
    return flow_jacobian(v_, x, t0_, t1_, method, step_).matrix;
  }
  /// The flow map as a SmoothMap (time argument ignored), exact through dual level 2.
  SmoothMap as_smooth_map() const;

  const VectorField& field() const { return v_; }
  double t0() const { return t0_; }
  double t1() const { return t1_; }
  double step() const { return step_; }

 private:
  VectorField v_;
  double t0_;
  double t1_;
  double step_;
};

/// (1, v(y0, y1..ym)) on m+1 coordinates with y0 = t.
VectorField extend_to_autonomous(const VectorField& v);

}  // namespace intinv
