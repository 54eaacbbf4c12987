#include "intinv/flow.hpp"

#include <algorithm>
#include <numeric>

namespace intinv {

Trajectory::Trajectory(std::vector<double> times, std::vector<Vec> states, std::vector<Vec> rates,
                       double error_estimate)
    : times_(std::move(times)), states_(std::move(states)), rates_(std::move(rates)),
      error_estimate_(error_estimate) {
  if (times_.empty() || times_.size() != states_.size() || times_.size() != rates_.size())
    throw DimensionError("trajectory: mismatched knot arrays");
}

std::size_t Trajectory::interval(double t) const {
  const std::size_t n = times_.size();
  if (n < 2) return 0;
  const bool ascending = times_.back() >= times_.front();
  const double lo = std::min(times_.front(), times_.back());
  const double hi = std::max(times_.front(), times_.back());
  const double slack = 1e-12 * (1.0 + std::abs(hi - lo));
  if (t < lo - slack || t > hi + slack) throw PreconditionError("trajectory queried outside its time span");
  std::size_t i;
  if (ascending)
    i = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
  else
    i = static_cast<std::size_t>(
        std::upper_bound(times_.begin(), times_.end(), t, [](double a, double b) { return a > b; }) -
        times_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, n - 2);
}

Vec Trajectory::at(double t) const {
  if (times_.size() == 1) return states_.front();
  const std::size_t i = interval(t);
  const double h = times_[i + 1] - times_[i];
  const double s = (t - times_[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * states_[i] + h10 * h * rates_[i] + h01 * states_[i + 1] + h11 * h * rates_[i + 1];
}

Vec Trajectory::rate_at(double t) const {
  if (times_.size() == 1) return rates_.front();
  const std::size_t i = interval(t);
  const double h = times_[i + 1] - times_[i];
  const double s = (t - times_[i]) / h;
  const double s2 = s * s;
  const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
  const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
  return (d00 * states_[i] + d01 * states_[i + 1]) / h + d10 * rates_[i] + d11 * rates_[i + 1];
}

Trajectory integrate_flow(const VectorField& v, const Vec& x0, double t0, double t1, const FlowSettings& settings) {
  if (x0.size() != v.dim()) throw DimensionError("integrate_flow: initial point has the wrong dimension");
  if (!x0.allFinite()) throw DivergenceError("integrate_flow: non-finite initial point", t0);
  const auto rhs = field_rhs(v);
  std::vector<double> times{t0};
  std::vector<Vec> states{x0};
  std::vector<Vec> rates{v(t0, x0)};
  if (t1 != t0) {
    const int n = step_count(t1 - t0, settings.step);
    const double h = (t1 - t0) / n;
    times.reserve(n + 1);
    states.reserve(n + 1);
    rates.reserve(n + 1);
    Vec x = x0;
    for (int i = 0; i < n; ++i) {
      const double t = t0 + h * i;
      x = rk4_step<double>(rhs, t, x, h);
      if (!x.allFinite()) throw DivergenceError("non-finite state during integration", t);
      const double tn = (i + 1 == n) ? t1 : t0 + h * (i + 1);
      times.push_back(tn);
      states.push_back(x);
      rates.push_back(v(tn, x));
    }
  }
  double estimate = std::nan("");
  if (settings.error_estimate) {
    if (t1 == t0) {
      estimate = 0.0;
    } else {
      const int n = step_count(t1 - t0, settings.step);
      const Vec fine = rk4_integrate<double>(rhs, t0, t1, x0, std::abs(t1 - t0) / (2.0 * n));
      estimate = (fine - states.back()).norm() * (16.0 / 15.0);
    }
  }
  return Trajectory(std::move(times), std::move(states), std::move(rates), estimate);
}

Vec flow_point(const VectorField& v, const Vec& x0, double t0, double t1, double step) {
  if (x0.size() != v.dim()) throw DimensionError("flow_point: initial point has the wrong dimension");
  if (t0 == t1) return x0;
  return rk4_integrate<double>(field_rhs(v), t0, t1, x0, step);
}

FlowJacobian flow_jacobian(const VectorField& v, const Vec& x0, double t0, double t1, JacobianMethod method,
                           double step, double h_fd) {
  const int m = v.dim();
  if (x0.size() != m) throw DimensionError("flow_jacobian: initial point has the wrong dimension");
  FlowJacobian out;
  out.method = method;
  out.matrix = Mat::Identity(m, m);
  if (t0 == t1) return out;
  const auto rhs = field_rhs(v);
  if (method == JacobianMethod::variational) {
    for (int i = 0; i < m; ++i)
      out.matrix.col(i) = eps_part(rk4_integrate<D1>(rhs, D1(t0), D1(t1), seed(x0, i), step));
  } else {
    for (int i = 0; i < m; ++i) {
      Vec xp = x0, xm = x0;
      xp(i) += h_fd;
      xm(i) -= h_fd;
      out.matrix.col(i) = (rk4_integrate<double>(rhs, t0, t1, xp, step) -
                           rk4_integrate<double>(rhs, t0, t1, xm, step)) /
                          (2.0 * h_fd);
    }
  }
  return out;
}

TangentFlow flow_with_tangents(const VectorField& v, const Vec& x0, const Mat& tangents, double t0, double t1,
                               double step) {
  return flow_with_tangents(v, x0, tangents, t0, std::vector<double>{t1}, step).front();
}

std::vector<TangentFlow> flow_with_tangents(const VectorField& v, const Vec& x0, const Mat& tangents, double t0,
                                            const std::vector<double>& times, double step) {
  const int m = v.dim();
  if (x0.size() != m || tangents.rows() != m) throw DimensionError("flow_with_tangents: dimension mismatch");
  const auto rhs = field_rhs(v);
  const Eigen::Index k = tangents.cols();
  std::vector<TangentFlow> out(times.size(), TangentFlow{x0, tangents});

  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  // March forward through times >= t0, then backward through times < t0.
  auto march = [&](const std::vector<std::size_t>& seq) {
    // One dual pass per tangent (or a plain pass with no tangents).
    const Eigen::Index passes = std::max<Eigen::Index>(k, 1);
    for (Eigen::Index j = 0; j < passes; ++j) {
      VecX<D1> y = k > 0 ? make_dual<double>(x0, Vec(tangents.col(j))) : promote(x0);
      double t = t0;
      for (std::size_t idx : seq) {
        const double target = times[idx];
        if (target != t) {
          y = rk4_integrate<D1>(rhs, D1(t), D1(target), y, step);
          t = target;
        }
        if (j == 0) out[idx].point = value_part(y);
        if (k > 0) out[idx].tangents.col(j) = eps_part(y);
      }
    }
  };
  std::vector<std::size_t> forward, backward;
  for (std::size_t idx : order)
    if (times[idx] >= t0) forward.push_back(idx);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (times[*it] < t0) backward.push_back(*it);
  if (!forward.empty()) march(forward);
  if (!backward.empty()) march(backward);
  return out;
}

SmoothMap FlowMap::as_smooth_map() const {
  const VectorField v = v_;
  const double t0 = t0_, t1 = t1_, step = step_;
  return SmoothMap::exact<2>(v.dim(), v.dim(), [v, t0, t1, step](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    if (t0 == t1) return VecX<S>(x);
    return rk4_integrate<S>(field_rhs(v), S(t0), S(t1), VecX<S>(x), step);
  });
}

VectorField extend_to_autonomous(const VectorField& v) {
  const int m = v.dim();
  SmoothMap mv = v.map();
  return VectorField::exact(m + 1, [mv, m](const auto& t, const auto& y) {
    using S = std::decay_t<decltype(t)>;
    (void)t;
    VecX<S> out(m + 1);
    out(0) = S(1.0);
    out.tail(m) = mv(y(0), VecX<S>(y.tail(m)));
    return out;
  });
}

}  // namespace intinv
