#include "intinv/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace intinv {

double DriftSeries::max_drift() const {
  double m = 0.0;
  for (double d : drift) m = std::max(m, std::abs(d));
  return m;
}

DriftSeries make_drift_series(std::vector<double> times, std::vector<double> values, double tolerance) {
  DriftSeries s;
  s.times = std::move(times);
  s.values = std::move(values);
  s.tolerance = tolerance;
  s.drift.reserve(s.values.size());
  for (double v : s.values) s.drift.push_back(v - s.values.front());
  s.pass = std::all_of(s.values.begin(), s.values.end(), [](double v) { return std::isfinite(v); }) &&
           s.max_drift() <= tolerance;
  return s;
}

double tolerance_for_span(double rate, double t0, const std::vector<double>& times) {
  double span = 0.0;
  for (double t : times) span = std::max(span, std::abs(t - t0));
  return rate * std::max(1.0, span);
}

ResidualStats residual_stats(const std::vector<double>& residuals) {
  ResidualStats s;
  s.count = residuals.size();
  double sum = 0.0;
  for (double r : residuals) {
    s.max = std::max(s.max, r);
    sum += r;
  }
  s.mean = s.count ? sum / static_cast<double>(s.count) : 0.0;
  return s;
}

InvarianceReport check_pointwise_invariance(const VectorField& v, const DifferentialForm& omega,
                                            const std::vector<Vec>& samples, double t,
                                            const std::optional<DifferentialForm>& potential) {
  DifferentialForm target = lie_derivative(v, omega);
  if (potential) {
    if (potential->dim() != omega.dim() || potential->degree() + 1 != omega.degree())
      throw DegreeError("potential must be a form of degree one less on the same chart");
    target = target - exterior_derivative(*potential);
  }
  std::vector<double> residuals(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { residuals[i] = coefficient_norm(target, t, samples[i]); });
  InvarianceReport report;
  report.residuals = residual_stats(residuals);
  return report;
}

DriftSeries check_transport_invariance(const VectorField& v, const DifferentialForm& omega, const Chain& c,
                                       double t0, const std::vector<double>& times, TransportKind kind,
                                       const TransportOptions& options) {
  if (times.empty()) throw PreconditionError("transport check needs at least one time");
  if (kind == TransportKind::relative_closed && options.check_preconditions) {
    const double defect = closure_defect(c, options.sweep.quadrature);
    if (defect > options.closure_tolerance)
      throw PreconditionError("relative invariant requires a closed chain (closure defect " +
                              std::to_string(defect) + ")");
  }
  SweepSettings sweep = options.sweep;
  sweep.form_time = kind == TransportKind::nonautonomous ? FormTime::transported : FormTime::initial;
  std::vector<double> values = transported_integrals(v, omega, c, t0, times, sweep);
  return make_drift_series(times, std::move(values), tolerance_for_span(options.tolerance_rate, t0, times));
}

TransportDerivative transport_derivative_check(const VectorField& v, const DifferentialForm& omega, const Chain& c,
                                               double t, double dt, std::optional<double> t0,
                                               const SweepSettings& settings) {
  if (!(dt > 0.0)) throw PreconditionError("transport derivative needs a positive time step");
  const double start = t0.value_or(t);
  SweepSettings sweep = settings;
  sweep.form_time = FormTime::transported;
  const auto ends = transported_integrals(v, omega, c, start, {t - dt, t + dt}, sweep);
  const DifferentialForm rate = time_derivative(omega) + lie_derivative(v, omega);
  const double rhs = transported_integrals(v, rate, c, start, {t}, sweep)[0];
  TransportDerivative r;
  r.lhs = (ends[1] - ends[0]) / (2.0 * dt);
  r.rhs = rhs;
  r.difference = std::abs(r.lhs - r.rhs);
  return r;
}

namespace {

std::vector<Vec> grid_around(const Vec& base, double radius, int count) {
  const int per = std::max(2, static_cast<int>(std::lround(std::pow(count, 1.0 / base.size()))));
  std::vector<Vec> pts;
  std::vector<int> idx(base.size(), 0);
  while (true) {
    Vec p = base;
    for (Eigen::Index a = 0; a < base.size(); ++a) p(a) += radius * (-1.0 + 2.0 * idx[a] / (per - 1));
    pts.push_back(p);
    std::size_t a = 0;
    while (a < idx.size() && ++idx[a] == per) idx[a++] = 0;
    if (a == idx.size()) break;
  }
  return pts;
}

}  // namespace

FirstIntegral first_integral_from_area_form(const VectorField& v, const DifferentialForm& q, const Vec& base,
                                            const FirstIntegralOptions& options) {
  if (q.dim() != 2 || q.degree() != 2) throw DegreeError("first integral construction needs an area form on a 2-chart");
  if (v.dim() != 2 || base.size() != 2) throw DimensionError("first integral construction is planar");
  const std::vector<Vec> checks = grid_around(base, options.check_radius, options.check_samples);
  if (options.check_preconditions) {
    if (std::abs(q(0.0, base)(0)) < 1e-12) throw DegeneracyError("area form vanishes at the base point");
    const DifferentialForm lq = lie_derivative(v, q);
    for (const Vec& x : checks)
      if (coefficient_norm(lq, 0.0, x) > options.invariance_tolerance)
        throw PreconditionError("area form is not invariant under the field near the base point");
  }

  const DifferentialForm ivq = interior_product(v, q);
  std::vector<double> nodes, weights;
  gauss_legendre(64, nodes, weights);
  auto rule = std::make_shared<std::vector<std::pair<double, double>>>();
  for (std::size_t i = 0; i < nodes.size(); ++i) rule->push_back({0.5 * (nodes[i] + 1.0), 0.5 * weights[i]});
  SmoothMap mi = ivq.map();
  const Vec b = base;
  FirstIntegral out;
  out.f = ScalarField::exact<2>(2, [mi, rule, b](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    const VecX<S> d = x - b.template cast<S>();
    S sum(0.0);
    for (const auto& [s, w] : *rule) {
      const VecX<S> y = b.template cast<S>() + s * d;
      sum += w * mi(t, y).dot(d);
    }
    return sum;
  });

  const double h = options.fd_step;
  const ScalarField lf = lie_derivative(v, out.f);
  for (const Vec& x : checks) {
    Vec grad(2);
    for (int a = 0; a < 2; ++a) {
      Vec xp = x, xm = x;
      xp(a) += h;
      xm(a) -= h;
      grad(a) = (out.f(0.0, xp) - out.f(0.0, xm)) / (2.0 * h);
    }
    out.differential_residual = std::max(out.differential_residual, (grad - ivq(0.0, x)).lpNorm<Eigen::Infinity>());
    out.lie_residual = std::max(out.lie_residual, std::abs(lf(0.0, x)));
  }
  return out;
}

DifferentialForm form_transport_family(const VectorField& v, const DifferentialForm& omega_hat, double t0,
                                       double step) {
  if (v.dim() != omega_hat.dim()) throw DimensionError("form transport: field and form dimensions differ");
  // x at time t is carried back to G^{t0}_t(x); omega_hat is read at t0.
  const SmoothMap back = SmoothMap::exact<2>(v.dim(), v.dim(), [v, t0, step](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    return rk4_integrate<S>(field_rhs(v), t, S(t0), VecX<S>(x), step);
  });
  SmoothMap mo = omega_hat.map();
  const DifferentialForm frozen(omega_hat.dim(), omega_hat.degree(),
                                SmoothMap::exact(omega_hat.dim(), omega_hat.size(), [mo, t0](const auto& t, const auto& x) {
                                  using S = std::decay_t<decltype(t)>;
                                  return mo(S(t0), x);
                                }));
  return pullback(back, frozen);
}

DifferentialForm solve_form_transport(const VectorField& v, const DifferentialForm& omega_hat, double t0, double t,
                                      double step) {
  SmoothMap family = form_transport_family(v, omega_hat, t0, step).map();
  return DifferentialForm(omega_hat.dim(), omega_hat.degree(),
                          SmoothMap::exact<2>(omega_hat.dim(), omega_hat.size(), [family, t](const auto& s, const auto& x) {
                            using S = std::decay_t<decltype(s)>;
                            return family(S(t), x);
                          }));
}

double transport_pde_residual(const VectorField& v, const DifferentialForm& omega, const std::vector<Vec>& samples,
                              double t) {
  const DifferentialForm r = time_derivative(omega) + lie_derivative(v, omega);
  std::vector<double> res(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { res[i] = coefficient_norm(r, t, samples[i]); });
  return residual_stats(res).max;
}

double mixed_form_residual(const VectorField& v, const DifferentialForm& mu_plus, const DifferentialForm& mu_minus,
                           const std::vector<Vec>& extended_samples) {
  const int m = v.dim();
  if (mu_plus.dim() != m || mu_minus.dim() != m) throw DimensionError("mixed form: chart dimensions differ");
  if (mu_plus.degree() < 1 || mu_minus.degree() + 1 != mu_plus.degree())
    throw DegreeError("mixed form needs deg mu_minus = deg mu_plus - 1 >= 0");
  const VectorField extended = extend_to_autonomous(v);
  const DifferentialForm mu = to_extended(mu_plus) + dt_wedge(mu_minus);
  const DifferentialForm lhs = lie_derivative(extended, mu);

  SmoothMap mv = v.map();
  const VectorField dv_dt(SmoothMap::exact<2>(m, m, [mv](const auto& t, const auto& x) { return time_partial(mv, t, x); }),
                          true);
  const DifferentialForm rhs =
      to_extended(time_derivative(mu_plus) + lie_derivative(v, mu_plus)) +
      dt_wedge(interior_product(dv_dt, mu_plus) + time_derivative(mu_minus) + lie_derivative(v, mu_minus));
  const DifferentialForm diff = lhs - rhs;
  std::vector<double> res(extended_samples.size());
  parallel_for(extended_samples.size(), [&](std::size_t i) {
    if (extended_samples[i].size() != m + 1) throw DimensionError("mixed form samples live on (t, x)");
    res[i] = coefficient_norm(diff, 0.0, extended_samples[i]);
  });
  return residual_stats(res).max;
}

}  // namespace intinv
