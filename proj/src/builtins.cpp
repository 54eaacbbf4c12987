#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "intinv/eikonal.hpp"
#include "intinv/fluid.hpp"
#include "intinv/hj.hpp"
#include "scenario_internal.hpp"

namespace intinv::detail {

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

std::vector<Vec> box_points(int count, int dim, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec x(dim);
    for (int j = 0; j < dim; ++j) x(j) = u(rng);
    out.push_back(x);
  }
  return out;
}

std::vector<double> uniform_grid(double t0, double t1, int n) {
  std::vector<double> out;
  for (int i = 0; i <= n; ++i) out.push_back(t0 + (t1 - t0) * i / n);
  return out;
}

std::vector<double> times_or(const ResolvedSettings& rs, std::vector<double> fallback) {
  return rs.times ? *rs.times : std::move(fallback);
}

SweepSettings sweep_of(const ResolvedSettings& rs) {
  SweepSettings s;
  s.quadrature = rs.quadrature;
  s.step = rs.step;
  return s;
}

TransportOptions transport_of(const ResolvedSettings& rs) {
  TransportOptions o;
  o.sweep = sweep_of(rs);
  return o;
}

ScenarioOutcome from_drift(const DriftSeries& s) {
  ScenarioOutcome out;
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    out.rows.push_back({s.times[i], s.values[i], s.drift[i], std::abs(s.drift[i])});
    out.residuals.push_back(std::abs(s.drift[i]));
  }
  out.metric = s.times.empty() ? 0.0 : s.max_drift();
  out.tolerance = s.tolerance;
  return out;
}

/// One row per (t, residual); the metric is the largest residual.
ScenarioOutcome from_residuals(const std::vector<std::pair<double, double>>& rows, double tolerance) {
  ScenarioOutcome out;
  for (const auto& [t, r] : rows) {
    out.rows.push_back({t, r, 0.0, r});
    out.residuals.push_back(r);
    out.metric = std::max(out.metric, r);
  }
  out.tolerance = tolerance;
  return out;
}

ScenarioOutcome single_residual(double t, double r, double tolerance) { return from_residuals({{t, r}}, tolerance); }

// ---- systems ------------------------------------------------------------------------

VectorField rotation2() {
  return VectorField::exact(2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << -x(1), x(0);
    return r;
  });
}

VectorField stretch2() {
  return VectorField::exact(2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << x(0), S(0.0);
    return r;
  });
}

VectorField oscillator_field() {
  return VectorField::exact(2, [](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << z(1), -z(0);
    return r;
  });
}

VectorField pendulum_field() {
  return VectorField::exact(2, [](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << z(1), -sin(z(0));
    return r;
  });
}

VectorField driven_field() {
  return VectorField::exact(
      2,
      [](const auto& t, const auto& z) {
        using S = std::decay_t<decltype(t)>;
        VecX<S> r(2);
        r << z(1), -z(0) + 0.5 * cos(1.3 * t);
        return r;
      },
      true);
}

VectorField shear_field() {
  return VectorField::exact(2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << x(1) * x(1), sin(x(0));
    return r;
  });
}

/// Rigid rotation x -> Omega x x with Omega = (0.3, -0.2, 1.0).
const Vec& rigid_omega() {
  static const Vec w = vec({0.3, -0.2, 1.0});
  return w;
}

VectorField rotation3() {
  return VectorField::exact(3, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    const Vec& w = rigid_omega();
    VecX<S> v(3);
    v << w(1) * x(2) - w(2) * x(1), w(2) * x(0) - w(0) * x(2), w(0) * x(1) - w(1) * x(0);
    return v;
  });
}

VectorField abc_flow() {
  return VectorField::exact(3, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> v(3);
    v << sin(x(2)) + cos(x(1)), sin(x(0)) + cos(x(2)), sin(x(1)) + cos(x(0));
    return v;
  });
}

const DifferentialForm& area2() {
  static const DifferentialForm a = DifferentialForm::basis(2, {0, 1});
  return a;
}

DifferentialForm zeta2() {
  return DifferentialForm::exact(2, 1, [](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << z(1), S(0.0);
    return c;
  });
}

Hamiltonian oscillator_h() {
  return Hamiltonian::exact(1, [](const auto&, const auto& z) { return 0.5 * (z(0) * z(0) + z(1) * z(1)); });
}

Hamiltonian pendulum_h() {
  return Hamiltonian::exact(1, [](const auto&, const auto& z) { return 0.5 * z(1) * z(1) - cos(z(0)); });
}

Hamiltonian driven_h() {
  return Hamiltonian::exact(
      1, [](const auto& t, const auto& z) { return 0.5 * (z(0) * z(0) + z(1) * z(1)) - 0.3 * z(0) * sin(2.0 * t); },
      false);
}

Hamiltonian two_oscillators_h() {
  return Hamiltonian::exact(2, [](const auto&, const auto& z) {
    return 0.5 * (z(2) * z(2) + z(0) * z(0)) + 0.5 * (z(3) * z(3) + 2.0 * z(1) * z(1));
  });
}

Hamiltonian free_h() {
  return Hamiltonian::exact(1, [](const auto&, const auto& z) { return 0.5 * z(1) * z(1); });
}

// ---- exterior calculus and flows ------------------------------------------------------

ScenarioOutcome lie_cross(const VectorField& v, const DifferentialForm& omega, double t, const ResolvedSettings& rs,
                          unsigned seed) {
  LieOptions fd;
  fd.mode = LieMode::flow_fd;
  const DifferentialForm a = lie_derivative(v, omega);
  const DifferentialForm b = lie_derivative(v, omega, fd);
  const auto samples = box_points(100, v.dim(), -1.0, 1.0, seed);
  std::vector<double> res(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    res[i] = (a(t, samples[i]) - b(t, samples[i])).lpNorm<Eigen::Infinity>();
  });
  ScenarioOutcome out = single_residual(t, *std::max_element(res.begin(), res.end()), rs.tolerance.value_or(1e-5));
  out.residuals = res;
  return out;
}

ScenarioOutcome run_lie_rotation(const ScenarioConfig&, const ResolvedSettings& rs) {
  const auto omega = DifferentialForm::exact(2, 2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    return VecX<S>(VecX<S>::Constant(1, 1.0 + x(0) * x(0)));
  });
  return lie_cross(rotation2(), omega, 0.0, rs, 101);
}

ScenarioOutcome run_lie_pendulum(const ScenarioConfig&, const ResolvedSettings& rs) {
  return lie_cross(pendulum_field(), zeta2(), 0.0, rs, 102);
}

ScenarioOutcome run_lie_shear(const ScenarioConfig&, const ResolvedSettings& rs) {
  const auto omega = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << sin(x(1)), x(0) * x(0);
    return c;
  });
  return lie_cross(shear_field(), omega, 0.0, rs, 103);
}

ScenarioOutcome run_lie_rotation3(const ScenarioConfig&, const ResolvedSettings& rs) {
  const VectorField a = VectorField::exact(3, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> v(3);
    v << x(0) * x(1), x(2), x(0) * x(0);
    return v;
  });
  return lie_cross(rotation3(), vector_to_form(a, 2), 0.0, rs, 104);
}

ScenarioOutcome run_lie_driven(const ScenarioConfig&, const ResolvedSettings& rs) {
  const auto omega = DifferentialForm::exact(2, 1, [](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << z(1) * cos(t), z(0) * z(1) + t;
    return c;
  });
  return lie_cross(driven_field(), omega, 0.7, rs, 105);
}

ScenarioOutcome run_commutator(const ScenarioConfig&, const ResolvedSettings& rs) {
  const VectorField u = abc_flow(), v = rotation3();
  const DifferentialForm omega = vector_to_form(VectorField::exact(3,
                                                                   [](const auto& t, const auto& x) {
                                                                     using S = std::decay_t<decltype(t)>;
                                                                     VecX<S> c(3);
                                                                     c << x(1) * x(2), sin(x(0)), x(0) + x(2) * x(2);
                                                                     return c;
                                                                   }),
                                                2);
  const DifferentialForm lhs =
      lie_derivative(u, interior_product(v, omega)) - interior_product(v, lie_derivative(u, omega));
  // commutator(a, b) = (da) b - (db) a, so the Lie bracket [u, v] is commutator(v, u).
  const DifferentialForm rhs = interior_product(commutator(v, u), omega);
  std::vector<double> res;
  for (const Vec& x : box_points(50, 3, -1.0, 1.0, 106)) res.push_back(coefficient_norm(lhs - rhs, 0.0, x));
  ScenarioOutcome out = single_residual(0.0, *std::max_element(res.begin(), res.end()), rs.tolerance.value_or(1e-6));
  out.residuals = res;
  return out;
}

ScenarioOutcome run_group_law(const ScenarioConfig&, const ResolvedSettings& rs) {
  const VectorField v = pendulum_field();
  const Vec x = vec({1.0, 0.5});
  const double t1 = 1.3, t = 2.7;
  const Vec split = flow_point(v, flow_point(v, x, 0.0, t1, rs.step), t1, t, rs.step);
  const double r = (split - flow_point(v, x, 0.0, t, rs.step)).norm();
  return single_residual(t, r, 10.0 * std::pow(rs.step, 4) * t);
}

ScenarioOutcome run_volume_det(const ScenarioConfig&, const ResolvedSettings& rs) {
  const auto times = times_or(rs, uniform_grid(0.0, 2.0 * kPi, 8));
  const auto flows = flow_with_tangents(abc_flow(), vec({0.3, -0.2, 0.5}), Mat::Identity(3, 3), 0.0, times, rs.step);
  ScenarioOutcome out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double det = flows[i].tangents.determinant();
    out.rows.push_back({times[i], det, det - 1.0, std::abs(det - 1.0)});
    out.residuals.push_back(std::abs(det - 1.0));
    out.metric = std::max(out.metric, std::abs(det - 1.0));
  }
  out.tolerance = 1e-6;
  return out;
}

ScenarioOutcome run_extended_flow(const ScenarioConfig&, const ResolvedSettings& rs) {
  const VectorField v = driven_field();
  const VectorField ext = extend_to_autonomous(v);
  const double t0 = 0.4;
  const Vec x0 = vec({0.3, -0.5});
  Vec y0(3);
  y0 << t0, x0;
  std::vector<std::pair<double, double>> rows;
  for (double tau : times_or(rs, {0.5, 1.0, 2.0, 3.0})) {
    const Vec a = flow_point(ext, y0, 0.0, tau, rs.step);
    const Vec b = flow_point(v, x0, t0, t0 + tau, rs.step);
    rows.push_back({tau, std::max(std::abs(a(0) - t0 - tau), (a.tail(2) - b).lpNorm<Eigen::Infinity>())});
  }
  return from_residuals(rows, 1e-8);
}

ScenarioOutcome run_stokes(const ScenarioConfig&, const ResolvedSettings& rs) {
  const auto omega = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << -x(1) * x(1) * x(0), sin(x(0)) + x(1);
    return c;
  });
  // The default 5x4 rule leaves ~1e-6 on the boundary circle; 8 panels reach 1e-11.
  return single_residual(0.0, stokes_residual(omega, disk(vec({0.2, -0.1}), 0.7), rs.quadrature), 1e-6);
}

// ---- integral invariants -----------------------------------------------------------

ScenarioOutcome pointwise(const VectorField& v, const DifferentialForm& omega, int dim, unsigned seed, double tol,
                          const std::optional<DifferentialForm>& potential = std::nullopt, double t = 0.0) {
  const auto report = check_pointwise_invariance(v, omega, box_points(50, dim, -2.0, 2.0, seed), t, potential);
  ScenarioOutcome out = single_residual(t, report.residuals.max, tol);
  return out;
}

ScenarioOutcome run_rotation_area_pointwise(const ScenarioConfig&, const ResolvedSettings&) {
  return pointwise(rotation2(), area2(), 2, 201, 1e-8);
}

ScenarioOutcome run_stretch_area_pointwise(const ScenarioConfig&, const ResolvedSettings&) {
  return pointwise(stretch2(), area2(), 2, 202, 1e-8);
}

ScenarioOutcome run_pendulum_zeta_relative(const ScenarioConfig&, const ResolvedSettings&) {
  const auto potential = DifferentialForm::function(ScalarField::exact(2, [](const auto&, const auto& z) {
    return 0.5 * z(1) * z(1) + cos(z(0));
  }));
  return pointwise(pendulum_field(), zeta2(), 2, 203, 1e-8, potential);
}

ScenarioOutcome run_driven_dt(const ScenarioConfig&, const ResolvedSettings&) {
  return pointwise(extend_to_autonomous(driven_field()), dt_form(3), 3, 204, 1e-8);
}

ScenarioOutcome run_oscillator_disk(const ScenarioConfig&, const ResolvedSettings& rs) {
  return from_drift(check_transport_invariance(oscillator_field(), area2(), Chain(disk(vec({0.4, -0.2}), 0.5)), 0.0,
                                               times_or(rs, uniform_grid(0.0, 2.0 * kPi, 8)), TransportKind::absolute,
                                               transport_of(rs)));
}

ScenarioOutcome run_pendulum_area(const ScenarioConfig&, const ResolvedSettings& rs) {
  return from_drift(check_transport_invariance(pendulum_field(), area2(), Chain(box(vec({0.2, -0.3}), vec({0.6, 0.5}), 2)),
                                               0.0, times_or(rs, uniform_grid(0.0, 3.0, 6)), TransportKind::absolute,
                                               transport_of(rs)));
}

ScenarioOutcome run_stretch_square(const ScenarioConfig&, const ResolvedSettings& rs) {
  return from_drift(check_transport_invariance(stretch2(), area2(), Chain(box(vec({0.0, 0.0}), vec({1.0, 1.0}), 2)), 0.0,
                                               times_or(rs, {0.0, 0.5, 1.0}), TransportKind::absolute,
                                               transport_of(rs)));
}

ScenarioOutcome run_shear_circulation(const ScenarioConfig&, const ResolvedSettings& rs) {
  // p dx is only a relative invariant of the pendulum; over a closed curve its integral is conserved.
  return from_drift(check_transport_invariance(pendulum_field(), zeta2(), Chain(circle(vec({0.3, 0.1}), 0.6)), 0.0,
                                               times_or(rs, uniform_grid(0.0, 3.0, 6)),
                                               TransportKind::relative_closed, transport_of(rs)));
}

DifferentialForm extended_alpha_oscillator() {
  return DifferentialForm::exact(3, 1, [](const auto& t, const auto& y) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(3);
    c << -0.5 * (y(1) * y(1) + y(2) * y(2)), y(2), S(0.0);
    return c;
  });
}

ScenarioOutcome run_poincare_cartan_loop(const ScenarioConfig&, const ResolvedSettings& rs) {
  return from_drift(check_transport_invariance(extend_to_autonomous(oscillator_field()), extended_alpha_oscillator(),
                                               Chain(circle(vec({0.0, 0.3, 0.1}), 0.6, 1, 2)), 0.0,
                                               times_or(rs, {0.0, 0.7, 1.9, 3.0}), TransportKind::relative_closed,
                                               transport_of(rs)));
}

ScenarioOutcome run_poincare_cartan_open(const ScenarioConfig&, const ResolvedSettings& rs) {
  TransportOptions o = transport_of(rs);
  o.check_preconditions = false;
  return from_drift(check_transport_invariance(extend_to_autonomous(oscillator_field()), extended_alpha_oscillator(),
                                               Chain(segment(vec({0.0, 0.0, 0.0}), vec({0.0, 1.0, 1.0}))), 0.0,
                                               times_or(rs, {0.0, 1.0, 2.0}), TransportKind::relative_closed, o));
}

ScenarioOutcome run_driven_transported_form(const ScenarioConfig&, const ResolvedSettings& rs) {
  const auto omega_hat = DifferentialForm::exact(2, 1, [](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << sin(z(1)), z(0) * z(0);
    return c;
  });
  const VectorField v = driven_field();
  const DifferentialForm family = form_transport_family(v, omega_hat, 0.2, rs.step);
  return from_drift(check_transport_invariance(v, family, Chain(segment(vec({-0.3, 0.1}), vec({0.5, 0.6}))), 0.2,
                                               times_or(rs, {0.2, 0.8, 1.5}), TransportKind::nonautonomous,
                                               transport_of(rs)));
}

ScenarioOutcome run_transport_derivative(const ScenarioConfig&, const ResolvedSettings& rs) {
  const auto omega = DifferentialForm::exact(2, 1, [](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << z(1) * cos(t), z(0) * z(1) + t;
    return c;
  });
  const auto r = transport_derivative_check(driven_field(), omega, Chain(segment(vec({0.1, -0.4}), vec({0.7, 0.2}))),
                                            0.9, 1e-3, 0.3, sweep_of(rs));
  ScenarioOutcome out;
  out.rows.push_back({0.9, r.lhs, r.lhs - r.rhs, r.difference});
  out.residuals.push_back(r.difference);
  out.metric = r.difference;
  out.tolerance = 1e-6;
  return out;
}

ScenarioOutcome run_first_integral(const ScenarioConfig&, const ResolvedSettings&) {
  const FirstIntegral fi = first_integral_from_area_form(pendulum_field(), area2(), vec({0.0, 0.0}));
  return from_residuals({{0.0, fi.lie_residual}, {0.0, fi.differential_residual}}, 1e-6);
}

ScenarioOutcome run_form_transport_pde(const ScenarioConfig&, const ResolvedSettings& rs) {
  const auto omega_hat = ScalarField::exact(2, [](const auto&, const auto& x) { return x(0); }) *
                         DifferentialForm::basis(2, {1});
  const DifferentialForm family = form_transport_family(rotation2(), omega_hat, 0.0, rs.step);
  const auto samples = box_points(10, 2, -1.0, 1.0, 205);
  std::vector<std::pair<double, double>> rows;
  for (double t : times_or(rs, {0.3, 0.7})) rows.push_back({t, transport_pde_residual(rotation2(), family, samples, t)});
  return from_residuals(rows, 1e-5);
}

ScenarioOutcome run_mixed_form(const ScenarioConfig&, const ResolvedSettings&) {
  const VectorField v = VectorField::exact(
      2,
      [](const auto& t, const auto& x) {
        using S = std::decay_t<decltype(t)>;
        VecX<S> r(2);
        r << x(1) * sin(t), -x(0) + x(0) * x(0) * cos(2.0 * t);
        return r;
      },
      true);
  const auto mu_plus = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << x(1) * exp(0.2 * t), sin(x(0) * t);
    return c;
  });
  const auto mu_minus = DifferentialForm::function(
      ScalarField::exact(2, [](const auto& t, const auto& x) { return x(0) * x(1) + t * t; }));
  return single_residual(0.0, mixed_form_residual(v, mu_plus, mu_minus, box_points(25, 3, -1.0, 1.0, 206)), 1e-8);
}

// ---- Hamiltonian systems ------------------------------------------------------------

ScenarioOutcome symplectic(const Hamiltonian& h, const Vec& z0, double t, const ResolvedSettings& rs) {
  const auto r = symplecticity_residual(h, z0, 0.0, t, JacobianMethod::variational, rs.step);
  ScenarioOutcome out;
  out.rows.push_back({t, r.residual, 0.0, r.residual});
  out.rows.push_back({t, r.jacobian.determinant(), r.jacobian.determinant() - 1.0, r.det_residual});
  out.residuals = {r.residual, r.det_residual};
  out.metric = std::max(r.residual, r.det_residual);
  out.tolerance = 1e-6;
  return out;
}

ScenarioOutcome run_oscillator_symplectic(const ScenarioConfig&, const ResolvedSettings& rs) {
  return symplectic(oscillator_h(), vec({0.7, -0.2}), 2.0 * kPi, rs);
}

ScenarioOutcome run_pendulum_symplectic(const ScenarioConfig&, const ResolvedSettings& rs) {
  return symplectic(pendulum_h(), vec({1.0, 0.5}), 10.0, rs);
}

ScenarioOutcome run_two_oscillator_symplectic(const ScenarioConfig&, const ResolvedSettings& rs) {
  return symplectic(two_oscillators_h(), vec({0.3, -0.1, 0.2, 0.5}), 3.0, rs);
}

ScenarioOutcome run_characteristic(const ScenarioConfig&, const ResolvedSettings&) {
  const auto ext = box_points(30, 3, -1.5, 1.5, 301);
  return from_residuals({{0.0, characteristic_residual(driven_h(), ext)}, {0.0, characteristic_residual(pendulum_h(), ext)}},
                        1e-7);
}

ScenarioOutcome run_field_equation(const ScenarioConfig&, const ResolvedSettings&) {
  return single_residual(0.0, field_equation_residual(two_oscillators_h(), box_points(20, 4, -1.0, 1.0, 302)), 1e-7);
}

ScenarioOutcome run_relative_alpha(const ScenarioConfig&, const ResolvedSettings&) {
  return single_residual(0.0, relative_invariance_residual(driven_h(), box_points(30, 3, -1.5, 1.5, 303)), 1e-6);
}

ScenarioOutcome run_energy_drift(const ScenarioConfig&, const ResolvedSettings& rs) {
  const double t1 = 10.0;
  return single_residual(t1, energy_drift(pendulum_h(), vec({2.0, 0.3}), 0.0, t1, rs.step), 1e-6 * t1);
}

ScenarioOutcome run_oscillator_loop(const ScenarioConfig&, const ResolvedSettings& rs) {
  return from_drift(loop_action_drift(oscillator_h(), Chain(circle(vec({0.2, 0.1}), 0.6)), 0.0,
                                      times_or(rs, {0.0, 1.0, 2.5, 4.0}), LoopMode::closed_zeta, transport_of(rs)));
}

ScenarioOutcome run_driven_alpha_loop(const ScenarioConfig&, const ResolvedSettings& rs) {
  const Chain loop(SingularCube::from_map(SmoothMap::exact<1>(1, 3, [](const auto& t, const auto& s) {
    using S = std::decay_t<decltype(t)>;
    const S th = 2.0 * kPi * s(0);
    VecX<S> y(3);
    y << 0.3 * sin(th), 0.5 * cos(th), 0.4 * sin(th) + 0.1;
    return y;
  })));
  return from_drift(
      loop_action_drift(driven_h(), loop, 0.0, times_or(rs, {0.0, 1.0, 2.0}), LoopMode::extended_alpha, transport_of(rs)));
}

Hamiltonian abs_p_h() {
  return Hamiltonian::exact(1, [](const auto&, const auto& z) { return sqrt(z(1) * z(1)); }, true, true);
}

ScenarioOutcome run_homogeneous_open(const ScenarioConfig&, const ResolvedSettings& rs) {
  return from_drift(loop_action_drift(abs_p_h(), Chain(segment(vec({-0.5, 0.5}), vec({0.7, 1.5}))), 0.0,
                                      times_or(rs, {0.0, 0.5, 1.0, 3.0}), LoopMode::homogeneous_open, transport_of(rs)));
}

ScenarioOutcome run_pendulum_open_curve(const ScenarioConfig&, const ResolvedSettings& rs) {
  TransportOptions o = transport_of(rs);
  o.check_preconditions = false;
  return from_drift(loop_action_drift(pendulum_h(), Chain(segment(vec({-0.5, 0.5}), vec({0.7, 1.5}))), 0.0,
                                      times_or(rs, {0.0, 1.0, 2.0}), LoopMode::closed_zeta, o));
}

ScenarioOutcome run_gauss_relation(const ScenarioConfig&, const ResolvedSettings& rs) {
  const auto polar = Hamiltonian::exact(
      2, [](const auto&, const auto& z) { return sqrt(z(2) * z(2) + z(3) * z(3) / (z(0) * z(0))); }, true, true);
  GaussSettings g;
  g.h_fd = rs.h_fd;
  g.step = rs.step;
  std::vector<std::pair<double, double>> rows;
  for (double t : times_or(rs, {0.5, 1.0}))
    rows.push_back({t, gauss_relation_residual(polar, vec({1.0, 0.3}), vec({0.5, 0.7}), t, g)});
  return from_residuals(rows, 1e-5);
}

ScenarioOutcome run_reduction(const ScenarioConfig&, const ResolvedSettings& rs) {
  const double h = 1.0;
  const Vec seed = vec({-0.6, 0.3, std::sqrt(2 * h - 0.36 - 0.09 - 0.16), 0.4});
  const ReductionComparison cmp = compare_reduction(two_oscillators_h(), seed, kPi / 2, 40, {}, rs.step);
  return single_residual(kPi / 2, cmp.sup_error, 1e-5);
}

SectionSpec oscillator_section(double energy) {
  SectionSpec s;
  s.energy = energy;
  s.function = ScalarField::exact(4, [](const auto&, const auto& z) { return z(1); });
  s.direction = 1;
  s.chart = SmoothMap::exact(2, 4, [energy](const auto& t, const auto& c) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> z(4);
    z << c(0), S(0.0), c(1), sqrt(2.0 * energy - c(0) * c(0) - c(1) * c(1));
    return z;
  });
  s.coordinates = [](const Vec& z) { return vec({z(0), z(2)}); };
  return s;
}

ScenarioOutcome run_section_rotation(const ScenarioConfig&, const ResolvedSettings& rs) {
  const SectionSpec section = oscillator_section(1.0);
  const Vec c0 = vec({0.5, 0.3});
  const ReturnMap q = poincare_return_map(two_oscillators_h(), section, section.chart(0.0, c0), rs.step, rs.h_fd);
  const double tau = 2 * kPi / std::sqrt(2.0);
  Mat rot(2, 2);
  rot << std::cos(tau), std::sin(tau), -std::sin(tau), std::cos(tau);
  return from_residuals({{q.return_time, (q.image_coordinates - rot * c0).lpNorm<Eigen::Infinity>()},
                         {q.return_time, (q.jacobian - rot).lpNorm<Eigen::Infinity>()},
                         {q.return_time, std::abs(q.return_time - tau)}},
                        1e-6);
}

ScenarioOutcome run_section_symplectic(const ScenarioConfig&, const ResolvedSettings& rs) {
  const SectionSpec section = oscillator_section(1.0);
  const Vec c0 = vec({0.5, 0.3});
  const ReturnMap q = poincare_return_map(two_oscillators_h(), section, section.chart(0.0, c0), rs.step, rs.h_fd);
  double min_det = INFINITY;
  for (const Vec& c : box_points(10, 2, -0.6, 0.6, 304))
    min_det = std::min(min_det, std::abs(restricted_form_matrix(section, c).determinant()));
  if (!(min_det > 1e-6)) throw DegeneracyError("restricted form degenerates on the section");
  return single_residual(q.return_time, section_symplecticity_residual(section, c0, q), 1e-5);
}

// ---- Hamilton-Jacobi -------------------------------------------------------------------

HJProblem transport_problem(double c) {
  return HJProblem::exact(
      1, [c](const auto&, const auto&, const auto&, const auto& p) { return c * p(0); },
      [](const auto& x) { return sin(x(0)) + 0.25 * x(0) * x(0); }, vec({-2.0}), vec({2.0}));
}

HJProblem quadratic_problem(double sign) {
  return HJProblem::exact(
      1, [](const auto&, const auto&, const auto&, const auto& p) { return 0.5 * p(0) * p(0); },
      [sign](const auto& x) { return sign * 0.5 * x(0) * x(0); }, vec({-1.0}), vec({1.0}));
}

ScenarioOutcome run_hj_transport(const ScenarioConfig&, const ResolvedSettings& rs) {
  const double c = 0.7;
  HJProblem prob = transport_problem(c);
  prob.step = rs.step;
  const auto times = times_or(rs, {0.5, 1.0});
  const CharacteristicFan fan = CharacteristicFan::build(prob, times);
  std::vector<std::pair<double, double>> rows;
  for (double t : times) {
    double worst = 0.0;
    for (double x : {-0.5, -0.1, 0.2, 0.5}) {
      const CauchySolution s = solve_cauchy_characteristics(prob, fan, t, vec({x}));
      const double y = x - c * t;
      worst = std::max({worst, std::abs(s.u - (std::sin(y) + 0.25 * y * y)), std::abs(s.grad(0) - (std::cos(y) + 0.5 * y))});
    }
    rows.push_back({t, worst});
  }
  return from_residuals(rows, 1e-8);
}

ScenarioOutcome run_hj_quadratic(const ScenarioConfig&, const ResolvedSettings& rs) {
  HJProblem prob = quadratic_problem(1.0);
  prob.step = rs.step;
  const auto times = times_or(rs, {0.5, 1.0});
  const CharacteristicFan fan = CharacteristicFan::build(prob, times);
  std::vector<std::pair<double, double>> rows;
  for (double t : times) {
    double worst = 0.0;
    for (double x : {-1.5, -0.4, 0.3, 1.2}) {
      const CauchySolution s = solve_cauchy_characteristics(prob, fan, t, vec({x}));
      worst = std::max({worst, std::abs(s.u - x * x / (2.0 * (1.0 + t))), std::abs(s.grad(0) - x / (1.0 + t))});
    }
    rows.push_back({t, worst});
  }
  return from_residuals(rows, 1e-7);
}

ScenarioOutcome run_hj_caustic(const ScenarioConfig&, const ResolvedSettings& rs) {
  HJProblem prob = quadratic_problem(-1.0);
  prob.step = rs.step;
  const double t = times_or(rs, {1.5}).back();
  try {
    CharacteristicFan::build(prob, {t});
  } catch (const CausticError& e) {
    return single_residual(e.singular_time(), std::abs(e.singular_time() - 1.0), 1e-6);
  }
  // No caustic where one must appear.
  return single_residual(t, INFINITY, 1e-6);
}

ScenarioOutcome run_hj_graph(const ScenarioConfig&, const ResolvedSettings& rs) {
  HJProblem prob = quadratic_problem(1.0);
  prob.step = rs.step;
  const CharacteristicFan fan = CharacteristicFan::build(prob, times_or(rs, {0.25, 0.75}));
  return from_residuals({{0.75, graph_invariance_residual(prob, fan, 12, rs.h_fd)},
                         {0.5, graph_loop_residual(prob, fan, 0.5, vec({0.3}), 0.2)}},
                        1e-5);
}

ScenarioOutcome run_hj_action(const ScenarioConfig&, const ResolvedSettings& rs) {
  const double b = 0.7;
  const ScalarField s = ScalarField::exact(1, [b](const auto& t, const auto& x) { return b * x(0) - 0.5 * b * b * t; });
  return single_residual(1.5, action_increment_check(free_h(), s, vec({0.2}), 0.0, 1.5, rs.step), 1e-8);
}

// ---- canonical transformations ----------------------------------------------------------

ScenarioOutcome run_s2_identity(const ScenarioConfig&, const ResolvedSettings&) {
  const CanonicalMap m = build_canonical_map(GeneratingFunction::exact(
      GeneratingKind::s2, 2, [](const auto&, const auto& x, const auto& big_p) { return x.dot(big_p); }));
  double worst = 0.0;
  const auto pts = box_points(6, 4, -1.0, 1.0, 401);
  for (const Vec& z : pts) worst = std::max(worst, (m.forward(0.0, z) - z).lpNorm<Eigen::Infinity>());
  return from_residuals({{0.0, worst}, {0.0, m.round_trip_residual(pts)}}, 1e-10);
}

ScenarioOutcome run_flow_canonicality(const ScenarioConfig&, const ResolvedSettings& rs) {
  const VectorField v = hamiltonian_field(pendulum_h());
  const double step = rs.step;
  const auto pts = box_points(5, 2, -0.8, 0.8, 402);
  return single_residual(
      1.0, canonicality_residual([&v, step](const Vec& z) { return flow_point(v, z, 0.0, 1.0, step); }, pts, rs.h_fd),
      1e-6);
}

ScenarioOutcome run_transform_match(const ScenarioConfig&, const ResolvedSettings& rs) {
  const double c = 0.4;
  const CanonicalMap ms = build_canonical_map(GeneratingFunction::exact(
      GeneratingKind::s2, 1, [c](const auto& t, const auto& x, const auto& big_p) { return big_p(0) * (x(0) + c * t); },
      true));
  const Hamiltonian ks = transform_hamiltonian(ms, free_h());
  const CanonicalMap ex = build_canonical_map(GeneratingFunction::exact(
      GeneratingKind::s1, 1, [](const auto&, const auto& x, const auto& big_x) { return x(0) * big_x(0); }));
  const Hamiltonian kx = transform_hamiltonian(ex, oscillator_h());
  const auto times = times_or(rs, {0.5, 1.0, 2.0});
  return from_residuals({{times.back(), trajectory_match(ms, free_h(), ks, vec({0.1, 0.5}), 0.0, times, rs.step)},
                         {times.back(), trajectory_match(ex, oscillator_h(), kx, vec({0.3, -0.4}), 0.0, times, rs.step)}},
                        1e-5);
}

ScenarioOutcome run_straightening(const ScenarioConfig&, const ResolvedSettings& rs) {
  const Hamiltonian h = oscillator_h();
  const Straightening s = straighten_hamiltonian(h, vec({0.0, 1.0}));
  std::vector<std::pair<double, double>> rows;
  for (const Vec& d : box_points(3, 2, -0.05, 0.05, 403)) {
    const auto r = straightened_flow_residual(s, h, vec({d(0), 1.0 + d(1)}), 0.0, times_or(rs, {-0.3, -0.1, 0.1, 0.3}),
                                              rs.step);
    rows.push_back({0.3, std::max({r.x_drift, r.p1_drift, r.p_rest_drift})});
  }
  return from_residuals(rows, 1e-5);
}

ScenarioOutcome complete(const CompleteIntegral& s, const Hamiltonian& h, const Vec& z0, const std::vector<double>& times,
                         const Vec& b_guess, const ResolvedSettings& rs) {
  CompleteIntegralOptions o;
  o.step = rs.step;
  const auto r = integrate_via_complete_integral(s, h, z0, 0.0, times, b_guess, o);
  return single_residual(times.back(), r.match_error, 1e-6);
}

ScenarioOutcome run_ci_free(const ScenarioConfig&, const ResolvedSettings& rs) {
  const CompleteIntegral s = CompleteIntegral::exact(
      1, [](const auto& t, const auto& x, const auto& b) { return b(0) * x(0) - 0.5 * b(0) * b(0) * t; });
  return complete(s, free_h(), vec({0.2, 0.7}), times_or(rs, {0.5, 1.0, 2.0}), vec({0.0}), rs);
}

ScenarioOutcome run_ci_linear(const ScenarioConfig&, const ResolvedSettings& rs) {
  const Hamiltonian h = Hamiltonian::exact(1, [](const auto&, const auto& z) { return 0.5 * z(1) * z(1) + z(0); });
  const CompleteIntegral s = CompleteIntegral::exact(1, [](const auto& t, const auto& x, const auto& b) {
    const auto w = b(0) - t;
    return x(0) * w + (w * w * w - b(0) * b(0) * b(0)) / 6.0;
  });
  return complete(s, h, vec({0.1, 0.5}), times_or(rs, {0.4, 0.8, 1.5}), vec({0.0}), rs);
}

ScenarioOutcome run_ci_oscillator(const ScenarioConfig&, const ResolvedSettings& rs) {
  const double w2 = std::sqrt(2.0);
  const CompleteIntegral s = CompleteIntegral::exact(2, [w2](const auto& t, const auto& x, const auto& e) {
    auto part = [](const auto& xk, const auto& ek, double w) {
      return 0.5 * xk * sqrt(2.0 * ek - w * w * xk * xk) + (ek / w) * asin(w * xk / sqrt(2.0 * ek));
    };
    return part(x(0), e(0), 1.0) + part(x(1), e(1), w2) - (e(0) + e(1)) * t;
  });
  Vec z0(4);
  z0 << std::sin(-0.5), 0.5 * std::sin(-0.8), std::cos(-0.5), 0.5 * w2 * std::cos(-0.8);
  return complete(s, two_oscillators_h(), z0, times_or(rs, {0.3, 0.6, 0.9, 1.2}), vec({0.4, 0.2}), rs);
}

// ---- eikonal and geodesics -------------------------------------------------------------

Metric conformal_metric() {
  return Metric::exact(2, [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    const S w = exp(0.6 * x(0) + 0.4 * x(1));
    MatX<S> g = MatX<S>::Zero(2, 2);
    g(0, 0) = w;
    g(1, 1) = w;
    return g;
  });
}

HypersurfacePatch unit_circle_patch() {
  return HypersurfacePatch::exact(
      2,
      [](const auto& u) {
        using S = typename std::decay_t<decltype(u)>::Scalar;
        VecX<S> x(2);
        x << cos(2.0 * kPi * u(0)), sin(2.0 * kPi * u(0));
        return x;
      },
      1, true);
}

/// Euclidean normal geodesics are straight lines, so a coarse RK4 step is exact.
EikonalField circle_field() {
  EikonalOptions o;
  o.step = 1e-2;
  return eikonal_from_surface(Metric::euclidean(2), unit_circle_patch(), 1, o);
}

std::vector<Vec> annulus(int count, double r0, double r1, unsigned seed) {
  std::vector<Vec> out;
  for (const Vec& q : box_points(count, 2, 0.0, 1.0, seed)) {
    const double r = r0 + (r1 - r0) * q(0), th = 2.0 * kPi * q(1);
    out.push_back(vec({r * std::cos(th), r * std::sin(th)}));
  }
  return out;
}

ScenarioOutcome run_eikonal_distance(const ScenarioConfig&, const ResolvedSettings&) {
  const EikonalField f = circle_field();
  const auto pts = annulus(40, 1.05, 1.95, 501);
  std::vector<double> err(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { err[i] = std::abs(f(pts[i]) - (pts[i].norm() - 1.0)); });
  ScenarioOutcome out = single_residual(0.0, *std::max_element(err.begin(), err.end()), 1e-6);
  out.residuals = err;
  return out;
}

ScenarioOutcome run_eikonal_residuals(const ScenarioConfig&, const ResolvedSettings& rs) {
  const EikonalField f = circle_field();
  const auto r = eikonal_residual(Metric::euclidean(2), [&f](const Vec& x) { return f(x); }, f, annulus(12, 1.1, 1.9, 502),
                                  rs.h_fd);
  return from_residuals({{0.0, r.norm}, {0.0, r.orthogonality}}, 1e-5);
}

ScenarioOutcome run_gradient_flow(const ScenarioConfig&, const ResolvedSettings& rs) {
  const EikonalField f = circle_field();
  const auto c = gradient_flow_check(Metric::euclidean(2), [&f](const Vec& x) { return f(x); }, vec({1.1, 0.3}), 0.5, 1e-2,
                                     rs.h_fd);
  return from_residuals({{0.5, c.sup_distance}, {0.5, c.arc_length}}, 1e-6);
}

ScenarioOutcome gauss_lemma(const Metric& g, const Vec& x0, double tau, const ResolvedSettings& rs) {
  return single_residual(tau, gauss_lemma_residual(g, x0, tau, 16, JacobianMethod::finite_difference, rs.h_fd, rs.step),
                         1e-5);
}

ScenarioOutcome run_gauss_lemma_euclidean(const ScenarioConfig&, const ResolvedSettings& rs) {
  return gauss_lemma(Metric::euclidean(2), vec({0.1, 0.2}), 0.8, rs);
}

ScenarioOutcome run_gauss_lemma_polar(const ScenarioConfig&, const ResolvedSettings& rs) {
  return gauss_lemma(Metric::polar(), vec({1.0, 0.3}), 0.5, rs);
}

ScenarioOutcome run_gauss_lemma_conformal(const ScenarioConfig&, const ResolvedSettings& rs) {
  return gauss_lemma(conformal_metric(), vec({0.0, 0.0}), 0.7, rs);
}

ScenarioOutcome run_geodesic_speed(const ScenarioConfig&, const ResolvedSettings& rs) {
  const double a = speed_drift(Metric::polar(), geodesic_shoot(Metric::polar(), vec({1.0, 0.0}), vec({0.3, 0.7}), 2.0, rs.step));
  const double b =
      speed_drift(conformal_metric(), geodesic_shoot(conformal_metric(), vec({0.1, 0.2}), vec({1.0, -0.5}), 2.0, rs.step));
  return from_residuals({{2.0, a}, {2.0, b}}, 1e-7);
}

ScenarioOutcome run_homogeneous_geodesic(const ScenarioConfig&, const ResolvedSettings& rs) {
  return single_residual(
      1.5, homogeneous_geodesic_distance(Metric::polar(), vec({1.0, 0.2}), vec({0.4, 0.9}), 1.5, rs.step), 1e-6);
}

// ---- fluids ------------------------------------------------------------------------------

VectorField poly_field3(unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec c0(3);
  Mat lin(3, 3), tlin(3, 3);
  std::vector<Mat> quad(3, Mat(3, 3));
  for (int i = 0; i < 3; ++i) c0(i) = u(rng);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      lin(i, j) = u(rng);
      tlin(i, j) = u(rng);
      for (Mat& q : quad) q(i, j) = u(rng);
    }
  return VectorField::exact(
      3,
      [=](const auto& t, const auto& x) {
        using S = std::decay_t<decltype(t)>;
        VecX<S> out = c0.cast<S>() + lin.cast<S>() * x + t * (tlin.cast<S>() * x);
        for (int i = 0; i < 3; ++i) out(i) += x.dot(quad[i].cast<S>() * x);
        return out;
      },
      true);
}

ScalarField poly_density() {
  return ScalarField::exact(3, [](const auto& t, const auto& x) {
    return 1.0 + 0.3 * x(0) * x(1) - 0.2 * x(2) * x(2) + t * x(0) + 0.1 * t * t;
  });
}

ScenarioOutcome run_fluid_lie_formulas(const ScenarioConfig&, const ResolvedSettings&) {
  const VectorField v = poly_field3(11), a = poly_field3(12);
  const auto samples = box_points(20, 3, -1.0, 1.0, 601);
  return from_residuals({{0.7, lie_formula_check(v, a, 1, samples, 0.7)},
                         {0.7, lie_formula_check(v, a, 2, samples, 0.7)},
                         {0.7, lie_formula_check(v, poly_density(), samples, 0.7)}},
                        1e-6);
}

ScenarioOutcome run_fluid_vector_identity(const ScenarioConfig&, const ResolvedSettings&) {
  const auto samples = box_points(20, 3, -1.0, 1.0, 602);
  const VectorField swirl = VectorField::exact(3, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> v(3);
    v << -x(1), x(0), S(0.0);
    return v;
  });
  return from_residuals({{0.0, vector_identity_check(swirl, VectorField::constant(vec({0, 0, 1})), samples)},
                         {0.5, vector_identity_check(poly_field3(8), poly_field3(9), samples, 0.5)}},
                        1e-6);
}

ScenarioOutcome run_fluid_bridge(const ScenarioConfig&, const ResolvedSettings&) {
  const auto samples = box_points(20, 3, -1.0, 1.0, 603);
  return from_residuals({{0.2, bridge_naturality_residual(poly_field3(2), poly_field3(3), poly_density(), samples, 0.2)},
                         {0.4, bridge_derivative_residual(poly_field3(7), poly_density(), samples, 0.4)}},
                        1e-8);
}

FluidOptions fluid_options(const ResolvedSettings& rs) {
  FluidOptions o;
  o.sweep = sweep_of(rs);
  return o;
}

ScenarioOutcome run_kelvin(const ScenarioConfig&, const ResolvedSettings& rs) {
  FluidScenario s;
  s.kind = FluidCase::circulation;
  s.velocity = rotation3();
  s.a = rotation3();
  s.psi = ScalarField::exact(3, [](const auto&, const auto& x) {
    const Vec& w = rigid_omega();
    const auto od = w(0) * x(0) + w(1) * x(1) + w(2) * x(2);
    return od * od - w.squaredNorm() * x.dot(x);
  });
  s.object = Chain(circle(vec({0.4, -0.2, 0.1}), 0.5, 0, 2));
  return from_drift(transport_conservation_check(s, times_or(rs, uniform_grid(0.0, 2.0, 8)), fluid_options(rs)));
}

ScenarioOutcome run_helmholtz(const ScenarioConfig&, const ResolvedSettings& rs) {
  FluidScenario s;
  s.kind = FluidCase::flux;
  s.velocity = rotation3();
  s.a = VectorField::constant(2.0 * rigid_omega());
  s.object = Chain(disk(vec({0.2, 0.3, -0.1}), 0.6, 0, 1));
  return from_drift(transport_conservation_check(s, times_or(rs, uniform_grid(0.0, 2.0, 8)), fluid_options(rs)));
}

ScenarioOutcome run_mass(const ScenarioConfig& cfg, const ResolvedSettings& rs) {
  FluidScenario s;
  s.kind = FluidCase::mass;
  s.velocity = rotation3();
  s.f = ScalarField::exact(3, [](const auto& t, const auto&) { return 0.0 * t + 1.0; });
  s.object = Chain(ball3(vec({0.5, 0.0, 0.2}), 0.4));
  FluidOptions o = fluid_options(rs);
  // 6-point, 2-panel rule: 1728 nodes integrate the ball volume to 1e-12.
  if (!cfg.settings.quadrature) o.sweep.quadrature = {6, 2};
  return from_drift(transport_conservation_check(s, times_or(rs, uniform_grid(0.0, 1.5, 6)), o));
}

ScenarioOutcome run_kelvin_non_euler(const ScenarioConfig&, const ResolvedSettings& rs) {
  FluidScenario s;
  s.kind = FluidCase::circulation;
  s.velocity = VectorField::exact(3, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> v(3);
    v << x(0) - x(1), x(0) + x(1), -2.0 * x(2);
    return v;
  });
  s.a = s.velocity;
  s.psi = ScalarField::exact(3, [](const auto& t, const auto&) { return 0.0 * t; });
  s.object = Chain(circle(vec({0.0, 0.0, 0.0}), 0.5, 0, 1));
  FluidOptions o = fluid_options(rs);
  o.check_premise = false;
  return from_drift(transport_conservation_check(s, times_or(rs, uniform_grid(0.0, 0.5, 4)), o));
}

// ---- inline systems -----------------------------------------------------------------

VectorField inline_field(const InlineSystem& sys) {
  const auto tables = sys.field;
  const int dim = sys.dim;
  return VectorField::exact(
      dim,
      [tables, dim](const auto& t, const auto& x) {
        using S = std::decay_t<decltype(t)>;
        VecX<S> v(dim);
        for (int i = 0; i < dim; ++i) v(i) = tables[static_cast<std::size_t>(i)].eval(t, VecX<S>(x));
        return v;
      },
      true);
}

DifferentialForm inline_form(const InlineSystem& sys) {
  const auto tables = sys.form;
  const int n = static_cast<int>(tables.size());
  return DifferentialForm::exact(sys.dim, sys.form_degree, [tables, n](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(n);
    for (int i = 0; i < n; ++i) c(i) = tables[static_cast<std::size_t>(i)].eval(t, VecX<S>(x));
    return c;
  });
}

Hamiltonian inline_hamiltonian(const InlineSystem& sys) {
  const PolyTable h = *sys.hamiltonian;
  return Hamiltonian::exact(sys.dim / 2, [h](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    return h.eval(t, VecX<S>(z));
  });
}

Metric inline_metric(const InlineSystem& sys) {
  const auto tables = sys.metric;
  const int dim = sys.dim;
  return Metric::exact(dim, [tables, dim](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    MatX<S> g(dim, dim);
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i) g(i, j) = tables[static_cast<std::size_t>(j * dim + i)].eval(S(0.0), VecX<S>(x));
    return g;
  });
}

Chain inline_chain(const InlineShape& s) {
  if (s.shape == "circle") return Chain(circle(s.center, s.radius, s.axis_a, s.axis_b));
  if (s.shape == "disk") return Chain(disk(s.center, s.radius, s.axis_a, s.axis_b));
  if (s.shape == "ball3") return Chain(ball3(s.center, s.radius));
  if (s.shape == "segment") return Chain(segment(s.a, s.b));
  return Chain(box(s.lo, s.size, static_cast<int>(s.lo.size())));
}

ScenarioOutcome run_inline_transport(const ScenarioConfig& cfg, const ResolvedSettings& rs) {
  const InlineSystem& sys = *cfg.inline_system;
  const TransportKind kind = sys.transport_mode == "relative_closed" ? TransportKind::relative_closed
                             : sys.transport_mode == "nonautonomous" ? TransportKind::nonautonomous
                                                                     : TransportKind::absolute;
  return from_drift(check_transport_invariance(inline_field(sys), inline_form(sys), inline_chain(*sys.chain), sys.t0,
                                               times_or(rs, uniform_grid(sys.t0, sys.t1, 4)), kind, transport_of(rs)));
}

ScenarioOutcome run_inline_pointwise(const ScenarioConfig& cfg, const ResolvedSettings&) {
  const InlineSystem& sys = *cfg.inline_system;
  const auto report = check_pointwise_invariance(inline_field(sys), inline_form(sys),
                                                 box_points(sys.samples, sys.dim, sys.box_lo, sys.box_hi, 701), sys.t0);
  return single_residual(sys.t0, report.residuals.max, 1e-8);
}

ScenarioOutcome run_inline_lie(const ScenarioConfig& cfg, const ResolvedSettings& rs) {
  const InlineSystem& sys = *cfg.inline_system;
  return lie_cross(inline_field(sys), inline_form(sys), sys.t0, rs, 702);
}

ScenarioOutcome run_inline_symplecticity(const ScenarioConfig& cfg, const ResolvedSettings& rs) {
  const InlineSystem& sys = *cfg.inline_system;
  return symplectic(inline_hamiltonian(sys), sys.point, sys.t1, rs);
}

ScenarioOutcome run_inline_energy(const ScenarioConfig& cfg, const ResolvedSettings& rs) {
  const InlineSystem& sys = *cfg.inline_system;
  const double span = std::abs(sys.t1 - sys.t0);
  return single_residual(sys.t1, energy_drift(inline_hamiltonian(sys), sys.point, sys.t0, sys.t1, rs.step),
                         1e-6 * std::max(1.0, span));
}

ScenarioOutcome run_inline_geodesic(const ScenarioConfig& cfg, const ResolvedSettings& rs) {
  const InlineSystem& sys = *cfg.inline_system;
  const Metric g = inline_metric(sys);
  return single_residual(sys.t1, speed_drift(g, geodesic_shoot(g, sys.point, sys.velocity, sys.t1, rs.step)), 1e-7);
}

BuiltinDef def(std::string id, std::string kind, std::string description, ScenarioRunner run,
               Expectation expect = Expectation::invariant) {
  return BuiltinDef{CatalogEntry{std::move(id), std::move(kind), std::move(description), expect}, std::move(run)};
}

std::vector<BuiltinDef> make_registry() {
  const auto V = Expectation::violation;
  std::vector<BuiltinDef> r = {
      // exterior calculus and flows
      def("lie-rotation-weighted-area", "lie_cross_validation", "cartan vs flow_fd Lie derivative: rotation, (1+x^2) dx^dy", run_lie_rotation),
      def("lie-pendulum-zeta", "lie_cross_validation", "cartan vs flow_fd Lie derivative: pendulum, p dx", run_lie_pendulum),
      def("lie-shear-oneform", "lie_cross_validation", "cartan vs flow_fd Lie derivative: nonlinear shear, sin y dx + x^2 dy", run_lie_shear),
      def("lie-rigid-rotation-twoform", "lie_cross_validation", "cartan vs flow_fd Lie derivative: rigid rotation in R^3, 2-form", run_lie_rotation3),
      def("lie-driven-timeform", "lie_cross_validation", "cartan vs flow_fd Lie derivative: driven oscillator, time-dependent 1-form", run_lie_driven),
      def("lie-commutator-identity", "commutator_identity", "L_u i_v - i_v L_u = i_[u,v] on a 2-form in R^3", run_commutator),
      def("flow-group-law-pendulum", "group_law", "group law G(t,t1) G(t1,t0) = G(t,t0) for the pendulum", run_group_law),
      def("flow-volume-abc", "volume_preservation", "det of the ABC-flow Jacobian stays 1 over [0, 2pi]", run_volume_det),
      def("flow-extended-driven", "extended_flow", "extended autonomous flow matches direct nonautonomous integration", run_extended_flow),
      def("chain-stokes-disk", "stokes", "Stokes residual of a 1-form over a polar disk", run_stokes),
      // integral invariants
      def("rotation-area-pointwise", "pointwise_invariance", "L_v (dx^dy) = 0 for the rotation field", run_rotation_area_pointwise),
      def("stretch-area-pointwise", "pointwise_invariance", "negative control: L_v (dx^dy) = dx^dy for v = (x, 0)", run_stretch_area_pointwise, V),
      def("pendulum-zeta-relative", "pointwise_invariance", "L_v (p dx) = d(p^2/2 + cos x) for the pendulum", run_pendulum_zeta_relative),
      def("driven-extended-dt", "pointwise_invariance", "dt is invariant under the extended driven oscillator", run_driven_dt),
      def("oscillator-area-disk", "transport_invariance", "area of a transported disk under the oscillator", run_oscillator_disk),
      def("pendulum-area-box", "transport_invariance", "area of a transported box under the pendulum", run_pendulum_area),
      def("stretch-area-square", "transport_invariance", "negative control: area of a square under v = (x, 0)", run_stretch_square, V),
      def("pendulum-zeta-loop", "transport_invariance", "relative invariant p dx over a transported circle", run_shear_circulation),
      def("poincare-cartan-loop", "transport_invariance", "p dx - H dt over a transported loop in extended space", run_poincare_cartan_loop),
      def("poincare-cartan-open-segment", "transport_invariance", "negative control: relative invariant over an open segment", run_poincare_cartan_open, V),
      def("driven-transported-form", "transport_invariance", "nonautonomous invariant built by form transport", run_driven_transported_form),
      def("transport-derivative-driven", "transport_derivative", "d/dt of a transported integral equals the integral of dw/dt + L_v w", run_transport_derivative),
      def("first-integral-pendulum", "first_integral", "first integral of the pendulum from its area form", run_first_integral),
      def("form-transport-rotation", "form_transport_pde", "transported form family solves dw/dt + L_v w = 0", run_form_transport_pde),
      def("mixed-form-split", "mixed_form", "split formula for the extended Lie derivative of mu+ + dt^mu-", run_mixed_form),
      // Hamiltonian systems
      def("oscillator-symplectic", "symplecticity", "J^T Omega J = Omega and det J = 1 at t = 2pi for the oscillator", run_oscillator_symplectic),
      def("pendulum-symplectic", "symplecticity", "J^T Omega J = Omega and det J = 1 at t = 10 for the pendulum", run_pendulum_symplectic),
      def("two-oscillators-symplectic", "symplecticity", "symplecticity of the (1, sqrt 2) oscillator pair", run_two_oscillator_symplectic),
      def("poincare-cartan-characteristic", "characteristic_residual", "i_v~ d alpha = 0 for the driven oscillator and pendulum", run_characteristic),
      def("hamiltonian-field-equation", "field_equation", "i_w beta = -dH for the oscillator pair", run_field_equation),
      def("poincare-cartan-relative", "relative_invariance", "L_v~ alpha = d(p H_p - H) for the driven oscillator", run_relative_alpha),
      def("pendulum-energy-drift", "energy_drift", "energy drift of the pendulum over t in [0, 10]", run_energy_drift),
      def("oscillator-loop-action", "loop_action", "loop action of p dx over a transported circle", run_oscillator_loop),
      def("driven-alpha-loop", "loop_action", "loop action of p dx - H dt over a transported extended loop", run_driven_alpha_loop),
      def("homogeneous-open-curve-action", "loop_action", "p dx over a transported open curve for homogeneous H = |p|", run_homogeneous_open),
      def("pendulum-open-curve-action", "loop_action", "negative control: p dx over an open curve for the pendulum", run_pendulum_open_curve, V),
      def("gauss-relation-polar", "gauss_relation", "Gauss relation for the homogeneous polar geodesic Hamiltonian", run_gauss_relation),
      def("reduction-two-oscillators", "reduction", "reduced system on an energy level matches the reparametrized trajectory", run_reduction),
      def("poincare-section-rotation", "poincare_return", "return map of the (1, sqrt 2) oscillator pair is a rotation", run_section_rotation),
      def("poincare-section-symplectic", "section_symplecticity", "return map preserves the restricted form", run_section_symplectic),
      // Hamilton-Jacobi and canonical transformations
      def("hj-transport-exact", "hj_cauchy", "u_t + c u_x = 0 solved by characteristics", run_hj_transport),
      def("hj-quadratic-spreading", "hj_cauchy", "u_t + u_x^2/2 = 0 with u = x^2/2 gives x^2/(2(1+t))", run_hj_quadratic),
      def("hj-quadratic-caustic", "caustic_detection", "u = -x^2/2 focuses at t = 1", run_hj_caustic),
      def("hj-graph-invariance", "graph_invariance", "graph of the gradient is carried by the characteristic flow", run_hj_graph),
      def("hj-action-increment-free", "action_increment", "S increment equals the action integral for the free particle", run_hj_action),
      def("canonical-s2-identity", "generating_function", "S2 = P.x generates the identity", run_s2_identity),
      def("canonical-flow-pendulum", "canonicality", "the pendulum time-1 map is canonical", run_flow_canonicality),
      def("canonical-transform-match", "transform_match", "K-trajectories map back onto H-trajectories", run_transform_match),
      def("straightening-oscillator", "straightening", "straightened oscillator has dX/dt = 0 and dP1/dt = -1", run_straightening),
      def("complete-integral-free", "complete_integral", "complete integral integrates the free particle", run_ci_free),
      def("complete-integral-linear-potential", "complete_integral", "complete integral integrates H = p^2/2 + x", run_ci_linear),
      def("complete-integral-oscillator-pair", "complete_integral", "separable complete integral of the (1, sqrt 2) pair", run_ci_oscillator),
      // eikonal and geodesics
      def("eikonal-circle-distance", "eikonal_distance", "outward fan of the unit circle gives |x| - 1", run_eikonal_distance),
      def("eikonal-circle-residuals", "eikonal_residual", "norm and orthogonality residuals of the circle distance", run_eikonal_residuals),
      def("gradient-flow-circle", "gradient_flow", "gradient lines of the distance are unit-speed geodesics", run_gradient_flow),
      def("gauss-lemma-euclidean", "gauss_lemma", "Gauss lemma in the Euclidean plane", run_gauss_lemma_euclidean),
      def("gauss-lemma-polar", "gauss_lemma", "Gauss lemma in polar coordinates", run_gauss_lemma_polar),
      def("gauss-lemma-conformal", "gauss_lemma", "Gauss lemma for a conformal metric", run_gauss_lemma_conformal),
      def("geodesic-speed", "geodesic_speed", "geodesic speed is conserved for polar and conformal metrics", run_geodesic_speed),
      def("geodesic-homogeneous-polar", "homogeneous_geodesic", "|p|_g and |p|_g^2/2 share unit-speed geodesics", run_homogeneous_geodesic),
      // fluids
      def("fluid-lie-formulas", "lie_formulas", "the three vector-calculus Lie formulas on random polynomial fields", run_fluid_lie_formulas),
      def("fluid-vector-identity", "vector_identity", "curl(A x B) = [A, B] + A div B - B div A", run_fluid_vector_identity),
      def("fluid-bridge-naturality", "bridge_naturality", "form/vector dictionary commutes with d and interior products", run_fluid_bridge),
      def("kelvin-rigid-rotation", "fluid_transport", "circulation of a rigid rotation over a transported loop", run_kelvin),
      def("helmholtz-vorticity-flux", "fluid_transport", "vorticity flux through a transported disk", run_helmholtz),
      def("mass-ball-incompressible", "fluid_transport", "volume of a transported ball under an incompressible flow", run_mass),
      def("kelvin-non-euler-control", "fluid_transport", "negative control: circulation under a non-Euler field", run_kelvin_non_euler, V),
  };
  std::sort(r.begin(), r.end(), [](const BuiltinDef& a, const BuiltinDef& b) { return a.entry.id < b.entry.id; });
  return r;
}

}  // namespace

const std::vector<BuiltinDef>& builtin_registry() {
  static const std::vector<BuiltinDef> r = make_registry();
  return r;
}

const BuiltinDef* find_builtin(const std::string& id) {
  const auto& r = builtin_registry();
  const auto it = std::lower_bound(r.begin(), r.end(), id, [](const BuiltinDef& d, const std::string& key) {
    return d.entry.id < key;
  });
  return it != r.end() && it->entry.id == id ? &*it : nullptr;
}

ScenarioRunner inline_runner(const std::string& kind) {
  if (kind == "transport_invariance") return run_inline_transport;
  if (kind == "pointwise_invariance") return run_inline_pointwise;
  if (kind == "lie_cross_validation") return run_inline_lie;
  if (kind == "symplecticity") return run_inline_symplecticity;
  if (kind == "energy_drift") return run_inline_energy;
  if (kind == "geodesic_speed") return run_inline_geodesic;
  return {};
}

const char* expectation_name(Expectation e) { return e == Expectation::violation ? "violation" : "invariant"; }

}  // namespace intinv::detail

namespace intinv {

std::vector<CatalogEntry> list_builtin_scenarios() {
  std::vector<CatalogEntry> out;
  for (const auto& d : detail::builtin_registry()) out.push_back(d.entry);
  return out;
}

std::vector<std::string> inline_kinds() {
  return {"energy_drift", "geodesic_speed", "lie_cross_validation", "pointwise_invariance", "symplecticity",
          "transport_invariance"};
}

}  // namespace intinv
