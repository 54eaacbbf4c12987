#include "intinv/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

namespace intinv {

Hamiltonian::Hamiltonian(int dof, SmoothMap map, bool autonomous, bool homogeneous)
    : dof_(dof), map_(std::move(map)), autonomous_(autonomous), homogeneous_(homogeneous) {
  if (dof < 1) throw DimensionError("Hamiltonian needs at least one degree of freedom");
  if (map_.in_dim() != 2 * dof || map_.out_dim() != 1)
    throw DimensionError("Hamiltonian map must be R^(2 dof) -> R");
}

Hamiltonian Hamiltonian::sampled(int dof, std::function<double(double, const Vec&)> f, bool autonomous,
                                 bool homogeneous, double h_fd) {
  return Hamiltonian(dof,
                     SmoothMap::sampled(
                         2 * dof, 1,
                         [f = std::move(f)](const double& t, const Vec& z) {
                           Vec out(1);
                           out(0) = f(t, z);
                           return out;
                         },
                         h_fd),
                     autonomous, homogeneous);
}

Vec phase_point(const Vec& x, const Vec& p) {
  if (x.size() != p.size()) throw DimensionError("phase point: x and p differ in length");
  Vec z(x.size() + p.size());
  z << x, p;
  return z;
}

double euler_identity_residual(const Hamiltonian& h, const std::vector<Vec>& samples, double t) {
  double worst = 0.0;
  for (const Vec& z : samples) {
    const Vec p = z.tail(h.dof());
    worst = std::max(worst, std::abs(h(t, z) - p.dot(h.grad_p(t, z))));
  }
  return worst;
}

VectorField hamiltonian_field(const Hamiltonian& h) {
  const int m = h.dof();
  SmoothMap mh = h.map();
  return VectorField(SmoothMap::exact<2>(2 * m, 2 * m,
                                         [mh, m](const auto& t, const auto& z) {
                                           using S = std::decay_t<decltype(t)>;
                                           const VecX<S> g = gradient(mh, t, z);
                                           VecX<S> w(2 * m);
                                           w << g.tail(m), -g.head(m);
                                           return w;
                                         }),
                     !h.autonomous());
}

DifferentialForm beta_form(int dof) {
  DifferentialForm beta = DifferentialForm::zero(2 * dof, 2);
  for (int i = 0; i < dof; ++i) beta = beta + DifferentialForm::basis(2 * dof, {dof + i, i});
  return beta;
}

DifferentialForm zeta_form(int dof) {
  const int n = 2 * dof;
  return DifferentialForm::exact(n, 1, [dof, n](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c = VecX<S>::Zero(n);
    c.head(dof) = z.tail(dof);
    return c;
  });
}

DifferentialForm poincare_cartan_form(const Hamiltonian& h) {
  const int m = h.dof(), n = 2 * m + 1;
  SmoothMap mh = h.map();
  return DifferentialForm::exact(n, 1, [mh, m, n](const auto& t, const auto& y) {
    using S = std::decay_t<decltype(t)>;
    (void)t;
    VecX<S> c = VecX<S>::Zero(n);
    c(0) = -mh(y(0), VecX<S>(y.tail(2 * m)))(0);
    c.segment(1, m) = y.tail(m);
    return c;
  });
}

ScalarField action_density(const Hamiltonian& h) {
  const int m = h.dof();
  SmoothMap mh = h.map();
  return ScalarField(SmoothMap::exact<2>(2 * m, 1, [mh, m](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    const VecX<S> g = gradient(mh, t, z);
    VecX<S> out(1);
    out(0) = VecX<S>(z.tail(m)).dot(VecX<S>(g.tail(m))) - mh(t, z)(0);
    return out;
  }));
}

namespace {

double max_norm(const DifferentialForm& form, const std::vector<Vec>& samples, double t) {
  std::vector<double> r(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { r[i] = coefficient_norm(form, t, samples[i]); });
  return residual_stats(r).max;
}

}  // namespace

double field_equation_residual(const Hamiltonian& h, const std::vector<Vec>& samples, double t) {
  const DifferentialForm r =
      interior_product(hamiltonian_field(h), beta_form(h.dof())) + exterior_derivative(h.scalar_field());
  return max_norm(r, samples, t);
}

double characteristic_residual(const Hamiltonian& h, const std::vector<Vec>& extended_samples) {
  const VectorField ext = extend_to_autonomous(hamiltonian_field(h));
  return max_norm(interior_product(ext, exterior_derivative(poincare_cartan_form(h))), extended_samples, 0.0);
}

double relative_invariance_residual(const Hamiltonian& h, const std::vector<Vec>& extended_samples) {
  const VectorField ext = extend_to_autonomous(hamiltonian_field(h));
  const DifferentialForm potential = to_extended(DifferentialForm::function(action_density(h)));
  const DifferentialForm r =
      lie_derivative(ext, poincare_cartan_form(h)) - exterior_derivative(potential);
  return max_norm(r, extended_samples, 0.0);
}

SymplecticityResult symplecticity_residual(const Hamiltonian& h, const Vec& z0, double t0, double t,
                                           JacobianMethod method, double step) {
  SymplecticityResult r;
  r.jacobian = flow_jacobian(hamiltonian_field(h), z0, t0, t, method, step).matrix;
  const Mat omega = canonical_matrix(h.dof());
  r.residual = (r.jacobian.transpose() * omega * r.jacobian - omega).lpNorm<Eigen::Infinity>();
  r.det_residual = std::abs(r.jacobian.determinant() - 1.0);
  return r;
}

double energy_drift(const Hamiltonian& h, const Vec& z0, double t0, double t1, double step) {
  const Trajectory traj = integrate_flow(hamiltonian_field(h), z0, t0, t1, {step, false});
  const double e0 = h(t0, z0);
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.times().size(); ++i)
    worst = std::max(worst, std::abs(h(traj.times()[i], traj.states()[i]) - e0));
  return worst;
}

DriftSeries loop_action_drift(const Hamiltonian& h, const Chain& curve, double t0, const std::vector<double>& times,
                              LoopMode mode, const TransportOptions& options) {
  if (curve.degree() != 1) throw DegreeError("loop action needs a 1-chain");
  switch (mode) {
    case LoopMode::closed_zeta:
      return check_transport_invariance(hamiltonian_field(h), zeta_form(h.dof()), curve, t0, times,
                                        TransportKind::relative_closed, options);
    case LoopMode::extended_alpha:
      return check_transport_invariance(extend_to_autonomous(hamiltonian_field(h)), poincare_cartan_form(h), curve,
                                        t0, times, TransportKind::relative_closed, options);
    case LoopMode::homogeneous_open: {
      if (options.check_preconditions) {
        const CubeRule rule = cube_rule(1, options.sweep.quadrature);
        std::vector<Vec> pts;
        for (const auto& term : curve.terms())
          for (Eigen::Index n = 0; n < rule.nodes.cols(); ++n) pts.push_back(term.cube.sample(rule.nodes.col(n)).point);
        double scale = 1.0;
        for (const Vec& z : pts) scale = std::max(scale, std::abs(h(t0, z)));
        if (euler_identity_residual(h, pts, t0) > 1e-8 * scale)
          throw PreconditionError("Hamiltonian is not homogeneous of degree one in the impulses along the curve");
      }
      return check_transport_invariance(hamiltonian_field(h), zeta_form(h.dof()), curve, t0, times,
                                        TransportKind::absolute, options);
    }
  }
  throw PreconditionError("unknown loop mode");
}

double gauss_relation_residual(const Hamiltonian& h, const Vec& x_hat, const Vec& p_hat, double t,
                               const GaussSettings& settings) {
  const int m = h.dof();
  if (!h.homogeneous()) throw PreconditionError("Gauss relation requires a Hamiltonian homogeneous in the impulses");
  if (x_hat.size() != m || p_hat.size() != m) throw DimensionError("Gauss relation: x_hat and p_hat must have dof entries");
  if (p_hat.norm() <= 2.0 * settings.h_fd)
    throw PreconditionError("Gauss relation: impulse perturbation would cross p = 0");
  const VectorField w = hamiltonian_field(h);
  const Vec z0 = phase_point(x_hat, p_hat);
  const Vec zt = flow_point(w, z0, 0.0, t, settings.step);
  const Vec pt = zt.tail(m);
  Mat dx(m, m);
  if (settings.method == JacobianMethod::variational) {
    dx = flow_jacobian(w, z0, 0.0, t, JacobianMethod::variational, settings.step).matrix.block(0, m, m, m);
  } else {
    for (int s = 0; s < m; ++s) {
      Vec zp = z0, zm = z0;
      zp(m + s) += settings.h_fd;
      zm(m + s) -= settings.h_fd;
      dx.col(s) = (flow_point(w, zp, 0.0, t, settings.step) - flow_point(w, zm, 0.0, t, settings.step)).head(m) /
                  (2.0 * settings.h_fd);
    }
  }
  return (dx.transpose() * pt).lpNorm<Eigen::Infinity>();
}

// ---- canonical permutations --------------------------------------------------

CanonicalPermutation CanonicalPermutation::identity(int dof) { return {Mat::Identity(2 * dof, 2 * dof)}; }

CanonicalPermutation CanonicalPermutation::conjugate_swap(int dof, int i) {
  if (i < 0 || i >= dof) throw DimensionError("conjugate swap index out of range");
  Mat a = Mat::Identity(2 * dof, 2 * dof);
  a(i, i) = 0.0;
  a(dof + i, dof + i) = 0.0;
  a(i, dof + i) = -1.0;
  a(dof + i, i) = 1.0;
  return {a};
}

CanonicalPermutation CanonicalPermutation::index_swap(int dof, int i, int j) {
  if (i < 0 || j < 0 || i >= dof || j >= dof) throw DimensionError("index swap out of range");
  Mat a = Mat::Identity(2 * dof, 2 * dof);
  if (i == j) return {a};
  a.row(i).swap(a.row(j));
  a.row(dof + i).swap(a.row(dof + j));
  return {a};
}

CanonicalPermutation CanonicalPermutation::then(const CanonicalPermutation& next) const {
  return {next.matrix * matrix};
}

Hamiltonian transform(const Hamiltonian& h, const CanonicalPermutation& perm) {
  if (perm.dof() != h.dof()) throw DimensionError("permutation and Hamiltonian differ in degrees of freedom");
  SmoothMap mh = h.map();
  const Mat back = perm.matrix.transpose();
  return Hamiltonian(h.dof(),
                     SmoothMap::exact(2 * h.dof(), 1,
                                      [mh, back](const auto& t, const auto& big_z) {
                                        using S = std::decay_t<decltype(t)>;
                                        return mh(t, VecX<S>(back.template cast<S>() * big_z));
                                      }),
                     h.autonomous(), h.homogeneous());
}

// ---- reduction ---------------------------------------------------------------

ReducedSystem::ReducedSystem(Hamiltonian h, double energy, CanonicalPermutation perm, double p1_guess,
                             const ReductionOptions& options)
    : h_(std::move(h)), energy_(energy), perm_(std::move(perm)), dof_(h_.dof()) {
  const int m = dof_;
  const SmoothMap km = transform(h_, perm_).map();
  const NewtonSettings newton = options.newton;
  const double threshold = options.degeneracy_threshold;
  g_map_ = SmoothMap::exact<2>(2 * m - 2, 1, [km, m, energy, p1_guess, newton, threshold](const auto& tt, const auto& y) {
    using S = std::decay_t<decltype(tt)>;
    auto assemble = [m](const auto& time, const auto& rest, const auto& p1) {
      using Q = std::decay_t<decltype(p1)>;
      VecX<Q> z(2 * m);
      z(0) = time;
      for (int i = 1; i < m; ++i) {
        z(i) = rest(i - 1);
        z(m + i) = rest(m - 2 + i);
      }
      z(m) = p1;
      return z;
    };
    const double tv = value_of(tt);
    const Vec yv = values_of(y);
    auto residual_d = [&](const auto& q) {
      using Q = typename std::decay_t<decltype(q)>::Scalar;
      VecX<Q> r(1);
      r(0) = km(Q(0.0), assemble(Q(tv), VecX<Q>(yv.template cast<Q>()), q(0)))(0) - energy;
      return r;
    };
    Vec root(1);
    root(0) = p1_guess;
    try {
      root = newton_solve(residual_d, root, newton, "energy-level reduction");
    } catch (const NewtonError& e) {
      throw ReductionError(e.what());
    }
    const double slope = residual_jacobian(residual_d, root)(0, 0);
    if (std::abs(slope) < threshold)
      throw DegeneracyError("dH/dp_1 vanishes on the reduced energy level");
    Mat jinv(1, 1);
    jinv(0, 0) = 1.0 / slope;
    auto residual_s = [&](const VecX<S>& q) {
      VecX<S> r(1);
      r(0) = km(S(0.0), assemble(tt, y, q(0)))(0) - energy;
      return r;
    };
    return chord_polish<S>(residual_s, root, jinv);
  });
}

Hamiltonian ReducedSystem::reduced_hamiltonian() const {
  if (dof_ < 2) throw DimensionError("reduced system of a single degree of freedom has no coordinates");
  SmoothMap g = g_map_;
  return Hamiltonian(dof_ - 1,
                     SmoothMap::exact<2>(2 * dof_ - 2, 1,
                                         [g](const auto& t, const auto& y) {
                                           using S = std::decay_t<decltype(t)>;
                                           return VecX<S>(-g(t, y));
                                         }),
                     false, false);
}

Vec ReducedSystem::lift(double t, const Vec& y) const {
  const int m = dof_;
  Vec big_z(2 * m);
  big_z(0) = t;
  big_z(m) = g(t, y);
  for (int i = 1; i < m; ++i) {
    big_z(i) = y(i - 1);
    big_z(m + i) = y(m - 2 + i);
  }
  return perm_.inverse(big_z);
}

std::pair<double, Vec> ReducedSystem::project(const Vec& z) const {
  const int m = dof_;
  const Vec big_z = perm_.apply(z);
  Vec y(2 * m - 2);
  for (int i = 1; i < m; ++i) {
    y(i - 1) = big_z(i);
    y(m - 2 + i) = big_z(m + i);
  }
  return {big_z(0), y};
}

ReducedSystem reduce_on_energy_level(const Hamiltonian& h, double energy, const Vec& seed,
                                     const ReductionOptions& options) {
  if (!h.autonomous()) throw PreconditionError("energy-level reduction needs an autonomous Hamiltonian");
  const int m = h.dof();
  if (seed.size() != 2 * m) throw DimensionError("reduction seed must be a phase point");
  const Vec hp = h.grad_p(0.0, seed);
  int j = 0;
  if (options.auto_permute)
    for (int i = 1; i < m; ++i)
      if (std::abs(hp(i)) > std::abs(hp(j))) j = i;
  if (std::abs(hp(j)) < options.degeneracy_threshold)
    throw DegeneracyError("dH/dp_1 vanishes at the reduction seed");
  const CanonicalPermutation perm = CanonicalPermutation::index_swap(m, 0, j);
  return ReducedSystem(h, energy, perm, perm.apply(seed)(m), options);
}

ReductionComparison compare_reduction(const Hamiltonian& h, const Vec& seed, double duration, int samples,
                                      const ReductionOptions& options, double step) {
  if (samples < 2) throw PreconditionError("reduction comparison needs at least two samples");
  const double energy = h(0.0, seed);
  const ReducedSystem reduced = reduce_on_energy_level(h, energy, seed, options);
  const VectorField w = hamiltonian_field(h);
  const Trajectory full = integrate_flow(w, seed, 0.0, duration, {step, false});

  std::vector<double> knots_t;
  for (const Vec& z : full.states()) knots_t.push_back(reduced.project(z).first);
  const double sign = knots_t.back() > knots_t.front() ? 1.0 : -1.0;
  for (std::size_t i = 1; i < knots_t.size(); ++i)
    if (sign * (knots_t[i] - knots_t[i - 1]) <= 0.0)
      throw ReductionError("reduction time coordinate is not monotone along the trajectory");

  const VectorField rf = reduced.reduced_field();
  auto [t_now, y] = reduced.project(seed);
  const double t_begin = t_now, t_end = knots_t.back();
  ReductionComparison out;
  std::size_t knot = 0;
  for (int k = 0; k < samples; ++k) {
    const double target = t_begin + (t_end - t_begin) * k / (samples - 1);
    y = rk4_integrate<double>(field_rhs(rf), t_now, target, y, step);
    t_now = target;
    while (knot + 2 < knots_t.size() && sign * (knots_t[knot + 1] - target) < 0.0) ++knot;
    // Event: the single RK4 step from the knot that lands on T = target.
    const Vec& zk = full.states()[knot];
    const double hk = full.times()[knot + 1] - full.times()[knot];
    auto phi = [&](const auto& tau) {
      using S = std::decay_t<decltype(tau)>;
      const VecX<S> z = rk4_step(field_rhs(w), S(full.times()[knot]), VecX<S>(zk.template cast<S>()), tau);
      return z;
    };
    double tau = hk * (target - knots_t[knot]) / (knots_t[knot + 1] - knots_t[knot]);
    for (int it = 0; it < 30; ++it) {
      const VecX<D1> zd = phi(D1(tau, 1.0));
      const Vec big = reduced.permutation().apply(value_part(zd));
      const Vec dbig = reduced.permutation().apply(eps_part(zd));
      const double delta = (big(0) - target) / dbig(0);
      tau -= delta;
      if (std::abs(delta) < 1e-15 * std::max(1.0, std::abs(hk))) break;
    }
    const Vec y_full = reduced.project(phi(tau)).second;
    out.sup_error = std::max(out.sup_error, (y_full - y).lpNorm<Eigen::Infinity>());
    ++out.samples;
  }
  return out;
}

// ---- sections ----------------------------------------------------------------

namespace {

double section_value(const SectionSpec& section, const Vec& z) { return section.function(0.0, z); }

}  // namespace

std::pair<Vec, double> next_crossing(const Hamiltonian& h, const SectionSpec& section, const Vec& z0, double step) {
  if (!h.autonomous()) throw PreconditionError("Poincare sections need an autonomous Hamiltonian");
  if (section.direction != 1 && section.direction != -1) throw PreconditionError("section direction must be +1 or -1");
  if (std::abs(section_value(section, z0)) > 1e-10) throw PreconditionError("start point is not on the section");
  const VectorField w = hamiltonian_field(h);
  const auto rhs = field_rhs(w);
  const double dir = section.direction;
  Vec z = z0;
  double t = 0.0;
  double s_prev = dir * section_value(section, z);
  const int n_max = step_count(section.max_time, step);
  for (int n = 0; n < n_max; ++n) {
    const Vec next = rk4_step(rhs, t, z, step);
    if (!all_finite(next)) throw DivergenceError("non-finite state while seeking a section crossing", t);
    const double s_next = dir * section_value(section, next);
    if (t + step >= section.min_time && s_prev < 0.0 && s_next >= 0.0) {
      // Crossing inside one step: solve s(step_tau(z)) = 0 for tau in (0, step].
      double lo = 0.0, hi = step;
      double tau = step * (-s_prev) / (s_next - s_prev);
      auto eval = [&](double tau_val, double& slope) {
        const VecX<D1> zd = rk4_step(rhs, D1(t), promote(z), D1(tau_val, 1.0));
        const Vec zv = value_part(zd);
        const Vec vel = eps_part(zd);
        const Vec grad = section.function.gradient(0.0, zv);
        slope = dir * grad.dot(vel);
        const Vec wz = w(0.0, zv);
        if (std::abs(grad.dot(wz)) < section.transversality_threshold * std::max(1e-300, grad.norm() * wz.norm()))
          throw SectionError("Hamiltonian field is tangent to the section at the crossing");
        return dir * section_value(section, zv);
      };
      double value = 0.0;
      for (int it = 0; it < 80; ++it) {
        double slope = 0.0;
        value = eval(tau, slope);
        if (value < 0.0) lo = tau; else hi = tau;
        double next_tau = tau - value / slope;
        if (!(next_tau > lo && next_tau < hi) || !std::isfinite(next_tau)) next_tau = 0.5 * (lo + hi);
        const double delta = std::abs(next_tau - tau);
        tau = next_tau;
        if (std::abs(value) <= section.crossing_tolerance && delta <= 1e-16 * std::max(1.0, t)) break;
      }
      double slope = 0.0;
      value = eval(tau, slope);
      if (std::abs(value) > section.crossing_tolerance)
        throw SectionError("section crossing could not be located to tolerance");
      return {value_part(rk4_step(rhs, D1(t), promote(z), D1(tau))), t + tau};
    }
    z = next;
    t += step;
    s_prev = s_next;
  }
  throw EscapeError("no section crossing within " + std::to_string(section.max_time) + " time units");
}

ReturnMap poincare_return_map(const Hamiltonian& h, const SectionSpec& section, const Vec& z0, double step,
                              double h_fd) {
  if (!section.coordinates || !section.chart.valid()) throw PreconditionError("section needs a chart and coordinates");
  ReturnMap out;
  std::tie(out.image, out.return_time) = next_crossing(h, section, z0, step);
  out.image_coordinates = section.coordinates(out.image);
  const Vec c0 = section.coordinates(z0);
  const Eigen::Index k = c0.size();
  out.jacobian.resize(k, k);
  std::vector<Vec> cols(static_cast<std::size_t>(k));
  parallel_for(static_cast<std::size_t>(k), [&](std::size_t j) {
    Vec cp = c0, cm = c0;
    cp(static_cast<Eigen::Index>(j)) += h_fd;
    cm(static_cast<Eigen::Index>(j)) -= h_fd;
    const Vec qp = section.coordinates(next_crossing(h, section, section.chart(0.0, cp), step).first);
    const Vec qm = section.coordinates(next_crossing(h, section, section.chart(0.0, cm), step).first);
    cols[j] = (qp - qm) / (2.0 * h_fd);
  });
  for (Eigen::Index j = 0; j < k; ++j) out.jacobian.col(j) = cols[static_cast<std::size_t>(j)];
  return out;
}

Mat restricted_form_matrix(const SectionSpec& section, const Vec& c) {
  const Mat dphi = jacobian(section.chart, 0.0, c);
  return dphi.transpose() * canonical_matrix(static_cast<int>(dphi.rows()) / 2) * dphi;
}

double section_symplecticity_residual(const SectionSpec& section, const Vec& c, const ReturnMap& q) {
  const Mat before = restricted_form_matrix(section, c);
  const Mat after = restricted_form_matrix(section, q.image_coordinates);
  return (q.jacobian.transpose() * after * q.jacobian - before).lpNorm<Eigen::Infinity>();
}

}  // namespace intinv
