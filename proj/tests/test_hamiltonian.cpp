#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "intinv/hamiltonian.hpp"
#include "test_support.hpp"

using namespace intinv;
using std::numbers::pi;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

Hamiltonian oscillator() {
  return Hamiltonian::exact(1, [](const auto& t, const auto& z) {
    (void)t;
    return 0.5 * (z(0) * z(0) + z(1) * z(1));
  });
}

Hamiltonian pendulum() {
  return Hamiltonian::exact(1, [](const auto& t, const auto& z) {
    (void)t;
    return 0.5 * z(1) * z(1) - cos(z(0));
  });
}

// Frequencies 1 and sqrt 2.
Hamiltonian two_oscillators() {
  return Hamiltonian::exact(2, [](const auto& t, const auto& z) {
    (void)t;
    return 0.5 * (z(2) * z(2) + z(0) * z(0)) + 0.5 * (z(3) * z(3) + 2.0 * z(1) * z(1));
  });
}

Hamiltonian euclidean_norm() {
  return Hamiltonian::exact(
      2,
      [](const auto& t, const auto& z) {
        (void)t;
        return sqrt(z(2) * z(2) + z(3) * z(3));
      },
      true, true);
}

}  // namespace

TEST(HamiltonianField, Examples) {
  const VectorField w = hamiltonian_field(oscillator());
  EXPECT_LT((w(0.0, vec({0.3, -0.7})) - vec({-0.7, -0.3})).norm(), 1e-15);
  const auto free = Hamiltonian::exact(1, [](const auto& t, const auto& z) {
    (void)t;
    return z(1);
  });
  EXPECT_LT((hamiltonian_field(free)(0.0, vec({2.0, 5.0})) - vec({1.0, 0.0})).norm(), 1e-15);
  const Vec z = vec({0.4, 1.1});
  EXPECT_LT((hamiltonian_field(pendulum())(0.0, z) - vec({1.1, -std::sin(0.4)})).norm(), 1e-15);
  const auto samples = testsupport::random_points(40, 2, -3.0, 3.0, 101);
  EXPECT_LT(field_equation_residual(pendulum(), samples), 1e-8);
  EXPECT_LT(field_equation_residual(two_oscillators(), testsupport::random_points(20, 4, -1.0, 1.0, 102)), 1e-8);
}

TEST(PoincareCartan, FormAndResiduals) {
  const auto zero = Hamiltonian::exact(2, [](const auto& t, const auto& z) {
    (void)t;
    return 0.0 * z(0);
  });
  const DifferentialForm alpha0 = poincare_cartan_form(zero);
  EXPECT_EQ(alpha0.dim(), 5);
  EXPECT_LT((alpha0(0.0, vec({0.5, 1, 2, 3, 4})) - vec({0, 3, 4, 0, 0})).norm(), 1e-15);

  const auto ext = testsupport::random_points(30, 3, -1.5, 1.5, 103);
  EXPECT_LT(characteristic_residual(oscillator(), ext), 1e-7);
  EXPECT_LT(relative_invariance_residual(oscillator(), ext), 1e-6);
  EXPECT_LT(relative_invariance_residual(pendulum(), ext), 1e-6);

  const auto driven = Hamiltonian::exact(
      1,
      [](const auto& t, const auto& z) { return 0.5 * (z(0) * z(0) + z(1) * z(1)) - 0.3 * z(0) * sin(2.0 * t); },
      false);
  EXPECT_LT(characteristic_residual(driven, ext), 1e-7);
  EXPECT_LT(relative_invariance_residual(driven, ext), 1e-6);
  // A field that is not the Hamiltonian one leaves i dalpha nonzero.
  const VectorField wrong = extend_to_autonomous(VectorField::exact(2, [](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << z(1), z(0);
    return r;
  }));
  const DifferentialForm da = exterior_derivative(poincare_cartan_form(oscillator()));
  EXPECT_GT(coefficient_norm(interior_product(wrong, da), 0.0, vec({0.0, 1.0, 0.0})), 0.5);
}

TEST(ActionDensity, IsLagrangianForMechanicalHamiltonians) {
  // H = p^2/2 + V(x) gives p H_p - H = p^2/2 - V = L(x, xdot) with xdot = p.
  const ScalarField f = action_density(pendulum());
  for (const Vec& z : testsupport::random_points(20, 2, -2.0, 2.0, 104))
    EXPECT_NEAR(f(0.0, z), 0.5 * z(1) * z(1) + std::cos(z(0)), 1e-14);
}

TEST(Symplecticity, OscillatorAndPendulum) {
  const Vec z0 = vec({0.7, -0.2});
  const auto at_start = symplecticity_residual(oscillator(), z0, 1.0, 1.0);
  EXPECT_EQ(at_start.residual, 0.0);
  EXPECT_EQ(at_start.det_residual, 0.0);

  const auto osc = symplecticity_residual(oscillator(), z0, 0.0, 2 * pi);
  EXPECT_LT(osc.residual, 1e-6);
  EXPECT_LT(osc.det_residual, 1e-6);
  EXPECT_LT((osc.jacobian - Mat::Identity(2, 2)).lpNorm<Eigen::Infinity>(), 1e-9);

  const auto pend = symplecticity_residual(pendulum(), vec({1.0, 0.5}), 0.0, 10.0);
  EXPECT_LT(pend.residual, 1e-5);
  EXPECT_LT(pend.det_residual, 1e-6);
  const auto fd = symplecticity_residual(pendulum(), vec({1.0, 0.5}), 0.0, 10.0, JacobianMethod::finite_difference);
  EXPECT_LT((fd.jacobian - pend.jacobian).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LT(fd.residual, 1e-5);
}

TEST(Symplecticity, FourDimensionalFlow) {
  const auto r = symplecticity_residual(two_oscillators(), vec({0.3, -0.1, 0.2, 0.5}), 0.0, 3.0);
  EXPECT_LT(r.residual, 1e-9);
  EXPECT_LT(r.det_residual, 1e-9);
}

TEST(EnergyDrift, AutonomousSystems) {
  EXPECT_LT(energy_drift(pendulum(), vec({2.0, 0.3}), 0.0, 10.0), 1e-5);
  EXPECT_LT(energy_drift(two_oscillators(), vec({0.3, -0.1, 0.2, 0.5}), 0.0, 5.0), 5e-6);
}

TEST(LoopAction, ClosedZetaOscillatorCircle) {
  const double r = 0.6;
  const Chain loop(circle(vec({0.2, 0.1}), r));
  const DriftSeries s = loop_action_drift(oscillator(), loop, 0.0, {0.0, 1.0, 2.5, 4.0}, LoopMode::closed_zeta);
  EXPECT_TRUE(s.pass);
  EXPECT_LT(s.max_drift(), 1e-6);
  // Counterclockwise in (x, p): int p dx = -area.
  EXPECT_NEAR(s.values.front(), -pi * r * r, 1e-12);
}

TEST(LoopAction, ExtendedAlphaLoop) {
  const auto driven = Hamiltonian::exact(
      1,
      [](const auto& t, const auto& z) { return 0.5 * (z(0) * z(0) + z(1) * z(1)) - 0.3 * z(0) * sin(2.0 * t); },
      false);
  // Loop in (t, x, p) that is not at constant time.
  const Chain loop(SingularCube::from_map(SmoothMap::exact<1>(1, 3, [](const auto& t, const auto& s) {
    using S = std::decay_t<decltype(t)>;
    const S th = 2.0 * pi * s(0);
    VecX<S> y(3);
    y << 0.3 * sin(th), 0.5 * cos(th), 0.4 * sin(th) + 0.1;
    return y;
  })));
  const DriftSeries s = loop_action_drift(driven, loop, 0.0, {0.0, 1.0, 2.0}, LoopMode::extended_alpha);
  EXPECT_TRUE(s.pass) << s.max_drift();
}

TEST(LoopAction, HomogeneousOpenCurve) {
  const auto abs_p = Hamiltonian::exact(
      1,
      [](const auto& t, const auto& z) {
        (void)t;
        return sqrt(z(1) * z(1));
      },
      true, true);
  const Chain seg(segment(vec({-0.5, 0.5}), vec({0.7, 1.5})));
  const DriftSeries s = loop_action_drift(abs_p, seg, 0.0, {0.0, 0.5, 1.0, 3.0}, LoopMode::homogeneous_open);
  EXPECT_TRUE(s.pass);
  EXPECT_LT(s.max_drift(), 1e-6);
  EXPECT_NEAR(s.values.front(), 1.2 * 1.0, 1e-13);

  EXPECT_THROW(loop_action_drift(oscillator(), seg, 0.0, {1.0}, LoopMode::homogeneous_open), PreconditionError);
}

TEST(LoopAction, OpenCurveNegativeControl) {
  const Chain seg(segment(vec({-0.5, 0.5}), vec({0.7, 1.5})));
  EXPECT_THROW(loop_action_drift(pendulum(), seg, 0.0, {1.0}, LoopMode::closed_zeta), PreconditionError);
  TransportOptions unchecked;
  unchecked.check_preconditions = false;
  const DriftSeries s = loop_action_drift(pendulum(), seg, 0.0, {0.0, 1.0, 2.0}, LoopMode::closed_zeta, unchecked);
  EXPECT_FALSE(s.pass);
  EXPECT_GT(s.max_drift(), 10 * s.tolerance);
}

TEST(GaussRelation, Examples) {
  const Vec x_hat = vec({0.2, -0.3}), p_hat = vec({0.6, 0.8});
  EXPECT_LT(gauss_relation_residual(euclidean_norm(), x_hat, p_hat, 0.0), 1e-12);
  EXPECT_LT(gauss_relation_residual(euclidean_norm(), x_hat, p_hat, 1.5), 1e-6);

  // Geodesics of the flat metric in polar coordinates (r, theta).
  const auto polar = Hamiltonian::exact(
      2,
      [](const auto& t, const auto& z) {
        (void)t;
        return sqrt(z(2) * z(2) + z(3) * z(3) / (z(0) * z(0)));
      },
      true, true);
  const Vec q_hat = vec({1.0, 0.3}), k_hat = vec({0.5, 0.7});
  EXPECT_LT(gauss_relation_residual(polar, q_hat, k_hat, 1.0), 1e-5);
  GaussSettings variational;
  variational.method = JacobianMethod::variational;
  EXPECT_LT(gauss_relation_residual(polar, q_hat, k_hat, 1.0, variational), 1e-10);

  EXPECT_THROW(gauss_relation_residual(oscillator(), vec({0.0}), vec({1.0}), 1.0), PreconditionError);
  EXPECT_THROW(gauss_relation_residual(euclidean_norm(), x_hat, vec({1e-5, 0.0}), 1.0), PreconditionError);
}

TEST(CanonicalPermutation, PreserveBetaAndHamiltonianShape) {
  const Mat omega = canonical_matrix(3);
  const auto perm = CanonicalPermutation::conjugate_swap(3, 1).then(CanonicalPermutation::index_swap(3, 0, 2));
  for (const auto& p : {CanonicalPermutation::conjugate_swap(3, 0), CanonicalPermutation::index_swap(3, 1, 2), perm})
    EXPECT_LT((p.matrix.transpose() * omega * p.matrix - omega).lpNorm<Eigen::Infinity>(), 1e-15);

  const auto h = Hamiltonian::exact(3, [](const auto& t, const auto& z) {
    (void)t;
    return z(0) * z(4) + sin(z(1)) * z(3) * z(3) + z(2) * z(5) * z(5);
  });
  const VectorField w = hamiltonian_field(h);
  const VectorField k = hamiltonian_field(transform(h, perm));
  for (const Vec& z : testsupport::random_points(10, 6, -1.0, 1.0, 105)) {
    const Vec big = perm.apply(z);
    EXPECT_LT((k(0.0, big) - perm.apply(w(0.0, z))).lpNorm<Eigen::Infinity>(), 1e-14);
    EXPECT_LT((perm.inverse(big) - z).norm(), 1e-15);
  }
}

TEST(Reduction, OscillatorGraphAndTrajectory) {
  const double h = 1.0;
  const Vec seed = vec({-0.6, 0.3, std::sqrt(2 * h - 0.36 - 0.09 - 0.16), 0.4});
  const ReducedSystem rs = reduce_on_energy_level(two_oscillators(), h, seed);
  EXPECT_EQ(rs.permutation().matrix, Mat::Identity(4, 4));
  for (const Vec& y : testsupport::random_points(10, 2, -0.3, 0.3, 106)) {
    const double t = -0.2;
    const double oracle = std::sqrt(2 * h - t * t - 2 * y(0) * y(0) - y(1) * y(1));
    EXPECT_NEAR(rs.g(t, y), oracle, 1e-12);
    EXPECT_NEAR(two_oscillators()(0.0, rs.lift(t, y)), h, 1e-12);
  }
  const ReductionComparison cmp = compare_reduction(two_oscillators(), seed, pi / 2);
  EXPECT_LT(cmp.sup_error, 1e-5);
  EXPECT_EQ(cmp.samples, 40u);
}

TEST(Reduction, FreeParticleIsFrozen) {
  const auto free = Hamiltonian::exact(2, [](const auto& t, const auto& z) {
    (void)t;
    return z(2) + 0.0 * z(3);
  });
  const ReducedSystem rs = reduce_on_energy_level(free, 1.5, vec({0.0, 0.2, 1.5, -0.3}));
  const Vec y = vec({0.4, 0.9});
  EXPECT_NEAR(rs.g(0.7, y), 1.5, 1e-14);
  EXPECT_NEAR(rs.reduced_hamiltonian()(0.7, y), -1.5, 1e-14);
  EXPECT_LT(rs.reduced_field()(0.7, y).norm(), 1e-14);
}

TEST(Reduction, DegenerateSeedsAndPermutation) {
  EXPECT_THROW(reduce_on_energy_level(two_oscillators(), 1.0, vec({1.0, 0.5, 0.0, 0.0})), DegeneracyError);
  ReductionOptions fixed;
  fixed.auto_permute = false;
  const Vec seed = vec({0.5, 0.2, 0.0, 1.2});
  EXPECT_THROW(reduce_on_energy_level(two_oscillators(), 1.0, seed, fixed), DegeneracyError);
  const ReducedSystem rs = reduce_on_energy_level(two_oscillators(), two_oscillators()(0.0, seed), seed);
  EXPECT_EQ(rs.permutation().matrix, CanonicalPermutation::index_swap(2, 0, 1).matrix);
  const auto [t, y] = rs.project(seed);
  EXPECT_DOUBLE_EQ(t, 0.2);
  EXPECT_LT((rs.lift(t, y) - seed).norm(), 1e-12);
  EXPECT_THROW(reduce_on_energy_level(Hamiltonian::exact(
                                          1, [](const auto& t, const auto& z) { return z(1) * z(1) + t; }, false),
                                      1.0, vec({0.0, 1.0})),
               PreconditionError);
}

namespace {

SectionSpec oscillator_section(double energy) {
  SectionSpec s;
  s.energy = energy;
  s.function = ScalarField::exact(4, [](const auto& t, const auto& z) {
    (void)t;
    return z(1);
  });
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

}  // namespace

TEST(PoincareSection, ReturnMapIsRotation) {
  const SectionSpec section = oscillator_section(1.0);
  const Vec c0 = vec({0.5, 0.3});
  const Vec z0 = section.chart(0.0, c0);
  const ReturnMap q = poincare_return_map(two_oscillators(), section, z0);
  const double tau = 2 * pi / std::sqrt(2.0);
  EXPECT_NEAR(q.return_time, tau, 1e-9);
  Mat rot(2, 2);
  rot << std::cos(tau), std::sin(tau), -std::sin(tau), std::cos(tau);
  EXPECT_LT((q.image_coordinates - rot * c0).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LT((q.jacobian - rot).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LT(section_symplecticity_residual(section, c0, q), 1e-5);
  EXPECT_NEAR(q.image(1), 0.0, 1e-10);
  EXPECT_GT(q.image(3), 0.0);
  for (const Vec& c : testsupport::random_points(10, 2, -0.6, 0.6, 107))
    EXPECT_GT(std::abs(restricted_form_matrix(section, c).determinant()), 1e-6);
}

TEST(PoincareSection, Failures) {
  SectionSpec section = oscillator_section(1.0);
  const Vec z0 = section.chart(0.0, vec({0.5, 0.3}));
  SectionSpec short_bound = section;
  short_bound.max_time = 2.0;
  EXPECT_THROW(next_crossing(two_oscillators(), short_bound, z0), EscapeError);

  // H = p moves x at unit speed; s = x (x - 1)^3 + p - 1 is crossed tangentially at x = 1.
  const auto drift = Hamiltonian::exact(1, [](const auto& t, const auto& z) {
    (void)t;
    return z(1);
  });
  SectionSpec tangent;
  tangent.function = ScalarField::exact(2, [](const auto& t, const auto& z) {
    (void)t;
    return z(0) * (z(0) - 1.0) * (z(0) - 1.0) * (z(0) - 1.0) + z(1) - 1.0;
  });
  EXPECT_THROW(next_crossing(drift, tangent, vec({0.0, 1.0})), SectionError);

  Vec off = z0;
  off(1) = 1e-6;
  EXPECT_THROW(next_crossing(two_oscillators(), section, off), PreconditionError);
}
