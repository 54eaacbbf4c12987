#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "intinv/chain.hpp"
#include "test_support.hpp"

using namespace intinv;
using std::numbers::pi;

namespace {

Vec vec2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

DifferentialForm circulation_form() {
  return DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << -x(1), x(0);
    return c;
  });
}

DifferentialForm smooth_one_form() {
  return DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << exp(x(1)) * sin(3.0 * x(0)), cos(2.0 * x(0) * x(1));
    return c;
  });
}

SingularCube unit_square() { return box(Vec::Zero(2), Vec::Ones(2), 2); }

VectorField rotation() {
  return VectorField::exact(2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << -x(1), x(0);
    return r;
  });
}

}  // namespace

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  std::vector<double> x, w;
  gauss_legendre(5, x, w);
  double sum8 = 0.0, sum10 = 0.0;
  for (int i = 0; i < 5; ++i) {
    sum8 += w[i] * std::pow(x[i], 8);
    sum10 += w[i] * std::pow(x[i], 10);
  }
  EXPECT_NEAR(sum8, 2.0 / 9.0, 1e-15);
  EXPECT_GT(std::abs(sum10 - 2.0 / 11.0), 1e-6);
  const CubeRule rule = cube_rule(2, {});
  EXPECT_EQ(rule.weights.size(), 400u);
}

TEST(IntegrateOverChain, Examples) {
  const auto area = DifferentialForm::basis(2, {0, 1});
  EXPECT_NEAR(integrate_over_chain(area, Chain(unit_square()), {}, 0.0), 1.0, 1e-14);

  // Closed form: the circulation of x^1 dx^2 - x^2 dx^1 around the unit circle is 2 pi.
  const double circ = integrate_over_chain(circulation_form(), Chain(circle(Vec::Zero(2), 1.0)), {5, 8}, 0.0);
  EXPECT_NEAR(circ, 2 * pi, 1e-10);

  EXPECT_EQ(integrate_over_chain(smooth_one_form(), Chain(circle(Vec::Zero(2), 1.0), 0), {}, 0.0), 0.0);
  EXPECT_THROW(integrate_over_chain(area, Chain(circle(Vec::Zero(2), 1.0)), {}, 0.0), DegreeError);
}

TEST(IntegrateOverChain, LinearityAndOrientation) {
  const SingularCube c = circle(vec2(0.2, -0.1), 0.7);
  const auto a = smooth_one_form();
  const auto b = circulation_form();
  const double ia = integrate_over_chain(a, Chain(c), {}, 0.0);
  const double ib = integrate_over_chain(b, Chain(c), {}, 0.0);
  EXPECT_DOUBLE_EQ(integrate_over_chain(a, Chain(c, 3), {}, 0.0), 3 * ia);
  EXPECT_NEAR(integrate_over_chain(2.0 * a + b, Chain(c), {}, 0.0), 2 * ia + ib, 1e-14);
  EXPECT_EQ(integrate_over_chain(a, Chain(c.flipped()), {}, 0.0), -ia);
  Chain two(c);
  two.add(c.flipped(), 2);
  EXPECT_NEAR(integrate_over_chain(a, two, {}, 0.0), -ia, 1e-15);
}

TEST(IntegrateOverChain, DoublingNodesIsStable) {
  const auto a = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << sin(x(1)) * x(0), exp(0.5 * x(0));
    return c;
  });
  const SingularCube c = disk(vec2(0.1, 0.3), 0.5);
  const auto da = exterior_derivative(a);
  const double base = integrate_over_chain(da, Chain(c), {5, 4}, 0.0);
  EXPECT_LT(std::abs(base - integrate_over_chain(da, Chain(c), {5, 8}, 0.0)), 1e-9);
  EXPECT_LT(std::abs(base - integrate_over_chain(da, Chain(c), {10, 4}, 0.0)), 1e-9);
}

TEST(Boundary, Examples) {
  const SingularCube seg = segment(vec2(0.0, 1.0), vec2(2.0, -1.0));
  const auto f = DifferentialForm::function(ScalarField::exact(2, [](const auto& t, const auto& x) {
    (void)t;
    return x(0) * x(0) + x(1);
  }));
  EXPECT_NEAR(integrate_over_chain(f, boundary(seg), {}, 0.0), (4.0 - 1.0) - (0.0 + 1.0), 1e-15);

  const Chain edges = boundary(unit_square());
  ASSERT_EQ(edges.terms().size(), 4u);
  // One counterclockwise traversal: x^1 dx^2 - x^2 dx^1 integrates to twice the area.
  EXPECT_NEAR(integrate_over_chain(circulation_form(), edges, {}, 0.0), 2.0, 1e-14);

  const SingularCube cube = box(Vec::Zero(3), Vec::Ones(3), 3);
  const auto probe = DifferentialForm::exact(3, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(3);
    c << sin(x(1)) * x(2), exp(x(0)), x(0) * x(1) * x(2);
    return c;
  });
  EXPECT_LT(std::abs(integrate_over_chain(probe, boundary(boundary(cube)), {}, 0.0)), 1e-12);
  EXPECT_THROW(boundary(SingularCube::point(vec2(0, 0))), DegreeError);
}

TEST(Boundary, ClosureDefect) {
  EXPECT_LT(closure_defect(Chain(circle(vec2(0.3, 0.2), 0.5))), 1e-8);
  EXPECT_GT(closure_defect(Chain(disk(vec2(0.3, 0.2), 0.5))), 1e-3);
  EXPECT_GT(closure_defect(Chain(segment(vec2(0, 0), vec2(1, 0)))), 1e-3);
}

TEST(StokesResidual, Examples) {
  const auto x1dx2 = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << S(0.0), x(0);
    return c;
  });
  EXPECT_LT(stokes_residual(x1dx2, unit_square()), 1e-10);
  EXPECT_LT(std::abs(integrate_over_chain(DifferentialForm::constant(2, 1, vec2(0.3, -2.0)),
                                          Chain(circle(vec2(1, 1), 2.0)), {}, 0.0)),
            1e-12);
  EXPECT_LT(stokes_residual(DifferentialForm::constant(2, 1, vec2(0.3, -2.0)), disk(vec2(1, 1), 2.0)), 1e-12);
}

TEST(StokesResidual, ConvergesUnderPanelRefinement) {
  const auto omega = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << sin(4.0 * x(1)) * exp(x(0)), cos(5.0 * x(0) * x(1));
    return c;
  });
  const SingularCube c = box(vec2(-1, -1), vec2(2, 2), 2);
  const double coarse = stokes_residual(omega, c, {2, 2});
  const double fine = stokes_residual(omega, c, {2, 4});
  EXPECT_GT(coarse, 0.0);
  EXPECT_GE(coarse / fine, 10.0);
}

TEST(TransportChain, IdentityFlowKeepsIntegrals) {
  const Chain c(circle(vec2(0.1, 0.4), 0.6));
  const Chain moved = transport_chain(c, FlowMap(VectorField::zero(2), 0.0, 1.0));
  for (const auto& omega : {smooth_one_form(), circulation_form()})
    EXPECT_NEAR(integrate_over_chain(omega, moved, {}, 0.0), integrate_over_chain(omega, c, {}, 0.0), 1e-15);
}

TEST(TransportChain, RotationPreservesDiskArea) {
  const Chain d(disk(vec2(0.5, 0.0), 0.3));
  const auto area = DifferentialForm::basis(2, {0, 1});
  const double before = integrate_over_chain(area, d, {}, 0.0);
  const double after = integrate_over_chain(area, transport_chain(d, FlowMap(rotation(), 0.0, 1.7)), {}, 0.0);
  EXPECT_NEAR(before, pi * 0.09, 1e-13);
  EXPECT_NEAR(after, before, 1e-9);
}

TEST(TransportChain, ShearKeepsAreaButNotEveryCirculation) {
  const auto shear = VectorField::exact(2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << x(1), S(0.0);
    return r;
  });
  const auto area = DifferentialForm::basis(2, {0, 1});
  const auto quad = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << S(0.0), x(0) * x(0);
    return c;
  });
  const Chain d(disk(vec2(0.0, 0.5), 0.4));
  const Chain loop(circle(vec2(0.0, 0.5), 0.4));
  const std::vector<double> times{0.0, 0.5, 1.0, 2.0};
  const auto areas = transported_integrals(shear, area, d, 0.0, times);
  const auto circs = transported_integrals(shear, quad, loop, 0.0, times);
  for (std::size_t i = 1; i < times.size(); ++i) {
    EXPECT_NEAR(areas[i], areas[0], 1e-12);
    EXPECT_GT(std::abs(circs[i] - circs[0]), 1e-3);
  }
}

TEST(TransportChain, SweepMatchesTransportedChain) {
  const Chain d(disk(vec2(0.5, 0.2), 0.3));
  const auto pend = VectorField::exact(2, [](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << z(1), -sin(z(0));
    return r;
  });
  const auto omega = DifferentialForm::exact(2, 2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(1);
    c << S(1.0) + x(0) * x(0);
    return c;
  });
  const auto sweep = transported_integrals(pend, omega, d, 0.0, {1.3});
  const double direct = integrate_over_chain(omega, transport_chain(d, FlowMap(pend, 0.0, 1.3)), {}, 0.0);
  EXPECT_NEAR(sweep[0], direct, 1e-13);
}
