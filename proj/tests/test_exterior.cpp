#include <gtest/gtest.h>

#include <cmath>

#include "intinv/exterior.hpp"
#include "test_support.hpp"

using namespace intinv;
using testsupport::max_abs;
using testsupport::random_points;

namespace {

VectorField rotation2() {
  return VectorField::exact(2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << -x(1), x(0);
    return r;
  });
}

VectorField radial2() {
  return VectorField::exact(2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    return VecX<S>(x);
  });
}

// Smooth, non-polynomial fields on R^3 used by the property tests.
VectorField wavy3() {
  return VectorField::exact(3, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(3);
    r << sin(x(1)) + x(2) * x(0), cos(x(0) * x(2)) - x(1), x(0) * x(1) + 0.5 * exp(0.3 * x(2));
    return r;
  });
}

VectorField poly3() {
  return VectorField::exact(3, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(3);
    r << x(1) * x(1) - 0.5 * x(2), x(0) * x(2) + 1.0, x(0) - x(1) * x(2) * 0.3;
    return r;
  });
}

DifferentialForm wavy_one_form3() {
  return DifferentialForm::exact(3, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(3);
    c << x(0) * x(1), sin(x(2)) + x(0), cos(x(0) + x(1));
    return c;
  });
}

DifferentialForm wavy_two_form3() {
  return DifferentialForm::exact(3, 2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(3);
    c << exp(0.2 * x(0)) * x(2), x(1) * x(1) - x(0), sin(x(0) * x(1));
    return c;
  });
}

}  // namespace

TEST(MultiIndex, TableIsLexicographicAndRanked) {
  const auto table = index_table(4, 2);
  ASSERT_EQ(table.size(), 6u);
  EXPECT_EQ(table.front(), (MultiIndex{0, 1}));
  EXPECT_EQ(table.back(), (MultiIndex{2, 3}));
  for (std::size_t i = 0; i < table.size(); ++i) EXPECT_EQ(index_position(4, table[i]), static_cast<int>(i));
  EXPECT_EQ(binomial(5, 0), 1);
  EXPECT_EQ(binomial(5, 6), 0);
  EXPECT_THROW(index_position(3, {1, 1}), DimensionError);
}

TEST(Wedge, Examples) {
  const Vec x = Vec::Zero(2);
  const auto dx1 = DifferentialForm::basis(2, {0});
  const auto dx2 = DifferentialForm::basis(2, {1});
  EXPECT_EQ(max_abs(wedge(dx1, dx1)(0.0, x)), 0.0);

  const auto area = wedge(dx1, dx2);
  EXPECT_DOUBLE_EQ(area.evaluate(0.0, Vec::Constant(2, 0.7), Mat::Identity(2, 2)), 1.0);

  const auto x1dx1 = DifferentialForm::exact(2, 1, [](const auto& t, const auto& y) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << y(0), S(0.0);
    return c;
  });
  Vec p(2);
  p << 2.0, 0.0;
  EXPECT_DOUBLE_EQ(wedge(x1dx1, dx2)(0.0, p)(0), 2.0);
  EXPECT_THROW(wedge(area, dx1), DimensionError);
}

TEST(Wedge, GradedAnticommutativityAndAssociativity) {
  const auto a = wavy_one_form3();
  const auto b = DifferentialForm::exact(3, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(3);
    c << x(2), x(0) * x(0), S(1.0) + x(1);
    return c;
  });
  const auto c = DifferentialForm::basis(3, {2}, 0.5);
  for (const Vec& x : random_points(20, 3, -1, 1, 11)) {
    EXPECT_LT(max_abs(wedge(a, b)(0.0, x) + wedge(b, a)(0.0, x)), 1e-15);
    EXPECT_LT(max_abs(wedge(wedge(a, b), c)(0.0, x) - wedge(a, wedge(b, c))(0.0, x)), 1e-14);
  }
}

TEST(ExteriorDerivative, Examples) {
  const auto x1dx2 = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << S(0.0), x(0);
    return c;
  });
  const auto x2dx1 = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << x(1), S(0.0);
    return c;
  });
  const auto f = ScalarField::exact(2, [](const auto& t, const auto& x) { return x(0) * x(1); });
  for (const Vec& x : random_points(10, 2, -2, 2, 3)) {
    EXPECT_NEAR(exterior_derivative(x1dx2)(0.0, x)(0), 1.0, 1e-15);
    EXPECT_NEAR(exterior_derivative(x2dx1)(0.0, x)(0), -1.0, 1e-15);
    EXPECT_LT(max_abs(exterior_derivative(exterior_derivative(f))(0.0, x)), 1e-8);
  }
}

TEST(ExteriorDerivative, SampledFormsUseCentralDifferences) {
  const auto sampled = DifferentialForm::sampled(2, 1, [](const double&, const Vec& x) {
    Vec c(2);
    c << std::sin(x(1)), x(0) * x(0);
    return c;
  });
  for (const Vec& x : random_points(10, 2, -1, 1, 5)) {
    const double expected = 2 * x(0) - std::cos(x(1));
    EXPECT_NEAR(exterior_derivative(sampled)(0.0, x)(0), expected, 1e-9);
  }
}

TEST(InteriorProduct, Examples) {
  const Vec x = Vec::Constant(3, 0.3);
  const auto e1 = VectorField::constant(Vec::Unit(2, 0));
  const auto area = DifferentialForm::basis(2, {0, 1});
  const Vec r = interior_product(e1, area)(0.0, Vec::Zero(2));
  EXPECT_EQ(r(0), 0.0);
  EXPECT_EQ(r(1), 1.0);

  // omega^2_A for A = e1 is dx2 ^ dx3; contracting with B = e2 leaves dx3 = omega^1_{A x B}.
  const auto omega2 = DifferentialForm::basis(3, {1, 2});
  const Vec c = interior_product(VectorField::constant(Vec::Unit(3, 1)), omega2)(0.0, x);
  EXPECT_EQ(c, Vec::Unit(3, 2));

  EXPECT_THROW(interior_product(e1, DifferentialForm::zero(2, 0)), DegreeError);
}

TEST(InteriorProduct, NilpotentAndLeibniz) {
  const auto v = wavy3();
  const auto a = wavy_one_form3();
  const auto b = wavy_two_form3();
  for (const Vec& x : random_points(25, 3, -1, 1, 7)) {
    EXPECT_LT(max_abs(interior_product(v, interior_product(v, b))(0.0, x)), 1e-12);
    // i_v(a ^ b) = (i_v a) ^ b - a ^ (i_v b) for deg a = 1.
    const Vec lhs = interior_product(v, wedge(a, b))(0.0, x);
    const Vec rhs = (wedge(interior_product(v, a), b) - wedge(a, interior_product(v, b)))(0.0, x);
    EXPECT_LT(max_abs(lhs - rhs), 1e-12);
  }
}

TEST(LieDerivative, Examples) {
  const auto rot = rotation2();
  const auto area = DifferentialForm::basis(2, {0, 1});
  const auto x1dx2 = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << S(0.0), x(0);
    return c;
  });
  LieOptions fd;
  fd.mode = LieMode::flow_fd;
  for (const Vec& x : random_points(10, 2, -1, 1, 13)) {
    EXPECT_LT(max_abs(lie_derivative(rot, area)(0.0, x)), 1e-15);
    // Oracle: coordinate formula (L_v w)_i = v^s d_s w_i + w_s d_i v^s, coded by hand.
    Vec oracle(2);
    oracle << x(0), -x(1);
    EXPECT_LT(max_abs(lie_derivative(rot, x1dx2)(0.0, x) - oracle), 1e-14);
    EXPECT_LT(max_abs(lie_derivative(rot, x1dx2, fd)(0.0, x) - oracle), 1e-6);
    EXPECT_NEAR(lie_derivative(radial2(), area)(0.0, x)(0), 2.0, 1e-14);
  }
}

TEST(LieDerivative, CartanAgreesWithFlowDifference) {
  LieOptions fd;
  fd.mode = LieMode::flow_fd;
  const auto v = wavy3();
  for (const auto& omega : {wavy_one_form3(), wavy_two_form3()}) {
    const auto cartan = lie_derivative(v, omega);
    const auto flow = lie_derivative(v, omega, fd);
    for (const Vec& x : random_points(10, 3, -0.8, 0.8, 17))
      EXPECT_LT(max_abs(cartan(0.0, x) - flow(0.0, x)), 1e-5);
  }
}

TEST(LieDerivative, CommutesWithExteriorDerivative) {
  const auto v = wavy3();
  const auto a = wavy_one_form3();
  const auto lhs = lie_derivative(v, exterior_derivative(a));
  const auto rhs = exterior_derivative(lie_derivative(v, a));
  for (const Vec& x : random_points(20, 3, -1, 1, 19)) EXPECT_LT(max_abs(lhs(0.0, x) - rhs(0.0, x)), 1e-6);
}

TEST(LieDerivative, CommutatorIdentity) {
  // With [A, B] = (dA/dx) B - (dB/dx) A one has L_u i_v - i_v L_u = i_{[v, u]}.
  const auto u = poly3();
  const auto v = wavy3();
  for (const auto& omega : {wavy_one_form3(), wavy_two_form3()}) {
    const auto lhs = lie_derivative(u, interior_product(v, omega)) - interior_product(v, lie_derivative(u, omega));
    const auto rhs = interior_product(commutator(v, u), omega);
    for (const Vec& x : random_points(20, 3, -1, 1, 23)) EXPECT_LT(max_abs(lhs(0.0, x) - rhs(0.0, x)), 1e-6);
  }
}

TEST(LieDerivative, ScalarFieldIsDirectionalDerivative) {
  const auto f = ScalarField::exact(2, [](const auto& t, const auto& x) { return x(0) * x(0) * x(1); });
  const auto lf = lie_derivative(rotation2(), f);
  for (const Vec& x : random_points(10, 2, -1, 1, 29)) {
    const double expected = -x(1) * 2 * x(0) * x(1) + x(0) * x(0) * x(0);
    EXPECT_NEAR(lf(0.0, x), expected, 1e-14);
  }
}

TEST(Pullback, Examples) {
  const auto area = DifferentialForm::basis(2, {0, 1});
  const auto linear = SmoothMap::exact(2, 2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << 2.0 * x(0) + x(1), x(1);
    return r;
  });
  const auto identity = SmoothMap::exact(2, 2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    return VecX<S>(x);
  });
  const auto bumpy = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << sin(x(0)) * x(1), exp(x(0) - x(1));
    return c;
  });
  const auto u = SmoothMap::exact(2, 2, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(2);
    r << x(0) * x(1) + sin(x(1)), x(0) - x(1) * x(1);
    return r;
  });
  const auto f = ScalarField::exact(2, [](const auto& t, const auto& x) { return x(0) * x(0) + cos(x(1)); });
  const ScalarField f_of_u(SmoothMap::exact(2, 1, [u, f](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(1);
    r(0) = f(t, VecX<S>(u(t, x)));
    return r;
  }));
  for (const Vec& x : random_points(10, 2, -1, 1, 31)) {
    EXPECT_NEAR(pullback(linear, area)(0.0, x)(0), 2.0, 1e-15);
    EXPECT_LT(max_abs(pullback(identity, bumpy)(0.0, x) - bumpy(0.0, x)), 1e-15);
    EXPECT_LT(max_abs(pullback(u, exterior_derivative(f))(0.0, x) - exterior_derivative(f_of_u)(0.0, x)), 1e-7);
  }
  EXPECT_THROW(pullback(SmoothMap::exact(3, 3, [](const auto&, const auto& x) { return x; }), area),
               DimensionError);
}

TEST(Pullback, NaturalityWithExteriorDerivative) {
  const auto u = SmoothMap::exact(3, 3, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> r(3);
    r << x(0) + 0.2 * sin(x(1)), x(1) * (1.0 + 0.1 * x(2)), x(2) + x(0) * x(1) * 0.3;
    return r;
  });
  const auto a = wavy_one_form3();
  const auto lhs = exterior_derivative(pullback(u, a));
  const auto rhs = pullback(u, exterior_derivative(a));
  for (const Vec& x : random_points(15, 3, -1, 1, 37)) EXPECT_LT(max_abs(lhs(0.0, x) - rhs(0.0, x)), 1e-10);
}

TEST(ExtendedSpace, DtWedgeAndTimeDerivative) {
  const auto omega = DifferentialForm::exact(2, 1, [](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(2);
    c << t * x(0), sin(t) * x(1);
    return c;
  });
  Vec y(3);
  y << 0.4, 1.5, -0.5;
  const Vec ext = to_extended(omega)(99.0, y);
  EXPECT_EQ(ext(0), 0.0);
  EXPECT_DOUBLE_EQ(ext(1), 0.4 * 1.5);
  const Vec dtw = dt_wedge(omega)(0.0, y);
  ASSERT_EQ(dtw.size(), 3);
  EXPECT_DOUBLE_EQ(dtw(0), 0.4 * 1.5);
  EXPECT_DOUBLE_EQ(dtw(1), std::sin(0.4) * -0.5);
  EXPECT_EQ(dtw(2), 0.0);
  const Vec dot = time_derivative(omega)(0.4, Vec(y.tail(2)));
  EXPECT_NEAR(dot(0), 1.5, 1e-15);
  EXPECT_NEAR(dot(1), std::cos(0.4) * -0.5, 1e-15);
}
