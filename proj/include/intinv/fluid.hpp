#pragma once

// Vector calculus in right-handed Euclidean R^3 and its dictionary with forms:
//   w1_A = A_i dx^i,  w2_A = A_1 dx^2^dx^3 + A_2 dx^3^dx^1 + A_3 dx^1^dx^2,  w3_f = f dx^1^dx^2^dx^3.
// Pointwise vector-calculus operators use central differences.

#include <optional>
#include <vector>

#include "intinv/invariance.hpp"

namespace intinv {

enum class Handedness { right, left };

/// w1_A (degree 1) or w2_A (degree 2). Left-handed charts are rejected.
DifferentialForm vector_to_form(const VectorField& a, int degree, Handedness chart = Handedness::right);
DifferentialForm scalar_to_form(const ScalarField& f, Handedness chart = Handedness::right);
/// Inverse of vector_to_form for degree 1 or 2 forms on R^3.
VectorField form_to_vector(const DifferentialForm& omega);
/// Inverse of scalar_to_form.
ScalarField form_to_scalar(const DifferentialForm& omega);

/// Coefficients of w2 for a vector value: (A3, -A2, A1) on (12, 13, 23).
Vec two_form_coefficients(const Vec& a);
Vec two_form_vector(const Vec& coefficients);

Vec cross(const Vec& a, const Vec& b);

/// J(i, j) = dA_i/dx^j by central differences.
Mat fd_jacobian(const VectorField& a, double t, const Vec& x, double h = kDefaultFdStep);
Vec fd_curl(const VectorField& a, double t, const Vec& x, double h = kDefaultFdStep);
double fd_div(const VectorField& a, double t, const Vec& x, double h = kDefaultFdStep);
Vec fd_grad(const ScalarField& f, double t, const Vec& x, double h = kDefaultFdStep);
Vec fd_time_partial(const VectorField& a, double t, const Vec& x, double h = kDefaultFdStep);

/// Pointwise field products as (non-exact) fields.
VectorField cross_field(const VectorField& a, const VectorField& b);
ScalarField dot_field(const VectorField& a, const VectorField& b);
VectorField scaled_field(const ScalarField& f, const VectorField& a);

/// max |d w1_A - w2_{curl A}|, |d w2_A - w3_{div A}| and |df - w1_{grad f}| at the samples.
double bridge_derivative_residual(const VectorField& a, const ScalarField& f, const std::vector<Vec>& samples,
                                  double t = 0.0);
/// max |i_B w1_A - A.B|, |i_B w2_A - w1_{AxB}| and |i_B w3_f - f w2_B| at the samples.
double bridge_naturality_residual(const VectorField& a, const VectorField& b, const ScalarField& f,
                                  const std::vector<Vec>& samples, double t = 0.0);

/// which = 1 or 2: max coefficient difference between d/dt w_A + L_v w_A (exterior calculus)
/// and the bridged vector-calculus right side, with central-difference derivatives.
double lie_formula_check(const VectorField& v, const VectorField& a, int which, const std::vector<Vec>& samples,
                         double t = 0.0);
/// which = 3 for a density f.
double lie_formula_check(const VectorField& v, const ScalarField& f, const std::vector<Vec>& samples,
                         double t = 0.0);

/// max |curl(A x B) - [A, B] - A div B + B div A| at the samples.
double vector_identity_check(const VectorField& a, const VectorField& b, const std::vector<Vec>& samples,
                             double t = 0.0);

enum class FluidCase { circulation = 1, flux = 2, mass = 3 };

struct FluidScenario {
  FluidCase kind = FluidCase::circulation;
  VectorField velocity;
  /// Advected vector for circulation and flux.
  VectorField a;
  /// Advected density for mass.
  ScalarField f;
  /// Potential psi with dA/dt + curl A x v = grad psi (circulation only).
  std::optional<ScalarField> psi;
  /// Closed curve, surface or domain.
  Chain object;
  double t0 = 0.0;
};

struct FluidOptions {
  SweepSettings sweep;
  double tolerance_rate = 1e-6;
  double premise_tolerance = 1e-7;
  bool check_premise = true;
  /// Parameter points per axis at which the premise is checked along the flow.
  int premise_points_per_axis = 3;
  double closure_tolerance = 1e-8;
};

/// Pointwise premise residual of the selected case at (t, x).
double premise_residual(const FluidScenario& s, double t, const Vec& x, double h = kDefaultFdStep);

/// Integral of the bridged form over the transported object at each time. With check_premise the
/// premise is verified along transported object points and a failure throws PreconditionError.
DriftSeries transport_conservation_check(const FluidScenario& s, const std::vector<double>& times,
                                         const FluidOptions& options = {});

}  // namespace intinv
