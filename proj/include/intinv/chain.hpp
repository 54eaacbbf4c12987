#pragma once

// Singular cubes s -> x on [0,1]^k, integer chains of them, composite
// Gauss-Legendre quadrature, the boundary operator and flow transport.

#include <functional>
#include <vector>

#include "intinv/exterior.hpp"
#include "intinv/flow.hpp"

namespace intinv {

/// Image point and tangent columns d x / d s^j (dim x k) at a parameter point.
struct CubeSample {
  Vec point;
  Mat tangents;
};

class SingularCube {
 public:
  using Sampler = std::function<CubeSample(const Vec&)>;

  SingularCube() = default;
  SingularCube(int k, int dim, Sampler sampler, int orientation = 1);

  /// map: R^k -> R^dim (time argument ignored); tangents from its exact Jacobian.
  static SingularCube from_map(const SmoothMap& map, int orientation = 1);
  /// Constant point as a 0-cube.
  static SingularCube point(const Vec& x, int orientation = 1);

  CubeSample sample(const Vec& s) const;
  /// The (k-1)-face with parameter `axis` fixed to `side` (0 or 1).
  SingularCube face(int axis, int side) const;
  SingularCube flipped() const;

  int degree() const { return k_; }
  int dim() const { return dim_; }
  int orientation() const { return orientation_; }

 private:
  int k_ = 0;
  int dim_ = 0;
  int orientation_ = 1;
  Sampler sampler_;
};

struct ChainTerm {
  int coefficient = 1;
  SingularCube cube;
};

class Chain {
 public:
  Chain() = default;
  explicit Chain(SingularCube cube, int coefficient = 1);

  void add(SingularCube cube, int coefficient = 1);
  Chain& operator+=(const Chain& other);

  const std::vector<ChainTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  /// Common degree of all cubes; throws DegreeError on a mixed chain, -1 when empty.
  int degree() const;
  int dim() const;

 private:
  std::vector<ChainTerm> terms_;
};

Chain operator*(int coefficient, const Chain& c);
Chain operator+(const Chain& a, const Chain& b);

struct QuadratureSpec {
  int points_per_axis = 5;
  int panels_per_axis = 4;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Tensor composite rule on [0,1]^k; node i is nodes.col(i).
struct CubeRule {
  Mat nodes;
  std::vector<double> weights;
};
CubeRule cube_rule(int k, const QuadratureSpec& q);

/// omega(t, x) applied to the tangent columns.
double pair_form(const Vec& coefficients, int dim, int degree, const Mat& tangents);

double integrate_over_cube(const DifferentialForm& omega, const SingularCube& c, const QuadratureSpec& q, double t);
double integrate_over_chain(const DifferentialForm& omega, const Chain& c, const QuadratureSpec& q, double t);

Chain boundary(const SingularCube& c);
Chain boundary(const Chain& c);

/// Max |integral over the boundary| of fixed trigonometric probe (k-1)-forms; ~0 for closed chains.
double closure_defect(const Chain& c, const QuadratureSpec& q = {});
/// |int_{dc} omega - int_c d omega|.
double stokes_residual(const DifferentialForm& omega, const SingularCube& c, const QuadratureSpec& q = {});

/// Each cube composed with the flow map; tangents carried by the flow Jacobian.
/// Transported samples are cached per parameter point.
Chain transport_chain(const Chain& c, const FlowMap& flow);

enum class FormTime { initial, transported };

struct SweepSettings {
  QuadratureSpec quadrature;
  double step = kDefaultStep;
  /// initial: omega evaluated at t0; transported: at each requested time.
  FormTime form_time = FormTime::initial;
};

/// int_{G^t_{t0}(c)} omega for every t in times, one integration pass per quadrature node.
/// Node work runs through parallel_for; sums are reduced in node order.
std::vector<double> transported_integrals(const VectorField& v, const DifferentialForm& omega, const Chain& c,
                                          double t0, const std::vector<double>& times,
                                          const SweepSettings& settings = {});

// ---- shapes ------------------------------------------------------------------

/// Circle of the given radius in the (axis_a, axis_b) coordinate plane, counterclockwise.
SingularCube circle(const Vec& center, double radius, int axis_a = 0, int axis_b = 1);
/// Polar disk (s1 radial, s2 angular), positively oriented in the (axis_a, axis_b) plane.
SingularCube disk(const Vec& center, double radius, int axis_a = 0, int axis_b = 1);
/// Axis-aligned box [lo, lo + size] in the first k coordinates of a dim-dimensional chart.
SingularCube box(const Vec& lo, const Vec& size, int dim);
/// Straight segment from a to b.
SingularCube segment(const Vec& a, const Vec& b);
/// Solid ball in R^3 by spherical coordinates.
SingularCube ball3(const Vec& center, double radius);

}  // namespace intinv
