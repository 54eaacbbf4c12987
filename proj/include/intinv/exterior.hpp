#pragma once

// Exterior algebra and calculus on a single coordinate chart.
//
// A k-form on an m-dimensional chart stores one coefficient per strictly
// increasing multi-index (i_1 < ... < i_k), in lexicographic order. Indices are
// 0-based. Coefficients may depend on time; exterior_derivative is the spatial
// differential d_x, with t treated as a parameter.

#include <vector>

#include "intinv/smooth_map.hpp"

namespace intinv {

using MultiIndex = std::vector<int>;

/// C(n, k); zero outside 0 <= k <= n.
int binomial(int n, int k);
/// All strictly increasing k-tuples of {0..m-1} in lexicographic order.
std::vector<MultiIndex> index_table(int m, int k);
/// Position of idx in index_table(m, idx.size()); throws DimensionError if invalid.
int index_position(int m, const MultiIndex& idx);
bool is_increasing(const MultiIndex& idx, int m);

/// Scalar field f(t, x) on an m-dimensional chart.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(SmoothMap map);

  template <int MaxLevel = SmoothMap::kMaxStoredLevel, class F>
  static ScalarField exact(int dim, F f) {
    return ScalarField(SmoothMap::exact_scalar<MaxLevel>(dim, f));
  }
  static ScalarField sampled(int dim, std::function<double(double, const Vec&)> f,
                             double h_fd = kDefaultFdStep);

  template <class S>
  S operator()(const S& t, const VecX<S>& x) const {
    return map_(t, x)(0);
  }
  double operator()(double t, const Vec& x) const { return map_(t, x)(0); }
  Vec gradient(double t, const Vec& x) const { return intinv::gradient(map_, t, x); }
  double time_partial(double t, const Vec& x) const { return intinv::time_partial(map_, t, x)(0); }

  int dim() const { return map_.in_dim(); }
  const SmoothMap& map() const { return map_; }

 private:
  SmoothMap map_;
};

/// Vector field v(t, x) on an m-dimensional chart.
class VectorField {
 public:
  VectorField() = default;
  VectorField(SmoothMap map, bool time_dependent);

  template <int MaxLevel = SmoothMap::kMaxStoredLevel, class F>
  static VectorField exact(int dim, F f, bool time_dependent = false) {
    return VectorField(SmoothMap::exact<MaxLevel>(dim, dim, f), time_dependent);
  }
  static VectorField sampled(int dim, SmoothMap::Fn<double> f, bool time_dependent = false,
                             double h_fd = kDefaultFdStep);
  static VectorField constant(const Vec& c);
  static VectorField zero(int dim);

  template <class S>
  VecX<S> operator()(const S& t, const VecX<S>& x) const {
    return map_(t, x);
  }
  Vec operator()(double t, const Vec& x) const { return map_(t, x); }
  /// Row s, column i holds d v^s / d x^i.
  Mat jacobian(double t, const Vec& x) const { return intinv::jacobian(map_, t, x); }
  Vec time_partial(double t, const Vec& x) const { return intinv::time_partial(map_, t, x); }

  int dim() const { return map_.in_dim(); }
  bool time_dependent() const { return time_dependent_; }
  const SmoothMap& map() const { return map_; }

 private:
  SmoothMap map_;
  bool time_dependent_ = false;
};

class DifferentialForm {
 public:
  DifferentialForm() = default;
  DifferentialForm(int dim, int degree, SmoothMap coefficients);

  /// f(t, x) -> VecX<S> of length C(dim, degree).
  template <int MaxLevel = SmoothMap::kMaxStoredLevel, class F>
  static DifferentialForm exact(int dim, int degree, F f) {
    return DifferentialForm(dim, degree, SmoothMap::exact<MaxLevel>(dim, binomial(dim, degree), f));
  }
  static DifferentialForm sampled(int dim, int degree, SmoothMap::Fn<double> f,
                                  double h_fd = kDefaultFdStep);
  static DifferentialForm constant(int dim, int degree, const Vec& coefficients);
  static DifferentialForm zero(int dim, int degree);
  /// scale * dx^{i_1} ^ ... ^ dx^{i_k}; idx need not be sorted (sign is applied).
  static DifferentialForm basis(int dim, const MultiIndex& idx, double scale = 1.0);
  static DifferentialForm function(const ScalarField& f);

  template <class S>
  VecX<S> coefficients(const S& t, const VecX<S>& x) const {
    return coeffs_(t, x);
  }
  Vec operator()(double t, const Vec& x) const { return coeffs_(t, x); }
  double component(double t, const Vec& x, const MultiIndex& idx) const;
  /// omega(xi_1, ..., xi_k) with the vectors as columns (dim x k).
  double evaluate(double t, const Vec& x, const Mat& vectors) const;

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int size() const { return binomial(dim_, degree_); }
  const SmoothMap& map() const { return coeffs_; }

 private:
  int dim_ = 0;
  int degree_ = 0;
  SmoothMap coeffs_;
};

DifferentialForm operator+(const DifferentialForm& a, const DifferentialForm& b);
DifferentialForm operator-(const DifferentialForm& a, const DifferentialForm& b);
DifferentialForm operator-(const DifferentialForm& a);
DifferentialForm operator*(double s, const DifferentialForm& a);
/// f * omega for a scalar field f.
DifferentialForm operator*(const ScalarField& f, const DifferentialForm& a);

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField operator*(double s, const VectorField& a);

DifferentialForm wedge(const DifferentialForm& a, const DifferentialForm& b);
/// Spatial exterior derivative d_x.
DifferentialForm exterior_derivative(const DifferentialForm& omega);
/// Differential of a scalar field as a 1-form.
DifferentialForm exterior_derivative(const ScalarField& f);
DifferentialForm interior_product(const VectorField& v, const DifferentialForm& omega);
/// d omega / d t, coefficientwise.
DifferentialForm time_derivative(const DifferentialForm& omega);

enum class LieMode { cartan, flow_fd };

struct LieOptions {
  LieMode mode = LieMode::cartan;
  /// Symmetric difference step for flow_fd.
  double fd_time_step = 1e-3;
  /// Integrator step used inside flow_fd; each half-interval uses ceil(dt/step) RK4 steps.
  double integrator_step = 2.5e-4;
};

/// Spatial Lie derivative of omega along v(t, .) (time frozen at the evaluation time).
DifferentialForm lie_derivative(const VectorField& v, const DifferentialForm& omega,
                                const LieOptions& options = {});
/// Lie derivative of a scalar field: v^i df/dx^i.
ScalarField lie_derivative(const VectorField& v, const ScalarField& f);

/// Pull back omega (on an m-chart) through u : R^n -> R^m given as a SmoothMap (time passes through).
DifferentialForm pullback(const SmoothMap& u, const DifferentialForm& omega);

/// Commutator [u, v] = (du/dx) v - (dv/dx) u.
VectorField commutator(const VectorField& u, const VectorField& v);

// ---- extended space (t, x) with t as coordinate 0 ------------------------------

/// Regards a time-dependent form on M as a form on (t, x) without dt components.
DifferentialForm to_extended(const DifferentialForm& omega);
/// dt ^ omega on the extended space.
DifferentialForm dt_wedge(const DifferentialForm& omega);
/// The one-form dt on an extended space of the given dimension.
DifferentialForm dt_form(int extended_dim);

/// Max-abs coefficient of omega at (t, x).
double coefficient_norm(const DifferentialForm& omega, double t, const Vec& x);

}  // namespace intinv
