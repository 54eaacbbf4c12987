#pragma once

// Riemannian charts, geodesics of H = g^{ij} p_i p_j / 2 and distance-like
// solutions of g^{ij} f_i f_j = 1 built from normal geodesic fans.

#include <functional>
#include <vector>

#include "intinv/hamiltonian.hpp"

namespace intinv {

class Metric {
 public:
  Metric() = default;
  /// entries : x -> column-major g(x) of size dim * dim (time ignored).
  Metric(int dim, SmoothMap entries);

  /// f(x) -> MatX<S> is a generic callable.
  template <class F>
  static Metric exact(int dim, F f) {
    return Metric(dim, SmoothMap::exact(dim, dim * dim, [f, dim](const auto&, const auto& x) {
                    using S = typename std::decay_t<decltype(x)>::Scalar;
                    const MatX<S> g = f(x);
                    return VecX<S>(Eigen::Map<const VecX<S>>(g.data(), dim * dim));
                  }));
  }
  static Metric euclidean(int dim);
  /// diag(1, r^2) on (r, theta).
  static Metric polar();

  /// Symmetrized g(x).
  template <class S>
  MatX<S> matrix(const VecX<S>& x) const {
    const VecX<S> e = entries_(S(0.0), x);
    MatX<S> g(dim_, dim_);
    for (int j = 0; j < dim_; ++j)
      for (int i = 0; i < dim_; ++i) g(i, j) = e(j * dim_ + i);
    return MatX<S>(0.5 * (g + g.transpose()));
  }
  Mat operator()(const Vec& x) const { return matrix<double>(x); }
  Mat inverse_at(const Vec& x) const { return inverse<double>(matrix<double>(x)); }

  int dim() const { return dim_; }
  const SmoothMap& entries() const { return entries_; }

 private:
  int dim_ = 0;
  SmoothMap entries_;
};

/// Smallest eigenvalue of g over the samples; throws DegeneracyError when it is not positive.
double metric_min_eigenvalue(const Metric& g, const std::vector<Vec>& samples);

/// H = g^{ij} p_i p_j / 2.
Hamiltonian geodesic_hamiltonian(const Metric& g);
/// H = sqrt(g^{ij} p_i p_j), homogeneous of degree one.
Hamiltonian norm_hamiltonian(const Metric& g);

/// g^{-1} p for a phase state (x, p).
Vec geodesic_velocity(const Metric& g, const Vec& state);

/// Phase trajectory (x, p) of the geodesic with x(0) = x0, x'(0) = v on [0, t1].
Trajectory geodesic_shoot(const Metric& g, const Vec& x0, const Vec& v, double t1, double step = kDefaultStep);

/// max over knots of |g(x', x') - g(x'(0), x'(0))|.
double speed_drift(const Metric& g, const Trajectory& tr);

/// sup over the knots of |x_quadratic - x_norm| for unit initial momentum g v.
double homogeneous_geodesic_distance(const Metric& g, const Vec& x0, const Vec& v, double t1,
                                     double step = kDefaultStep);

struct HypersurfacePatch {
  int dim = 0;
  /// sigma : [0,1]^{dim-1} -> chart.
  SmoothMap sigma;
  /// Multiplies the cofactor conormal; selects the "+" side.
  int orientation = 1;
  /// Parameters wrap around (closed curves and surfaces).
  bool periodic = false;

  /// f(u) -> VecX<S> is a generic callable.
  template <class F>
  static HypersurfacePatch exact(int dim, F f, int orientation = 1, bool periodic = false) {
    HypersurfacePatch s;
    s.dim = dim;
    s.sigma = SmoothMap::exact(dim - 1, dim, [f](const auto&, const auto& u) { return f(u); });
    s.orientation = orientation;
    s.periodic = periodic;
    return s;
  }
};

/// Unit conormal s with s(sigma_u) = 0 and g^{ij} s_i s_j = 1 on the requested branch (+1 / -1).
Vec surface_conormal(const Metric& g, const HypersurfacePatch& patch, const Vec& u, int branch);

/// max |g^{ij} s_i s_j - 1| and |s(sigma_u)| over the parameter samples.
double conormal_residual(const Metric& g, const HypersurfacePatch& patch, const std::vector<Vec>& params,
                         int branch);

struct EikonalOptions {
  double t_min = 0.0;
  double t_max = 1.0;
  int samples_per_axis = 48;
  /// Stored fan times are spaced by this; they seed the inversion.
  double fan_dt = 0.05;
  double step = kDefaultStep;
  /// On |det[dX/du, X']| relative to its value on the surface.
  double focal_threshold = 1e-6;
  double monitor_interval = 1e-2;
  double f_hat = 0.0;
};

struct EikonalPoint {
  double f = 0.0;
  /// Momentum p = df/dx at the point.
  Vec grad;
  Vec u;
  double t = 0.0;
};

class EikonalField {
 public:
  EikonalField(Metric g, HypersurfacePatch patch, int branch, const EikonalOptions& options);

  /// Throws CoverageError outside the fan and HorizonError at focal points.
  EikonalPoint locate(const Vec& x) const;
  double operator()(const Vec& x) const { return locate(x).f; }
  Vec gradient(const Vec& x) const { return locate(x).grad; }

  /// Phase state on the normal geodesic from sigma(u) after arclength t.
  Vec state(const Vec& u, double t) const;

  const Metric& metric() const { return g_; }
  const HypersurfacePatch& patch() const { return patch_; }
  int branch() const { return branch_; }
  const EikonalOptions& options() const { return options_; }

 private:
  Metric g_;
  HypersurfacePatch patch_;
  int branch_;
  EikonalOptions options_;
  std::vector<Vec> params_;
  std::vector<double> times_;
  /// points_[i][k]: x at params_[i], times_[k].
  std::vector<std::vector<Vec>> points_;
};

EikonalField eikonal_from_surface(const Metric& g, const HypersurfacePatch& patch, int branch,
                                  const EikonalOptions& options = {});

struct EikonalResidual {
  /// max |g^{ij} f_i f_j - 1| with f_i by central differences.
  double norm = 0.0;
  /// max |f_i - g_ij x'^j| along the fan geodesics.
  double orthogonality = 0.0;
};

EikonalResidual eikonal_residual(const Metric& g, const std::function<double(const Vec&)>& f,
                                 const EikonalField& fan, const std::vector<Vec>& samples,
                                 double h_fd = kDefaultFdStep);

/// max over sampled unit directions v and sphere tangents of |g(x_v'(tau), d/dxi x_{v(xi)}(tau))|.
double gauss_lemma_residual(const Metric& g, const Vec& x0, double tau, int directions = 16,
                            JacobianMethod method = JacobianMethod::finite_difference,
                            double h_fd = kDefaultFdStep, double step = kDefaultStep);

struct GradientFlowCheck {
  /// sup |x_gradient(t) - x_geodesic(t)|.
  double sup_distance = 0.0;
  /// sup |f(x(t)) - f(x0) - t| along the gradient flow.
  double arc_length = 0.0;
};

/// Integrates x' = g^{-1} grad f (central-difference gradient) and the geodesic with the same
/// initial velocity over [0, t1].
GradientFlowCheck gradient_flow_check(const Metric& g, const std::function<double(const Vec&)>& f,
                                      const Vec& x0, double t1, double flow_step = 1e-2,
                                      double h_fd = kDefaultFdStep);

}  // namespace intinv
