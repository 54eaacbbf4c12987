#include "intinv/fluid.hpp"

#include <algorithm>
#include <cmath>

namespace intinv {

namespace {

void require_r3(int dim, const char* what) {
  if (dim != 3) throw DimensionError(std::string(what) + " lives on R^3");
}

void require_right(Handedness chart) {
  if (chart != Handedness::right)
    throw PreconditionError("vector/form correspondences are defined for right-handed charts only");
}

}  // namespace

Vec two_form_coefficients(const Vec& a) {
  Vec c(3);
  c << a(2), -a(1), a(0);
  return c;
}

Vec two_form_vector(const Vec& c) {
  Vec a(3);
  a << c(2), -c(1), c(0);
  return a;
}

Vec cross(const Vec& a, const Vec& b) {
  return Eigen::Vector3d(a(0), a(1), a(2)).cross(Eigen::Vector3d(b(0), b(1), b(2)));
}

DifferentialForm vector_to_form(const VectorField& a, int degree, Handedness chart) {
  require_right(chart);
  require_r3(a.dim(), "vector_to_form");
  if (degree == 1)
    return DifferentialForm::exact(3, 1, [a](const auto& t, const auto& x) { return a(t, x); });
  if (degree == 2)
    return DifferentialForm::exact(3, 2, [a](const auto& t, const auto& x) {
      using S = std::decay_t<decltype(t)>;
      const VecX<S> v = a(t, x);
      VecX<S> c(3);
      c << v(2), -v(1), v(0);
      return c;
    });
  throw DegreeError("vector fields correspond to 1-forms and 2-forms only");
}

DifferentialForm scalar_to_form(const ScalarField& f, Handedness chart) {
  require_right(chart);
  require_r3(f.dim(), "scalar_to_form");
  return DifferentialForm::exact(3, 3, [f](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(1);
    c(0) = f(t, x);
    return c;
  });
}

VectorField form_to_vector(const DifferentialForm& omega) {
  require_r3(omega.dim(), "form_to_vector");
  const int k = omega.degree();
  if (k != 1 && k != 2) throw DegreeError("only 1-forms and 2-forms correspond to vector fields");
  return VectorField::exact(
      3,
      [omega, k](const auto& t, const auto& x) {
        using S = std::decay_t<decltype(t)>;
        const VecX<S> c = omega.coefficients(t, x);
        if (k == 1) return c;
        VecX<S> v(3);
        v << c(2), -c(1), c(0);
        return v;
      },
      true);
}

ScalarField form_to_scalar(const DifferentialForm& omega) {
  require_r3(omega.dim(), "form_to_scalar");
  if (omega.degree() != 3) throw DegreeError("only 3-forms correspond to scalar fields");
  return ScalarField::exact(3, [omega](const auto& t, const auto& x) { return omega.coefficients(t, x)(0); });
}

Mat fd_jacobian(const VectorField& a, double t, const Vec& x, double h) {
  Mat j(a.dim(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vec xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    j.col(k) = (a(t, xp) - a(t, xm)) / (2.0 * h);
  }
  return j;
}

Vec fd_curl(const VectorField& a, double t, const Vec& x, double h) {
  const Mat j = fd_jacobian(a, t, x, h);
  Vec c(3);
  c << j(2, 1) - j(1, 2), j(0, 2) - j(2, 0), j(1, 0) - j(0, 1);
  return c;
}

double fd_div(const VectorField& a, double t, const Vec& x, double h) { return fd_jacobian(a, t, x, h).trace(); }

Vec fd_grad(const ScalarField& f, double t, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vec xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    g(k) = (f(t, xp) - f(t, xm)) / (2.0 * h);
  }
  return g;
}

Vec fd_time_partial(const VectorField& a, double t, const Vec& x, double h) {
  return (a(t + h, x) - a(t - h, x)) / (2.0 * h);
}

VectorField cross_field(const VectorField& a, const VectorField& b) {
  return VectorField::exact(
      3,
      [a, b](const auto& t, const auto& x) {
        using S = std::decay_t<decltype(t)>;
        const VecX<S> u = a(t, x), w = b(t, x);
        VecX<S> c(3);
        c << u(1) * w(2) - u(2) * w(1), u(2) * w(0) - u(0) * w(2), u(0) * w(1) - u(1) * w(0);
        return c;
      },
      a.time_dependent() || b.time_dependent());
}

ScalarField dot_field(const VectorField& a, const VectorField& b) {
  return ScalarField::exact(3, [a, b](const auto& t, const auto& x) { return a(t, x).dot(b(t, x)); });
}

VectorField scaled_field(const ScalarField& f, const VectorField& a) {
  return VectorField::exact(
      a.dim(),
      [f, a](const auto& t, const auto& x) {
        using S = std::decay_t<decltype(t)>;
        return VecX<S>(f(t, x) * a(t, x));
      },
      true);
}

double bridge_derivative_residual(const VectorField& a, const ScalarField& f, const std::vector<Vec>& samples,
                                  double t) {
  const DifferentialForm d1 = exterior_derivative(vector_to_form(a, 1));
  const DifferentialForm d2 = exterior_derivative(vector_to_form(a, 2));
  const DifferentialForm df = exterior_derivative(f);
  double worst = 0.0;
  for (const Vec& x : samples) {
    worst = std::max(worst, (d1(t, x) - two_form_coefficients(fd_curl(a, t, x))).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, std::abs(d2(t, x)(0) - fd_div(a, t, x)));
    worst = std::max(worst, (df(t, x) - fd_grad(f, t, x)).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double bridge_naturality_residual(const VectorField& a, const VectorField& b, const ScalarField& f,
                                  const std::vector<Vec>& samples, double t) {
  const DifferentialForm i1 = interior_product(b, vector_to_form(a, 1));
  const DifferentialForm i2 = interior_product(b, vector_to_form(a, 2));
  const DifferentialForm i3 = interior_product(b, scalar_to_form(f));
  double worst = 0.0;
  for (const Vec& x : samples) {
    const Vec av = a(t, x), bv = b(t, x);
    worst = std::max(worst, std::abs(i1(t, x)(0) - av.dot(bv)));
    worst = std::max(worst, (i2(t, x) - cross(av, bv)).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (i3(t, x) - f(t, x) * two_form_coefficients(bv)).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double lie_formula_check(const VectorField& v, const VectorField& a, int which, const std::vector<Vec>& samples,
                         double t) {
  require_r3(v.dim(), "lie_formula_check");
  if (which != 1 && which != 2) throw DegreeError("vector Lie formulas exist for which = 1 or 2");
  const DifferentialForm w = vector_to_form(a, which);
  const DifferentialForm lhs = time_derivative(w) + lie_derivative(v, w);
  const VectorField axv = cross_field(a, v);
  const ScalarField va = dot_field(v, a);
  double worst = 0.0;
  for (const Vec& x : samples) {
    Vec rhs;
    if (which == 1) {
      rhs = fd_time_partial(a, t, x) + cross(fd_curl(a, t, x), v(t, x)) + fd_grad(va, t, x);
    } else {
      rhs = two_form_coefficients(fd_time_partial(a, t, x) + fd_curl(axv, t, x) + v(t, x) * fd_div(a, t, x));
    }
    worst = std::max(worst, (lhs(t, x) - rhs).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double lie_formula_check(const VectorField& v, const ScalarField& f, const std::vector<Vec>& samples, double t) {
  require_r3(v.dim(), "lie_formula_check");
  const DifferentialForm w = scalar_to_form(f);
  const DifferentialForm lhs = time_derivative(w) + lie_derivative(v, w);
  const VectorField fv = scaled_field(f, v);
  const double h = kDefaultFdStep;
  double worst = 0.0;
  for (const Vec& x : samples) {
    const double rhs = (f(t + h, x) - f(t - h, x)) / (2.0 * h) + fd_div(fv, t, x);
    worst = std::max(worst, std::abs(lhs(t, x)(0) - rhs));
  }
  return worst;
}

double vector_identity_check(const VectorField& a, const VectorField& b, const std::vector<Vec>& samples, double t) {
  require_r3(a.dim(), "vector_identity_check");
  const VectorField axb = cross_field(a, b);
  double worst = 0.0;
  for (const Vec& x : samples) {
    const Vec av = a(t, x), bv = b(t, x);
    const Vec bracket = fd_jacobian(a, t, x) * bv - fd_jacobian(b, t, x) * av;
    const Vec rhs = bracket + av * fd_div(b, t, x) - bv * fd_div(a, t, x);
    worst = std::max(worst, (fd_curl(axb, t, x) - rhs).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double premise_residual(const FluidScenario& s, double t, const Vec& x, double h) {
  switch (s.kind) {
    case FluidCase::circulation: {
      if (!s.psi) throw PreconditionError("circulation premise needs a potential psi");
      const Vec lhs = fd_time_partial(s.a, t, x, h) + cross(fd_curl(s.a, t, x, h), s.velocity(t, x));
      return (lhs - fd_grad(*s.psi, t, x, h)).lpNorm<Eigen::Infinity>();
    }
    case FluidCase::flux:
      return (fd_time_partial(s.a, t, x, h) + fd_curl(cross_field(s.a, s.velocity), t, x, h) +
              s.velocity(t, x) * fd_div(s.a, t, x, h))
          .lpNorm<Eigen::Infinity>();
    case FluidCase::mass:
      return std::abs((s.f(t + h, x) - s.f(t - h, x)) / (2.0 * h) +
                      fd_div(scaled_field(s.f, s.velocity), t, x, h));
  }
  return 0.0;
}

namespace {

/// Interior parameter grid points of every cube in the object.
std::vector<Vec> object_points(const Chain& c, int per_axis) {
  std::vector<Vec> pts;
  for (const ChainTerm& term : c.terms()) {
    const int k = term.cube.degree();
    std::vector<int> idx(k, 0);
    while (true) {
      Vec s(k);
      for (int a = 0; a < k; ++a) s(a) = (idx[a] + 0.5) / per_axis;
      pts.push_back(term.cube.sample(s).point);
      int a = 0;
      while (a < k && ++idx[a] == per_axis) idx[a++] = 0;
      if (a == k) break;
    }
  }
  return pts;
}

}  // namespace

DriftSeries transport_conservation_check(const FluidScenario& s, const std::vector<double>& times,
                                         const FluidOptions& options) {
  if (times.empty()) throw PreconditionError("transport check needs at least one time");
  require_r3(s.velocity.dim(), "transport_conservation_check");
  const int expected_degree = static_cast<int>(s.kind);
  if (s.object.degree() != expected_degree)
    throw DegreeError("fluid object degree does not match the transported quantity");
  if (s.kind == FluidCase::circulation) {
    const double defect = closure_defect(s.object, options.sweep.quadrature);
    if (defect > options.closure_tolerance)
      throw PreconditionError("circulation needs a closed curve (closure defect " + std::to_string(defect) + ")");
  }

  if (options.check_premise) {
    const std::vector<Vec> starts = object_points(s.object, options.premise_points_per_axis);
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> worst(starts.size(), 0.0);
    parallel_for(starts.size(), [&](std::size_t i) {
      // March outward from t0 in each direction so every segment is integrated once.
      worst[i] = premise_residual(s, s.t0, starts[i]);
      for (int dir : {1, -1}) {
        Vec x = starts[i];
        double tc = s.t0;
        for (std::size_t n = 0; n < sorted.size(); ++n) {
          const double t = dir > 0 ? sorted[n] : sorted[sorted.size() - 1 - n];
          if ((t - s.t0) * dir <= 0.0) continue;
          x = flow_point(s.velocity, x, tc, t, options.sweep.step);
          tc = t;
          worst[i] = std::max(worst[i], premise_residual(s, t, x));
        }
      }
    });
    const double w = *std::max_element(worst.begin(), worst.end());
    if (w > options.premise_tolerance)
      throw PreconditionError("transport premise fails along the flow (residual " + std::to_string(w) + ")");
  }

  const DifferentialForm omega =
      s.kind == FluidCase::mass ? scalar_to_form(s.f) : vector_to_form(s.a, expected_degree);
  SweepSettings sweep = options.sweep;
  sweep.form_time = FormTime::transported;
  std::vector<double> values = transported_integrals(s.velocity, omega, s.object, s.t0, times, sweep);
  return make_drift_series(times, std::move(values), tolerance_for_span(options.tolerance_rate, s.t0, times));
}

}  // namespace intinv
