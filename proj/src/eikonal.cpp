#include "intinv/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "intinv/newton.hpp"

namespace intinv {

Metric::Metric(int dim, SmoothMap entries) : dim_(dim), entries_(std::move(entries)) {
  if (dim < 1) throw DimensionError("metric needs a positive dimension");
  if (entries_.in_dim() != dim || entries_.out_dim() != dim * dim)
    throw DimensionError("metric entries must map R^dim -> R^(dim*dim)");
}

Metric Metric::euclidean(int dim) {
  return exact(dim, [dim](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    return MatX<S>(MatX<S>::Identity(dim, dim));
  });
}

Metric Metric::polar() {
  return exact(2, [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    MatX<S> g = MatX<S>::Zero(2, 2);
    g(0, 0) = S(1.0);
    g(1, 1) = x(0) * x(0);
    return g;
  });
}

double metric_min_eigenvalue(const Metric& g, const std::vector<Vec>& samples) {
  double lo = INFINITY;
  for (const Vec& x : samples) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g(x), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  if (!(lo > 0.0)) throw DegeneracyError("metric is not positive definite at a sample");
  return lo;
}

Hamiltonian geodesic_hamiltonian(const Metric& g) {
  const int m = g.dim();
  return Hamiltonian::exact(m, [g, m](const auto&, const auto& z) {
    using S = typename std::decay_t<decltype(z)>::Scalar;
    const VecX<S> p = z.tail(m);
    return 0.5 * p.dot(solve<S>(g.matrix<S>(VecX<S>(z.head(m))), p));
  });
}

Hamiltonian norm_hamiltonian(const Metric& g) {
  const int m = g.dim();
  return Hamiltonian::exact(
      m,
      [g, m](const auto&, const auto& z) {
        using S = typename std::decay_t<decltype(z)>::Scalar;
        const VecX<S> p = z.tail(m);
        return sqrt(p.dot(solve<S>(g.matrix<S>(VecX<S>(z.head(m))), p)));
      },
      true, true);
}

Vec geodesic_velocity(const Metric& g, const Vec& state) {
  const int m = g.dim();
  return solve<double>(g(Vec(state.head(m))), Vec(state.tail(m)));
}

Trajectory geodesic_shoot(const Metric& g, const Vec& x0, const Vec& v, double t1, double step) {
  const int m = g.dim();
  if (x0.size() != m || v.size() != m) throw DimensionError("geodesic shoot: dimension mismatch");
  if (!(v.norm() > 0.0)) throw PreconditionError("geodesic shoot needs a nonzero velocity");
  metric_min_eigenvalue(g, {x0});
  const Trajectory tr = integrate_flow(hamiltonian_field(geodesic_hamiltonian(g)), phase_point(x0, g(x0) * v), 0.0,
                                       t1, {step, false});
  std::vector<Vec> along;
  for (std::size_t i = 0; i < tr.states().size(); i += 10) along.push_back(tr.states()[i].head(m));
  along.push_back(tr.final_state().head(m));
  try {
    metric_min_eigenvalue(g, along);
  } catch (const DegeneracyError&) {
    throw DegeneracyError("metric degenerates along the geodesic");
  }
  return tr;
}

double speed_drift(const Metric& g, const Trajectory& tr) {
  const int m = g.dim();
  auto speed = [&](const Vec& z) { return Vec(z.tail(m)).dot(geodesic_velocity(g, z)); };
  const double ref = speed(tr.states().front());
  double worst = 0.0;
  for (const Vec& z : tr.states()) worst = std::max(worst, std::abs(speed(z) - ref));
  return worst;
}

double homogeneous_geodesic_distance(const Metric& g, const Vec& x0, const Vec& v, double t1, double step) {
  const int m = g.dim();
  Vec p0 = g(x0) * v;
  p0 /= std::sqrt(p0.dot(solve<double>(g(x0), p0)));
  const Vec z0 = phase_point(x0, p0);
  const Trajectory a = integrate_flow(hamiltonian_field(geodesic_hamiltonian(g)), z0, 0.0, t1, {step, false});
  const Trajectory b = integrate_flow(hamiltonian_field(norm_hamiltonian(g)), z0, 0.0, t1, {step, false});
  double worst = 0.0;
  for (std::size_t i = 0; i < a.states().size(); ++i)
    worst = std::max(worst, (a.states()[i].head(m) - b.states()[i].head(m)).norm());
  return worst;
}

// ---- surfaces and fans ----------------------------------------------------------------

namespace {

/// Generalized cross product of the m-1 columns: n_i = (-1)^i det(T without row i).
template <class S>
VecX<S> cofactor_conormal(const MatX<S>& tangents) {
  const Eigen::Index m = tangents.rows();
  VecX<S> n(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    MatX<S> minor(m - 1, m - 1);
    for (Eigen::Index r = 0, k = 0; r < m; ++r)
      if (r != i) minor.row(k++) = tangents.row(r);
    const S d = determinant<S>(minor);
    n(i) = i % 2 == 0 ? d : S(-d);
  }
  return n;
}

struct FanContext {
  Metric g;
  HypersurfacePatch patch;
  int sign = 1;
  double step = kDefaultStep;
  VectorField field;

  template <class S>
  VecX<S> conormal(const VecX<S>& u) const {
    const VecX<S> x = patch.sigma(S(0.0), u);
    const VecX<S> n = S(static_cast<double>(sign)) * cofactor_conormal<S>(jacobian(patch.sigma, S(0.0), u));
    return n / sqrt(n.dot(solve<S>(g.matrix<S>(x), n)));
  }

  template <class S>
  VecX<S> initial(const VecX<S>& u) const {
    VecX<S> z(2 * g.dim());
    z << patch.sigma(S(0.0), u), conormal<S>(u);
    return z;
  }

  template <class S>
  VecX<S> state(const VecX<S>& u, const S& t) const {
    auto rhs = [this](const auto& tt, const auto& z) { return field(tt, z); };
    return rk4_integrate<S>(rhs, S(0.0), t, initial<S>(u), step);
  }

  /// det[dX/du, X'] at a phase state with the given u-tangents.
  double spread(const Vec& z, const Mat& tangents) const {
    const int m = g.dim();
    Mat j(m, m);
    j.leftCols(m - 1) = tangents.topRows(m);
    j.col(m - 1) = geodesic_velocity(g, z);
    return determinant<double>(j);
  }
};

FanContext make_context(const Metric& g, const HypersurfacePatch& patch, int branch, double step) {
  if (branch != 1 && branch != -1) throw PreconditionError("eikonal branch must be +1 or -1");
  if (patch.dim != g.dim() || g.dim() < 2 || patch.sigma.in_dim() != g.dim() - 1 || patch.sigma.out_dim() != g.dim())
    throw DimensionError("hypersurface patch must map [0,1]^(m-1) into the metric chart");
  return FanContext{g, patch, branch * (patch.orientation >= 0 ? 1 : -1), step,
                    hamiltonian_field(geodesic_hamiltonian(g))};
}

Mat parameter_tangents(const FanContext& ctx, const Vec& u) {
  const Eigen::Index k = u.size();
  Mat t(2 * ctx.g.dim(), k);
  for (Eigen::Index j = 0; j < k; ++j) t.col(j) = eps_part(ctx.initial<D1>(seed(u, j)));
  return t;
}

}  // namespace

Vec surface_conormal(const Metric& g, const HypersurfacePatch& patch, const Vec& u, int branch) {
  return make_context(g, patch, branch, kDefaultStep).conormal<double>(u);
}

double conormal_residual(const Metric& g, const HypersurfacePatch& patch, const std::vector<Vec>& params, int branch) {
  const FanContext ctx = make_context(g, patch, branch, kDefaultStep);
  double worst = 0.0;
  for (const Vec& u : params) {
    const Vec s = ctx.conormal<double>(u);
    const Vec x = patch.sigma(0.0, u);
    worst = std::max(worst, std::abs(s.dot(solve<double>(g(x), s)) - 1.0));
    const Mat t = jacobian(patch.sigma, 0.0, u);
    worst = std::max(worst, (t.transpose() * s).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

EikonalField::EikonalField(Metric g, HypersurfacePatch patch, int branch, const EikonalOptions& options)
    : g_(std::move(g)), patch_(std::move(patch)), branch_(branch), options_(options) {
  const FanContext ctx = make_context(g_, patch_, branch_, options_.step);
  const int m = g_.dim();
  if (!(options_.t_max > options_.t_min) || options_.t_min > 0.0 || options_.t_max < 0.0)
    throw PreconditionError("eikonal fan needs t_min <= 0 <= t_max with t_min < t_max");

  // Surface parameter grid; periodic patches omit the duplicated endpoint.
  const int n = std::max(2, options_.samples_per_axis);
  std::vector<int> idx(m - 1, 0);
  while (true) {
    Vec u(m - 1);
    for (int a = 0; a < m - 1; ++a) u(a) = patch_.periodic ? double(idx[a]) / n : double(idx[a]) / (n - 1);
    params_.push_back(u);
    int a = 0;
    while (a < m - 1 && ++idx[a] == n) idx[a++] = 0;
    if (a == m - 1) break;
  }
  const int kt = std::max(1, static_cast<int>(std::ceil((options_.t_max - options_.t_min) / options_.fan_dt - 1e-9)));
  for (int k = 0; k <= kt; ++k) times_.push_back(options_.t_min + (options_.t_max - options_.t_min) * k / kt);

  std::vector<double> grid = times_;
  grid.push_back(0.0);
  const double iv = options_.monitor_interval;
  for (int k = 1; k * iv < options_.t_max; ++k) grid.push_back(k * iv);
  for (int k = 1; -k * iv > options_.t_min; ++k) grid.push_back(-k * iv);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  points_.assign(params_.size(), {});
  parallel_for(params_.size(), [&](std::size_t i) {
    const Vec& u = params_[i];
    const Vec z0 = ctx.initial<double>(u);
    const Mat t0 = parameter_tangents(ctx, u);
    const double d0 = ctx.spread(z0, t0);
    if (!(std::abs(d0) > 0.0)) throw DegeneracyError("hypersurface patch is singular at a parameter sample");
    const auto flows = flow_with_tangents(ctx.field, z0, t0, 0.0, grid, options_.step);
    auto monitor = [&](const std::vector<std::size_t>& seq) {
      double prev_t = 0.0, prev_r = 1.0;
      for (std::size_t j : seq) {
        const double r = ctx.spread(flows[j].point, flows[j].tangents) / d0;
        if (!(r > options_.focal_threshold)) {
          double estimate = grid[j];
          if (std::isfinite(r) && prev_r > r) estimate = prev_t + (grid[j] - prev_t) * prev_r / (prev_r - r);
          throw HorizonError("normal geodesic fan reaches a focal point near t = " + std::to_string(estimate),
                             estimate);
        }
        prev_t = grid[j];
        prev_r = r;
      }
    };
    std::vector<std::size_t> fwd, bwd;
    for (std::size_t j = 0; j < grid.size(); ++j)
      if (grid[j] > 0.0) fwd.push_back(j);
    for (std::size_t j = grid.size(); j-- > 0;)
      if (grid[j] < 0.0) bwd.push_back(j);
    monitor(fwd);
    monitor(bwd);
    for (double t : times_) {
      const std::size_t j = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), t) - grid.begin());
      points_[i].push_back(flows[j].point.head(m));
    }
  });
}

Vec EikonalField::state(const Vec& u, double t) const {
  return make_context(g_, patch_, branch_, options_.step).state<double>(u, t);
}

EikonalPoint EikonalField::locate(const Vec& x) const {
  const int m = g_.dim();
  if (x.size() != m) throw DimensionError("eikonal query dimension differs");
  const FanContext ctx = make_context(g_, patch_, branch_, options_.step);
  std::size_t bi = 0, bk = 0;
  double best = INFINITY;
  for (std::size_t i = 0; i < points_.size(); ++i)
    for (std::size_t k = 0; k < times_.size(); ++k) {
      const double d = (points_[i][k] - x).squaredNorm();
      if (d < best) {
        best = d;
        bi = i;
        bk = k;
      }
    }
  Vec q(m);
  q << params_[bi], times_[bk];
  auto residual = [&](const auto& qq) {
    using S = typename std::decay_t<decltype(qq)>::Scalar;
    return VecX<S>(ctx.state<S>(VecX<S>(qq.head(m - 1)), qq(m - 1)).head(m) - x.cast<S>());
  };
  try {
    q = newton_solve(residual, q, {40, 1e-14, 1e-13}, "eikonal fan inversion");
  } catch (const NewtonError& e) {
    throw CoverageError(std::string("query outside the normal fan: ") + e.what());
  }
  const double tol = 1e-9;
  const double t = q(m - 1);
  if (t < options_.t_min - tol || t > options_.t_max + tol) throw CoverageError("query outside the fan's arclength range");
  Vec u = q.head(m - 1);
  if (patch_.periodic) {
    u = u.unaryExpr([](double s) { return s - std::floor(s); });
  } else if (u.minCoeff() < -tol || u.maxCoeff() > 1.0 + tol) {
    throw CoverageError("query outside the surface parameter range");
  }
  const Vec z = ctx.state<double>(u, t);
  const double d0 = ctx.spread(ctx.initial<double>(u), parameter_tangents(ctx, u));
  const Mat jac = residual_jacobian(residual, q);
  if (!(determinant<double>(jac) / d0 > options_.focal_threshold))
    throw HorizonError("query at a focal point of the normal fan", t);
  return EikonalPoint{options_.f_hat + t, z.tail(m), u, t};
}

EikonalField eikonal_from_surface(const Metric& g, const HypersurfacePatch& patch, int branch,
                                  const EikonalOptions& options) {
  return EikonalField(g, patch, branch, options);
}

namespace {

Vec central_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec grad(x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    Vec xp = x, xm = x;
    xp(a) += h;
    xm(a) -= h;
    grad(a) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return grad;
}

}  // namespace

EikonalResidual eikonal_residual(const Metric& g, const std::function<double(const Vec&)>& f, const EikonalField& fan,
                                 const std::vector<Vec>& samples, double h_fd) {
  std::vector<EikonalResidual> per(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Vec& x = samples[i];
    const Vec grad = central_gradient(f, x, h_fd);
    per[i].norm = std::abs(grad.dot(solve<double>(g(x), grad)) - 1.0);
    per[i].orthogonality = (grad - fan.locate(x).grad).lpNorm<Eigen::Infinity>();
  });
  EikonalResidual out;
  for (const auto& r : per) {
    out.norm = std::max(out.norm, r.norm);
    out.orthogonality = std::max(out.orthogonality, r.orthogonality);
  }
  return out;
}

double gauss_lemma_residual(const Metric& g, const Vec& x0, double tau, int directions, JacobianMethod method,
                            double h_fd, double step) {
  const int m = g.dim();
  if (x0.size() != m) throw DimensionError("Gauss lemma: base point dimension differs");
  if (!(tau > 0.0)) throw PreconditionError("Gauss lemma needs tau > 0");
  const Mat g0 = g(x0);
  const SmoothMap field = hamiltonian_field(geodesic_hamiltonian(g)).map();

  // Direction w on the sphere with one sphere tangent e.
  std::vector<std::pair<Vec, Vec>> pairs;
  if (m == 2) {
    for (int k = 0; k < directions; ++k) {
      const double th = 2.0 * std::numbers::pi * k / directions;
      Vec w(2), e(2);
      w << std::cos(th), std::sin(th);
      e << -std::sin(th), std::cos(th);
      pairs.push_back({w, e});
    }
  } else {
    std::mt19937 rng(42);
    std::normal_distribution<double> nd;
    for (int k = 0; k < directions; ++k) {
      Vec w(m), e(m);
      for (int a = 0; a < m; ++a) w(a) = nd(rng);
      for (int a = 0; a < m; ++a) e(a) = nd(rng);
      w.normalize();
      e -= e.dot(w) * w;
      e.normalize();
      pairs.push_back({w, e});
    }
  }

  std::vector<double> res(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& [w, e] = pairs[i];
    auto endpoint = [&](const auto& xi) {
      using S = std::decay_t<decltype(xi)>;
      const VecX<S> v = w.cast<S>() + xi * e.cast<S>();
      const MatX<S> gs = g0.cast<S>();
      const VecX<S> p = gs * v / sqrt(v.dot(gs * v));
      VecX<S> z(2 * m);
      z << x0.cast<S>(), p;
      auto rhs = [&field](const auto& t, const auto& y) { return field(t, y); };
      return rk4_integrate<S>(rhs, S(0.0), S(tau), z, step);
    };
    Vec dx;
    if (method == JacobianMethod::variational) {
      dx = eps_part(endpoint(D1(0.0, 1.0))).head(m);
    } else {
      dx = (endpoint(h_fd) - endpoint(-h_fd)).head(m) / (2.0 * h_fd);
    }
    const Vec z = endpoint(0.0);
    const Vec x = z.head(m);
    // dv/dxi at xi = 0 for v = w / |w|_g.
    const double wn = std::sqrt(w.dot(g0 * w));
    const Vec v = w / wn;
    const Vec dv = (e - v * v.dot(g0 * e)) / wn;
    const double scale = tau * std::sqrt(dv.dot(g0 * dv));
    if (!(std::sqrt(dx.dot(g(x) * dx)) > 1e-6 * scale))
      throw HorizonError("Gauss lemma radius reaches a focal point", tau);
    res[i] = std::abs(Vec(z.tail(m)).dot(dx));
  });
  return residual_stats(res).max;
}

GradientFlowCheck gradient_flow_check(const Metric& g, const std::function<double(const Vec&)>& f, const Vec& x0,
                                      double t1, double flow_step, double h_fd) {
  const int m = g.dim();
  if (x0.size() != m) throw DimensionError("gradient flow: dimension mismatch");
  auto rhs = [&](double, const Vec& x) { return Vec(solve<double>(g(x), central_gradient(f, x, h_fd))); };
  const int n = step_count(t1, flow_step);
  const double h = t1 / n;
  const VectorField geo = hamiltonian_field(geodesic_hamiltonian(g));
  Vec x = x0;
  Vec z = phase_point(x0, central_gradient(f, x0, h_fd));
  const double f0 = f(x0);
  GradientFlowCheck out;
  for (int k = 0; k < n; ++k) {
    const double t = h * k;
    x = rk4_step<double>(rhs, t, x, h);
    z = flow_point(geo, z, t, t + h);
    out.sup_distance = std::max(out.sup_distance, (x - z.head(m)).norm());
    out.arc_length = std::max(out.arc_length, std::abs(f(x) - f0 - (t + h)));
  }
  return out;
}

}  // namespace intinv
