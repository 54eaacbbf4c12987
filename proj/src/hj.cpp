#include "intinv/hj.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace intinv {

namespace {

template <class S>
VecX<S> characteristic_rhs_impl(const SmoothMap& f, int m, const S& t, const VecX<S>& w) {
  const VecX<S> g = gradient(f, t, w);
  const S fv = f(t, w)(0);
  const VecX<S> p = w.tail(m);
  const VecX<S> fp = g.tail(m);
  VecX<S> out(2 * m + 1);
  out.head(m) = fp;
  out(m) = p.dot(fp) - fv;
  out.tail(m) = -g.head(m) - g(m) * p;
  return out;
}

template <class S>
VecX<S> initial_state_impl(const HJProblem& prob, const VecX<S>& seed) {
  const int m = prob.dim;
  const S t0(prob.t0);
  VecX<S> w(2 * m + 1);
  w.head(m) = seed;
  w(m) = prob.initial.map()(t0, seed)(0);
  w.tail(m) = prob.initial_momentum ? (*prob.initial_momentum)(t0, seed) : gradient(prob.initial.map(), t0, seed);
  return w;
}

void validate(const HJProblem& prob) {
  const int m = prob.dim;
  if (m < 1) throw DimensionError("HJ problem needs at least one space dimension");
  if (prob.f.in_dim() != 2 * m + 1 || prob.f.out_dim() != 1)
    throw DimensionError("HJ problem: f must map (x, xi, p) of length 2m+1 to R");
  if (prob.initial.dim() != m) throw DimensionError("HJ problem: initial datum dimension differs");
  if (prob.initial_momentum && (prob.initial_momentum->in_dim() != m || prob.initial_momentum->out_dim() != m))
    throw DimensionError("HJ problem: initial momentum must map R^m -> R^m");
  if (prob.box_lo.size() != m || prob.box_hi.size() != m) throw DimensionError("HJ problem: box dimension differs");
  if ((prob.box_hi - prob.box_lo).minCoeff() < 0.0) throw PreconditionError("HJ problem: empty seed box");
}

/// Composite 4-point Gauss rule of g(t, z) over the knot intervals of a trajectory.
template <class G>
double integrate_along(const Trajectory& tr, G&& g) {
  static const double nodes[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static const double weights[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  const auto& ts = tr.times();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double a = ts[i], b = ts[i + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int q = 0; q < 4; ++q) {
      const double s = mid + half * nodes[q];
      sum += half * weights[q] * g(s, tr.at(s));
    }
  }
  return sum;
}

}  // namespace

VectorField characteristic_rhs(const HJProblem& prob) {
  validate(prob);
  const SmoothMap f = prob.f;
  const int m = prob.dim;
  return VectorField::exact<2>(
      2 * m + 1,
      [f, m](const auto& t, const auto& w) {
        using S = std::decay_t<decltype(t)>;
        return characteristic_rhs_impl<S>(f, m, t, w);
      },
      true);
}

VectorField characteristic_field(const HJProblem& prob) {
  validate(prob);
  const SmoothMap f = prob.f;
  const int m = prob.dim;
  return VectorField::exact<2>(2 * m + 2, [f, m](const auto&, const auto& y) {
    using S = typename std::decay_t<decltype(y)>::Scalar;
    VecX<S> out(2 * m + 2);
    out(0) = S(1.0);
    out.tail(2 * m + 1) = characteristic_rhs_impl<S>(f, m, y(0), VecX<S>(y.tail(2 * m + 1)));
    return out;
  });
}

Vec characteristic_initial_state(const HJProblem& prob, const Vec& seed) {
  validate(prob);
  if (seed.size() != prob.dim) throw DimensionError("characteristic seed dimension differs");
  return initial_state_impl<double>(prob, seed);
}

std::vector<FanNode> track_characteristic(const HJProblem& prob, const Vec& seed_point,
                                          const std::vector<double>& times, const FanSettings& settings) {
  validate(prob);
  const int m = prob.dim;
  if (seed_point.size() != m) throw DimensionError("characteristic seed dimension differs");
  const VectorField v = characteristic_rhs(prob);
  const Vec w0 = initial_state_impl<double>(prob, seed_point);
  Mat tangents(2 * m + 1, m);
  for (int j = 0; j < m; ++j) tangents.col(j) = eps_part(initial_state_impl<D1>(prob, seed(seed_point, j)));

  // Requested times plus the monitor grid t0 + k * interval between them.
  const double t0 = prob.t0;
  std::vector<double> grid = times;
  double lo = t0, hi = t0;
  for (double t : times) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  const double iv = settings.monitor_interval;
  for (int k = 1; t0 + k * iv < hi; ++k) grid.push_back(t0 + k * iv);
  for (int k = 1; t0 - k * iv > lo; ++k) grid.push_back(t0 - k * iv);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const std::vector<TangentFlow> flows = flow_with_tangents(v, w0, tangents, t0, grid, prob.step);
  std::vector<double> dets(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) dets[i] = determinant<double>(flows[i].tangents.topRows(m));

  // det starts at 1; walk outward from t0 in each direction.
  auto monitor = [&](auto begin, auto end) {
    double prev_t = t0, prev_d = 1.0;
    for (auto it = begin; it != end; ++it) {
      const std::size_t i = *it;
      const double d = dets[i];
      if (!(d > settings.caustic_threshold)) {
        double estimate = grid[i];
        if (std::isfinite(d) && prev_d > d) estimate = prev_t + (grid[i] - prev_t) * prev_d / (prev_d - d);
        throw CausticError("characteristic fan degenerates: det dX/dx_hat = " + std::to_string(d) + " at t = " +
                               std::to_string(grid[i]),
                           estimate);
      }
      prev_t = grid[i];
      prev_d = d;
    }
  };
  std::vector<std::size_t> forward, backward;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] >= t0) forward.push_back(i);
  for (std::size_t i = grid.size(); i-- > 0;)
    if (grid[i] < t0) backward.push_back(i);
  monitor(forward.begin(), forward.end());
  monitor(backward.begin(), backward.end());

  std::vector<FanNode> out;
  out.reserve(times.size());
  for (double t : times) {
    const std::size_t i = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), t) - grid.begin());
    out.push_back(FanNode{seed_point, flows[i].point, flows[i].tangents.topRows(m), dets[i]});
  }
  return out;
}

namespace {

std::vector<Vec> seed_grid(const Vec& lo, const Vec& hi, const std::vector<int>& per_axis) {
  const std::size_t m = per_axis.size();
  std::vector<Vec> seeds;
  std::vector<int> idx(m, 0);
  while (true) {
    Vec s(m);
    for (std::size_t a = 0; a < m; ++a)
      s(a) = per_axis[a] == 1 ? 0.5 * (lo(a) + hi(a)) : lo(a) + (hi(a) - lo(a)) * idx[a] / (per_axis[a] - 1);
    seeds.push_back(s);
    std::size_t a = 0;
    while (a < m && ++idx[a] == per_axis[a]) idx[a++] = 0;
    if (a == m) break;
  }
  return seeds;
}

std::vector<std::vector<FanNode>> track_all(const HJProblem& prob, const std::vector<Vec>& seeds,
                                            const std::vector<double>& times, const FanSettings& settings) {
  std::vector<std::vector<FanNode>> by_seed(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t s) { by_seed[s] = track_characteristic(prob, seeds[s], times, settings); });
  std::vector<std::vector<FanNode>> by_time(times.size(), std::vector<FanNode>(seeds.size()));
  for (std::size_t s = 0; s < seeds.size(); ++s)
    for (std::size_t k = 0; k < times.size(); ++k) by_time[k][s] = std::move(by_seed[s][k]);
  return by_time;
}

}  // namespace

CharacteristicFan CharacteristicFan::build(const HJProblem& prob, std::vector<double> times,
                                           const FanSettings& settings) {
  validate(prob);
  if (times.empty()) throw PreconditionError("characteristic fan needs at least one time");
  const int m = prob.dim;
  const Vec width = prob.box_hi - prob.box_lo;

  // A coarse pass bounds |dX/dx_hat|, which fixes the spacing for the target separation.
  std::vector<int> coarse(m);
  for (int a = 0; a < m; ++a) coarse[a] = width(a) > 0.0 ? 3 : 1;
  const auto probe = track_all(prob, seed_grid(prob.box_lo, prob.box_hi, coarse), times, settings);
  double stretch = 1.0;
  for (const auto& level : probe)
    for (const FanNode& n : level) stretch = std::max(stretch, n.dx_dseed.colwise().norm().maxCoeff());
  const double spacing = settings.target_separation / stretch;

  std::vector<int> per(m);
  double total = 1.0;
  for (int a = 0; a < m; ++a) {
    per[a] = width(a) > 0.0 ? std::max(2, static_cast<int>(std::ceil(width(a) / spacing)) + 1) : 1;
    total *= per[a];
  }
  if (total > static_cast<double>(settings.max_seeds)) {
    int active = 0;
    for (int a = 0; a < m; ++a) active += per[a] > 1;
    const double scale = std::pow(static_cast<double>(settings.max_seeds) / total, 1.0 / std::max(active, 1));
    for (int a = 0; a < m; ++a)
      if (per[a] > 1) per[a] = std::max(2, static_cast<int>(std::floor(per[a] * scale)));
  }

  CharacteristicFan fan;
  fan.times_ = std::move(times);
  fan.per_axis_ = per;
  fan.settings_ = settings;
  fan.nodes_ = track_all(prob, seed_grid(prob.box_lo, prob.box_hi, per), fan.times_, settings);
  return fan;
}

std::size_t CharacteristicFan::nearest_time(double t) const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < times_.size(); ++k)
    if (std::abs(times_[k] - t) < std::abs(times_[best] - t)) best = k;
  return best;
}

const FanNode& CharacteristicFan::nearest_node(std::size_t k, const Vec& x) const {
  const auto& level = nodes_.at(k);
  const int m = static_cast<int>(x.size());
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t s = 0; s < level.size(); ++s) {
    const double d = (level[s].state.head(m) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  return level[best];
}

CauchySolution solve_cauchy_characteristics(const HJProblem& prob, const CharacteristicFan& fan, double t,
                                            const Vec& x) {
  validate(prob);
  const int m = prob.dim;
  if (x.size() != m) throw DimensionError("Cauchy query dimension differs");
  Vec seed_point = fan.nearest_node(fan.nearest_time(t), x).seed;
  const Vec width = prob.box_hi - prob.box_lo;
  const double margin = 0.5 * std::max(width.maxCoeff(), 1e-3);
  const double tol = 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>());
  for (int it = 0; it < 40; ++it) {
    const FanNode node = track_characteristic(prob, seed_point, {t}, fan.settings()).front();
    const Vec r = node.x(m) - x;
    if (r.lpNorm<Eigen::Infinity>() <= tol) return CauchySolution{node.xi(m), node.p(m), seed_point, node.det};
    try {
      seed_point -= solve<double>(node.dx_dseed, r);
    } catch (const DegeneracyError&) {
      throw InversionError("characteristic inversion: singular dX/dx_hat");
    }
    if (!seed_point.allFinite() || (seed_point - prob.box_lo).minCoeff() < -margin ||
        (prob.box_hi - seed_point).minCoeff() < -margin)
      throw InversionError("characteristic inversion left the seed box");
  }
  throw InversionError("characteristic inversion did not converge");
}

SpaceTimeEvaluator cauchy_evaluator(const HJProblem& prob, const CharacteristicFan& fan) {
  return [prob, fan](double t, const Vec& x) { return solve_cauchy_characteristics(prob, fan, t, x).u; };
}

double hj_residual(const SpaceTimeEvaluator& u, const HJProblem& prob, const std::vector<SpaceTimePoint>& samples,
                   double h_fd) {
  validate(prob);
  const int m = prob.dim;
  std::vector<double> res(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto& [t, x] = samples[i];
    const double ut = (u(t + h_fd, x) - u(t - h_fd, x)) / (2.0 * h_fd);
    Vec w(2 * m + 1);
    w.head(m) = x;
    w(m) = u(t, x);
    for (int a = 0; a < m; ++a) {
      Vec xp = x, xm = x;
      xp(a) += h_fd;
      xm(a) -= h_fd;
      w(m + 1 + a) = (u(t, xp) - u(t, xm)) / (2.0 * h_fd);
    }
    res[i] = std::abs(ut + prob.f(t, w)(0));
  });
  return residual_stats(res).max;
}

double graph_invariance_residual(const HJProblem& prob, const CharacteristicFan& fan, std::size_t max_nodes,
                                 double h_fd) {
  const int m = prob.dim;
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  for (std::size_t k = 0; k < fan.times().size(); ++k) {
    const std::size_t n = fan.nodes(k).size();
    const std::size_t stride = std::max<std::size_t>(1, (n + max_nodes - 1) / std::max<std::size_t>(max_nodes, 1));
    for (std::size_t s = 0; s < n; s += stride) picks.push_back({k, s});
  }
  std::vector<double> res(picks.size());
  parallel_for(picks.size(), [&](std::size_t i) {
    const auto [k, s] = picks[i];
    const FanNode& node = fan.nodes(k)[s];
    const double t = fan.times()[k];
    const Vec x = node.x(m);
    Vec grad(m);
    for (int a = 0; a < m; ++a) {
      Vec xp = x, xm = x;
      xp(a) += h_fd;
      xm(a) -= h_fd;
      grad(a) = (solve_cauchy_characteristics(prob, fan, t, xp).u - solve_cauchy_characteristics(prob, fan, t, xm).u) /
                (2.0 * h_fd);
    }
    res[i] = (node.p(m) - grad).lpNorm<Eigen::Infinity>();
  });
  return residual_stats(res).max;
}

double graph_loop_residual(const HJProblem& prob, const CharacteristicFan& fan, double t, const Vec& x,
                           double radius, int axis) {
  const int m = prob.dim;
  if (axis < 0 || axis >= m) throw DimensionError("loop axis out of range");
  // Trapezoid rule is spectrally accurate for the periodic integrand.
  const int n = 64;
  std::vector<double> terms(n);
  parallel_for(n, [&](std::size_t i) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / n;
    const double ti = t + radius * std::cos(th);
    Vec xi = x;
    xi(axis) += radius * std::sin(th);
    const CauchySolution sol = solve_cauchy_characteristics(prob, fan, ti, xi);
    Vec w(2 * m + 1);
    w << xi, sol.u, sol.grad;
    const double dt = -radius * std::sin(th), dx = radius * std::cos(th);
    terms[i] = sol.grad(axis) * dx - prob.f(ti, w)(0) * dt;
  });
  double sum = 0.0;
  for (double v : terms) sum += v;
  return std::abs(sum * 2.0 * std::numbers::pi / n);
}

CauchySolution hamiltonian_reconstruction(const HJProblem& prob, double t, const Vec& x, const Vec& seed_guess) {
  validate(prob);
  const int m = prob.dim;
  const SmoothMap f = prob.f;
  const Hamiltonian h(m, SmoothMap::exact_scalar<2>(2 * m, [f, m](const auto& tt, const auto& z) {
                        using S = std::decay_t<decltype(tt)>;
                        VecX<S> w(2 * m + 1);
                        w << z.head(m), S(0.0), z.tail(m);
                        return f(tt, w)(0);
                      }),
                      false);
  const VectorField field = hamiltonian_field(h);
  Vec seed_point = seed_guess;
  for (int it = 0; it < 40; ++it) {
    const Vec w0 = initial_state_impl<double>(prob, seed_point);
    if (std::abs(gradient(f, prob.t0, w0)(m)) > 1e-12)
      throw PreconditionError("Hamiltonian reconstruction needs f independent of u");
    Mat tangents(2 * m, m);
    for (int j = 0; j < m; ++j) {
      const Vec col = eps_part(initial_state_impl<D1>(prob, seed(seed_point, j)));
      tangents.col(j) << col.head(m), col.tail(m);
    }
    Vec z0(2 * m);
    z0 << w0.head(m), w0.tail(m);
    const TangentFlow tf = flow_with_tangents(field, z0, tangents, prob.t0, t, prob.step);
    const Vec r = tf.point.head(m) - x;
    if (r.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      const Trajectory tr = integrate_flow(field, z0, prob.t0, t, {prob.step, false});
      const double action = integrate_along(tr, [&](double s, const Vec& z) {
        return z.tail(m).dot(h.grad_p(s, z)) - h(s, z);
      });
      return CauchySolution{w0(m) + action, tf.point.tail(m), seed_point, determinant<double>(tf.tangents.topRows(m))};
    }
    seed_point -= solve<double>(Mat(tf.tangents.topRows(m)), r);
  }
  throw InversionError("Hamiltonian reconstruction did not converge");
}

double action_increment_check(const Hamiltonian& h, const ScalarField& s, const Vec& x0, double t0, double t1,
                              double step) {
  const int m = h.dof();
  if (x0.size() != m || s.dim() != m) throw DimensionError("action increment: dimension mismatch");
  if (t1 == t0) return 0.0;
  const Vec z0 = phase_point(x0, s.gradient(t0, x0));
  const Trajectory tr = integrate_flow(hamiltonian_field(h), z0, t0, t1, {step, false});
  const double action =
      integrate_along(tr, [&](double t, const Vec& z) { return z.tail(m).dot(h.grad_p(t, z)) - h(t, z); });
  return std::abs(s(t1, Vec(tr.final_state().head(m))) - s(t0, x0) - action);
}

double hj_residual_spread(const Hamiltonian& h, const ScalarField& s, double t, const std::vector<Vec>& samples) {
  if (samples.empty()) return 0.0;
  double lo = INFINITY, hi = -INFINITY;
  for (const Vec& x : samples) {
    const double r = s.time_partial(t, x) + h(t, phase_point(x, s.gradient(t, x)));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi - lo;
}

// ---- generating functions -----------------------------------------------------------

namespace {

template <class A, class B>
auto join(const A& a, const B& b) {
  using S = typename A::Scalar;
  VecX<S> w(a.size() + b.size());
  w << a, b;
  return w;
}

constexpr NewtonSettings kMapNewton{60, 1e-14, 1e-13};

void check_nondegenerate(const Mat& jac, double threshold, const char* what) {
  const double det = determinant<double>(jac);
  if (!(std::abs(det) > threshold))
    throw NondegeneracyError(std::string(what) + ": |det d2S/dx dY| = " + std::to_string(std::abs(det)) +
                             " below threshold");
}

template <class S>
VecX<S> generated_forward(const GeneratingFunction& g, const S& t, const VecX<S>& z) {
  const int m = g.dof;
  const double tv = value_of(t);
  const Vec zv = values_of(z);
  const Vec xv = zv.head(m), pv = zv.tail(m);
  auto residual = [&](const auto& y) {
    using Q = typename std::decay_t<decltype(y)>::Scalar;
    const VecX<Q> grad = gradient(g.s, Q(tv), join(VecX<Q>(xv.cast<Q>()), y));
    return VecX<Q>(pv.cast<Q>() - grad.head(m));
  };
  const Vec guess = g.forward_guess ? g.forward_guess(tv, zv) : pv;
  const Vec root = newton_solve(residual, guess, kMapNewton, "generating function forward map");
  const Mat jac = residual_jacobian(residual, root);
  check_nondegenerate(jac, g.nondegeneracy_threshold, "generating function forward map");
  const VecX<S> x = z.head(m), p = z.tail(m);
  auto residual_s = [&](const VecX<S>& y) { return VecX<S>(p - gradient(g.s, t, join(x, y)).head(m)); };
  const VecX<S> y = chord_polish<S>(residual_s, root, inverse<double>(jac));
  const VecX<S> sy = gradient(g.s, t, join(x, y)).tail(m);
  return g.kind == GeneratingKind::s1 ? join(y, VecX<S>(-sy)) : join(sy, y);
}

template <class S>
VecX<S> generated_inverse(const GeneratingFunction& g, const S& t, const VecX<S>& big_z) {
  const int m = g.dof;
  const bool s1 = g.kind == GeneratingKind::s1;
  const double tv = value_of(t);
  const Vec zv = values_of(big_z);
  // s1: P = -S_X(x, X); s2: X = S_P(x, P).
  const Vec yv = s1 ? Vec(zv.head(m)) : Vec(zv.tail(m));
  const Vec known = s1 ? Vec(-zv.tail(m)) : Vec(zv.head(m));
  auto residual = [&](const auto& x) {
    using Q = typename std::decay_t<decltype(x)>::Scalar;
    const VecX<Q> grad = gradient(g.s, Q(tv), join(x, VecX<Q>(yv.cast<Q>())));
    return VecX<Q>(grad.tail(m) - known.cast<Q>());
  };
  const Vec guess = g.inverse_guess ? g.inverse_guess(tv, zv) : Vec(s1 ? Vec(-zv.tail(m)) : Vec(zv.head(m)));
  const Vec root = newton_solve(residual, guess, kMapNewton, "generating function inverse map");
  const Mat jac = residual_jacobian(residual, root);
  check_nondegenerate(jac, g.nondegeneracy_threshold, "generating function inverse map");
  const VecX<S> y = s1 ? VecX<S>(big_z.head(m)) : VecX<S>(big_z.tail(m));
  const VecX<S> target = s1 ? VecX<S>(-big_z.tail(m)) : VecX<S>(big_z.head(m));
  auto residual_s = [&](const VecX<S>& x) { return VecX<S>(gradient(g.s, t, join(x, y)).tail(m) - target); };
  const VecX<S> x = chord_polish<S>(residual_s, root, inverse<double>(jac));
  return join(x, VecX<S>(gradient(g.s, t, join(x, y)).head(m)));
}

}  // namespace

double nondegeneracy_witness(const GeneratingFunction& g, double t, const Vec& x, const Vec& y) {
  const int m = g.dof;
  const Vec w = join(x, y);
  Mat mixed(m, m);
  for (int j = 0; j < m; ++j) mixed.col(j) = eps_part(gradient(g.s, D1(t), seed(w, m + j))).head(m);
  return determinant<double>(mixed);
}

CanonicalMap::CanonicalMap(int dof, SmoothMap forward, SmoothMap inverse, bool time_dependent,
                           std::optional<GeneratingFunction> generator)
    : dof_(dof),
      forward_(std::move(forward)),
      inverse_(std::move(inverse)),
      time_dependent_(time_dependent),
      generator_(std::move(generator)) {
  if (forward_.in_dim() != 2 * dof || forward_.out_dim() != 2 * dof || inverse_.in_dim() != 2 * dof ||
      inverse_.out_dim() != 2 * dof)
    throw DimensionError("canonical map components must act on 2 dof coordinates");
}

CanonicalMap CanonicalMap::identity(int dof) { return from_permutation(CanonicalPermutation::identity(dof)); }

CanonicalMap CanonicalMap::from_permutation(const CanonicalPermutation& perm) {
  const Mat mat = perm.matrix;
  const Mat inv = perm.matrix.transpose();
  const int n = static_cast<int>(mat.rows());
  auto linear = [n](const Mat& a) {
    return SmoothMap::exact(n, n, [a](const auto&, const auto& z) {
      using S = typename std::decay_t<decltype(z)>::Scalar;
      return VecX<S>(a.cast<S>() * z);
    });
  };
  return CanonicalMap(n / 2, linear(mat), linear(inv), false);
}

CanonicalMap CanonicalMap::translation(const Vec& shift) {
  const int n = static_cast<int>(shift.size());
  if (n % 2 != 0) throw DimensionError("translation needs an even-dimensional shift");
  auto offset = [n](const Vec& c) {
    return SmoothMap::exact(n, n, [c](const auto&, const auto& z) {
      using S = typename std::decay_t<decltype(z)>::Scalar;
      return VecX<S>(z + c.cast<S>());
    });
  };
  return CanonicalMap(n / 2, offset(-shift), offset(shift), false);
}

CanonicalMap CanonicalMap::then(const CanonicalMap& next) const {
  if (next.dof_ != dof_) throw DimensionError("composed canonical maps differ in dimension");
  const SmoothMap f1 = forward_, f2 = next.forward_, i1 = inverse_, i2 = next.inverse_;
  const int n = 2 * dof_;
  SmoothMap fwd = SmoothMap::exact<2>(n, n, [f1, f2](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    return f2(t, VecX<S>(f1(t, z)));
  });
  SmoothMap inv = SmoothMap::exact<2>(n, n, [i1, i2](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    return i1(t, VecX<S>(i2(t, z)));
  });
  return CanonicalMap(dof_, fwd, inv, time_dependent_ || next.time_dependent_);
}

double CanonicalMap::round_trip_residual(const std::vector<Vec>& samples, double t) const {
  double worst = 0.0;
  for (const Vec& z : samples) worst = std::max(worst, (inverse(t, forward(t, z)) - z).lpNorm<Eigen::Infinity>());
  return worst;
}

CanonicalMap build_canonical_map(const GeneratingFunction& g) {
  const int m = g.dof;
  if (m < 1 || g.s.in_dim() != 2 * m || g.s.out_dim() != 1)
    throw DimensionError("generating function must map (x, Y) of length 2 dof to R");
  SmoothMap fwd = SmoothMap::exact<2>(2 * m, 2 * m, [g](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    return generated_forward<S>(g, t, z);
  });
  SmoothMap inv = SmoothMap::exact<2>(2 * m, 2 * m, [g](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    return generated_inverse<S>(g, t, z);
  });
  return CanonicalMap(m, fwd, inv, g.time_dependent, g);
}

double canonicality_residual(const std::function<Vec(const Vec&)>& map, const std::vector<Vec>& samples, double h_fd) {
  double worst = 0.0;
  for (const Vec& z : samples) {
    const int n = static_cast<int>(z.size());
    if (n % 2 != 0) throw DimensionError("canonicality needs an even-dimensional phase point");
    Mat jac(n, n);
    for (int a = 0; a < n; ++a) {
      Vec zp = z, zm = z;
      zp(a) += h_fd;
      zm(a) -= h_fd;
      jac.col(a) = (map(zp) - map(zm)) / (2.0 * h_fd);
    }
    const Mat omega = canonical_matrix(n / 2);
    worst = std::max(worst, (jac.transpose() * omega * jac - omega).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double canonicality_residual(const CanonicalMap& map, const std::vector<Vec>& samples, double t, double h_fd) {
  return canonicality_residual([&map, t](const Vec& z) { return map.forward(t, z); }, samples, h_fd);
}

Hamiltonian transform_hamiltonian(const CanonicalMap& map, const Hamiltonian& h) {
  const int m = map.dof();
  if (h.dof() != m) throw DimensionError("transform: Hamiltonian and map differ in dimension");
  const SmoothMap inv = map.inverse_map();
  const SmoothMap mh = h.map();
  if (!map.generator()) {
    if (map.time_dependent()) throw PreconditionError("time-dependent canonical map without a generating function");
    return Hamiltonian(m, SmoothMap::exact_scalar<2>(2 * m, [inv, mh](const auto& t, const auto& big_z) {
                         using S = std::decay_t<decltype(t)>;
                         return mh(t, VecX<S>(inv(t, big_z)))(0);
                       }),
                       h.autonomous(), false);
  }
  const GeneratingFunction g = *map.generator();
  const bool s1 = g.kind == GeneratingKind::s1;
  return Hamiltonian(m, SmoothMap::exact_scalar<2>(2 * m, [inv, mh, g, m, s1](const auto& t, const auto& big_z) {
                       using S = std::decay_t<decltype(t)>;
                       const VecX<S> z = inv(t, big_z);
                       const VecX<S> y = s1 ? VecX<S>(big_z.head(m)) : VecX<S>(big_z.tail(m));
                       return mh(t, z)(0) + time_partial(g.s, t, join(VecX<S>(z.head(m)), y))(0);
                     }),
                     h.autonomous() && !g.time_dependent, false);
}

double trajectory_match(const CanonicalMap& map, const Hamiltonian& h, const Hamiltonian& k, const Vec& z0, double t0,
                        const std::vector<double>& times, double step) {
  const VectorField vh = hamiltonian_field(h), vk = hamiltonian_field(k);
  const Vec big_z0 = map.forward(t0, z0);
  double worst = 0.0;
  for (double t : times) {
    const Vec z = flow_point(vh, z0, t0, t, step);
    const Vec big_z = flow_point(vk, big_z0, t0, t, step);
    worst = std::max(worst, (map.inverse(t, big_z) - z).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

// ---- straightening ------------------------------------------------------------------

namespace {

/// Solves K(x, p1, q) = c for p1 near p1 = 0 (K shifted so K(0) = 0).
struct MomentumSolver {
  SmoothMap k;
  int m = 0;
  double threshold = 1e-8;

  template <class S>
  VecX<S> point(const VecX<S>& x, const S& p1, const VecX<S>& q) const {
    VecX<S> z(2 * m);
    z.head(m) = x;
    z(m) = p1;
    z.tail(m - 1) = q;
    return z;
  }

  template <class S>
  S operator()(const VecX<S>& x, const VecX<S>& q, const S& c) const {
    const Vec xv = values_of(x), qv = values_of(q);
    const double cv = value_of(c);
    auto residual = [&](const auto& y) {
      using Q = typename std::decay_t<decltype(y)>::Scalar;
      VecX<Q> r(1);
      r(0) = k(Q(0.0), point<Q>(xv.cast<Q>(), y(0), qv.cast<Q>()))(0) - cv;
      return r;
    };
    const Vec root = newton_solve(residual, Vec::Zero(1), kMapNewton, "straightening momentum solve");
    const double slope = residual_jacobian(residual, root)(0, 0);
    if (!(std::abs(slope) > threshold)) throw DegeneracyError("dH/dp_1 vanishes inside the straightening box");
    Mat jinv(1, 1);
    jinv(0, 0) = 1.0 / slope;
    auto residual_s = [&](const VecX<S>& y) {
      VecX<S> r(1);
      r(0) = k(S(0.0), point<S>(x, y(0), q))(0) - c;
      return r;
    };
    return chord_polish<S>(residual_s, root, jinv)(0);
  }
};

/// S(x, X) for the Cauchy problem dS/dx^1 = phi(x, dS/dx', X^1), S|_{x^1 = 0} = x'.X'.
template <class S>
S straightening_generator(const MomentumSolver& phi, double step, const VecX<S>& x, const VecX<S>& big_x) {
  const int m = phi.m;
  const S c = big_x(0);
  const S zero(0.0);
  if (m == 1) {
    auto rhs = [&](const auto& s, const auto&) {
      using Q = std::decay_t<decltype(s)>;
      VecX<Q> out(1);
      VecX<Q> xs(1);
      xs(0) = s;
      out(0) = phi(xs, VecX<Q>(0), Q(c));
      return out;
    };
    return rk4_integrate<S>(rhs, zero, x(0), VecX<S>::Zero(1), step)(0);
  }
  const int r = m - 1;
  // Characteristics in tau = x^1 on (y, xi, q) with f = -phi:
  // y' = -phi_q, xi' = phi - q.phi_q, q' = phi_y.
  auto rhs_at = [&phi, m, r](const auto& energy) {
    return [&phi, m, r, energy](const auto& tau, const auto& w) {
      using Q = std::decay_t<decltype(tau)>;
      const VecX<Q> y = w.head(r), q = w.tail(r);
      VecX<Q> xs(m);
      xs << tau, y;
      const Q p1 = phi(xs, q, Q(energy));
      const VecX<Q> grad = gradient(phi.k, Q(0.0), phi.point<Q>(xs, p1, q));
      const Q kp1 = grad(m);
      const VecX<Q> phi_y = -grad.segment(1, r) / kp1;
      const VecX<Q> phi_q = -grad.tail(r) / kp1;
      VecX<Q> out(2 * r + 1);
      out.head(r) = -phi_q;
      out(r) = p1 - q.dot(phi_q);
      out.tail(r) = phi_y;
      return out;
    };
  };
  auto start = [r](const auto& y0, const auto& mom) {
    using Q = typename std::decay_t<decltype(y0)>::Scalar;
    VecX<Q> w(2 * r + 1);
    w << y0, y0.dot(mom), mom;
    return w;
  };
  const double x1 = value_of(x(0));
  const Vec tv = values_of(VecX<S>(x.tail(r)));
  const Vec xrv = values_of(VecX<S>(big_x.tail(r)));
  const double cv = value_of(c);
  auto residual = [&](const auto& y0) {
    using Q = typename std::decay_t<decltype(y0)>::Scalar;
    const VecX<Q> end = rk4_integrate<Q>(rhs_at(cv), Q(0.0), Q(x1), start(y0, VecX<Q>(xrv.cast<Q>())), step);
    return VecX<Q>(end.head(r) - tv.cast<Q>());
  };
  const Vec root = newton_solve(residual, tv, kMapNewton, "straightening characteristic inversion");
  const Mat jac = residual_jacobian(residual, root);
  if (!(std::abs(determinant<double>(jac)) > 1e-6))
    throw CausticError("straightening box too large: characteristics in x^1 cross", x1);
  const VecX<S> target = x.tail(r);
  const VecX<S> xr = big_x.tail(r);
  const auto rhs = rhs_at(c);
  auto residual_s = [&](const VecX<S>& y0) {
    const VecX<S> end = rk4_integrate<S>(rhs, zero, x(0), start(y0, xr), step);
    return VecX<S>(end.head(r) - target);
  };
  const VecX<S> y0 = chord_polish<S>(residual_s, root, inverse<double>(jac));
  return rk4_integrate<S>(rhs, zero, x(0), start(y0, xr), step)(r);
}

}  // namespace

Straightening straighten_hamiltonian(const Hamiltonian& h, const Vec& base, const StraighteningOptions& options) {
  const int m = h.dof();
  if (!h.autonomous()) throw PreconditionError("straightening needs an autonomous Hamiltonian");
  if (base.size() != 2 * m) throw DimensionError("straightening base point dimension differs");
  const double energy = h(0.0, base);
  const Vec grad = gradient(h.map(), 0.0, base);
  const double thr = options.degeneracy_threshold;
  if (!(grad.lpNorm<Eigen::Infinity>() > thr)) throw DegeneracyError("straightening at a critical point of H");

  CanonicalPermutation perm = CanonicalPermutation::identity(m);
  if (!(std::abs(grad(m)) > thr)) {
    Eigen::Index j = 0;
    if (grad.tail(m).cwiseAbs().maxCoeff(&j) > thr) {
      perm = CanonicalPermutation::index_swap(m, 0, static_cast<int>(j));
    } else {
      grad.head(m).cwiseAbs().maxCoeff(&j);
      perm = CanonicalPermutation::conjugate_swap(m, static_cast<int>(j));
      if (j != 0) perm = perm.then(CanonicalPermutation::index_swap(m, 0, static_cast<int>(j)));
    }
  }

  // K(Z) = H(base + M^T Z) - energy on shifted, permuted coordinates.
  const SmoothMap mh = h.map();
  const Mat back = perm.matrix.transpose();
  const Vec b = base;
  const SmoothMap km = SmoothMap::exact_scalar(2 * m, [mh, back, b, energy](const auto& t, const auto& z) {
    using S = std::decay_t<decltype(t)>;
    return mh(t, VecX<S>(b.cast<S>() + back.cast<S>() * z))(0) - energy;
  });
  const double kp1 = gradient(km, 0.0, Vec(Vec::Zero(2 * m)))(m);
  if (!(std::abs(kp1) > thr)) throw DegeneracyError("dH/dp_1 vanishes after the permutation search");

  const MomentumSolver phi{km, m, thr};
  const double step = options.step;
  GeneratingFunction g;
  g.kind = GeneratingKind::s1;
  g.dof = m;
  g.s = SmoothMap::exact_scalar(2 * m, [phi, step, m](const auto& t, const auto& w) {
    using S = std::decay_t<decltype(t)>;
    return straightening_generator<S>(phi, step, VecX<S>(w.head(m)), VecX<S>(w.tail(m)));
  });
  g.nondegeneracy_threshold = thr;
  // X^1 = K(z) exactly; X' equals p' on x^1 = 0 and P' = -x' there.
  g.forward_guess = [km, m](double, const Vec& z) {
    Vec y(m);
    y(0) = km(0.0, z)(0);
    y.tail(m - 1) = z.tail(m - 1);
    return y;
  };
  g.inverse_guess = [kp1, m](double, const Vec& big_z) {
    Vec x(m);
    x(0) = -big_z(m) * kp1;
    x.tail(m - 1) = -big_z.tail(m - 1);
    return x;
  };

  // Evaluating S over the box surfaces characteristic crossings before use.
  const int per = std::max(2, options.box_samples);
  std::vector<int> counts(m, per);
  const Vec lo = Vec::Constant(m, -options.box_radius), hi = Vec::Constant(m, options.box_radius);
  const std::vector<Vec> probes = seed_grid(lo, hi, counts);
  parallel_for(probes.size(), [&](std::size_t i) {
    try {
      (void)g.s(0.0, join(probes[i], Vec(Vec::Zero(m))));
    } catch (const NewtonError& e) {
      throw CausticError(std::string("straightening box too large: ") + e.what(), probes[i](0));
    }
  });

  Straightening out;
  out.energy = energy;
  out.permutation = perm;
  out.generator = g;
  out.map = CanonicalMap::translation(base).then(CanonicalMap::from_permutation(perm)).then(build_canonical_map(g));
  return out;
}

double straightening_residual(const Straightening& s, const Hamiltonian& h, const std::vector<Vec>& samples) {
  std::vector<double> res(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Vec big_z = s.map.forward(0.0, samples[i]);
    res[i] = std::abs(h(0.0, s.map.inverse(0.0, big_z)) - big_z(0) - s.energy);
  });
  return residual_stats(res).max;
}

StraightenedFlowResidual straightened_flow_residual(const Straightening& s, const Hamiltonian& h, const Vec& z0,
                                                    double t0, const std::vector<double>& times, double step) {
  const int m = h.dof();
  const VectorField field = hamiltonian_field(h);
  const Vec start = s.map.forward(t0, z0);
  std::vector<Vec> images(times.size());
  parallel_for(times.size(), [&](std::size_t i) { images[i] = s.map.forward(times[i], flow_point(field, z0, t0, times[i], step)); });
  StraightenedFlowResidual r;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const Vec d = images[i] - start;
    r.x_drift = std::max(r.x_drift, d.head(m).lpNorm<Eigen::Infinity>());
    r.p1_drift = std::max(r.p1_drift, std::abs(d(m) + (times[i] - t0)));
    if (m > 1) r.p_rest_drift = std::max(r.p_rest_drift, d.tail(m - 1).lpNorm<Eigen::Infinity>());
  }
  return r;
}

// ---- complete integrals ---------------------------------------------------------------

CompleteIntegralResult integrate_via_complete_integral(const CompleteIntegral& ci, const Hamiltonian& h,
                                                       const Vec& z0, double t0, const std::vector<double>& times,
                                                       const Vec& b_guess, const CompleteIntegralOptions& options) {
  const int m = ci.dof;
  if (h.dof() != m || z0.size() != 2 * m || b_guess.size() != m || ci.s.in_dim() != 2 * m)
    throw DimensionError("complete integral: dimension mismatch");
  const SmoothMap& s = ci.s;
  const Vec x0 = z0.head(m), p0 = z0.tail(m);

  auto momentum_residual = [&](const auto& b) {
    using Q = typename std::decay_t<decltype(b)>::Scalar;
    return VecX<Q>(gradient(s, Q(t0), join(VecX<Q>(x0.cast<Q>()), b)).head(m) - p0.cast<Q>());
  };
  CompleteIntegralResult out;
  out.b = newton_solve(momentum_residual, b_guess, kMapNewton, "complete integral parameter solve");
  const double det = determinant<double>(residual_jacobian(momentum_residual, out.b));
  if (!(std::abs(det) > options.nondegeneracy_threshold))
    throw NondegeneracyError("complete integral: det d2S/dx db vanishes near the initial point");

  // S_t + H(t, x, S_x) at offsets in x and relative offsets in b.
  std::vector<std::pair<Vec, Vec>> checks{{x0, out.b}};
  for (int a = 0; a < m; ++a)
    for (double sg : {-1.0, 1.0}) {
      Vec x = x0, b = out.b;
      x(a) += sg * options.check_radius;
      checks.push_back({x, out.b});
      b(a) += sg * options.check_radius * std::max(std::abs(out.b(a)), 1e-3);
      checks.push_back({x0, b});
    }
  for (const auto& [x, b] : checks) {
    const Vec w = join(x, b);
    const Vec grad = gradient(s, t0, w);
    const double r = std::abs(time_partial(s, t0, w)(0) + h(t0, phase_point(x, Vec(grad.head(m)))));
    out.hj_residual = std::max(out.hj_residual, r);
  }
  if (out.hj_residual > options.hj_tolerance)
    throw PreconditionError("complete integral does not solve the Hamilton-Jacobi equation (residual " +
                            std::to_string(out.hj_residual) + ")");

  out.beta = gradient(s, t0, join(x0, out.b)).tail(m);
  const Vec b = out.b, beta = out.beta;
  auto level_point = [&](double t, const Vec& guess) {
    auto residual = [&](const auto& x) {
      using Q = typename std::decay_t<decltype(x)>::Scalar;
      return VecX<Q>(gradient(s, Q(t), join(x, VecX<Q>(b.cast<Q>()))).tail(m) - beta.cast<Q>());
    };
    const Vec x = newton_solve(residual, guess, kMapNewton, "complete integral level-set solve");
    return phase_point(x, Vec(gradient(s, t, join(x, b)).head(m)));
  };

  // Continuation outward from t0 with an explicit Euler predictor.
  const VectorField field = hamiltonian_field(h);
  out.times = times;
  out.states.assign(times.size(), Vec());
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return times[a] < times[c]; });
  auto march = [&](const std::vector<std::size_t>& seq) {
    double t_prev = t0;
    Vec z_prev = z0;
    Vec direct = z0;
    for (std::size_t i : seq) {
      const double t = times[i];
      const Vec guess = z_prev.head(m) + (t - t_prev) * field(t_prev, z_prev).head(m);
      out.states[i] = level_point(t, guess);
      direct = flow_point(field, direct, t_prev, t, options.step);
      out.match_error = std::max(out.match_error, (out.states[i] - direct).lpNorm<Eigen::Infinity>());
      t_prev = t;
      z_prev = out.states[i];
    }
  };
  std::vector<std::size_t> forward, backward;
  for (std::size_t i : order)
    if (times[i] >= t0) forward.push_back(i);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (times[*it] < t0) backward.push_back(*it);
  march(forward);
  march(backward);
  return out;
}

}  // namespace intinv
