#include "intinv/chain.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace intinv {

// ---- cubes and chains --------------------------------------------------------

SingularCube::SingularCube(int k, int dim, Sampler sampler, int orientation)
    : k_(k), dim_(dim), orientation_(orientation >= 0 ? 1 : -1), sampler_(std::move(sampler)) {
  if (k < 0 || dim < 1) throw DimensionError("singular cube: invalid degree or dimension");
}

SingularCube SingularCube::from_map(const SmoothMap& map, int orientation) {
  return SingularCube(
      map.in_dim(), map.out_dim(),
      [map](const Vec& s) { return CubeSample{map(0.0, s), map.in_dim() == 0 ? Mat(map.out_dim(), 0) : jacobian(map, 0.0, s)}; },
      orientation);
}

SingularCube SingularCube::point(const Vec& x, int orientation) {
  return SingularCube(
      0, static_cast<int>(x.size()), [x](const Vec&) { return CubeSample{x, Mat(x.size(), 0)}; }, orientation);
}

CubeSample SingularCube::sample(const Vec& s) const {
  if (s.size() != k_) throw DimensionError("cube sampled with a parameter of the wrong size");
  CubeSample out = sampler_(s);
  if (out.point.size() != dim_ || out.tangents.rows() != dim_ || out.tangents.cols() != k_)
    throw DimensionError("cube sampler returned a sample of the wrong shape");
  return out;
}

SingularCube SingularCube::face(int axis, int side) const {
  if (k_ == 0) throw DegreeError("a 0-cube has no faces");
  if (axis < 0 || axis >= k_ || (side != 0 && side != 1)) throw DimensionError("invalid face selector");
  const SingularCube parent = *this;
  const int k = k_;
  return SingularCube(
      k - 1, dim_,
      [parent, axis, side, k](const Vec& s) {
        Vec full(k);
        for (int i = 0, j = 0; i < k; ++i) full(i) = (i == axis) ? double(side) : s(j++);
        CubeSample in = parent.sampler_(full);
        Mat t(in.tangents.rows(), k - 1);
        for (int i = 0, j = 0; i < k; ++i)
          if (i != axis) t.col(j++) = in.tangents.col(i);
        return CubeSample{std::move(in.point), std::move(t)};
      },
      orientation_);
}

SingularCube SingularCube::flipped() const {
  SingularCube c = *this;
  c.orientation_ = -orientation_;
  return c;
}

Chain::Chain(SingularCube cube, int coefficient) { add(std::move(cube), coefficient); }

void Chain::add(SingularCube cube, int coefficient) {
  if (!terms_.empty() && (cube.degree() != terms_.front().cube.degree() || cube.dim() != terms_.front().cube.dim()))
    throw DegreeError("chain terms must share degree and dimension");
  terms_.push_back({coefficient, std::move(cube)});
}

Chain& Chain::operator+=(const Chain& other) {
  for (const auto& term : other.terms_) add(term.cube, term.coefficient);
  return *this;
}

int Chain::degree() const { return terms_.empty() ? -1 : terms_.front().cube.degree(); }
int Chain::dim() const { return terms_.empty() ? 0 : terms_.front().cube.dim(); }

Chain operator*(int coefficient, const Chain& c) {
  Chain out;
  for (const auto& term : c.terms()) out.add(term.cube, coefficient * term.coefficient);
  return out;
}

Chain operator+(const Chain& a, const Chain& b) {
  Chain out = a;
  out += b;
  return out;
}

// ---- quadrature --------------------------------------------------------------

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw PreconditionError("Gauss-Legendre rule needs at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[n - 1 - i] = x;
    weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

CubeRule cube_rule(int k, const QuadratureSpec& q) {
  if (q.points_per_axis < 1 || q.panels_per_axis < 1) throw PreconditionError("quadrature spec must be positive");
  std::vector<double> gx, gw;
  gauss_legendre(q.points_per_axis, gx, gw);
  std::vector<double> ax, aw;
  const double h = 1.0 / q.panels_per_axis;
  for (int p = 0; p < q.panels_per_axis; ++p)
    for (int i = 0; i < q.points_per_axis; ++i) {
      ax.push_back(h * (p + 0.5 * (gx[i] + 1.0)));
      aw.push_back(0.5 * h * gw[i]);
    }
  const int per_axis = static_cast<int>(ax.size());
  long long total = 1;
  for (int d = 0; d < k; ++d) total *= per_axis;
  CubeRule rule;
  rule.nodes.resize(k, total);
  rule.weights.assign(total, 1.0);
  for (long long n = 0; n < total; ++n) {
    long long rem = n;
    for (int d = k - 1; d >= 0; --d) {
      const int i = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      rule.nodes(d, n) = ax[i];
      rule.weights[n] *= aw[i];
    }
  }
  return rule;
}

double pair_form(const Vec& coefficients, int dim, int degree, const Mat& tangents) {
  if (degree == 0) return coefficients(0);
  static thread_local std::map<std::pair<int, int>, std::vector<MultiIndex>> tables;
  auto key = std::make_pair(dim, degree);
  auto it = tables.find(key);
  if (it == tables.end()) it = tables.emplace(key, index_table(dim, degree)).first;
  const auto& table = it->second;
  double sum = 0.0;
  Mat sub(degree, degree);
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (coefficients(r) == 0.0) continue;
    for (int a = 0; a < degree; ++a) sub.row(a) = tangents.row(table[r][a]);
    sum += coefficients(r) * (degree == 1 ? sub(0, 0) : sub.determinant());
  }
  return sum;
}

namespace {

void require_degree(const DifferentialForm& omega, int k, int dim) {
  if (omega.degree() != k) throw DegreeError("form degree does not match the chain degree");
  if (omega.dim() != dim) throw DimensionError("form and chain live on charts of different dimension");
}

}  // namespace

double integrate_over_cube(const DifferentialForm& omega, const SingularCube& c, const QuadratureSpec& q, double t) {
  require_degree(omega, c.degree(), c.dim());
  const CubeRule rule = cube_rule(c.degree(), q);
  double sum = 0.0;
  for (std::size_t n = 0; n < rule.weights.size(); ++n) {
    const CubeSample s = c.sample(rule.nodes.col(static_cast<Eigen::Index>(n)));
    sum += rule.weights[n] * pair_form(omega(t, s.point), omega.dim(), omega.degree(), s.tangents);
  }
  return c.orientation() * sum;
}

double integrate_over_chain(const DifferentialForm& omega, const Chain& c, const QuadratureSpec& q, double t) {
  double sum = 0.0;
  for (const auto& term : c.terms()) {
    if (term.coefficient == 0) continue;
    sum += term.coefficient * integrate_over_cube(omega, term.cube, q, t);
  }
  return sum;
}

Chain boundary(const SingularCube& c) {
  if (c.degree() == 0) throw DegreeError("boundary of a 0-cube");
  Chain out;
  for (int i = 0; i < c.degree(); ++i)
    for (int a = 0; a <= 1; ++a) out.add(c.face(i, a), ((i + 1 + a) % 2 == 0) ? 1 : -1);
  return out;
}

Chain boundary(const Chain& c) {
  Chain out;
  for (const auto& term : c.terms()) out += term.coefficient * boundary(term.cube);
  return out;
}

namespace {

DifferentialForm probe_form(int dim, int degree, int which) {
  // Fixed pseudo-random frequencies and phases, one sine per coefficient.
  const int n = binomial(dim, degree);
  Mat freq(n, dim);
  Vec phase(n);
  unsigned state = 2654435761u * static_cast<unsigned>(which + 1);
  auto next = [&state] {
    state = state * 1664525u + 1013904223u;
    return (state >> 8) / double(1u << 24);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) freq(i, j) = 2.0 * next() - 1.0;
    phase(i) = 3.0 * next();
  }
  return DifferentialForm::exact<1>(dim, degree, [freq, phase, n](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> c(n);
    for (int i = 0; i < n; ++i) {
      S arg = S(phase(i));
      for (Eigen::Index j = 0; j < x.size(); ++j) arg = arg + freq(i, j) * x(j);
      c(i) = sin(arg) + 0.5;
    }
    return c;
  });
}

}  // namespace

double closure_defect(const Chain& c, const QuadratureSpec& q) {
  if (c.empty()) return 0.0;
  const int k = c.degree();
  if (k == 0) {
    // A 0-chain is closed when its coefficients sum to zero.
    long long total = 0;
    for (const auto& term : c.terms()) total += term.coefficient * term.cube.orientation();
    return std::abs(static_cast<double>(total));
  }
  const Chain b = boundary(c);
  double defect = 0.0;
  for (int which = 0; which < 3; ++which)
    defect = std::max(defect, std::abs(integrate_over_chain(probe_form(c.dim(), k - 1, which), b, q, 0.0)));
  return defect;
}

double stokes_residual(const DifferentialForm& omega, const SingularCube& c, const QuadratureSpec& q) {
  if (omega.degree() != c.degree() - 1) throw DegreeError("Stokes residual needs a (k-1)-form on a k-cube");
  const double lhs = integrate_over_chain(omega, boundary(c), q, 0.0);
  const double rhs = integrate_over_cube(exterior_derivative(omega), c, q, 0.0);
  return std::abs(lhs - rhs);
}

// ---- transport ---------------------------------------------------------------

namespace {

std::string describe(const Vec& s) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s(i);
  os << ")";
  return os.str();
}

struct SampleCache {
  std::mutex mutex;
  std::map<std::vector<double>, CubeSample> entries;
};

}  // namespace

Chain transport_chain(const Chain& c, const FlowMap& flow) {
  Chain out;
  for (const auto& term : c.terms()) {
    const SingularCube base = term.cube;
    auto cache = std::make_shared<SampleCache>();
    const FlowMap g = flow;
    SingularCube moved(
        base.degree(), base.dim(),
        [base, g, cache](const Vec& s) {
          std::vector<double> key(s.data(), s.data() + s.size());
          {
            std::lock_guard<std::mutex> lock(cache->mutex);
            auto it = cache->entries.find(key);
            if (it != cache->entries.end()) return it->second;
          }
          const CubeSample in = base.sample(s);
          TangentFlow f;
          try {
            f = flow_with_tangents(g.field(), in.point, in.tangents, g.t0(), g.t1(), g.step());
          } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " at cube parameter " + describe(s), e.last_good_time());
          }
          CubeSample result{f.point, f.tangents};
          std::lock_guard<std::mutex> lock(cache->mutex);
          cache->entries.emplace(std::move(key), result);
          return result;
        },
        base.orientation());
    out.add(std::move(moved), term.coefficient);
  }
  return out;
}

std::vector<double> transported_integrals(const VectorField& v, const DifferentialForm& omega, const Chain& c,
                                          double t0, const std::vector<double>& times,
                                          const SweepSettings& settings) {
  std::vector<double> totals(times.size(), 0.0);
  if (c.empty()) return totals;
  const int k = c.degree();
  require_degree(omega, k, c.dim());
  if (v.dim() != c.dim()) throw DimensionError("field and chain dimensions differ");
  const CubeRule rule = cube_rule(k, settings.quadrature);
  const std::size_t nodes = rule.weights.size();
  for (const auto& term : c.terms()) {
    if (term.coefficient == 0) continue;
    const SingularCube& cube = term.cube;
    std::vector<double> contrib(nodes * times.size(), 0.0);
    parallel_for(nodes, [&](std::size_t n) {
      const Vec s = rule.nodes.col(static_cast<Eigen::Index>(n));
      const CubeSample in = cube.sample(s);
      std::vector<TangentFlow> moved;
      try {
        moved = flow_with_tangents(v, in.point, in.tangents, t0, times, settings.step);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " at cube parameter " + describe(s), e.last_good_time());
      }
      for (std::size_t j = 0; j < times.size(); ++j) {
        const double tf = settings.form_time == FormTime::initial ? t0 : times[j];
        contrib[n * times.size() + j] =
            rule.weights[n] * pair_form(omega(tf, moved[j].point), omega.dim(), k, moved[j].tangents);
      }
    });
    for (std::size_t j = 0; j < times.size(); ++j) {
      double sum = 0.0;
      for (std::size_t n = 0; n < nodes; ++n) sum += contrib[n * times.size() + j];
      totals[j] += term.coefficient * cube.orientation() * sum;
    }
  }
  return totals;
}

// ---- shapes ------------------------------------------------------------------

SingularCube circle(const Vec& center, double radius, int axis_a, int axis_b) {
  const int m = static_cast<int>(center.size());
  return SingularCube::from_map(SmoothMap::exact<1>(1, m, [center, radius, axis_a, axis_b](const auto& t, const auto& s) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> x = center.template cast<S>();
    const S th = 2.0 * std::numbers::pi * s(0);
    x(axis_a) += radius * cos(th);
    x(axis_b) += radius * sin(th);
    return x;
  }));
}

SingularCube disk(const Vec& center, double radius, int axis_a, int axis_b) {
  const int m = static_cast<int>(center.size());
  return SingularCube::from_map(SmoothMap::exact<1>(2, m, [center, radius, axis_a, axis_b](const auto& t, const auto& s) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> x = center.template cast<S>();
    const S th = 2.0 * std::numbers::pi * s(1);
    x(axis_a) += radius * s(0) * cos(th);
    x(axis_b) += radius * s(0) * sin(th);
    return x;
  }));
}

SingularCube box(const Vec& lo, const Vec& size, int dim) {
  const int k = static_cast<int>(lo.size());
  if (size.size() != k || k > dim) throw DimensionError("box: inconsistent sizes");
  return SingularCube::from_map(SmoothMap::exact<1>(k, dim, [lo, size, dim, k](const auto& t, const auto& s) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> x = VecX<S>::Zero(dim);
    for (int i = 0; i < k; ++i) x(i) = lo(i) + size(i) * s(i);
    return x;
  }));
}

SingularCube segment(const Vec& a, const Vec& b) {
  const int m = static_cast<int>(a.size());
  return SingularCube::from_map(SmoothMap::exact<1>(1, m, [a, b](const auto& t, const auto& s) {
    using S = std::decay_t<decltype(t)>;
    return VecX<S>(a.template cast<S>() + (b - a).template cast<S>() * s(0));
  }));
}

SingularCube ball3(const Vec& center, double radius) {
  if (center.size() != 3) throw DimensionError("ball3 needs a 3-dimensional center");
  return SingularCube::from_map(SmoothMap::exact<1>(3, 3, [center, radius](const auto& t, const auto& s) {
    using S = std::decay_t<decltype(t)>;
    const S rho = radius * s(0);
    const S th = std::numbers::pi * s(1);
    const S ph = 2.0 * std::numbers::pi * s(2);
    VecX<S> x(3);
    x << center(0) + rho * sin(th) * cos(ph), center(1) + rho * sin(th) * sin(ph), center(2) + rho * cos(th);
    return x;
  }));
}

}  // namespace intinv
