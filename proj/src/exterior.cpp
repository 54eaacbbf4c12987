#include "intinv/exterior.hpp"

#include <algorithm>
#include <memory>
#include <string>

#include "intinv/flow.hpp"

namespace intinv {

int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

std::vector<MultiIndex> index_table(int m, int k) {
  std::vector<MultiIndex> out;
  if (k < 0 || k > m) return out;
  MultiIndex idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    out.push_back(idx);
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == m - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int j = pos + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

bool is_increasing(const MultiIndex& idx, int m) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= m) return false;
    if (i > 0 && idx[i] <= idx[i - 1]) return false;
  }
  return true;
}

int index_position(int m, const MultiIndex& idx) {
  if (!is_increasing(idx, m)) throw DimensionError("multi-index is not strictly increasing in range");
  // Lexicographic rank: count tuples that precede idx.
  const int k = static_cast<int>(idx.size());
  int rank = 0;
  int prev = -1;
  for (int p = 0; p < k; ++p) {
    for (int c = prev + 1; c < idx[p]; ++c) rank += binomial(m - c - 1, k - p - 1);
    prev = idx[p];
  }
  return rank;
}

namespace {

/// Sorts idx in place; returns the permutation sign, or 0 on a repeated index.
int sort_with_sign(MultiIndex& idx) {
  int sign = 1;
  for (std::size_t i = 1; i < idx.size(); ++i)
    for (std::size_t j = i; j > 0 && idx[j - 1] >= idx[j]; --j) {
      if (idx[j - 1] == idx[j]) return 0;
      std::swap(idx[j - 1], idx[j]);
      sign = -sign;
    }
  return sign;
}

struct Term {
  int out;
  int a;
  int b;
  double sign;
};

void require_same_shape(const DifferentialForm& a, const DifferentialForm& b, const char* op) {
  if (a.dim() != b.dim() || a.degree() != b.degree())
    throw DimensionError(std::string(op) + ": forms of different dimension or degree");
}

}  // namespace

// ---- fields ------------------------------------------------------------------

ScalarField::ScalarField(SmoothMap map) : map_(std::move(map)) {
  if (map_.out_dim() != 1) throw DimensionError("ScalarField requires a map with one output");
}

ScalarField ScalarField::sampled(int dim, std::function<double(double, const Vec&)> f, double h_fd) {
  return ScalarField(SmoothMap::sampled(
      dim, 1,
      [f = std::move(f)](const double& t, const Vec& x) {
        Vec out(1);
        out(0) = f(t, x);
        return out;
      },
      h_fd));
}

VectorField::VectorField(SmoothMap map, bool time_dependent)
    : map_(std::move(map)), time_dependent_(time_dependent) {
  if (map_.in_dim() != map_.out_dim()) throw DimensionError("VectorField requires a square map");
}

VectorField VectorField::sampled(int dim, SmoothMap::Fn<double> f, bool time_dependent, double h_fd) {
  return VectorField(SmoothMap::sampled(dim, dim, std::move(f), h_fd), time_dependent);
}

VectorField VectorField::constant(const Vec& c) {
  return exact(static_cast<int>(c.size()), [c](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    (void)x;
    return VecX<S>(c.template cast<S>());
  });
}

VectorField VectorField::zero(int dim) { return constant(Vec::Zero(dim)); }

// ---- forms -------------------------------------------------------------------

DifferentialForm::DifferentialForm(int dim, int degree, SmoothMap coefficients)
    : dim_(dim), degree_(degree), coeffs_(std::move(coefficients)) {
  if (degree < 0 || degree > dim) throw DegreeError("form degree out of range");
  if (coeffs_.in_dim() != dim || coeffs_.out_dim() != binomial(dim, degree))
    throw DimensionError("coefficient map has the wrong shape for a " + std::to_string(degree) +
                         "-form in dimension " + std::to_string(dim));
}

DifferentialForm DifferentialForm::sampled(int dim, int degree, SmoothMap::Fn<double> f, double h_fd) {
  return DifferentialForm(dim, degree, SmoothMap::sampled(dim, binomial(dim, degree), std::move(f), h_fd));
}

DifferentialForm DifferentialForm::constant(int dim, int degree, const Vec& coefficients) {
  if (coefficients.size() != binomial(dim, degree)) throw DimensionError("constant form: wrong size");
  return exact(dim, degree, [coefficients](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    (void)x;
    return VecX<S>(coefficients.template cast<S>());
  });
}

DifferentialForm DifferentialForm::zero(int dim, int degree) {
  return constant(dim, degree, Vec::Zero(binomial(dim, degree)));
}

DifferentialForm DifferentialForm::basis(int dim, const MultiIndex& idx, double scale) {
  MultiIndex sorted = idx;
  const int sign = sort_with_sign(sorted);
  const int k = static_cast<int>(idx.size());
  Vec c = Vec::Zero(binomial(dim, k));
  if (sign != 0) c(index_position(dim, sorted)) = sign * scale;
  return constant(dim, k, c);
}

DifferentialForm DifferentialForm::function(const ScalarField& f) {
  return DifferentialForm(f.dim(), 0, f.map());
}

double DifferentialForm::component(double t, const Vec& x, const MultiIndex& idx) const {
  MultiIndex sorted = idx;
  const int sign = sort_with_sign(sorted);
  if (sign == 0) return 0.0;
  return sign * (*this)(t, x)(index_position(dim_, sorted));
}

double DifferentialForm::evaluate(double t, const Vec& x, const Mat& vectors) const {
  if (vectors.rows() != dim_ || vectors.cols() != degree_)
    throw DimensionError("evaluate: expected dim x degree matrix of vectors");
  const Vec c = (*this)(t, x);
  if (degree_ == 0) return c(0);
  const auto table = index_table(dim_, degree_);
  double sum = 0.0;
  Mat sub(degree_, degree_);
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (int a = 0; a < degree_; ++a) sub.row(a) = vectors.row(table[r][a]);
    sum += c(r) * sub.determinant();
  }
  return sum;
}

DifferentialForm operator+(const DifferentialForm& a, const DifferentialForm& b) {
  require_same_shape(a, b, "sum");
  SmoothMap ma = a.map(), mb = b.map();
  return DifferentialForm::exact(a.dim(), a.degree(), [ma, mb](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    return VecX<S>(ma(t, x) + mb(t, x));
  });
}

DifferentialForm operator-(const DifferentialForm& a, const DifferentialForm& b) {
  require_same_shape(a, b, "difference");
  SmoothMap ma = a.map(), mb = b.map();
  return DifferentialForm::exact(a.dim(), a.degree(), [ma, mb](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    return VecX<S>(ma(t, x) - mb(t, x));
  });
}

DifferentialForm operator-(const DifferentialForm& a) { return (-1.0) * a; }

DifferentialForm operator*(double s, const DifferentialForm& a) {
  SmoothMap ma = a.map();
  return DifferentialForm::exact(a.dim(), a.degree(), [ma, s](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    return VecX<S>(ma(t, x) * s);
  });
}

DifferentialForm operator*(const ScalarField& f, const DifferentialForm& a) {
  if (f.dim() != a.dim()) throw DimensionError("scalar times form: dimension mismatch");
  SmoothMap ma = a.map(), mf = f.map();
  return DifferentialForm::exact(a.dim(), a.degree(), [ma, mf](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    const S s = mf(t, x)(0);
    return VecX<S>(ma(t, x) * s);
  });
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  if (a.dim() != b.dim()) throw DimensionError("sum of vector fields of different dimension");
  SmoothMap ma = a.map(), mb = b.map();
  return VectorField::exact(
      a.dim(),
      [ma, mb](const auto& t, const auto& x) {
        using S = std::decay_t<decltype(t)>;
        return VecX<S>(ma(t, x) + mb(t, x));
      },
      a.time_dependent() || b.time_dependent());
}

VectorField operator-(const VectorField& a, const VectorField& b) { return a + (-1.0) * b; }

VectorField operator*(double s, const VectorField& a) {
  SmoothMap ma = a.map();
  return VectorField::exact(
      a.dim(),
      [ma, s](const auto& t, const auto& x) {
        using S = std::decay_t<decltype(t)>;
        return VecX<S>(ma(t, x) * s);
      },
      a.time_dependent());
}

// ---- algebra -----------------------------------------------------------------

DifferentialForm wedge(const DifferentialForm& a, const DifferentialForm& b) {
  if (a.dim() != b.dim()) throw DimensionError("wedge: forms on charts of different dimension");
  const int m = a.dim(), ka = a.degree(), kb = b.degree();
  if (ka + kb > m) throw DimensionError("wedge: total degree exceeds the chart dimension");
  auto terms = std::make_shared<std::vector<Term>>();
  const auto ta = index_table(m, ka), tb = index_table(m, kb);
  for (std::size_t i = 0; i < ta.size(); ++i)
    for (std::size_t j = 0; j < tb.size(); ++j) {
      MultiIndex merged = ta[i];
      merged.insert(merged.end(), tb[j].begin(), tb[j].end());
      const int sign = sort_with_sign(merged);
      if (sign == 0) continue;
      terms->push_back({index_position(m, merged), static_cast<int>(i), static_cast<int>(j),
                        static_cast<double>(sign)});
    }
  const int out = binomial(m, ka + kb);
  SmoothMap ma = a.map(), mb = b.map();
  return DifferentialForm::exact(m, ka + kb, [ma, mb, terms, out](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    const VecX<S> ca = ma(t, x), cb = mb(t, x);
    VecX<S> r = VecX<S>::Zero(out);
    for (const Term& term : *terms) r(term.out) += term.sign * (ca(term.a) * cb(term.b));
    return r;
  });
}

DifferentialForm exterior_derivative(const DifferentialForm& omega) {
  const int m = omega.dim(), k = omega.degree();
  if (k >= m) throw DimensionError("exterior derivative of a top-degree form");
  // (d omega)_J = sum_p (-1)^p d omega_{J minus J[p]} / d x^{J[p]}
  auto terms = std::make_shared<std::vector<Term>>();
  const auto tj = index_table(m, k + 1);
  for (std::size_t j = 0; j < tj.size(); ++j)
    for (int p = 0; p <= k; ++p) {
      MultiIndex rest = tj[j];
      rest.erase(rest.begin() + p);
      terms->push_back({static_cast<int>(j), index_position(m, rest), tj[j][p], p % 2 == 0 ? 1.0 : -1.0});
    }
  const int out = binomial(m, k + 1);
  SmoothMap mo = omega.map();
  return DifferentialForm::exact<2>(m, k + 1, [mo, terms, out](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    const MatX<S> jac = jacobian(mo, t, x);
    VecX<S> r = VecX<S>::Zero(out);
    for (const Term& term : *terms) r(term.out) += term.sign * jac(term.a, term.b);
    return r;
  });
}

DifferentialForm exterior_derivative(const ScalarField& f) {
  return exterior_derivative(DifferentialForm::function(f));
}

DifferentialForm interior_product(const VectorField& v, const DifferentialForm& omega) {
  const int m = omega.dim(), k = omega.degree();
  if (k == 0) throw DegreeError("interior product of a 0-form");
  if (v.dim() != m) throw DimensionError("interior product: field and form dimensions differ");
  // (i_v omega)_I = sum_i (-1)^{#{a in I : a < i}} v^i omega_{I + i}
  auto terms = std::make_shared<std::vector<Term>>();
  const auto ti = index_table(m, k - 1);
  for (std::size_t r = 0; r < ti.size(); ++r)
    for (int i = 0; i < m; ++i) {
      if (std::find(ti[r].begin(), ti[r].end(), i) != ti[r].end()) continue;
      MultiIndex full = ti[r];
      const int before = static_cast<int>(std::count_if(full.begin(), full.end(), [i](int a) { return a < i; }));
      full.insert(full.begin() + before, i);
      terms->push_back({static_cast<int>(r), index_position(m, full), i, before % 2 == 0 ? 1.0 : -1.0});
    }
  const int out = binomial(m, k - 1);
  SmoothMap mo = omega.map(), mv = v.map();
  return DifferentialForm::exact(m, k - 1, [mo, mv, terms, out](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    const VecX<S> c = mo(t, x), vv = mv(t, x);
    VecX<S> r = VecX<S>::Zero(out);
    for (const Term& term : *terms) r(term.out) += term.sign * (vv(term.b) * c(term.a));
    return r;
  });
}

DifferentialForm time_derivative(const DifferentialForm& omega) {
  SmoothMap mo = omega.map();
  return DifferentialForm::exact<2>(omega.dim(), omega.degree(), [mo](const auto& t, const auto& x) {
    return time_partial(mo, t, x);
  });
}

namespace {

/// (g^s)^* omega at x, g the flow of v(t, .) frozen at time t.
Vec flow_pullback_coefficients(const VectorField& v, const DifferentialForm& omega, double t, const Vec& x,
                               double s, double integrator_step) {
  const int m = omega.dim(), k = omega.degree();
  auto frozen = [&v, t](const auto& tau, const auto& y) {
    using S = std::decay_t<decltype(tau)>;
    return v.map()(S(t), y);
  };
  Mat dg(m, m);
  Vec y = x;
  for (int i = 0; i < m; ++i) {
    const VecX<D1> yi = rk4_integrate<D1>(frozen, D1(0.0), D1(s), seed(x, i), integrator_step);
    dg.col(i) = eps_part(yi);
    if (i == 0) y = value_part(yi);
  }
  if (m == 0) y = rk4_integrate<double>(frozen, 0.0, s, x, integrator_step);
  const Vec c = omega(t, y);
  if (k == 0) return c;
  const auto rows = index_table(m, k);
  Vec r = Vec::Zero(static_cast<Eigen::Index>(rows.size()));
  Mat sub(k, k);
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) sub(a, b) = dg(rows[i][a], rows[j][b]);
      r(j) += c(i) * sub.determinant();
    }
  return r;
}

}  // namespace

DifferentialForm lie_derivative(const VectorField& v, const DifferentialForm& omega, const LieOptions& options) {
  const int m = omega.dim(), k = omega.degree();
  if (v.dim() != m) throw DimensionError("Lie derivative: field and form dimensions differ");
  if (options.mode == LieMode::cartan) {
    if (k == 0) return interior_product(v, exterior_derivative(omega));
    if (k == m) return exterior_derivative(interior_product(v, omega));
    return exterior_derivative(interior_product(v, omega)) + interior_product(v, exterior_derivative(omega));
  }
  if (!(options.fd_time_step > 0.0)) throw PreconditionError("flow_fd Lie derivative needs a positive time step");
  const double dt = options.fd_time_step;
  const double step = options.integrator_step;
  return DifferentialForm::sampled(
      m, k,
      [v, omega, dt, step](const double& t, const Vec& x) -> Vec {
        const Vec plus = flow_pullback_coefficients(v, omega, t, x, dt, step);
        const Vec minus = flow_pullback_coefficients(v, omega, t, x, -dt, step);
        return (plus - minus) / (2.0 * dt);
      },
      omega.map().fd_step());
}

ScalarField lie_derivative(const VectorField& v, const ScalarField& f) {
  if (v.dim() != f.dim()) throw DimensionError("Lie derivative: field and function dimensions differ");
  SmoothMap mv = v.map(), mf = f.map();
  return ScalarField(SmoothMap::exact<2>(f.dim(), 1, [mv, mf](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    VecX<S> out(1);
    out(0) = directional(mf, t, x, VecX<S>(mv(t, x)))(0);
    return out;
  }));
}

DifferentialForm pullback(const SmoothMap& u, const DifferentialForm& omega) {
  const int n = u.in_dim(), m = omega.dim(), k = omega.degree();
  if (u.out_dim() != m) throw DimensionError("pullback: map target dimension differs from the form's chart");
  if (k > n) throw DimensionError("pullback: form degree exceeds the source dimension");
  auto rows = std::make_shared<std::vector<MultiIndex>>(index_table(m, k));
  auto cols = std::make_shared<std::vector<MultiIndex>>(index_table(n, k));
  const int out = binomial(n, k);
  SmoothMap mo = omega.map();
  return DifferentialForm::exact<2>(n, k, [u, mo, rows, cols, out, k](const auto& t, const auto& x) {
    using S = std::decay_t<decltype(t)>;
    const VecX<S> y = u(t, x);
    const VecX<S> c = mo(t, y);
    if (k == 0) return c;
    const MatX<S> du = jacobian(u, t, x);
    VecX<S> r = VecX<S>::Zero(out);
    MatX<S> sub(k, k);
    for (std::size_t j = 0; j < cols->size(); ++j)
      for (std::size_t i = 0; i < rows->size(); ++i) {
        for (int a = 0; a < k; ++a)
          for (int b = 0; b < k; ++b) sub(a, b) = du((*rows)[i][a], (*cols)[j][b]);
        r(j) += c(i) * determinant<S>(sub);
      }
    return r;
  });
}

VectorField commutator(const VectorField& u, const VectorField& v) {
  if (u.dim() != v.dim()) throw DimensionError("commutator of fields of different dimension");
  SmoothMap mu = u.map(), mv = v.map();
  return VectorField(SmoothMap::exact<2>(u.dim(), u.dim(),
                                         [mu, mv](const auto& t, const auto& x) {
                                           using S = std::decay_t<decltype(t)>;
                                           const VecX<S> uu = mu(t, x), vv = mv(t, x);
                                           return VecX<S>(directional(mu, t, x, vv) - directional(mv, t, x, uu));
                                         }),
                     u.time_dependent() || v.time_dependent());
}

// ---- extended space ----------------------------------------------------------

DifferentialForm to_extended(const DifferentialForm& omega) {
  const int m = omega.dim(), k = omega.degree();
  // Components without index 0 map to shifted indices on (t, x).
  std::vector<int> target;
  for (const auto& idx : index_table(m, k)) {
    MultiIndex shifted = idx;
    for (int& i : shifted) ++i;
    target.push_back(index_position(m + 1, shifted));
  }
  auto tgt = std::make_shared<std::vector<int>>(std::move(target));
  const int out = binomial(m + 1, k);
  SmoothMap mo = omega.map();
  return DifferentialForm::exact(m + 1, k, [mo, tgt, out, m](const auto& t, const auto& y) {
    using S = std::decay_t<decltype(t)>;
    (void)t;
    const VecX<S> c = mo(y(0), VecX<S>(y.tail(m)));
    VecX<S> r = VecX<S>::Zero(out);
    for (std::size_t i = 0; i < tgt->size(); ++i) r((*tgt)[i]) = c(static_cast<Eigen::Index>(i));
    return r;
  });
}

DifferentialForm dt_form(int extended_dim) { return DifferentialForm::basis(extended_dim, {0}); }

DifferentialForm dt_wedge(const DifferentialForm& omega) {
  return wedge(dt_form(omega.dim() + 1), to_extended(omega));
}

double coefficient_norm(const DifferentialForm& omega, double t, const Vec& x) {
  const Vec c = omega(t, x);
  return c.size() == 0 ? 0.0 : c.lpNorm<Eigen::Infinity>();
}

}  // namespace intinv
