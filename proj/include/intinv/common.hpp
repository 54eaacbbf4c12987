#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "intinv/dual.hpp"

namespace intinv {

template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Default central-difference step.
inline constexpr double kDefaultFdStep = 1e-5;
/// Default fixed integrator step.
inline constexpr double kDefaultStep = 1e-3;

// ---- errors ----------------------------------------------------------------

/// Base of every math-layer failure.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

#define INTINV_DEFINE_ERROR(Name, tag)                          \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what) : Error(what) {}     \
    const char* kind() const noexcept override { return tag; }  \
  };

INTINV_DEFINE_ERROR(DimensionError, "dimension")
INTINV_DEFINE_ERROR(DegreeError, "degree")
INTINV_DEFINE_ERROR(PreconditionError, "precondition")
INTINV_DEFINE_ERROR(InversionError, "inversion")
INTINV_DEFINE_ERROR(DegeneracyError, "degeneracy")
INTINV_DEFINE_ERROR(NondegeneracyError, "nondegeneracy")
INTINV_DEFINE_ERROR(ReductionError, "reduction")
INTINV_DEFINE_ERROR(SectionError, "section")
INTINV_DEFINE_ERROR(EscapeError, "escape")
INTINV_DEFINE_ERROR(CoverageError, "coverage")
INTINV_DEFINE_ERROR(NewtonError, "newton")

#undef INTINV_DEFINE_ERROR

/// Non-finite state during integration; carries the last time with a finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double last_good_time)
      : Error(what), last_good_time_(last_good_time) {}
  const char* kind() const noexcept override { return "divergence"; }
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

/// Characteristic or geodesic fan degenerated; carries the first singular time estimate.
class CausticError : public Error {
 public:
  CausticError(const std::string& what, double singular_time)
      : Error(what), singular_time_(singular_time) {}
  const char* kind() const noexcept override { return "caustic"; }
  double singular_time() const { return singular_time_; }

 private:
  double singular_time_;
};

/// Focal point of a normal geodesic fan.
class HorizonError : public CausticError {
 public:
  using CausticError::CausticError;
  const char* kind() const noexcept override { return "horizon"; }
};

// ---- small helpers ---------------------------------------------------------

template <class S>
VecX<double> values_of(const VecX<S>& v) {
  VecX<double> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = value_of(v(i));
  return out;
}

template <class S>
MatX<double> values_of(const MatX<S>& m) {
  MatX<double> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = value_of(m(i, j));
  return out;
}

template <class T>
VecX<T> value_part(const VecX<Dual<T>>& v) {
  return v.unaryExpr([](const Dual<T>& d) { return d.val; });
}

template <class T>
VecX<T> eps_part(const VecX<Dual<T>>& v) {
  return v.unaryExpr([](const Dual<T>& d) { return d.eps; });
}

template <class T>
VecX<Dual<T>> make_dual(const VecX<T>& val, const VecX<T>& eps) {
  VecX<Dual<T>> out(val.size());
  for (Eigen::Index i = 0; i < val.size(); ++i) out(i) = Dual<T>(val(i), eps(i));
  return out;
}

/// Lift a vector to the next dual level with zero tangent.
template <class T>
VecX<Dual<T>> promote(const VecX<T>& v) {
  return v.unaryExpr([](const T& x) { return Dual<T>(x); });
}

/// Seed direction i: returns v + eps * e_i.
template <class T>
VecX<Dual<T>> seed(const VecX<T>& v, Eigen::Index i) {
  VecX<Dual<T>> out = promote(v);
  out(i).eps = T(1.0);
  return out;
}

/// Determinant by Gaussian elimination with partial pivoting on the innermost value.
template <class S>
S determinant(MatX<S> a) {
  const Eigen::Index n = a.rows();
  if (n != a.cols()) throw DimensionError("determinant of a non-square matrix");
  S det(1.0);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::abs(value_of(a(r, c))) > std::abs(value_of(a(piv, c)))) piv = r;
    if (value_of(a(piv, c)) == 0.0) return S(0.0);
    if (piv != c) {
      a.row(piv).swap(a.row(c));
      det = -det;
    }
    det = det * a(c, c);
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const S f = a(r, c) / a(c, c);
      for (Eigen::Index k = c; k < n; ++k) a(r, k) = a(r, k) - f * a(c, k);
    }
  }
  return det;
}

/// Solves A x = B (multiple right-hand sides) with partial pivoting.
template <class S>
MatX<S> solve(MatX<S> a, MatX<S> b) {
  const Eigen::Index n = a.rows();
  if (n != a.cols() || b.rows() != n) throw DimensionError("solve: shape mismatch");
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::abs(value_of(a(r, c))) > std::abs(value_of(a(piv, c)))) piv = r;
    if (value_of(a(piv, c)) == 0.0) throw DegeneracyError("solve: singular matrix");
    if (piv != c) {
      a.row(piv).swap(a.row(c));
      b.row(piv).swap(b.row(c));
    }
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const S f = a(r, c) / a(c, c);
      for (Eigen::Index k = c; k < n; ++k) a(r, k) = a(r, k) - f * a(c, k);
      for (Eigen::Index k = 0; k < b.cols(); ++k) b(r, k) = b(r, k) - f * b(c, k);
    }
  }
  for (Eigen::Index c = n - 1; c >= 0; --c) {
    for (Eigen::Index k = 0; k < b.cols(); ++k) {
      S acc = b(c, k);
      for (Eigen::Index j = c + 1; j < n; ++j) acc = acc - a(c, j) * b(j, k);
      b(c, k) = acc / a(c, c);
    }
  }
  return b;
}

template <class S>
VecX<S> solve(const MatX<S>& a, const VecX<S>& b) {
  MatX<S> rhs = b;
  return solve(a, rhs).col(0);
}

template <class S>
MatX<S> inverse(const MatX<S>& a) {
  return solve<S>(a, MatX<S>(MatX<S>::Identity(a.rows(), a.cols())));
}

/// Fixed-size canonical matrix for beta = dp_i ^ dx^i on (x..., p...): beta(a, b) = a^T Omega b.
inline Mat canonical_matrix(int dof) {
  Mat omega = Mat::Zero(2 * dof, 2 * dof);
  omega.topRightCorner(dof, dof) = -Mat::Identity(dof, dof);
  omega.bottomLeftCorner(dof, dof) = Mat::Identity(dof, dof);
  return omega;
}

/// Runs body(i) for i in [0, n). Uses the worker count from INTINV_WORKERS
/// (default: hardware concurrency). Nested calls run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Worker count honoured by parallel_for.
unsigned worker_count();

}  // namespace intinv
