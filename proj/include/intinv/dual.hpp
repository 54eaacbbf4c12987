#pragma once

// Forward-mode dual numbers. Dual<T> carries a value and one directional
// derivative; nesting Dual<Dual<double>> gives mixed second derivatives, and
// so on. Every form, field and Hamiltonian in the toolkit can be evaluated on
// these scalars, which is how exact partials are obtained without symbolic
// expressions.

#include <cmath>
#include <limits>
#include <type_traits>

#include <Eigen/Core>

namespace intinv {

template <class T>
struct Dual;

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

/// 0 for double, 1 + depth(T) for Dual<T>.
template <class T>
struct dual_depth : std::integral_constant<int, 0> {};
template <class T>
struct dual_depth<Dual<T>> : std::integral_constant<int, 1 + dual_depth<T>::value> {};

template <class T>
inline constexpr bool is_arithmetic_v = std::is_arithmetic_v<T>;

template <class T>
struct Dual {
  T val{};
  T eps{};

  Dual() = default;
  Dual(double v) : val(v), eps(0.0) {}  // NOLINT(google-explicit-constructor)
  template <class U = T, std::enable_if_t<!std::is_same_v<U, double>, int> = 0>
  Dual(const T& v) : val(v), eps(0.0) {}  // NOLINT(google-explicit-constructor)
  Dual(const T& v, const T& e) : val(v), eps(e) {}

  Dual& operator+=(const Dual& o) { val += o.val; eps += o.eps; return *this; }
  Dual& operator-=(const Dual& o) { val -= o.val; eps -= o.eps; return *this; }
  Dual& operator*=(const Dual& o) {
    eps = eps * o.val + val * o.eps;
    val *= o.val;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const T inv = T(1.0) / o.val;
    val *= inv;
    eps = (eps - val * o.eps) * inv;
    return *this;
  }
};

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;

inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) { return value_of(x.val); }

// ---- arithmetic -----------------------------------------------------------

template <class T>
Dual<T> operator-(const Dual<T>& a) { return {-a.val, -a.eps}; }
template <class T>
Dual<T> operator+(const Dual<T>& a) { return a; }

template <class T>
Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <class T>
Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.val * b.val, a.eps * b.val + a.val * b.eps};
}
template <class T>
Dual<T> operator/(Dual<T> a, const Dual<T>& b) { return a /= b; }

template <class T, class A, std::enable_if_t<is_arithmetic_v<A>, int> = 0>
Dual<T> operator+(const Dual<T>& a, A b) { return {a.val + double(b), a.eps}; }
template <class T, class A, std::enable_if_t<is_arithmetic_v<A>, int> = 0>
Dual<T> operator+(A b, const Dual<T>& a) { return {a.val + double(b), a.eps}; }
template <class T, class A, std::enable_if_t<is_arithmetic_v<A>, int> = 0>
Dual<T> operator-(const Dual<T>& a, A b) { return {a.val - double(b), a.eps}; }
template <class T, class A, std::enable_if_t<is_arithmetic_v<A>, int> = 0>
Dual<T> operator-(A b, const Dual<T>& a) { return {double(b) - a.val, -a.eps}; }
template <class T, class A, std::enable_if_t<is_arithmetic_v<A>, int> = 0>
Dual<T> operator*(const Dual<T>& a, A b) { return {a.val * double(b), a.eps * double(b)}; }
template <class T, class A, std::enable_if_t<is_arithmetic_v<A>, int> = 0>
Dual<T> operator*(A b, const Dual<T>& a) { return {a.val * double(b), a.eps * double(b)}; }
template <class T, class A, std::enable_if_t<is_arithmetic_v<A>, int> = 0>
Dual<T> operator/(const Dual<T>& a, A b) { return {a.val / double(b), a.eps / double(b)}; }
template <class T, class A, std::enable_if_t<is_arithmetic_v<A>, int> = 0>
Dual<T> operator/(A b, const Dual<T>& a) { return Dual<T>(double(b)) / a; }

// Comparisons look only at the innermost value; they drive branching, never
// differentiation.
template <class T, class U>
bool operator<(const T& a, const U& b) requires(is_dual<T>::value || is_dual<U>::value) {
  return value_of(a) < value_of(b);
}
template <class T, class U>
bool operator>(const T& a, const U& b) requires(is_dual<T>::value || is_dual<U>::value) {
  return value_of(a) > value_of(b);
}
template <class T, class U>
bool operator<=(const T& a, const U& b) requires(is_dual<T>::value || is_dual<U>::value) {
  return value_of(a) <= value_of(b);
}
template <class T, class U>
bool operator>=(const T& a, const U& b) requires(is_dual<T>::value || is_dual<U>::value) {
  return value_of(a) >= value_of(b);
}
template <class T, class U>
bool operator==(const T& a, const U& b) requires(is_dual<T>::value || is_dual<U>::value) {
  return value_of(a) == value_of(b);
}
template <class T, class U>
bool operator!=(const T& a, const U& b) requires(is_dual<T>::value || is_dual<U>::value) {
  return value_of(a) != value_of(b);
}

// ---- elementary functions -------------------------------------------------

using std::abs;
using std::acos;
using std::asin;
using std::atan;
using std::atan2;
using std::cos;
using std::cosh;
using std::exp;
using std::isfinite;
using std::log;
using std::pow;
using std::sin;
using std::sinh;
using std::sqrt;
using std::tan;
using std::tanh;

template <class T>
Dual<T> sin(const Dual<T>& a) { return {sin(a.val), a.eps * cos(a.val)}; }
template <class T>
Dual<T> cos(const Dual<T>& a) { return {cos(a.val), -(a.eps * sin(a.val))}; }
template <class T>
Dual<T> tan(const Dual<T>& a) {
  const T c = cos(a.val);
  return {tan(a.val), a.eps / (c * c)};
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
  const T e = exp(a.val);
  return {e, a.eps * e};
}
template <class T>
Dual<T> log(const Dual<T>& a) { return {log(a.val), a.eps / a.val}; }
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  const T r = sqrt(a.val);
  return {r, a.eps / (2.0 * r)};
}
template <class T>
Dual<T> pow(const Dual<T>& a, double n) {
  return {pow(a.val, n), a.eps * (n * pow(a.val, n - 1.0))};
}
template <class T>
Dual<T> sinh(const Dual<T>& a) { return {sinh(a.val), a.eps * cosh(a.val)}; }
template <class T>
Dual<T> cosh(const Dual<T>& a) { return {cosh(a.val), a.eps * sinh(a.val)}; }
template <class T>
Dual<T> tanh(const Dual<T>& a) {
  const T th = tanh(a.val);
  return {th, a.eps * (1.0 - th * th)};
}
template <class T>
Dual<T> abs(const Dual<T>& a) { return value_of(a) < 0.0 ? -a : a; }
template <class T>
Dual<T> atan(const Dual<T>& a) { return {atan(a.val), a.eps / (1.0 + a.val * a.val)}; }
template <class T>
Dual<T> asin(const Dual<T>& a) { return {asin(a.val), a.eps / sqrt(1.0 - a.val * a.val)}; }
template <class T>
Dual<T> acos(const Dual<T>& a) { return {acos(a.val), -(a.eps / sqrt(1.0 - a.val * a.val))}; }
template <class T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  const T r2 = x.val * x.val + y.val * y.val;
  return {atan2(y.val, x.val), (x.val * y.eps - y.val * x.eps) / r2};
}
template <class T>
bool isfinite(const Dual<T>& a) { return isfinite(a.val) && isfinite(a.eps); }

// Eigen's numext hooks for real scalars.
template <class T>
const Dual<T>& conj(const Dual<T>& a) { return a; }
template <class T>
const Dual<T>& real(const Dual<T>& a) { return a; }
template <class T>
Dual<T> imag(const Dual<T>&) { return Dual<T>(0.0); }
template <class T>
Dual<T> abs2(const Dual<T>& a) { return a * a; }

}  // namespace intinv

namespace Eigen {

template <class T>
struct NumTraits<intinv::Dual<T>> : GenericNumTraits<intinv::Dual<T>> {
  using Real = intinv::Dual<T>;
  using NonInteger = intinv::Dual<T>;
  using Literal = intinv::Dual<T>;
  using Nested = intinv::Dual<T>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2 * NumTraits<T>::ReadCost,
    AddCost = 2 * NumTraits<T>::AddCost,
    MulCost = 3 * NumTraits<T>::MulCost
  };
  static inline Real epsilon() { return Real(std::numeric_limits<double>::epsilon()); }
  static inline Real dummy_precision() { return Real(1e-12); }
  static inline Real highest() { return Real(std::numeric_limits<double>::max()); }
  static inline Real lowest() { return Real(std::numeric_limits<double>::lowest()); }
  static inline int digits10() { return std::numeric_limits<double>::digits10; }
};

template <class T>
struct ScalarBinaryOpTraits<intinv::Dual<T>, double, internal::scalar_product_op<intinv::Dual<T>, double>> {
  using ReturnType = intinv::Dual<T>;
};
template <class T>
struct ScalarBinaryOpTraits<double, intinv::Dual<T>, internal::scalar_product_op<double, intinv::Dual<T>>> {
  using ReturnType = intinv::Dual<T>;
};
template <class T>
struct ScalarBinaryOpTraits<intinv::Dual<T>, double, internal::scalar_quotient_op<intinv::Dual<T>, double>> {
  using ReturnType = intinv::Dual<T>;
};

}  // namespace Eigen
