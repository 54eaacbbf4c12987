#pragma once

#include <memory>
#include <string>
#include <utility>

#include "intinv/common.hpp"

namespace intinv {

/// A smooth map (t, x) -> R^out evaluable on double and on nested dual
/// scalars. Maps built with exact() instantiate the supplied generic callable
/// at every stored dual level, so their partials are exact. Maps built with
/// sampled() only know double values; deeper levels are obtained by central
/// differences of step h_fd along the dual tangent.
class SmoothMap {
 public:
  template <class S>
  using Fn = std::function<VecX<S>(const S&, const VecX<S>&)>;

  static constexpr int kMaxStoredLevel = 3;

  SmoothMap() = default;

  /// f is a generic callable (const S& t, const VecX<S>& x) -> VecX<S>.
  template <int MaxLevel = kMaxStoredLevel, class F>
  static SmoothMap exact(int in_dim, int out_dim, F f, double h_fd = kDefaultFdStep) {
    static_assert(MaxLevel >= 0 && MaxLevel <= kMaxStoredLevel);
    auto impl = std::make_shared<Impl>();
    impl->in = in_dim;
    impl->out = out_dim;
    impl->level = MaxLevel;
    impl->h = h_fd;
    impl->f0 = [f](const double& t, const VecX<double>& x) -> VecX<double> { return f(t, x); };
    if constexpr (MaxLevel >= 1)
      impl->f1 = [f](const D1& t, const VecX<D1>& x) -> VecX<D1> { return f(t, x); };
    if constexpr (MaxLevel >= 2)
      impl->f2 = [f](const D2& t, const VecX<D2>& x) -> VecX<D2> { return f(t, x); };
    if constexpr (MaxLevel >= 3)
      impl->f3 = [f](const D3& t, const VecX<D3>& x) -> VecX<D3> { return f(t, x); };
    SmoothMap m;
    m.impl_ = std::move(impl);
    return m;
  }

  /// Scalar-valued convenience: f returns S instead of VecX<S>.
  template <int MaxLevel = kMaxStoredLevel, class F>
  static SmoothMap exact_scalar(int in_dim, F f, double h_fd = kDefaultFdStep) {
    return exact<MaxLevel>(
        in_dim, 1,
        [f](const auto& t, const auto& x) {
          using S = std::decay_t<decltype(t)>;
          VecX<S> out(1);
          out(0) = f(t, x);
          return out;
        },
        h_fd);
  }

  /// Double-only map; all derivatives come from central differences.
  static SmoothMap sampled(int in_dim, int out_dim, Fn<double> f, double h_fd = kDefaultFdStep) {
    auto impl = std::make_shared<Impl>();
    impl->in = in_dim;
    impl->out = out_dim;
    impl->level = 0;
    impl->h = h_fd;
    impl->f0 = std::move(f);
    SmoothMap m;
    m.impl_ = std::move(impl);
    return m;
  }

  template <class S>
  VecX<S> operator()(const S& t, const VecX<S>& x) const {
    if (!impl_) throw DimensionError("evaluation of an empty SmoothMap");
    if (x.size() != impl_->in)
      throw DimensionError("SmoothMap: expected input of size " + std::to_string(impl_->in) + ", got " +
                           std::to_string(x.size()));
    constexpr int depth = dual_depth<S>::value;
    if constexpr (depth == 0) {
      return impl_->f0(t, x);
    } else {
      if (depth <= impl_->level) {
        if constexpr (depth == 1) return impl_->f1(t, x);
        if constexpr (depth == 2) return impl_->f2(t, x);
        if constexpr (depth == 3) return impl_->f3(t, x);
      }
      return lift(t, x);
    }
  }

  bool valid() const { return static_cast<bool>(impl_); }
  int in_dim() const { return impl_ ? impl_->in : 0; }
  int out_dim() const { return impl_ ? impl_->out : 0; }
  /// Highest dual level evaluated exactly; above it derivatives are finite differences.
  int exact_level() const { return impl_ ? impl_->level : -1; }
  double fd_step() const { return impl_ ? impl_->h : kDefaultFdStep; }

 private:
  struct Impl {
    int in = 0;
    int out = 0;
    int level = 0;
    double h = kDefaultFdStep;
    Fn<double> f0;
    Fn<D1> f1;
    Fn<D2> f2;
    Fn<D3> f3;
  };

  template <class T>
  VecX<Dual<T>> lift(const Dual<T>& t, const VecX<Dual<T>>& x) const {
    const VecX<T> xv = value_part(x);
    const VecX<T> xe = eps_part(x);
    const VecX<T> fv = (*this)(t.val, xv);
    const double h = impl_->h;
    const VecX<T> fp = (*this)(T(t.val + t.eps * h), VecX<T>(xv + xe * h));
    const VecX<T> fm = (*this)(T(t.val - t.eps * h), VecX<T>(xv - xe * h));
    const VecX<T> der = (fp - fm) * (0.5 / h);
    return make_dual<T>(fv, der);
  }

  std::shared_ptr<const Impl> impl_;
};

/// d f / d x at (t, x): out x in matrix.
template <class S>
MatX<S> jacobian(const SmoothMap& f, const S& t, const VecX<S>& x) {
  MatX<S> jac(f.out_dim(), x.size());
  const Dual<S> td(t);
  for (Eigen::Index i = 0; i < x.size(); ++i) jac.col(i) = eps_part(f(td, seed(x, i)));
  return jac;
}

/// Directional derivative of f along dir.
template <class S>
VecX<S> directional(const SmoothMap& f, const S& t, const VecX<S>& x, const VecX<S>& dir) {
  return eps_part(f(Dual<S>(t), make_dual<S>(x, dir)));
}

/// d f / d t at (t, x).
template <class S>
VecX<S> time_partial(const SmoothMap& f, const S& t, const VecX<S>& x) {
  return eps_part(f(Dual<S>(t, S(1.0)), promote(x)));
}

/// Gradient of a scalar-valued map.
template <class S>
VecX<S> gradient(const SmoothMap& f, const S& t, const VecX<S>& x) {
  return jacobian(f, t, x).row(0).transpose();
}

inline double scalar_value(const SmoothMap& f, double t, const Vec& x) { return f(t, x)(0); }

}  // namespace intinv
