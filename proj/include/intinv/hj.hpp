#pragma once

// First-order PDE u_t + f(t, x, u, u_x) = 0 solved by characteristics, plus
// generating-function canonical maps, straightening and complete integrals.
// A characteristic state is w = (x, xi, p) of length 2m + 1.

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "intinv/hamiltonian.hpp"

namespace intinv {

struct HJProblem {
  int dim = 0;
  /// f : (t, w) -> R with w = (x, xi, p).
  SmoothMap f;
  /// Initial datum u(t0, .) on dim coordinates.
  ScalarField initial;
  /// Initial momentum field (dim -> dim). Empty: the gradient of `initial`.
  std::optional<SmoothMap> initial_momentum;
  double t0 = 0.0;
  /// Seed box for fans.
  Vec box_lo;
  Vec box_hi;
  double step = kDefaultStep;

  /// f(t, x, xi, p) and u(x) are generic callables.
  template <class F, class U>
  static HJProblem exact(int dim, F f, U u, Vec lo, Vec hi, double t0 = 0.0) {
    HJProblem p;
    p.dim = dim;
    p.f = SmoothMap::exact_scalar(2 * dim + 1, [f, dim](const auto& t, const auto& w) {
      using S = std::decay_t<decltype(t)>;
      return f(t, VecX<S>(w.head(dim)), S(w(dim)), VecX<S>(w.tail(dim)));
    });
    p.initial = ScalarField::exact(dim, [u](const auto&, const auto& x) { return u(x); });
    p.t0 = t0;
    p.box_lo = std::move(lo);
    p.box_hi = std::move(hi);
    return p;
  }
};

/// (1, f_p, p.f_p - f, -f_x - f_xi p) on (t, x, xi, p).
VectorField characteristic_field(const HJProblem& prob);
/// The same system with t as the field's time on (x, xi, p).
VectorField characteristic_rhs(const HJProblem& prob);
/// (x_hat, u(x_hat), p_hat(x_hat)).
Vec characteristic_initial_state(const HJProblem& prob, const Vec& seed);

struct FanSettings {
  /// Target distance between neighbouring characteristics at the latest time.
  double target_separation = 1e-2;
  std::size_t max_seeds = 2048;
  double caustic_threshold = 1e-6;
  /// det dX/dx_hat is sampled on this time grid from t0.
  double monitor_interval = 1e-2;
};

/// One characteristic at one time.
struct FanNode {
  Vec seed;
  /// (x, xi, p).
  Vec state;
  Mat dx_dseed;
  double det = 1.0;

  Vec x(int m) const { return state.head(m); }
  double xi(int m) const { return state(m); }
  Vec p(int m) const { return state.tail(m); }
};

/// Tracks one seed to each requested time. Throws CausticError when det dX/dx_hat
/// changes sign or drops below the threshold on the monitor grid.
std::vector<FanNode> track_characteristic(const HJProblem& prob, const Vec& seed, const std::vector<double>& times,
                                          const FanSettings& settings = {});

class CharacteristicFan {
 public:
  static CharacteristicFan build(const HJProblem& prob, std::vector<double> times, const FanSettings& settings = {});

  const std::vector<double>& times() const { return times_; }
  /// nodes(k)[s] is seed s at times()[k].
  const std::vector<FanNode>& nodes(std::size_t k) const { return nodes_[k]; }
  std::size_t seed_count() const { return nodes_.empty() ? 0 : nodes_.front().size(); }
  const std::vector<int>& per_axis() const { return per_axis_; }
  const FanSettings& settings() const { return settings_; }
  /// Index of the stored time nearest to t.
  std::size_t nearest_time(double t) const;
  /// Seed whose foot point at times()[k] is nearest to x.
  const FanNode& nearest_node(std::size_t k, const Vec& x) const;

 private:
  std::vector<double> times_;
  std::vector<std::vector<FanNode>> nodes_;
  std::vector<int> per_axis_;
  FanSettings settings_;
};

struct CauchySolution {
  double u = 0.0;
  Vec grad;
  Vec seed;
  double det = 1.0;
};

/// Finds x_hat with X(t, x_hat) = x by Newton from the nearest foot point.
CauchySolution solve_cauchy_characteristics(const HJProblem& prob, const CharacteristicFan& fan, double t,
                                            const Vec& x);

using SpaceTimeEvaluator = std::function<double(double, const Vec&)>;
using SpaceTimePoint = std::pair<double, Vec>;

/// u(t, x) from the fan.
SpaceTimeEvaluator cauchy_evaluator(const HJProblem& prob, const CharacteristicFan& fan);

/// max |u_t + f(t, x, u, grad u)| with central differences of u.
double hj_residual(const SpaceTimeEvaluator& u, const HJProblem& prob, const std::vector<SpaceTimePoint>& samples,
                   double h_fd = kDefaultFdStep);

/// max over times and (strided) seeds of |P - grad u(t, X)| with grad u by central
/// differences of the reconstructed solution.
double graph_invariance_residual(const HJProblem& prob, const CharacteristicFan& fan, std::size_t max_nodes = 32,
                                 double h_fd = kDefaultFdStep);

/// |loop integral of p dx - f dt| over a circle in the (t, x^axis) plane lifted to the graph.
double graph_loop_residual(const HJProblem& prob, const CharacteristicFan& fan, double t, const Vec& x,
                           double radius, int axis = 0);

/// Reconstruction through the Hamiltonian flow of f(t, x, 0, p) and the action
/// integral; requires f independent of xi.
CauchySolution hamiltonian_reconstruction(const HJProblem& prob, double t, const Vec& x, const Vec& seed_guess);

/// |S(t1, x(t1)) - S(t0, x0) - int (p.H_p - H)| along the trajectory from (x0, grad S(t0, x0)).
double action_increment_check(const Hamiltonian& h, const ScalarField& s, const Vec& x0, double t0, double t1,
                              double step = kDefaultStep);

/// max - min of S_t + H(t, x, grad S) over the samples at a fixed t.
double hj_residual_spread(const Hamiltonian& h, const ScalarField& s, double t, const std::vector<Vec>& samples);

// ---- generating functions and canonical maps ------------------------------------

enum class GeneratingKind { s1, s2 };

struct GeneratingFunction {
  GeneratingKind kind = GeneratingKind::s1;
  int dof = 0;
  /// S(t, (x, Y)) with Y = X for s1 and Y = P for s2; exact through level 3.
  SmoothMap s;
  bool time_dependent = false;
  double nondegeneracy_threshold = 1e-8;
  /// Newton starts; defaults: s1 X = p, x = -P; s2 P = p, x = X.
  std::function<Vec(double, const Vec&)> forward_guess;
  std::function<Vec(double, const Vec&)> inverse_guess;

  template <class F>
  static GeneratingFunction exact(GeneratingKind kind, int dof, F f, bool time_dependent = false) {
    GeneratingFunction g;
    g.kind = kind;
    g.dof = dof;
    g.s = SmoothMap::exact_scalar(2 * dof, [f, dof](const auto& t, const auto& w) {
      using S = std::decay_t<decltype(t)>;
      return f(t, VecX<S>(w.head(dof)), VecX<S>(w.tail(dof)));
    });
    g.time_dependent = time_dependent;
    return g;
  }
};

/// det d^2 S / dx dY at (t, x, Y).
double nondegeneracy_witness(const GeneratingFunction& g, double t, const Vec& x, const Vec& y);

class CanonicalMap {
 public:
  CanonicalMap() = default;
  /// forward and inverse are (t, z) -> Z and (t, Z) -> z on 2 dof coordinates.
  CanonicalMap(int dof, SmoothMap forward, SmoothMap inverse, bool time_dependent,
               std::optional<GeneratingFunction> generator = std::nullopt);

  static CanonicalMap identity(int dof);
  static CanonicalMap from_permutation(const CanonicalPermutation& perm);
  /// Z = z - shift.
  static CanonicalMap translation(const Vec& shift);

  Vec forward(double t, const Vec& z) const { return forward_(t, z); }
  Vec inverse(double t, const Vec& big_z) const { return inverse_(t, big_z); }
  const SmoothMap& forward_map() const { return forward_; }
  const SmoothMap& inverse_map() const { return inverse_; }
  int dof() const { return dof_; }
  bool time_dependent() const { return time_dependent_; }
  const std::optional<GeneratingFunction>& generator() const { return generator_; }

  /// First this, then next; the composite keeps no generator.
  CanonicalMap then(const CanonicalMap& next) const;

  /// max |inverse(forward(z)) - z| over the samples.
  double round_trip_residual(const std::vector<Vec>& samples, double t = 0.0) const;

 private:
  int dof_ = 0;
  SmoothMap forward_;
  SmoothMap inverse_;
  bool time_dependent_ = false;
  std::optional<GeneratingFunction> generator_;
};

CanonicalMap build_canonical_map(const GeneratingFunction& g);

/// max |J^T Omega J - Omega| with J by central differences.
double canonicality_residual(const std::function<Vec(const Vec&)>& map, const std::vector<Vec>& samples,
                             double h_fd = kDefaultFdStep);
double canonicality_residual(const CanonicalMap& map, const std::vector<Vec>& samples, double t = 0.0,
                             double h_fd = kDefaultFdStep);

/// K(t, Z) = H(t, z(Z)) + dS/dt; maps without a generator must be time independent.
Hamiltonian transform_hamiltonian(const CanonicalMap& map, const Hamiltonian& h);

/// sup over the sample times of |inverse(t, Z(t)) - z(t)| for the flows of H and K.
double trajectory_match(const CanonicalMap& map, const Hamiltonian& h, const Hamiltonian& k, const Vec& z0, double t0,
                        const std::vector<double>& times, double step = kDefaultStep);

// ---- straightening ------------------------------------------------------------------

struct StraighteningOptions {
  /// Step in x^1 for the characteristic solve of the generating function.
  double step = 2e-3;
  double degeneracy_threshold = 1e-8;
  /// Half-width of the working box around the base point, used for the caustic check.
  double box_radius = 0.3;
  int box_samples = 5;
};

struct Straightening {
  /// z -> (X, P) with H = X^1 + energy.
  CanonicalMap map;
  /// H(z~).
  double energy = 0.0;
  /// Permutation applied after translating z~ to the origin.
  CanonicalPermutation permutation;
  /// The generating function S(x, X) in shifted, permuted coordinates.
  GeneratingFunction generator;
};

Straightening straighten_hamiltonian(const Hamiltonian& h, const Vec& base, const StraighteningOptions& options = {});

/// max |H(inverse(forward(z))) - X^1(forward(z)) - energy| over the samples.
double straightening_residual(const Straightening& s, const Hamiltonian& h, const std::vector<Vec>& samples);

struct StraightenedFlowResidual {
  /// max |X(t) - X(0)|.
  double x_drift = 0.0;
  /// max |P_1(t) + (t - t0) - P_1(t0)|.
  double p1_drift = 0.0;
  /// max |P_j(t) - P_j(t0)|, j >= 2.
  double p_rest_drift = 0.0;
};

StraightenedFlowResidual straightened_flow_residual(const Straightening& s, const Hamiltonian& h, const Vec& z0,
                                                    double t0, const std::vector<double>& times,
                                                    double step = kDefaultStep);

// ---- complete integrals -------------------------------------------------------------

struct CompleteIntegral {
  int dof = 0;
  /// S(t, (x, b)).
  SmoothMap s;

  template <class F>
  static CompleteIntegral exact(int dof, F f) {
    CompleteIntegral c;
    c.dof = dof;
    c.s = SmoothMap::exact_scalar(2 * dof, [f, dof](const auto& t, const auto& w) {
      using S = std::decay_t<decltype(t)>;
      return f(t, VecX<S>(w.head(dof)), VecX<S>(w.tail(dof)));
    });
    return c;
  }
};

struct CompleteIntegralOptions {
  double nondegeneracy_threshold = 1e-8;
  double hj_tolerance = 1e-8;
  /// Parameter perturbations and x offsets used by the HJ residual check.
  double check_radius = 0.1;
  double step = kDefaultStep;
};

struct CompleteIntegralResult {
  Vec b;
  Vec beta;
  std::vector<double> times;
  /// (x, p) from the level sets dS/db = beta.
  std::vector<Vec> states;
  /// sup |state - direct integration|.
  double match_error = 0.0;
  double hj_residual = 0.0;
};

CompleteIntegralResult integrate_via_complete_integral(const CompleteIntegral& s, const Hamiltonian& h,
                                                       const Vec& z0, double t0, const std::vector<double>& times,
                                                       const Vec& b_guess, const CompleteIntegralOptions& options = {});

}  // namespace intinv
