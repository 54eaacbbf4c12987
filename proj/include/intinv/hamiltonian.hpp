#pragma once

// Hamiltonian systems on canonical coordinates z = (x^1..x^m, p_1..p_m).
// beta = dp_i ^ dx^i, so beta(a, b) = a^T Omega b with Omega = canonical_matrix(m).
// Extended phase space puts t at coordinate 0: y = (t, x, p).

#include <functional>
#include <optional>
#include <vector>

#include "intinv/invariance.hpp"
#include "intinv/newton.hpp"

namespace intinv {

class Hamiltonian {
 public:
  Hamiltonian() = default;
  /// map : (t, z) -> R with z of length 2 dof.
  Hamiltonian(int dof, SmoothMap map, bool autonomous = true, bool homogeneous = false);

  /// f is a generic callable (const S& t, const VecX<S>& z) -> S.
  template <int MaxLevel = SmoothMap::kMaxStoredLevel, class F>
  static Hamiltonian exact(int dof, F f, bool autonomous = true, bool homogeneous = false) {
    return Hamiltonian(dof, SmoothMap::exact_scalar<MaxLevel>(2 * dof, f), autonomous, homogeneous);
  }
  static Hamiltonian sampled(int dof, std::function<double(double, const Vec&)> f, bool autonomous = true,
                             bool homogeneous = false, double h_fd = kDefaultFdStep);

  template <class S>
  S operator()(const S& t, const VecX<S>& z) const {
    return map_(t, z)(0);
  }
  double operator()(double t, const Vec& z) const { return map_(t, z)(0); }
  Vec grad_x(double t, const Vec& z) const { return gradient(map_, t, z).head(dof_); }
  Vec grad_p(double t, const Vec& z) const { return gradient(map_, t, z).tail(dof_); }
  double partial_t(double t, const Vec& z) const { return time_partial(map_, t, z)(0); }

  int dof() const { return dof_; }
  bool autonomous() const { return autonomous_; }
  bool homogeneous() const { return homogeneous_; }
  const SmoothMap& map() const { return map_; }
  ScalarField scalar_field() const { return ScalarField(map_); }

 private:
  int dof_ = 0;
  SmoothMap map_;
  bool autonomous_ = true;
  bool homogeneous_ = false;
};

/// Concatenates x and p.
Vec phase_point(const Vec& x, const Vec& p);

/// max |H - p_i dH/dp_i| at the samples.
double euler_identity_residual(const Hamiltonian& h, const std::vector<Vec>& samples, double t = 0.0);

/// w = (dH/dp, -dH/dx) on 2 dof coordinates.
VectorField hamiltonian_field(const Hamiltonian& h);
/// beta = dp_i ^ dx^i on 2 dof coordinates.
DifferentialForm beta_form(int dof);
/// zeta = p_i dx^i on 2 dof coordinates.
DifferentialForm zeta_form(int dof);
/// alpha = p_i dx^i - H dt on 2 dof + 1 coordinates.
DifferentialForm poincare_cartan_form(const Hamiltonian& h);
/// p_i dH/dp_i - H on 2 dof coordinates (time-dependent when H is).
ScalarField action_density(const Hamiltonian& h);

/// max coefficient norm of i_w beta + d H at the samples.
double field_equation_residual(const Hamiltonian& h, const std::vector<Vec>& samples, double t = 0.0);
/// max coefficient norm of i_{w~} d alpha at extended samples (t, x, p).
double characteristic_residual(const Hamiltonian& h, const std::vector<Vec>& extended_samples);
/// max coefficient norm of L_{w~} alpha - d(action density) at extended samples.
double relative_invariance_residual(const Hamiltonian& h, const std::vector<Vec>& extended_samples);

struct SymplecticityResult {
  /// max |J^T Omega J - Omega|.
  double residual = 0.0;
  /// |det J - 1|.
  double det_residual = 0.0;
  Mat jacobian;
};

SymplecticityResult symplecticity_residual(const Hamiltonian& h, const Vec& z0, double t0, double t,
                                           JacobianMethod method = JacobianMethod::variational,
                                           double step = kDefaultStep);

/// max |H(z(t)) - H(z0)| over the integration knots.
double energy_drift(const Hamiltonian& h, const Vec& z0, double t0, double t1, double step = kDefaultStep);

enum class LoopMode { closed_zeta, extended_alpha, homogeneous_open };

/// Drift of int zeta (or alpha on the extended space) over the transported curve.
DriftSeries loop_action_drift(const Hamiltonian& h, const Chain& curve, double t0, const std::vector<double>& times,
                              LoopMode mode, const TransportOptions& options = {});

struct GaussSettings {
  JacobianMethod method = JacobianMethod::finite_difference;
  double h_fd = kDefaultFdStep;
  double step = kDefaultStep;
};

/// max_s |dx^i(t)/dp_hat_s p_i(t)| for the trajectory from (x_hat, p_hat) at time 0.
double gauss_relation_residual(const Hamiltonian& h, const Vec& x_hat, const Vec& p_hat, double t,
                               const GaussSettings& settings = {});

// ---- canonical permutations --------------------------------------------------

/// Signed permutation Z = matrix z preserving beta.
struct CanonicalPermutation {
  Mat matrix;

  static CanonicalPermutation identity(int dof);
  /// X^i = -p_i, P_i = x^i.
  static CanonicalPermutation conjugate_swap(int dof, int i);
  /// X^i = x^j, X^j = x^i, P_i = p_j, P_j = p_i.
  static CanonicalPermutation index_swap(int dof, int i, int j);

  /// First this, then next.
  CanonicalPermutation then(const CanonicalPermutation& next) const;
  Vec apply(const Vec& z) const { return matrix * z; }
  Vec inverse(const Vec& big_z) const { return matrix.transpose() * big_z; }
  int dof() const { return static_cast<int>(matrix.rows()) / 2; }
};

/// K(t, Z) = H(t, z(Z)).
Hamiltonian transform(const Hamiltonian& h, const CanonicalPermutation& perm);

// ---- reduction on an energy level --------------------------------------------

struct ReductionOptions {
  /// Swap the index with the largest |dH/dp_j| into slot 1 first.
  bool auto_permute = true;
  double degeneracy_threshold = 1e-10;
  NewtonSettings newton = {60, 1e-14, 1e-12};
};

/// On H = h near a seed, p_1 = g(x^1, x^2..x^m, p_2..p_m); with T = x^1 as time the
/// remaining coordinates follow the Hamiltonian -g.
class ReducedSystem {
 public:
  ReducedSystem(Hamiltonian h, double energy, CanonicalPermutation perm, double p1_guess,
                const ReductionOptions& options = {});

  /// g at (T, y), y = (x^2..x^m, p_2..p_m) in permuted labels.
  double g(double t, const Vec& y) const { return g_map_(t, y)(0); }
  /// The reduced Hamiltonian -g with T as its time (dof - 1 degrees of freedom).
  Hamiltonian reduced_hamiltonian() const;
  VectorField reduced_field() const { return hamiltonian_field(reduced_hamiltonian()); }

  /// Full phase point in the original labels.
  Vec lift(double t, const Vec& y) const;
  /// (T, y) of a full phase point given in the original labels.
  std::pair<double, Vec> project(const Vec& z) const;

  double energy() const { return energy_; }
  const CanonicalPermutation& permutation() const { return perm_; }
  int dof() const { return dof_; }
  const SmoothMap& g_map() const { return g_map_; }

 private:
  Hamiltonian h_;
  double energy_;
  CanonicalPermutation perm_;
  int dof_;
  SmoothMap g_map_;
};

ReducedSystem reduce_on_energy_level(const Hamiltonian& h, double energy, const Vec& seed,
                                     const ReductionOptions& options = {});

struct ReductionComparison {
  double sup_error = 0.0;
  std::size_t samples = 0;
};

/// Integrates the full system from seed over [0, duration], reparametrizes by the
/// first (permuted) coordinate and compares with the reduced flow at `samples` values of T.
ReductionComparison compare_reduction(const Hamiltonian& h, const Vec& seed, double duration, int samples = 40,
                                      const ReductionOptions& options = {}, double step = kDefaultStep);

// ---- Poincare sections --------------------------------------------------------

struct SectionSpec {
  double energy = 0.0;
  /// Y = {s = 0} inside the energy level.
  ScalarField function;
  /// +1: accept crossings where s increases; -1: where it decreases.
  int direction = 1;
  /// Section coordinates (2 dof - 2) -> phase point on Y.
  SmoothMap chart;
  /// Phase point on Y -> section coordinates.
  std::function<Vec(const Vec&)> coordinates;
  double max_time = 100.0;
  /// Crossings earlier than this are ignored.
  double min_time = 1e-2;
  double transversality_threshold = 1e-8;
  double crossing_tolerance = 1e-10;
};

struct ReturnMap {
  Vec image;
  Vec image_coordinates;
  double return_time = 0.0;
  /// d Q / d c by central differences in section coordinates.
  Mat jacobian;
};

/// First return to the section with matching direction, located to |s| < crossing_tolerance.
std::pair<Vec, double> next_crossing(const Hamiltonian& h, const SectionSpec& section, const Vec& z0,
                                     double step = kDefaultStep);

ReturnMap poincare_return_map(const Hamiltonian& h, const SectionSpec& section, const Vec& z0,
                              double step = kDefaultStep, double h_fd = kDefaultFdStep);

/// beta restricted to the section: D phi^T Omega D phi at section coordinates c.
Mat restricted_form_matrix(const SectionSpec& section, const Vec& c);

/// max |J^T B'(Q(c)) J - B'(c)| for the return map from section coordinates c.
double section_symplecticity_residual(const SectionSpec& section, const Vec& c, const ReturnMap& q);

}  // namespace intinv
