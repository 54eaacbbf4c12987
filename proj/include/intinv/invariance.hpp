#pragma once

#include <optional>
#include <string>
#include <vector>

#include "intinv/chain.hpp"

namespace intinv {

/// Integral values over a time grid and their deviation from the first value.
struct DriftSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> drift;
  /// Absolute bound on max |drift|.
  double tolerance = 0.0;
  bool pass = false;

  double max_drift() const;
};

/// Builds the drift column and verdict (max |drift| <= tolerance).
DriftSeries make_drift_series(std::vector<double> times, std::vector<double> values, double tolerance);

/// Absolute tolerance for a per-unit-time rate over the given time grid: rate * max(1, span).
double tolerance_for_span(double rate, double t0, const std::vector<double>& times);

struct ResidualStats {
  double max = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
};
ResidualStats residual_stats(const std::vector<double>& residuals);

struct InvarianceReport {
  std::string scenario_id;
  ResidualStats residuals;
  std::vector<DriftSeries> series;
};

/// Coefficient norm of L_v omega (or L_v omega - d potential) at the samples.
InvarianceReport check_pointwise_invariance(const VectorField& v, const DifferentialForm& omega,
                                            const std::vector<Vec>& samples, double t = 0.0,
                                            const std::optional<DifferentialForm>& potential = std::nullopt);

enum class TransportKind { absolute, relative_closed, nonautonomous };

struct TransportOptions {
  SweepSettings sweep;
  /// Drift tolerance per unit time.
  double tolerance_rate = 1e-6;
  /// Verify that relative_closed receives a closed chain.
  bool check_preconditions = true;
  double closure_tolerance = 1e-8;
};

/// Integral of omega over G^t_{t0}(c) for each t. absolute and relative_closed use
/// omega(t0, .); nonautonomous uses omega(t, .).
DriftSeries check_transport_invariance(const VectorField& v, const DifferentialForm& omega, const Chain& c,
                                       double t0, const std::vector<double>& times, TransportKind kind,
                                       const TransportOptions& options = {});

struct TransportDerivative {
  double lhs = 0.0;
  double rhs = 0.0;
  double difference = 0.0;
};

/// Central difference in t of int_{G^t_{t0}(c)} omega(t, .) against int (d omega/dt + L_v omega).
TransportDerivative transport_derivative_check(const VectorField& v, const DifferentialForm& omega, const Chain& c,
                                               double t, double dt, std::optional<double> t0 = std::nullopt,
                                               const SweepSettings& settings = {});

struct FirstIntegral {
  ScalarField f;
  /// max |FD grad f - i_v q| at the check samples.
  double differential_residual = 0.0;
  /// max |L_v f| at the check samples.
  double lie_residual = 0.0;
};

struct FirstIntegralOptions {
  /// Half-width of the sample box around base used for the checks.
  double check_radius = 0.5;
  int check_samples = 25;
  double invariance_tolerance = 1e-6;
  double fd_step = kDefaultFdStep;
  bool check_preconditions = true;
};

/// f(x) = integral of i_v q along the segment base -> x (64-node Gauss rule); a first integral when L_v q = 0.
FirstIntegral first_integral_from_area_form(const VectorField& v, const DifferentialForm& q, const Vec& base,
                                            const FirstIntegralOptions& options = {});

/// omega(t, .) = ((G^t_{t0})^{-1})^* omega_hat, as a time-dependent form exact in (t, x) through dual level 2.
DifferentialForm form_transport_family(const VectorField& v, const DifferentialForm& omega_hat, double t0,
                                       double step = kDefaultStep);

/// The family frozen at time t (coefficients no longer depend on the time argument).
DifferentialForm solve_form_transport(const VectorField& v, const DifferentialForm& omega_hat, double t0, double t,
                                      double step = kDefaultStep);

/// max coefficient norm of d omega/dt + L_v omega at the samples and time t.
double transport_pde_residual(const VectorField& v, const DifferentialForm& omega, const std::vector<Vec>& samples,
                              double t);

/// max coefficient norm of L_{v~} mu minus the split formula, mu = mu_plus + dt ^ mu_minus on (t, x).
double mixed_form_residual(const VectorField& v, const DifferentialForm& mu_plus, const DifferentialForm& mu_minus,
                           const std::vector<Vec>& extended_samples);

}  // namespace intinv
