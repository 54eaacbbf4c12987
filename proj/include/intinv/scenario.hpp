#pragma once

// Declarative scenarios: a config names a builtin system (or an inline
// polynomial/trigonometric coefficient table), the runner wires it to one
// verification operation and returns a report record.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "intinv/invariance.hpp"

namespace intinv {

inline constexpr const char* kToolkitVersion = "1.0.0";

/// Schema or reference problem in a config; never raised by the math layer.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Expectation { invariant, violation };

struct ScenarioSettings {
  std::optional<double> step;
  std::optional<double> h_fd;
  std::optional<QuadratureSpec> quadrature;
  /// Absolute bound on the scenario metric; replaces the builtin default.
  std::optional<double> tolerance;
  std::optional<std::vector<double>> times;
};

/// One term c * t^tpow * prod x_i^pow_i * prod trig(k . x + kt t + phase).
struct TrigFactor {
  bool is_sin = true;
  std::vector<double> k;
  double kt = 0.0;
  double phase = 0.0;
};

struct PolyTerm {
  double c = 0.0;
  std::vector<int> pow;
  int tpow = 0;
  std::vector<TrigFactor> trig;
};

/// Sum of terms; an empty table is the zero function.
struct PolyTable {
  std::vector<PolyTerm> terms;

  template <class S>
  S eval(const S& t, const VecX<S>& x) const {
    S sum = S(0.0);
    for (const PolyTerm& term : terms) {
      S v = S(term.c);
      for (int i = 0; i < term.tpow; ++i) v = v * t;
      for (std::size_t i = 0; i < term.pow.size(); ++i)
        for (int e = 0; e < term.pow[i]; ++e) v = v * x(static_cast<Eigen::Index>(i));
      for (const TrigFactor& f : term.trig) {
        S arg = S(f.phase) + f.kt * t;
        for (std::size_t i = 0; i < f.k.size(); ++i) arg = arg + f.k[i] * x(static_cast<Eigen::Index>(i));
        v = v * (f.is_sin ? sin(arg) : cos(arg));
      }
      sum = sum + v;
    }
    return sum;
  }
};

struct InlineShape {
  /// circle | disk | box | segment | ball3
  std::string shape;
  Vec center;
  double radius = 0.0;
  int axis_a = 0;
  int axis_b = 1;
  Vec lo, size;
  Vec a, b;
};

/// Inline systems; which fields are read depends on the kind.
struct InlineSystem {
  int dim = 0;
  std::vector<PolyTable> field;
  int form_degree = 0;
  std::vector<PolyTable> form;
  std::optional<InlineShape> chain;
  /// absolute | relative_closed
  std::string transport_mode = "absolute";
  /// Hamiltonian on (x, p), dof = dim / 2.
  std::optional<PolyTable> hamiltonian;
  /// Metric entries, column-major dim x dim.
  std::vector<PolyTable> metric;
  Vec point, velocity;
  double t0 = 0.0;
  double t1 = 1.0;
  double box_lo = -1.0, box_hi = 1.0;
  int samples = 50;
};

struct ScenarioConfig {
  std::string id;
  /// Builtin id, or "inline".
  std::string system;
  std::string kind;
  std::optional<Expectation> expect;
  ScenarioSettings settings;
  std::optional<InlineSystem> inline_system;
  std::optional<std::string> json_output;
  std::optional<std::string> csv_output;
};

struct ReportRow {
  double t = 0.0;
  double value = 0.0;
  double drift = 0.0;
  double residual = 0.0;
};

struct SettingEcho {
  std::string key;
  double value = 0.0;
};

struct ReportRecord {
  std::string scenario_id;
  std::string kind;
  std::string system;
  std::string expect = "invariant";
  std::vector<ReportRow> rows;
  ResidualStats residuals;
  /// The quantity compared with the tolerance (max |drift| or max residual).
  double metric = 0.0;
  double tolerance = 0.0;
  /// pass | fail | error
  std::string verdict = "pass";
  std::string error_kind;
  std::string error_message;
  std::vector<SettingEcho> settings;
  std::string version = kToolkitVersion;
};

/// What a runner measured before the verdict is applied.
struct ScenarioOutcome {
  std::vector<ReportRow> rows;
  std::vector<double> residuals;
  double metric = 0.0;
  double tolerance = 0.0;
};

/// Numeric settings after defaults from the builtin are applied.
struct ResolvedSettings {
  double step = kDefaultStep;
  double h_fd = kDefaultFdStep;
  QuadratureSpec quadrature;
  std::optional<double> tolerance;
  std::optional<std::vector<double>> times;
};

using ScenarioRunner = std::function<ScenarioOutcome(const ScenarioConfig&, const ResolvedSettings&)>;

struct CatalogEntry {
  std::string id;
  std::string kind;
  std::string description;
  Expectation expect = Expectation::invariant;
};

/// Stable catalog of builtin scenarios sorted by id.
std::vector<CatalogEntry> list_builtin_scenarios();
/// Kinds that accept an inline system.
std::vector<std::string> inline_kinds();

/// Parses one config file (a scenario object or {"scenarios": [...]}). Throws ConfigError.
std::vector<ScenarioConfig> parse_config(const std::string& text, const std::string& source = "<config>");
std::vector<ScenarioConfig> load_config_file(const std::string& path);
/// Every *.json file in the directory, in filename order.
std::vector<ScenarioConfig> load_config_dir(const std::string& dir);
/// Unknown systems, kind mismatches, duplicate ids and bad inline tables. Throws ConfigError.
void validate_configs(const std::vector<ScenarioConfig>& configs);

/// Math-layer failures become error records; ConfigError propagates.
ReportRecord run_scenario(const ScenarioConfig& config);
/// Runs up to `workers` scenarios at once; records are ordered by scenario id.
std::vector<ReportRecord> run_suite(const std::vector<ScenarioConfig>& configs, unsigned workers);

enum class ReportFormat { json, csv };

std::string emit_report(const std::vector<ReportRecord>& records, ReportFormat format);
/// Parses emit_report(..., json) output back into records.
std::vector<ReportRecord> parse_report_json(const std::string& text);

/// 0 all pass, 1 any failure, 3 any error (errors take precedence).
int exit_code_for(const std::vector<ReportRecord>& records);

/// %.17g formatting used in every report.
std::string format_number(double x);

}  // namespace intinv
