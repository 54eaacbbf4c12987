// One PASS/FAIL line per acceptance criterion. Thresholds are stated here
// explicitly rather than taken from the builtin defaults.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "intinv/scenario.hpp"

using namespace intinv;

namespace {

struct Criterion {
  int number = 0;
  std::string title;
  bool ok = true;
  std::vector<std::string> notes;

  void require(bool cond, const std::string& what) {
    if (!cond) ok = false;
    notes.push_back(std::string(cond ? "  ok   " : "  FAIL ") + what);
  }
};

ReportRecord run(const std::string& id) {
  ScenarioConfig c;
  c.id = id;
  c.system = id;
  return run_scenario(c);
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

/// Every row residual of the builtin below `bound`, and no error.
void rows_below(Criterion& c, const std::string& id, double bound) {
  const ReportRecord r = run(id);
  bool ok = r.verdict != "error" && !r.rows.empty();
  double worst = 0.0;
  for (const ReportRow& row : r.rows) {
    worst = std::max(worst, row.residual);
    ok = ok && row.residual < bound;
  }
  c.require(ok, id + ": max residual " + sci(worst) + " < " + sci(bound) +
                    (r.verdict == "error" ? " [" + r.error_kind + ": " + r.error_message + "]" : ""));
}

/// Row `index` of the builtin below `bound`.
void row_below(Criterion& c, const ReportRecord& r, std::size_t index, double bound, const std::string& what) {
  const bool ok = r.verdict != "error" && index < r.rows.size() && r.rows[index].residual < bound;
  c.require(ok, r.scenario_id + " " + what + ": " + (index < r.rows.size() ? sci(r.rows[index].residual) : "missing") +
                    " < " + sci(bound));
}

double span_of(const ReportRecord& r) {
  if (r.rows.empty()) return 0.0;
  double lo = r.rows.front().t, hi = lo;
  for (const ReportRow& row : r.rows) {
    lo = std::min(lo, row.t);
    hi = std::max(hi, row.t);
  }
  return hi - lo;
}

/// Drift bound of 1e-6 per unit time, never below 1e-6.
void drift_per_unit_time(Criterion& c, const std::string& id) {
  const ReportRecord r = run(id);
  const double bound = 1e-6 * std::max(1.0, span_of(r));
  c.require(r.verdict != "error" && r.metric < bound, id + ": max drift " + sci(r.metric) + " < " + sci(bound));
}

/// Negative control: the measured drift exceeds ten times the positive tolerance.
void exceeds(Criterion& c, const std::string& id) {
  const ReportRecord r = run(id);
  const double bound = 10.0 * 1e-6 * std::max(1.0, span_of(r));
  c.require(r.verdict != "error" && r.metric > bound, id + " (negative control): " + sci(r.metric) + " > " + sci(bound));
}

struct Spawn {
  int code = -1;
  std::string out;
};

Spawn spawn(const std::string& args, const std::string& out_file) {
  const std::string cmd = std::string(INTINV_CLI_PATH) + " " + args + " > " + out_file + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Spawn s;
  s.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  s.out = ss.str();
  return s;
}

Criterion lie_cross_validation() {
  Criterion c{1, "Lie-derivative cross-validation"};
  for (const char* id : {"lie-driven-timeform", "lie-pendulum-zeta", "lie-rigid-rotation-twoform",
                         "lie-rotation-weighted-area", "lie-shear-oneform"}) {
    const ReportRecord r = run(id);
    c.require(r.residuals.count == 100 && r.metric < 1e-5,
              std::string(id) + ": cartan vs flow_fd " + sci(r.metric) + " < 1e-5 on " +
                  std::to_string(r.residuals.count) + " points");
  }
  rows_below(c, "lie-commutator-identity", 1e-6);
  return c;
}

Criterion integral_invariance() {
  Criterion c{2, "Integral-invariance suite"};
  for (const char* id : {"oscillator-area-disk", "pendulum-area-box", "pendulum-zeta-loop", "poincare-cartan-loop",
                         "driven-transported-form"})
    drift_per_unit_time(c, id);
  // Pointwise side of the equivalence, and the derivative formula behind it.
  for (const char* id : {"rotation-area-pointwise", "pendulum-zeta-relative", "driven-extended-dt", "mixed-form-split",
                         "form-transport-rotation", "transport-derivative-driven", "first-integral-pendulum"})
    rows_below(c, id, 1e-6);
  for (const char* id : {"stretch-area-pointwise", "stretch-area-square", "poincare-cartan-open-segment",
                         "pendulum-open-curve-action", "kelvin-non-euler-control"})
    exceeds(c, id);
  return c;
}

Criterion hamiltonian_structure() {
  Criterion c{3, "Hamiltonian structure"};
  rows_below(c, "poincare-cartan-characteristic", 1e-7);
  const ReportRecord osc = run("oscillator-symplectic");
  c.require(!osc.rows.empty() && std::abs(osc.rows[0].t - 2.0 * M_PI) < 1e-15, "oscillator evaluated at t = 2 pi");
  row_below(c, osc, 0, 1e-6, "|J^T Omega J - Omega|");
  row_below(c, osc, 1, 1e-6, "|det J - 1|");
  const ReportRecord pen = run("pendulum-symplectic");
  c.require(!pen.rows.empty() && pen.rows[0].t == 10.0, "pendulum evaluated at t = 10");
  row_below(c, pen, 0, 1e-6, "|J^T Omega J - Omega|");
  row_below(c, pen, 1, 1e-6, "|det J - 1|");
  const ReportRecord loop = run("oscillator-loop-action");
  c.require(loop.verdict != "error" && loop.metric < 1e-6, "oscillator-loop-action drift " + sci(loop.metric) + " < 1e-6");
  const ReportRecord open = run("homogeneous-open-curve-action");
  c.require(open.verdict != "error" && open.metric < 1e-6,
            "homogeneous-open-curve-action drift " + sci(open.metric) + " < 1e-6");
  rows_below(c, "gauss-relation-polar", 1e-5);
  return c;
}

Criterion reduction() {
  Criterion c{4, "Reduction on an energy level"};
  const ReportRecord r = run("reduction-two-oscillators");
  c.require(!r.rows.empty() && std::abs(r.rows[0].t - M_PI / 2) < 1e-15, "quarter period of the unit-frequency mode");
  rows_below(c, "reduction-two-oscillators", 1e-5);
  return c;
}

Criterion poincare_section() {
  Criterion c{5, "Poincare section"};
  rows_below(c, "poincare-section-rotation", 1e-6);
  // The builtin raises a degeneracy error unless the restricted form has |det| > 1e-6.
  const ReportRecord r = run("poincare-section-symplectic");
  c.require(r.verdict != "error", "restricted form nondegenerate (|det| > 1e-6)");
  rows_below(c, "poincare-section-symplectic", 1e-5);
  return c;
}

Criterion hamilton_jacobi() {
  Criterion c{6, "Hamilton-Jacobi"};
  rows_below(c, "hj-transport-exact", 1e-8);
  rows_below(c, "hj-quadratic-spreading", 1e-7);
  const ReportRecord caustic = run("hj-quadratic-caustic");
  c.require(caustic.verdict != "error" && caustic.rows.size() == 1 && std::abs(caustic.rows[0].t - 1.0) < 1e-6,
            "caustic reported at t* = " + (caustic.rows.empty() ? std::string("none") : format_number(caustic.rows[0].t)));
  rows_below(c, "hj-graph-invariance", 1e-5);
  rows_below(c, "hj-action-increment-free", 1e-8);
  return c;
}

Criterion canonical() {
  Criterion c{7, "Canonical transformations"};
  rows_below(c, "canonical-s2-identity", 1e-12);
  rows_below(c, "canonical-flow-pendulum", 1e-6);
  rows_below(c, "canonical-transform-match", 1e-5);
  rows_below(c, "straightening-oscillator", 1e-5);
  for (const char* id : {"complete-integral-free", "complete-integral-linear-potential", "complete-integral-oscillator-pair"})
    rows_below(c, id, 1e-6);
  return c;
}

Criterion eikonal() {
  Criterion c{8, "Eikonal and geodesics"};
  rows_below(c, "eikonal-circle-distance", 1e-6);
  rows_below(c, "eikonal-circle-residuals", 1e-5);
  const ReportRecord g = run("gradient-flow-circle");
  row_below(c, g, 1, 1e-6, "|f(x(t)) - f(x0) - t|");
  row_below(c, g, 0, 1e-5, "gradient flow vs geodesic sup distance");
  for (const char* id : {"gauss-lemma-euclidean", "gauss-lemma-polar", "gauss-lemma-conformal"}) rows_below(c, id, 1e-5);
  return c;
}

Criterion fluids() {
  Criterion c{9, "Fluid invariants"};
  const ReportRecord lie = run("fluid-lie-formulas");
  c.require(lie.rows.size() == 3, "three Lie-formula identities evaluated");
  rows_below(c, "fluid-lie-formulas", 1e-6);
  for (const char* id : {"kelvin-rigid-rotation", "helmholtz-vorticity-flux", "mass-ball-incompressible"}) {
    const ReportRecord r = run(id);
    c.require(r.verdict != "error" && !r.rows.empty() && r.metric < 1e-6, std::string(id) + ": drift " + sci(r.metric) + " < 1e-6");
  }
  const ReportRecord ctrl = run("kelvin-non-euler-control");
  c.require(ctrl.verdict == "pass" && ctrl.expect == "violation" && ctrl.metric > 10.0 * ctrl.tolerance,
            "non-Euler control drift " + sci(ctrl.metric) + " > 10 x " + sci(ctrl.tolerance));
  return c;
}

Criterion cli() {
  Criterion c{10, "CLI"};
  namespace fs = std::filesystem;
  const fs::path tmp = fs::temp_directory_path() / ("intinv_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(tmp);
  const std::string src = INTINV_SOURCE_DIR;
  const std::string suite = "suite " + src + "/scenarios/builtin";
  const Spawn a = spawn(suite + " --format json", (tmp / "a.json").string());
  const Spawn b = spawn(suite + " --format json", (tmp / "b.json").string());
  c.require(a.code == 0 && b.code == 0,
            "builtin suite exits 0 (runs: " + std::to_string(a.code) + ", " + std::to_string(b.code) + ")");
  c.require(!a.out.empty() && a.out == b.out, "JSON reports byte-identical across two runs (" +
                                                  std::to_string(a.out.size()) + " bytes)");
  const auto records = a.out.empty() ? std::vector<ReportRecord>{} : parse_report_json(a.out);
  c.require(records.size() == list_builtin_scenarios().size(),
            "report covers all " + std::to_string(list_builtin_scenarios().size()) + " builtins");
  const Spawn ca = spawn(suite + " --format csv", (tmp / "a.csv").string());
  const Spawn cb = spawn(suite + " --format csv", (tmp / "b.csv").string());
  c.require(ca.code == 0 && !ca.out.empty() && ca.out == cb.out, "CSV reports byte-identical across two runs");
  c.require(ca.out.rfind("scenario_id,t,value,drift,residual,verdict\n", 0) == 0, "CSV header exact");
  const Spawn conv = spawn("report --format csv --input " + (tmp / "a.json").string(), (tmp / "conv.csv").string());
  c.require(conv.code == 0 && conv.out == ca.out, "report --format csv of the saved JSON equals the direct CSV");

  const std::string fx = src + "/scenarios/fixtures/";
  const Spawn f1 = spawn("run " + fx + "tolerance-failure.json", (tmp / "f1").string());
  const Spawn f2 = spawn("run " + fx + "unknown-system.json", (tmp / "f2").string());
  const Spawn f3 = spawn("run " + fx + "degenerate-metric.json", (tmp / "f3").string());
  c.require(f1.code == 1, "tolerance-failure fixture exits 1 (got " + std::to_string(f1.code) + ")");
  c.require(f2.code == 2, "unknown-system fixture exits 2 (got " + std::to_string(f2.code) + ")");
  c.require(f3.code == 3, "degenerate-metric fixture exits 3 (got " + std::to_string(f3.code) + ")");
  fs::remove_all(tmp);
  return c;
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  std::vector<Criterion (*)()> all = {lie_cross_validation, integral_invariance, hamiltonian_structure, reduction,
                                      poincare_section,     hamilton_jacobi,     canonical,             eikonal,
                                      fluids,               cli};
  std::vector<Criterion> results;
  for (auto* f : all) {
    const auto t0 = Clock::now();
    Criterion c;
    try {
      c = f();
    } catch (const std::exception& e) {
      c.ok = false;
      c.notes.push_back(std::string("  FAIL unexpected exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    for (const auto& n : c.notes) std::cout << n << "\n";
    std::printf("criterion %d %s: %s (%.1f s)\n", c.number, c.title.c_str(), c.ok ? "PASS" : "FAIL", secs);
    std::fflush(stdout);
    results.push_back(std::move(c));
  }
  int failed = 0;
  for (const auto& c : results) failed += c.ok ? 0 : 1;
  std::printf("acceptance: %d/%zu criteria pass in %.1f s\n", static_cast<int>(results.size()) - failed, results.size(),
              std::chrono::duration<double>(Clock::now() - start).count());
  return failed == 0 ? 0 : 1;
}
