#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "scenario_internal.hpp"

namespace intinv {

namespace {

ResolvedSettings resolve(const ScenarioSettings& s) {
  ResolvedSettings r;
  if (s.step) r.step = *s.step;
  if (s.h_fd) r.h_fd = *s.h_fd;
  if (s.quadrature) r.quadrature = *s.quadrature;
  r.tolerance = s.tolerance;
  r.times = s.times;
  return r;
}

/// Sorted by key so the echo is stable.
std::vector<SettingEcho> echo(const ResolvedSettings& r, double tolerance) {
  return {{"h_fd", r.h_fd},
          {"quadrature_panels", static_cast<double>(r.quadrature.panels_per_axis)},
          {"quadrature_points", static_cast<double>(r.quadrature.points_per_axis)},
          {"step", r.step},
          {"tolerance", tolerance}};
}

}  // namespace

ReportRecord run_scenario(const ScenarioConfig& config) {
  validate_configs({config});
  ReportRecord rec;
  rec.scenario_id = config.id;
  rec.system = config.system;
  Expectation expect = Expectation::invariant;
  ScenarioRunner runner;
  if (config.system == "inline") {
    rec.kind = config.kind;
    runner = detail::inline_runner(config.kind);
  } else {
    const detail::BuiltinDef* d = detail::find_builtin(config.system);
    rec.kind = d->entry.kind;
    expect = d->entry.expect;
    runner = d->run;
  }
  if (config.expect) expect = *config.expect;
  rec.expect = detail::expectation_name(expect);

  const ResolvedSettings rs = resolve(config.settings);
  try {
    ScenarioOutcome o = runner(config, rs);
    rec.rows = std::move(o.rows);
    rec.residuals = residual_stats(o.residuals);
    rec.metric = o.metric;
    rec.tolerance = rs.tolerance.value_or(o.tolerance);
    // NaN fails both comparisons, so it never passes.
    const bool ok = expect == Expectation::invariant ? rec.metric <= rec.tolerance : rec.metric > 10.0 * rec.tolerance;
    rec.verdict = ok ? "pass" : "fail";
  } catch (const Error& e) {
    rec.verdict = "error";
    rec.error_kind = e.kind();
    rec.error_message = "scenario " + config.id + " (" + rec.kind + "): " + e.what();
    rec.tolerance = rs.tolerance.value_or(0.0);
  }
  rec.settings = echo(rs, rec.tolerance);
  return rec;
}

std::vector<ReportRecord> run_suite(const std::vector<ScenarioConfig>& configs, unsigned workers) {
  validate_configs(configs);
  std::vector<ReportRecord> out(configs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size() && !failed;) {
      try {
        out[i] = run_scenario(configs[i]);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(configs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  std::sort(out.begin(), out.end(),
            [](const ReportRecord& a, const ReportRecord& b) { return a.scenario_id < b.scenario_id; });
  return out;
}

int exit_code_for(const std::vector<ReportRecord>& records) {
  int code = 0;
  for (const ReportRecord& r : records) {
    if (r.verdict == "error") return 3;
    if (r.verdict == "fail") code = 1;
  }
  return code;
}

}  // namespace intinv
