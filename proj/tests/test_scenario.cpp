#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <set>

#include "intinv/scenario.hpp"

using namespace intinv;

namespace {

ScenarioConfig builtin(const std::string& id, const std::string& system) {
  ScenarioConfig c;
  c.id = id;
  c.system = system;
  return c;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const char* const kHeader = "scenario_id,t,value,drift,residual,verdict\n";

}  // namespace

TEST(Format, SeventeenSignificantDigits) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(-2.5e-300), "-2.5e-300");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.33333333333333331");
}

TEST(Catalog, StableUniqueSortedIds) {
  const auto cat = list_builtin_scenarios();
  std::set<std::string> ids;
  for (const auto& e : cat) {
    EXPECT_TRUE(ids.insert(e.id).second) << e.id;
    EXPECT_FALSE(e.description.empty()) << e.id;
  }
  EXPECT_TRUE(ids.count("kelvin-rigid-rotation"));
  EXPECT_TRUE(ids.count("hj-quadratic-caustic"));
  EXPECT_TRUE(ids.count("oscillator-symplectic"));
  EXPECT_TRUE(std::is_sorted(cat.begin(), cat.end(), [](const auto& a, const auto& b) { return a.id < b.id; }));
}

TEST(Catalog, EveryBuiltinHasAShippedConfig) {
  const std::filesystem::path dir = std::filesystem::path(INTINV_SOURCE_DIR) / "scenarios" / "builtin";
  const auto configs = load_config_dir(dir.string());
  std::set<std::string> systems;
  for (const auto& c : configs) systems.insert(c.system);
  for (const auto& e : list_builtin_scenarios()) EXPECT_TRUE(systems.count(e.id)) << e.id;
  EXPECT_EQ(configs.size(), list_builtin_scenarios().size());
  EXPECT_NO_THROW(validate_configs(configs));
}

TEST(Config, ParsesSingleAndList) {
  const auto one = parse_config(R"({"id": "a", "system": "oscillator-symplectic", "settings": {"step": 0.002}})");
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(*one[0].settings.step, 0.002);
  const auto two = parse_config(R"({"scenarios": [{"id": "a", "system": "x"}, {"id": "b", "system": "y",
      "settings": {"quadrature": {"points": 3, "panels": 2}, "times": [0, 1]}}]})");
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[1].settings.quadrature->points_per_axis, 3);
  EXPECT_EQ(two[1].settings.times->size(), 2u);
}

TEST(Config, SchemaErrors) {
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"system": "x"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"id": "a", "system": "x", "stepsize": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"id": "a", "system": "x", "settings": {"tolerance": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"id": "a", "system": "x", "settings": {"step": -1e-3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"id": "a", "system": "x", "expect": "maybe"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"id": "a", "system": "x", "settings": {"quadrature": {"points": 1.5}}})"),
               ConfigError);
}

TEST(Config, UnresolvableReferences) {
  EXPECT_THROW(validate_configs({builtin("a", "lorenz")}), ConfigError);
  EXPECT_THROW(validate_configs({builtin("a", "oscillator-symplectic"), builtin("a", "pendulum-symplectic")}),
               ConfigError);
  ScenarioConfig c = builtin("a", "oscillator-symplectic");
  c.kind = "energy_drift";
  EXPECT_THROW(validate_configs({c}), ConfigError);
  EXPECT_THROW(run_scenario(builtin("a", "lorenz")), ConfigError);
}

TEST(Config, InlineArityChecked) {
  const std::string base = R"({"id": "a", "system": "inline", "kind": "pointwise_invariance", "inline": )";
  // Two field components but only one form coefficient for a 1-form in R^2.
  const auto bad_form = parse_config(base + R"({"dim": 2, "field": [[], []], "form_degree": 1, "form": [[]]}})");
  EXPECT_THROW(validate_configs(bad_form), ConfigError);
  const auto bad_pow = parse_config(base + R"({"dim": 1, "field": [[{"c": 1, "pow": [1, 1]}]], "form_degree": 0,
      "form": [[]]}})");
  EXPECT_THROW(validate_configs(bad_pow), ConfigError);
  const auto no_kind = parse_config(R"({"id": "a", "system": "inline", "inline": {"dim": 1}})");
  EXPECT_THROW(validate_configs(no_kind), ConfigError);
  const auto bad_kind = parse_config(R"({"id": "a", "system": "inline", "kind": "hj_cauchy", "inline": {"dim": 1}})");
  EXPECT_THROW(validate_configs(bad_kind), ConfigError);
  const auto ok = parse_config(base + R"({"dim": 2, "field": [[], []], "form_degree": 1, "form": [[], []]}})");
  EXPECT_NO_THROW(validate_configs(ok));
}

TEST(PolyTable, EvaluatesTermsAndDerivatives) {
  PolyTable p;
  p.terms.push_back({2.0, {1, 2}, 1, {}});
  p.terms.push_back({0.5, {}, 0, {{true, {1.0, -1.0}, 0.3, 0.2}}});
  Vec x(2);
  x << 0.7, -0.4;
  const double t = 1.3;
  const double expect = 2.0 * t * 0.7 * 0.16 + 0.5 * std::sin(0.7 + 0.4 + 0.3 * t + 0.2);
  EXPECT_NEAR(p.eval(t, x), expect, 1e-15);
  // Forward-mode derivative in x0 agrees with the closed form.
  VecX<D1> xd(2);
  xd << D1(0.7, 1.0), D1(-0.4, 0.0);
  const D1 d = p.eval(D1(t), xd);
  EXPECT_NEAR(d.eps, 2.0 * t * 0.16 + 0.5 * std::cos(0.7 + 0.4 + 0.3 * t + 0.2), 1e-14);
}

TEST(Run, OscillatorSymplecticPasses) {
  const ReportRecord r = run_scenario(builtin("osc", "oscillator-symplectic"));
  EXPECT_EQ(r.verdict, "pass");
  EXPECT_LT(r.metric, 1e-6);
  EXPECT_EQ(r.kind, "symplecticity");
  EXPECT_EQ(r.version, kToolkitVersion);
}

TEST(Run, TinyToleranceFailsWithMaxDriftRow) {
  ScenarioConfig c = builtin("osc", "oscillator-symplectic");
  c.settings.tolerance = 1e-20;
  const ReportRecord r = run_scenario(c);
  EXPECT_EQ(r.verdict, "fail");
  EXPECT_EQ(r.tolerance, 1e-20);
  ASSERT_FALSE(r.rows.empty());
  const auto worst = std::max_element(r.rows.begin(), r.rows.end(),
                                      [](const ReportRow& a, const ReportRow& b) { return a.residual < b.residual; });
  EXPECT_EQ(worst->residual, r.metric);
  EXPECT_EQ(exit_code_for({r}), 1);
}

TEST(Run, ViolationExpectationInvertsVerdict) {
  const ReportRecord neg = run_scenario(builtin("s", "stretch-area-square"));
  EXPECT_EQ(neg.expect, "violation");
  EXPECT_EQ(neg.verdict, "pass");
  EXPECT_GT(neg.metric, 10.0 * neg.tolerance);
  ScenarioConfig c = builtin("s", "stretch-area-square");
  c.expect = Expectation::invariant;
  EXPECT_EQ(run_scenario(c).verdict, "fail");
}

TEST(Run, MathErrorBecomesErrorRecord) {
  const auto c = parse_config(R"({"id": "deg", "system": "inline", "kind": "geodesic_speed", "inline": {
      "dim": 2, "metric": [[{"c": 1, "pow": [2]}], [], [], [{"c": 1}]], "point": [0, 0], "velocity": [1, 0]}})");
  const ReportRecord r = run_scenario(c[0]);
  EXPECT_EQ(r.verdict, "error");
  EXPECT_EQ(r.error_kind, "degeneracy");
  EXPECT_NE(r.error_message.find("deg"), std::string::npos);
  ReportRecord fail;
  fail.verdict = "fail";
  EXPECT_EQ(exit_code_for({fail, r}), 3);
  EXPECT_EQ(exit_code_for({}), 0);
}

TEST(Report, CsvHeaderAndRowCountPerSeries) {
  ScenarioConfig c = builtin("disk", "oscillator-area-disk");
  c.settings.times = std::vector<double>{0.0, 0.5, 1.0, 2.0};
  const ReportRecord r = run_scenario(c);
  const std::string csv = emit_report({r}, ReportFormat::csv);
  EXPECT_EQ(csv.rfind(kHeader, 0), 0u);
  EXPECT_EQ(count_lines(csv), 1u + 4u);
  EXPECT_NE(csv.find("\ndisk,0.5,"), std::string::npos);
}

TEST(Report, EmptyTimeGridIsHeaderOnly) {
  ScenarioConfig c = builtin("disk", "oscillator-area-disk");
  c.settings.times = std::vector<double>{};
  const ReportRecord r = run_scenario(c);
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(emit_report({r}, ReportFormat::csv), kHeader);
}

TEST(Report, JsonRoundTripIsBitExact) {
  std::vector<ReportRecord> recs = run_suite(
      {builtin("b", "pendulum-zeta-loop"), builtin("a", "oscillator-symplectic"), builtin("c", "lie-shear-oneform")}, 1);
  ReportRecord odd;
  odd.scenario_id = "odd \"quoted\"\n";
  odd.verdict = "error";
  odd.error_kind = "caustic";
  odd.error_message = "tab\tand unicode \xc3\xa9";
  odd.metric = std::numeric_limits<double>::infinity();
  odd.tolerance = std::nextafter(1.0, 2.0);
  odd.rows.push_back({-0.0, std::numeric_limits<double>::quiet_NaN(), -std::numeric_limits<double>::infinity(),
                      4.9406564584124654e-324});
  recs.push_back(odd);

  const std::string text = emit_report(recs, ReportFormat::json);
  const auto back = parse_report_json(text);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const ReportRecord &a = recs[i], &b = back[i];
    EXPECT_EQ(a.scenario_id, b.scenario_id);
    EXPECT_EQ(a.verdict, b.verdict);
    EXPECT_EQ(a.error_message, b.error_message);
    EXPECT_TRUE(same_bits(a.metric, b.metric));
    EXPECT_TRUE(same_bits(a.tolerance, b.tolerance));
    EXPECT_TRUE(same_bits(a.residuals.max, b.residuals.max));
    EXPECT_TRUE(same_bits(a.residuals.mean, b.residuals.mean));
    EXPECT_EQ(a.residuals.count, b.residuals.count);
    ASSERT_EQ(a.settings.size(), b.settings.size());
    for (std::size_t k = 0; k < a.settings.size(); ++k) {
      EXPECT_EQ(a.settings[k].key, b.settings[k].key);
      EXPECT_TRUE(same_bits(a.settings[k].value, b.settings[k].value));
    }
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
      EXPECT_TRUE(same_bits(a.rows[k].t, b.rows[k].t));
      EXPECT_TRUE(same_bits(a.rows[k].drift, b.rows[k].drift));
      EXPECT_TRUE(same_bits(a.rows[k].residual, b.rows[k].residual));
      EXPECT_TRUE(same_bits(a.rows[k].value, b.rows[k].value) ||
                  (std::isnan(a.rows[k].value) && std::isnan(b.rows[k].value)));
    }
  }
  EXPECT_EQ(emit_report(back, ReportFormat::json), text);
}

TEST(Suite, OrderedByIdAndIndependentOfWorkers) {
  const std::vector<ScenarioConfig> cfgs = {builtin("z-last", "rotation-area-pointwise"),
                                            builtin("a-first", "first-integral-pendulum"),
                                            builtin("m-mid", "pendulum-symplectic")};
  const auto one = run_suite(cfgs, 1);
  const auto three = run_suite(cfgs, 3);
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one[0].scenario_id, "a-first");
  EXPECT_EQ(one[2].scenario_id, "z-last");
  EXPECT_EQ(emit_report(one, ReportFormat::json), emit_report(three, ReportFormat::json));
  EXPECT_EQ(emit_report(one, ReportFormat::csv), emit_report(three, ReportFormat::csv));
}

TEST(Suite, ConfigErrorAbortsBeforeRunning) {
  EXPECT_THROW(run_suite({builtin("ok", "oscillator-symplectic"), builtin("bad", "nope")}, 2), ConfigError);
}

TEST(Inline, ExamplesRun) {
  const std::filesystem::path f =
      std::filesystem::path(INTINV_SOURCE_DIR) / "scenarios" / "examples" / "inline-rotation-disk.json";
  auto cfgs = load_config_file(f.string());
  for (auto& c : cfgs) c.csv_output.reset();
  const auto recs = run_suite(cfgs, 1);
  EXPECT_EQ(exit_code_for(recs), 0);
  for (const auto& r : recs) EXPECT_EQ(r.verdict, "pass") << r.scenario_id << " metric " << r.metric;
}
