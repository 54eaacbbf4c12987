#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "scenario_internal.hpp"

namespace intinv {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

/// Unknown keys are schema errors so typos never silently fall back to defaults.
void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [k, _] : j.items())
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) fail(where, "unknown key '" + k + "'");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(where, "expected a finite number");
  return x;
}

double positive(const json& j, const std::string& where) {
  const double x = number(j, where);
  if (!(x > 0.0)) fail(where, "must be > 0");
  return x;
}

int integer(const json& j, const std::string& where, int lo) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  const long long v = j.get<long long>();
  if (v < lo || v > 1'000'000) fail(where, "out of range");
  return static_cast<int>(v);
}

std::string string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Vec vector(const json& j, const std::string& where) {
  const auto v = numbers(j, where);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

TrigFactor trig_factor(const json& j, const std::string& where) {
  allow_keys(j, where, {"fn", "k", "kt", "phase"});
  TrigFactor f;
  if (!j.contains("fn")) fail(where, "missing 'fn'");
  const std::string fn = string(j["fn"], where + ".fn");
  if (fn != "sin" && fn != "cos") fail(where + ".fn", "expected 'sin' or 'cos'");
  f.is_sin = fn == "sin";
  if (j.contains("k")) f.k = numbers(j["k"], where + ".k");
  if (j.contains("kt")) f.kt = number(j["kt"], where + ".kt");
  if (j.contains("phase")) f.phase = number(j["phase"], where + ".phase");
  return f;
}

PolyTable table(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of terms");
  PolyTable t;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    allow_keys(j[i], w, {"c", "pow", "tpow", "trig"});
    PolyTerm term;
    if (!j[i].contains("c")) fail(w, "missing 'c'");
    term.c = number(j[i]["c"], w + ".c");
    if (j[i].contains("pow")) {
      if (!j[i]["pow"].is_array()) fail(w + ".pow", "expected an array of integers");
      for (std::size_t k = 0; k < j[i]["pow"].size(); ++k)
        term.pow.push_back(integer(j[i]["pow"][k], w + ".pow[" + std::to_string(k) + "]", 0));
    }
    if (j[i].contains("tpow")) term.tpow = integer(j[i]["tpow"], w + ".tpow", 0);
    if (j[i].contains("trig")) {
      if (!j[i]["trig"].is_array()) fail(w + ".trig", "expected an array");
      for (std::size_t k = 0; k < j[i]["trig"].size(); ++k)
        term.trig.push_back(trig_factor(j[i]["trig"][k], w + ".trig[" + std::to_string(k) + "]"));
    }
    t.terms.push_back(std::move(term));
  }
  return t;
}

std::vector<PolyTable> tables(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of coefficient tables");
  std::vector<PolyTable> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(table(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

InlineShape shape(const json& j, const std::string& where) {
  allow_keys(j, where, {"shape", "center", "radius", "axis_a", "axis_b", "lo", "size", "a", "b"});
  InlineShape s;
  if (!j.contains("shape")) fail(where, "missing 'shape'");
  s.shape = string(j["shape"], where + ".shape");
  if (j.contains("center")) s.center = vector(j["center"], where + ".center");
  if (j.contains("radius")) s.radius = positive(j["radius"], where + ".radius");
  if (j.contains("axis_a")) s.axis_a = integer(j["axis_a"], where + ".axis_a", 0);
  if (j.contains("axis_b")) s.axis_b = integer(j["axis_b"], where + ".axis_b", 0);
  if (j.contains("lo")) s.lo = vector(j["lo"], where + ".lo");
  if (j.contains("size")) s.size = vector(j["size"], where + ".size");
  if (j.contains("a")) s.a = vector(j["a"], where + ".a");
  if (j.contains("b")) s.b = vector(j["b"], where + ".b");
  return s;
}

InlineSystem inline_system(const json& j, const std::string& where) {
  allow_keys(j, where,
             {"dim", "field", "form_degree", "form", "chain", "transport_mode", "hamiltonian", "metric", "point",
              "velocity", "t0", "t1", "sample_box", "samples"});
  InlineSystem s;
  if (!j.contains("dim")) fail(where, "missing 'dim'");
  s.dim = integer(j["dim"], where + ".dim", 1);
  if (j.contains("field")) s.field = tables(j["field"], where + ".field");
  if (j.contains("form_degree")) s.form_degree = integer(j["form_degree"], where + ".form_degree", 0);
  if (j.contains("form")) s.form = tables(j["form"], where + ".form");
  if (j.contains("chain")) s.chain = shape(j["chain"], where + ".chain");
  if (j.contains("transport_mode")) s.transport_mode = string(j["transport_mode"], where + ".transport_mode");
  if (j.contains("hamiltonian")) s.hamiltonian = table(j["hamiltonian"], where + ".hamiltonian");
  if (j.contains("metric")) s.metric = tables(j["metric"], where + ".metric");
  if (j.contains("point")) s.point = vector(j["point"], where + ".point");
  if (j.contains("velocity")) s.velocity = vector(j["velocity"], where + ".velocity");
  if (j.contains("t0")) s.t0 = number(j["t0"], where + ".t0");
  if (j.contains("t1")) s.t1 = number(j["t1"], where + ".t1");
  if (j.contains("sample_box")) {
    const auto b = numbers(j["sample_box"], where + ".sample_box");
    if (b.size() != 2 || !(b[0] < b[1])) fail(where + ".sample_box", "expected [lo, hi] with lo < hi");
    s.box_lo = b[0];
    s.box_hi = b[1];
  }
  if (j.contains("samples")) s.samples = integer(j["samples"], where + ".samples", 1);
  return s;
}

ScenarioSettings settings(const json& j, const std::string& where) {
  allow_keys(j, where, {"step", "h_fd", "quadrature", "tolerance", "times"});
  ScenarioSettings s;
  if (j.contains("step")) s.step = positive(j["step"], where + ".step");
  if (j.contains("h_fd")) s.h_fd = positive(j["h_fd"], where + ".h_fd");
  if (j.contains("tolerance")) s.tolerance = positive(j["tolerance"], where + ".tolerance");
  if (j.contains("quadrature")) {
    const json& q = j["quadrature"];
    allow_keys(q, where + ".quadrature", {"points", "panels"});
    QuadratureSpec spec;
    if (q.contains("points")) spec.points_per_axis = integer(q["points"], where + ".quadrature.points", 1);
    if (q.contains("panels")) spec.panels_per_axis = integer(q["panels"], where + ".quadrature.panels", 1);
    if (spec.points_per_axis > 20) fail(where + ".quadrature.points", "at most 20");
    s.quadrature = spec;
  }
  if (j.contains("times")) s.times = numbers(j["times"], where + ".times");
  return s;
}

ScenarioConfig scenario(const json& j, const std::string& where) {
  allow_keys(j, where, {"id", "system", "kind", "expect", "settings", "inline", "output"});
  ScenarioConfig c;
  if (!j.contains("id")) fail(where, "missing 'id'");
  c.id = string(j["id"], where + ".id");
  if (c.id.empty()) fail(where + ".id", "must be non-empty");
  const std::string w = where + " (" + c.id + ")";
  if (!j.contains("system")) fail(w, "missing 'system'");
  c.system = string(j["system"], w + ".system");
  if (j.contains("kind")) c.kind = string(j["kind"], w + ".kind");
  if (j.contains("expect")) {
    const std::string e = string(j["expect"], w + ".expect");
    if (e == "invariant") c.expect = Expectation::invariant;
    else if (e == "violation") c.expect = Expectation::violation;
    else fail(w + ".expect", "expected 'invariant' or 'violation'");
  }
  if (j.contains("settings")) c.settings = settings(j["settings"], w + ".settings");
  if (j.contains("inline")) c.inline_system = inline_system(j["inline"], w + ".inline");
  if (j.contains("output")) {
    allow_keys(j["output"], w + ".output", {"json", "csv"});
    if (j["output"].contains("json")) c.json_output = string(j["output"]["json"], w + ".output.json");
    if (j["output"].contains("csv")) c.csv_output = string(j["output"]["csv"], w + ".output.csv");
  }
  return c;
}

int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

void check_table_arity(const PolyTable& t, int dim, const std::string& where) {
  for (const PolyTerm& term : t.terms) {
    if (static_cast<int>(term.pow.size()) > dim) fail(where, "pow longer than the dimension");
    for (const TrigFactor& f : term.trig)
      if (static_cast<int>(f.k.size()) > dim) fail(where, "trig k longer than the dimension");
  }
}

void check_inline(const ScenarioConfig& c) {
  const std::string w = "scenario " + c.id + " inline";
  if (!c.inline_system) fail("scenario " + c.id, "system 'inline' needs an 'inline' block");
  if (c.kind.empty()) fail("scenario " + c.id, "inline scenarios need a 'kind'");
  if (!detail::inline_runner(c.kind)) fail("scenario " + c.id, "kind '" + c.kind + "' has no inline form");
  const InlineSystem& s = *c.inline_system;
  auto need = [&](bool ok, const char* what) {
    if (!ok) fail(w, std::string("kind ") + c.kind + " requires " + what);
  };
  auto arity = [&](const std::vector<PolyTable>& ts, int d, const char* what) {
    for (const PolyTable& t : ts) check_table_arity(t, d, w + "." + what);
  };
  const bool field_kind = c.kind == "transport_invariance" || c.kind == "pointwise_invariance" ||
                          c.kind == "lie_cross_validation";
  if (field_kind) {
    need(static_cast<int>(s.field.size()) == s.dim, "'field' with one table per dimension");
    need(s.form_degree <= s.dim, "'form_degree' <= dim");
    need(static_cast<int>(s.form.size()) == binomial(s.dim, s.form_degree),
         "'form' with C(dim, form_degree) tables in lexicographic index order");
    arity(s.field, s.dim, "field");
    arity(s.form, s.dim, "form");
  }
  if (c.kind == "transport_invariance") {
    need(s.chain.has_value(), "'chain'");
    const InlineShape& sh = *s.chain;
    const std::set<std::string> shapes = {"circle", "disk", "box", "segment", "ball3"};
    if (!shapes.count(sh.shape)) fail(w + ".chain.shape", "unknown shape '" + sh.shape + "'");
    if (sh.shape == "circle" || sh.shape == "disk" || sh.shape == "ball3") {
      need(sh.center.size() == s.dim && sh.radius > 0.0, "chain 'center' of length dim and 'radius'");
      need(sh.axis_a != sh.axis_b && sh.axis_a < s.dim && sh.axis_b < s.dim, "distinct chain axes below dim");
      if (sh.shape == "ball3") need(s.dim == 3, "dim 3 for ball3");
    } else if (sh.shape == "segment") {
      need(sh.a.size() == s.dim && sh.b.size() == s.dim, "segment endpoints 'a' and 'b' of length dim");
    } else {
      need(sh.lo.size() == s.dim && sh.size.size() == s.dim, "box 'lo' and 'size' of length dim");
    }
    const std::set<std::string> modes = {"absolute", "relative_closed", "nonautonomous"};
    if (!modes.count(s.transport_mode)) fail(w + ".transport_mode", "unknown mode '" + s.transport_mode + "'");
  }
  if (c.kind == "symplecticity" || c.kind == "energy_drift") {
    need(s.dim % 2 == 0, "an even phase-space 'dim'");
    need(s.hamiltonian.has_value(), "'hamiltonian'");
    need(s.point.size() == s.dim, "'point' of length dim");
    check_table_arity(*s.hamiltonian, s.dim, w + ".hamiltonian");
  }
  if (c.kind == "geodesic_speed") {
    need(static_cast<int>(s.metric.size()) == s.dim * s.dim, "'metric' with dim*dim tables");
    need(s.point.size() == s.dim && s.velocity.size() == s.dim, "'point' and 'velocity' of length dim");
    arity(s.metric, s.dim, "metric");
  }
}

}  // namespace

std::vector<ScenarioConfig> parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(source, std::string("invalid JSON: ") + e.what());
  }
  std::vector<ScenarioConfig> out;
  if (j.is_object() && j.contains("scenarios")) {
    allow_keys(j, source, {"scenarios"});
    if (!j["scenarios"].is_array()) fail(source, "'scenarios' must be an array");
    for (std::size_t i = 0; i < j["scenarios"].size(); ++i)
      out.push_back(scenario(j["scenarios"][i], source + ": scenarios[" + std::to_string(i) + "]"));
  } else {
    out.push_back(scenario(j, source));
  }
  return out;
}

std::vector<ScenarioConfig> load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::vector<ScenarioConfig> load_config_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(dir, "not a directory");
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(dir, "no *.json configs");
  std::vector<ScenarioConfig> out;
  for (const auto& f : files)
    for (auto& c : load_config_file(f)) out.push_back(std::move(c));
  return out;
}

void validate_configs(const std::vector<ScenarioConfig>& configs) {
  std::set<std::string> ids;
  for (const ScenarioConfig& c : configs) {
    if (!ids.insert(c.id).second) fail("scenario " + c.id, "duplicate id");
    if (c.system == "inline") {
      check_inline(c);
      continue;
    }
    const detail::BuiltinDef* d = detail::find_builtin(c.system);
    if (!d) fail("scenario " + c.id, "unknown system '" + c.system + "'");
    if (c.inline_system) fail("scenario " + c.id, "'inline' is only valid with system 'inline'");
    if (!c.kind.empty() && c.kind != d->entry.kind)
      fail("scenario " + c.id, "kind '" + c.kind + "' does not match builtin kind '" + d->entry.kind + "'");
  }
}

}  // namespace intinv
