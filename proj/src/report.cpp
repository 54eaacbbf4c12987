#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "intinv/scenario.hpp"

namespace intinv {

namespace {

using nlohmann::json;

std::string quoted(const std::string& s) { return json(s).dump(); }

/// JSON has no literal for non-finite values; they travel as strings.
std::string json_number(double x) {
  if (std::isnan(x)) return "\"nan\"";
  if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
  // A bare -0 reads back as the integer 0 and loses its sign.
  if (x == 0.0 && std::signbit(x)) return "-0.0";
  return format_number(x);
}

double read_number(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ConfigError("report: bad number '" + s + "'");
  }
  return j.get<double>();
}

void emit_record(std::ostringstream& out, const ReportRecord& r) {
  out << "    {\n";
  out << "      \"scenario_id\": " << quoted(r.scenario_id) << ",\n";
  out << "      \"kind\": " << quoted(r.kind) << ",\n";
  out << "      \"system\": " << quoted(r.system) << ",\n";
  out << "      \"expect\": " << quoted(r.expect) << ",\n";
  out << "      \"verdict\": " << quoted(r.verdict) << ",\n";
  out << "      \"metric\": " << json_number(r.metric) << ",\n";
  out << "      \"tolerance\": " << json_number(r.tolerance) << ",\n";
  out << "      \"residuals\": {\"max\": " << json_number(r.residuals.max) << ", \"mean\": "
      << json_number(r.residuals.mean) << ", \"count\": " << r.residuals.count << "},\n";
  if (r.verdict == "error")
    out << "      \"error\": {\"kind\": " << quoted(r.error_kind) << ", \"message\": " << quoted(r.error_message)
        << "},\n";
  out << "      \"settings\": {";
  for (std::size_t i = 0; i < r.settings.size(); ++i)
    out << (i ? ", " : "") << quoted(r.settings[i].key) << ": " << json_number(r.settings[i].value);
  out << "},\n";
  out << "      \"version\": " << quoted(r.version) << ",\n";
  out << "      \"rows\": [";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const ReportRow& row = r.rows[i];
    out << (i ? ",\n" : "\n") << "        {\"t\": " << json_number(row.t) << ", \"value\": " << json_number(row.value)
        << ", \"drift\": " << json_number(row.drift) << ", \"residual\": " << json_number(row.residual) << "}";
  }
  out << (r.rows.empty() ? "]\n" : "\n      ]\n");
  out << "    }";
}

}  // namespace

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string emit_report(const std::vector<ReportRecord>& records, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "scenario_id,t,value,drift,residual,verdict\n";
    for (const ReportRecord& r : records)
      for (const ReportRow& row : r.rows)
        out << r.scenario_id << ',' << format_number(row.t) << ',' << format_number(row.value) << ','
            << format_number(row.drift) << ',' << format_number(row.residual) << ',' << r.verdict << '\n';
    return out.str();
  }
  out << "{\n  \"version\": " << quoted(kToolkitVersion) << ",\n  \"records\": [";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << (i ? ",\n" : "\n");
    emit_record(out, records[i]);
  }
  out << (records.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return out.str();
}

std::vector<ReportRecord> parse_report_json(const std::string& text) {
  std::vector<ReportRecord> out;
  try {
    const json j = json::parse(text);
    for (const json& e : j.at("records")) {
      ReportRecord r;
      r.scenario_id = e.at("scenario_id").get<std::string>();
      r.kind = e.at("kind").get<std::string>();
      r.system = e.at("system").get<std::string>();
      r.expect = e.at("expect").get<std::string>();
      r.verdict = e.at("verdict").get<std::string>();
      r.metric = read_number(e.at("metric"));
      r.tolerance = read_number(e.at("tolerance"));
      r.residuals.max = read_number(e.at("residuals").at("max"));
      r.residuals.mean = read_number(e.at("residuals").at("mean"));
      r.residuals.count = e.at("residuals").at("count").get<std::size_t>();
      if (e.contains("error")) {
        r.error_kind = e["error"].at("kind").get<std::string>();
        r.error_message = e["error"].at("message").get<std::string>();
      }
      // nlohmann objects iterate in key order, which is also the emitted order.
      for (const auto& [k, v] : e.at("settings").items()) r.settings.push_back({k, read_number(v)});
      r.version = e.at("version").get<std::string>();
      for (const json& row : e.at("rows"))
        r.rows.push_back({read_number(row.at("t")), read_number(row.at("value")), read_number(row.at("drift")),
                          read_number(row.at("residual"))});
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
  return out;
}

}  // namespace intinv
