#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "intinv/scenario.hpp"

namespace {

using namespace intinv;

constexpr int kConfigExit = 2;

ReportFormat parse_format(const std::string& f) { return f == "csv" ? ReportFormat::csv : ReportFormat::json; }

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
  if (!out) throw ConfigError("cannot write '" + path + "'");
}

/// Per-scenario outputs named in the config, then the combined report.
int run_configs(const std::vector<ScenarioConfig>& configs, const std::string& format, const std::string& output) {
  const std::vector<ReportRecord> records = run_suite(configs, worker_count());
  for (const ScenarioConfig& c : configs) {
    const auto it = std::find_if(records.begin(), records.end(),
                                 [&](const ReportRecord& r) { return r.scenario_id == c.id; });
    if (c.json_output) write_file(*c.json_output, emit_report({*it}, ReportFormat::json));
    if (c.csv_output) write_file(*c.csv_output, emit_report({*it}, ReportFormat::csv));
  }
  const std::string bytes = emit_report(records, parse_format(format));
  if (output.empty()) std::cout << bytes;
  else write_file(output, bytes);
  for (const ReportRecord& r : records)
    if (r.verdict == "error") std::cerr << "error [" << r.error_kind << "] " << r.error_message << "\n";
  return exit_code_for(records);
}

std::vector<ScenarioConfig> builtin_suite() {
  std::vector<ScenarioConfig> out;
  for (const CatalogEntry& e : list_builtin_scenarios()) {
    ScenarioConfig c;
    c.id = e.id;
    c.system = e.id;
    out.push_back(c);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integral-invariant verification scenarios"};
  app.set_version_flag("--version", std::string(kToolkitVersion));
  app.require_subcommand(1);
  app.footer("Env: INTINV_WORKERS sets the worker count.\nExit: 0 pass, 1 tolerance failure, 2 config error, 3 math error.");

  std::string format = "json", output, config_path, dir, input;
  const std::vector<std::string> formats = {"json", "csv"};

  auto* run = app.add_subcommand("run", "Run the scenarios in one config file");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--format", format, "Report format")->check(CLI::IsMember(formats));
  run->add_option("-o,--output", output, "Write the report here instead of stdout");

  auto* suite = app.add_subcommand("suite", "Run every *.json config in a directory");
  suite->add_option("dir", dir, "Config directory")->required();
  suite->add_option("--format", format, "Report format")->check(CLI::IsMember(formats));
  suite->add_option("-o,--output", output, "Write the report here instead of stdout");

  auto* list = app.add_subcommand("list", "List builtin scenarios");

  auto* report = app.add_subcommand("report", "Emit a report; converts --input or runs the builtin catalog");
  report->add_option("--format", format, "Report format")->check(CLI::IsMember(formats))->required();
  report->add_option("-i,--input", input, "Saved JSON report to convert");
  report->add_option("-o,--output", output, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*list) {
      for (const CatalogEntry& e : list_builtin_scenarios())
        std::cout << e.id << "\t" << e.kind << "\t" << (e.expect == Expectation::violation ? "violation" : "invariant")
                  << "\t" << e.description << "\n";
      return 0;
    }
    if (*run) return run_configs(load_config_file(config_path), format, output);
    if (*suite) return run_configs(load_config_dir(dir), format, output);
    if (*report) {
      if (input.empty()) return run_configs(builtin_suite(), format, output);
      std::ifstream in(input, std::ios::binary);
      if (!in) throw ConfigError("cannot open report '" + input + "'");
      std::ostringstream ss;
      ss << in.rdbuf();
      const auto records = parse_report_json(ss.str());
      const std::string bytes = emit_report(records, parse_format(format));
      if (output.empty()) std::cout << bytes;
      else write_file(output, bytes);
      return exit_code_for(records);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  }
  return kConfigExit;
}
