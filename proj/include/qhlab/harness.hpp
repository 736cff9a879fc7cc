#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qhlab/metric_core.hpp"

namespace qhlab {

// A scenario is plain data: named model spaces, a pipeline of transform stages, and a
// list of checks. Stage and check records are JSON objects so that scenarios can be
// written by hand and passed to the CLI.
//
// Stage:  {"id": "U", "op": "uniformize", "input": "L", "epsilon": 0.5, "basepoint": {...}}
// Check:  {"name": "...", "anchor": "...", "op": "diameter", "input": "U.deformed",
//          "comparator": "rel_within", "threshold": 4.0, "tolerance": 0.02}
//
// Values produced by stages are spaces, deformed spaces (refer to their parts as
// "id.base" and "id.deformed") or point maps.
struct Scenario {
  std::string name;
  std::string description;
  std::uint64_t seed = 0;
  json spaces = json::object();
  json pipeline = json::array();
  json checks = json::array();

  std::vector<std::string> anchors() const;
  // Throws std::invalid_argument on undeclared references or bad thresholds.
  void validate() const;
  json to_json() const;
  static Scenario from_json(const json& j);
};

struct CheckResult {
  std::string name;
  std::string op;
  std::string anchor;
  double measured = 0.0;
  std::string comparator;
  double threshold = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  json detail = json::object();

  json to_json() const;
  static CheckResult from_json(const json& j);
};

struct Report {
  std::string scenario;
  std::vector<CheckResult> checks;
  json provenance = json::object();

  std::size_t passed() const;
  std::size_t failed() const { return checks.size() - passed(); }
  bool all_pass() const { return failed() == 0; }
  json to_json() const;
  static Report from_json(const json& j);
};

struct RunOptions {
  std::optional<std::uint64_t> seed;       // replaces the scenario seed
  std::optional<int> resolution;           // replaces every space resolution
  std::optional<double> window;            // replaces every space window
  double resolution_scale = 1.0;           // applied after the override
};

// Applies the overrides to the declared model specs.
Scenario with_options(Scenario s, const RunOptions& opts);

Report run_scenario(const Scenario& scenario, const RunOptions& opts = {});

enum class ReportFormat { text_table, structured, csv };
ReportFormat parse_report_format(const std::string& name);

std::string render_report(const Report& report, ReportFormat format);
void emit_report(const Report& report, ReportFormat format, const std::string& path);

std::vector<Scenario> scenario_catalog();
Scenario find_scenario(const std::string& name);

// Comparator evaluation shared by checks and the acceptance suite.
bool compare(const std::string& comparator, double measured, double threshold, double tolerance);

}  // namespace qhlab
