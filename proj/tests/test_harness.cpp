#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "qhlab/harness.hpp"

using namespace qhlab;
using ::testing::HasSubstr;

namespace {

json line_space() { return json{{"kind", "line"}, {"window", 2.0}, {"resolution", 20}}; }

json diameter_check(const std::string& comparator, double threshold) {
  return json{{"name", "line diameter"}, {"anchor", "diameter of the window"}, {"op", "diameter"},
              {"input", "L"},              {"comparator", comparator},            {"threshold", threshold},
              {"tolerance", 1e-9}};
}

Scenario line_scenario(const std::string& comparator, double threshold) {
  Scenario s;
  s.name = "line";
  s.seed = 3;
  s.spaces["L"] = line_space();
  s.checks.push_back(diameter_check(comparator, threshold));
  return s;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("qhlab_test_" + name);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QHLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Harness, EmptyPipelineGivesEmptyPassingReport) {
  Scenario s;
  s.name = "empty";
  Report r = run_scenario(s);
  EXPECT_TRUE(r.checks.empty());
  EXPECT_TRUE(r.all_pass());
  EXPECT_EQ(render_report(r, ReportFormat::csv), "scenario,check,op,measured,comparator,threshold,tolerance,pass,anchor\n");
}

TEST(Harness, StageTypeMismatchNamesTheStage) {
  Scenario s = line_scenario("le", 5.0);
  s.checks = json::array();
  s.pipeline.push_back(json{{"id", "V"}, {"op", "visual_boundary"}, {"input", "L"}, {"epsilon", 0.5}});
  try {
    run_scenario(s);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_THAT(e.what(), HasSubstr("stage 'V'"));
    EXPECT_THAT(e.what(), HasSubstr("expected a deformed space"));
  }
}

TEST(Harness, UnknownStageOperation) {
  Scenario s = line_scenario("le", 5.0);
  s.pipeline.push_back(json{{"id", "Z"}, {"op", "fold"}, {"input", "L"}});
  try {
    run_scenario(s);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "stage 'Z' (fold): unknown operation");
  }
}

TEST(Harness, ComparatorsDecidePassAndFail) {
  Report ok = run_scenario(line_scenario("rel_within", 4.0));
  ASSERT_EQ(ok.checks.size(), 1u);
  EXPECT_NEAR(ok.checks[0].measured, 4.0, 1e-12);
  EXPECT_TRUE(ok.all_pass());
  Report bad = run_scenario(line_scenario("lt", 3.0));
  EXPECT_EQ(bad.passed(), 0u);
  EXPECT_EQ(bad.failed(), 1u);
  EXPECT_TRUE(compare("le", 1.0, 1.0, 0));
  EXPECT_FALSE(compare("lt", 1.0, 1.0, 0));
  EXPECT_TRUE(compare("abs_within", 1.05, 1.0, 0.1));
  EXPECT_FALSE(compare("rel_within", 1.2, 1.0, 0.1));
  EXPECT_FALSE(compare("le", std::nan(""), 1.0, 0));
  EXPECT_THROW(compare("approx", 1.0, 1.0, 0), std::invalid_argument);
}

TEST(Harness, ValidationErrors) {
  Scenario s = line_scenario("le", 0.0);
  try {
    s.validate();
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "check 'line diameter': threshold must be positive");
  }
  s = line_scenario("le", 5.0);
  s.checks[0]["anchor"] = "";
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = line_scenario("le", 5.0);
  s.checks[0]["input"] = "nowhere";
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Harness, StructuredOutputIsDeterministic) {
  Scenario s = find_scenario("tree-exactness");
  std::string a = render_report(run_scenario(s), ReportFormat::structured);
  std::string b = render_report(run_scenario(s), ReportFormat::structured);
  EXPECT_EQ(a, b);
  RunOptions o;
  o.seed = 99;
  EXPECT_EQ(render_report(run_scenario(s, o), ReportFormat::structured),
            render_report(run_scenario(s, o), ReportFormat::structured));
}

TEST(Harness, ReportRoundTrip) {
  Report r = run_scenario(find_scenario("cross-difference-identity"));
  Report back = Report::from_json(json::parse(render_report(r, ReportFormat::structured)));
  EXPECT_EQ(back.to_json().dump(), r.to_json().dump());
  EXPECT_EQ(back.passed(), r.passed());
  Scenario sc = find_scenario("go-to-infinity");
  EXPECT_EQ(Scenario::from_json(sc.to_json()).to_json().dump(), sc.to_json().dump());
}

TEST(Harness, NonFiniteMeasurementsSurviveSerialization) {
  CheckResult c;
  c.name = "nan";
  c.measured = std::nan("");
  c.threshold = kInf;
  CheckResult back = CheckResult::from_json(json::parse(c.to_json().dump()));
  EXPECT_TRUE(std::isnan(back.measured));
  EXPECT_TRUE(std::isinf(back.threshold));
}

TEST(Harness, UnwritablePath) {
  Report r = run_scenario(line_scenario("le", 5.0));
  try {
    emit_report(r, ReportFormat::csv, "/nonexistent-dir/report.csv");
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_THAT(e.what(), HasSubstr("unwritable path"));
  }
  auto p = temp_file("report.csv");
  emit_report(r, ReportFormat::csv, p.string());
  std::ifstream f(p);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "scenario,check,op,measured,comparator,threshold,tolerance,pass,anchor");
  std::filesystem::remove(p);
}

TEST(Harness, TextTableListsEveryCheck) {
  Report r = run_scenario(find_scenario("tree-exactness"));
  std::string t = render_report(r, ReportFormat::text_table);
  for (const auto& c : r.checks) EXPECT_THAT(t, HasSubstr(c.name));
  EXPECT_THROW(parse_report_format("xml"), std::invalid_argument);
}

TEST(Catalog, EveryCheckCarriesAnAnchor) {
  auto cat = scenario_catalog();
  ASSERT_FALSE(cat.empty());
  for (const auto& s : cat) {
    EXPECT_NO_THROW(s.validate()) << s.name;
    EXPECT_FALSE(s.anchors().empty()) << s.name;
    EXPECT_FALSE(s.description.empty()) << s.name;
  }
  EXPECT_THROW(find_scenario("no-such-scenario"), std::invalid_argument);
}

TEST(Catalog, AlgebraicChecksHoldAtHalfResolution) {
  RunOptions o;
  o.resolution_scale = 0.5;
  for (const char* name : {"cross-difference-identity", "tree-exactness"}) {
    Report r = run_scenario(find_scenario(name), o);
    EXPECT_TRUE(r.all_pass()) << render_report(r, ReportFormat::text_table);
  }
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("verify tree-exactness"), 0);
  EXPECT_EQ(run_cli("catalog"), 0);
  EXPECT_EQ(run_cli("--resolution 20 --window 2 gen --kind line"), 0);
  EXPECT_EQ(run_cli("verify no-such-scenario"), 2);
  EXPECT_EQ(run_cli("--format xml verify tree-exactness"), 2);
  EXPECT_EQ(run_cli("--out /nonexistent-dir/x.csv gen --kind line"), 2);
  EXPECT_NE(run_cli("frobnicate"), 0);

  auto p = temp_file("failing.json");
  {
    std::ofstream f(p);
    f << line_scenario("lt", 3.0).to_json().dump();
  }
  EXPECT_EQ(run_cli("analyze " + p.string()), 1);
  {
    std::ofstream f(p);
    f << line_scenario("rel_within", 4.0).to_json().dump();
  }
  EXPECT_EQ(run_cli("analyze " + p.string()), 0);
  std::filesystem::remove(p);
}

TEST(Cli, GenWritesTheDistanceTable) {
  auto p = temp_file("line.csv");
  ASSERT_EQ(run_cli("--resolution 4 --window 1 --out " + p.string() + " gen --kind line"), 0);
  std::ifstream f(p);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "id,0,1,2,3,4");
  std::filesystem::remove(p);
}
