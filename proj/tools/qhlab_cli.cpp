// Command-line front end: build models, apply transforms, run scenarios.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qhlab/deformations.hpp"
#include "qhlab/harness.hpp"
#include "qhlab/transforms.hpp"

namespace {

using namespace qhlab;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> resolution;
  std::optional<double> window;
  std::string out;
  std::string format;
};

struct ModelArgs {
  std::string kind = "line";
  std::vector<std::string> params;  // key=value
};

ModelSpec make_spec(const ModelArgs& m, const Globals& g) {
  ModelSpec s;
  s.kind = m.kind;
  for (const auto& kv : m.params) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("parameter '" + kv + "' is not key=value");
    const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (val == "true" || val == "false") s.params[key] = val == "true";
    else s.params[key] = std::stod(val);
  }
  s.window = g.window.value_or(10.0);
  s.resolution = g.resolution.value_or(100);
  s.seed = g.seed.value_or(0);
  return s;
}

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--kind", m.kind, "Model kind (line, half_line, glued_interval_Xt, glued_domain, euclidean_disk, "
                                    "euclidean_half_plane, square, random_tree, hyperbolic_grid)");
  cmd->add_option("--param", m.params, "Model parameter key=value, repeatable");
}

// Writes to --out when given, stdout otherwise.
void write_output(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary | std::ios::trunc);
  if (!f || !(f << text)) throw std::runtime_error("unwritable path: " + g.out);
}

void emit_space(const Globals& g, const SampledSpace& s) {
  const std::string fmt = g.format.empty() ? "csv" : g.format;
  if (fmt == "csv") {
    std::ostringstream os;
    write_distance_csv(s, os);
    write_output(g, os.str());
  } else if (fmt == "structured" || fmt == "json") {
    Diameter d = space_diameter(s);
    json j{{"points", s.size()}, {"boundary_samples", s.boundary_count()}, {"diameter", d.value},
           {"landmarks", s.landmarks}, {"provenance", s.provenance}};
    write_output(g, j.dump(2) + "\n");
  } else {
    throw std::invalid_argument("spaces are emitted as csv or structured");
  }
}

int emit_reports(const Globals& g, const std::vector<Report>& reports) {
  ReportFormat fmt = parse_report_format(g.format.empty() ? "text-table" : g.format);
  std::string text;
  bool ok = true;
  if (fmt == ReportFormat::structured && reports.size() != 1) {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(r.to_json());
    text = arr.dump(2) + "\n";
  } else {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      std::string part = render_report(reports[i], fmt);
      // One CSV header for the whole run.
      if (fmt == ReportFormat::csv && i > 0) part = part.substr(part.find('\n') + 1);
      text += part;
    }
  }
  for (const auto& r : reports) ok = ok && r.all_pass();
  write_output(g, text);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qhlab: quasihyperbolization, uniformization, inversion and distortion analysis on sampled spaces"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->expected(1);
  app.add_option("--resolution", g.resolution, "Model resolution")->check(CLI::PositiveNumber);
  app.add_option("--window", g.window, "Truncation window for unbounded models")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output file (stdout when omitted)");
  app.add_option("--format", g.format, "csv | structured | text-table");
  app.fallthrough();

  ModelArgs model;

  auto* gen = app.add_subcommand("gen", "Build a model space and write its distance table");
  add_model_options(gen, model);

  auto* deform = app.add_subcommand("deform", "Quasihyperbolize or uniformize a model space");
  add_model_options(deform, model);
  std::string deform_op = "quasihyperbolize", landmark;
  double eps = 0.5;
  deform->add_option("--op", deform_op, "quasihyperbolize | uniformize")->check(CLI::IsMember({"quasihyperbolize", "uniformize"}));
  deform->add_option("--epsilon", eps, "Uniformization parameter")->check(CLI::PositiveNumber);
  deform->add_option("--basepoint", landmark, "Landmark for the distance function (default: point 0)");

  auto* inv = app.add_subcommand("invert", "Invert a model space about a boundary sample or a point");
  add_model_options(inv, model);
  std::optional<std::size_t> boundary_sample;
  std::string center_point;
  inv->add_option("--boundary", boundary_sample, "Boundary sample index");
  inv->add_option("--point", center_point, "Landmark to invert about");

  auto* sph = app.add_subcommand("sphericalize", "Sphericalize a model space");
  add_model_options(sph, model);
  std::string sph_point;
  std::size_t max_points = 600;
  sph->add_option("--point", sph_point, "Landmark to sphericalize about (default: point 0)");
  sph->add_option("--max-points", max_points, "Thin larger spaces to this many points")->check(CLI::PositiveNumber);

  auto* analyze = app.add_subcommand("analyze", "Run a scenario from a JSON file");
  std::string scenario_file;
  analyze->add_option("scenario", scenario_file, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "Run built-in scenarios (all when none named)");
  std::vector<std::string> names;
  double scale = 1.0;
  verify->add_option("names", names, "Catalog scenario names");
  verify->add_option("--resolution-scale", scale, "Multiply every model resolution")->check(CLI::PositiveNumber);

  auto* catalog = app.add_subcommand("catalog", "List built-in scenarios or print one as JSON");
  std::string dump;
  catalog->add_option("--dump", dump, "Scenario name to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunOptions ro;
    ro.seed = g.seed;
    ro.resolution = g.resolution;
    ro.window = g.window;

    if (*gen) {
      emit_space(g, build_model_space(make_spec(model, g)));
    } else if (*deform) {
      auto base = std::make_shared<const SampledSpace>(build_model_space(make_spec(model, g)));
      DeformedSpace d;
      if (deform_op == "quasihyperbolize") {
        d = quasihyperbolize(base);
      } else {
        PointId z = landmark.empty() ? 0 : base->landmark(landmark);
        d = uniformize(base, BasepointFunction::distance_from(z), eps, directions_from(*base, z));
      }
      emit_space(g, *d.deformed);
    } else if (*inv) {
      SampledSpace s = build_model_space(make_spec(model, g));
      if (boundary_sample.has_value() == !center_point.empty())
        throw std::invalid_argument("give exactly one of --boundary and --point");
      InversionCenter c = boundary_sample ? InversionCenter::boundary(*boundary_sample)
                                          : InversionCenter::point(s.landmark(center_point));
      emit_space(g, invert(s, c));
    } else if (*sph) {
      SampledSpace s = build_model_space(make_spec(model, g));
      PointId p = sph_point.empty() ? 0 : s.landmark(sph_point);
      if (s.size() > max_points) {
        std::vector<PointId> ids = thinned_ids(s, max_points);
        s = subspace(s, ids);
        if (!sph_point.empty()) p = s.landmark(sph_point);
        else p = 0;
      }
      emit_space(g, sphericalize(s, p));
    } else if (*analyze) {
      std::ifstream f(scenario_file);
      Scenario sc = Scenario::from_json(json::parse(f));
      return emit_reports(g, {run_scenario(sc, ro)});
    } else if (*verify) {
      ro.resolution_scale = scale;
      std::vector<Report> reports;
      if (names.empty())
        for (const auto& sc : scenario_catalog()) reports.push_back(run_scenario(sc, ro));
      else
        for (const auto& n : names) reports.push_back(run_scenario(find_scenario(n), ro));
      return emit_reports(g, reports);
    } else if (*catalog) {
      if (!dump.empty()) {
        write_output(g, find_scenario(dump).to_json().dump(2) + "\n");
      } else {
        std::ostringstream os;
        for (const auto& sc : scenario_catalog()) {
          os << sc.name << "  " << sc.description << "\n";
          for (const auto& a : sc.anchors()) os << "    anchor: " << a << "\n";
        }
        write_output(g, os.str());
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
