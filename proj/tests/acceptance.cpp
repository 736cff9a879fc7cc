// Acceptance suite: one pass/fail line per criterion, tolerances pinned below.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qhlab/harness.hpp"
#include "qhlab/hyperbolic.hpp"
#include "qhlab/map_analysis.hpp"
#include "qhlab/transforms.hpp"

using namespace qhlab;

namespace {

constexpr double kIdentityTol = 1e-10;
constexpr std::size_t kSmallSpace = 40;
constexpr double kSphereTol = 1e-9;
constexpr std::size_t kSphereMaxPoints = 600;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Timed {
  Report report;
  double seconds = 0.0;
};

std::map<std::string, Timed> run_catalog() {
  std::map<std::string, Timed> out;
  for (const auto& sc : scenario_catalog()) {
    auto t0 = Clock::now();
    Report r = run_scenario(sc);
    out[sc.name] = Timed{std::move(r), seconds_since(t0)};
  }
  return out;
}

// Every model space declared anywhere in the catalog, as the harness would build it.
std::vector<std::pair<std::string, SampledSpace>> catalog_spaces() {
  std::vector<std::pair<std::string, SampledSpace>> out;
  for (const auto& sc : scenario_catalog())
    for (auto it = sc.spaces.begin(); it != sc.spaces.end(); ++it) {
      ModelSpec spec = ModelSpec::from_json(it.value());
      if (!it.value().contains("seed")) spec.seed = sc.seed;
      out.emplace_back(sc.name + "/" + it.key(), build_model_space(spec));
    }
  return out;
}

struct Outcome {
  bool pass = true;
  std::string note;
};

void fail(Outcome& o, const std::string& why) {
  o.pass = false;
  if (!o.note.empty()) o.note += "; ";
  o.note += why;
}

void require_pass(Outcome& o, const Timed& t, const std::function<bool(const CheckResult&)>& which = nullptr) {
  std::size_t seen = 0;
  for (const auto& c : t.report.checks) {
    if (which && !which(c)) continue;
    ++seen;
    if (!c.pass) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s: %s measured %.6g", t.report.scenario.c_str(), c.name.c_str(), c.measured);
      fail(o, buf);
    }
  }
  if (seen == 0) fail(o, t.report.scenario + ": no checks selected");
}

void require_time(Outcome& o, double seconds, double budget) {
  if (seconds >= budget) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "runtime %.2f s over budget %.0f s", seconds, budget);
    fail(o, buf);
  }
}

}  // namespace

int main() {
  const auto catalog = run_catalog();
  const auto& R = [&](const std::string& name) -> const Timed& { return catalog.at(name); };
  int failures = 0;

  auto report = [&](int n, const char* title, const Outcome& o, double secs) {
    std::printf("criterion %2d: %s (%.2f s) %s%s%s\n", n, o.pass ? "PASS" : "FAIL", secs, title, o.note.empty() ? "" : " -- ",
                o.note.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };

  {  // 1. Cross-difference identity on every small catalog space, all basepoints.
    Outcome o;
    auto t0 = Clock::now();
    std::size_t spaces = 0;
    for (const auto& [name, s] : catalog_spaces()) {
      if (s.size() > kSmallSpace) continue;
      ++spaces;
      for (PointId z = 0; z < s.size(); ++z) {
        double err = cross_difference_identity_error(s, basepoint_values(BasepointFunction::distance_from(z), s));
        if (err > kIdentityTol) {
          fail(o, name + " basepoint " + std::to_string(z));
          break;
        }
      }
    }
    if (spaces == 0) fail(o, "no catalog space has at most 40 points");
    double secs = seconds_since(t0);
    require_pass(o, R("cross-difference-identity"));
    secs += R("cross-difference-identity").seconds;
    require_time(o, secs, 5.0);
    o.note = o.note.empty() ? std::to_string(spaces) + " spaces" : o.note;
    report(1, "cross-difference identity", o, secs);
  }
  {  // 2. Tree exactness.
    Outcome o;
    const Timed& t = R("tree-exactness");
    require_pass(o, t, [](const CheckResult& c) { return c.op != "harnack"; });
    require_time(o, t.seconds, 10.0);
    report(2, "tree exactness", o, t.seconds);
  }
  {  // 3. Quasihyperbolic values.
    Outcome o;
    const Timed& t = R("quasihyperbolic-values");
    require_pass(o, t);
    require_time(o, t.seconds, 30.0);
    report(3, "quasihyperbolization values", o, t.seconds);
  }
  {  // 4. Quasihyperbolic sandwich with measured A.
    Outcome o;
    const Timed& t = R("quasihyperbolic-sandwich");
    require_pass(o, t);
    report(4, "quasihyperbolic sandwich", o, t.seconds);
  }
  {  // 5. Uniformized line diameter.
    Outcome o;
    const Timed& t = R("uniformized-line-diameter");
    require_pass(o, t, [](const CheckResult& c) { return c.op == "diameter"; });
    require_time(o, t.seconds, 10.0);
    report(5, "uniformization diameter", o, t.seconds);
  }
  {  // 6. Exponents between uniformizations at eps and 2 eps.
    Outcome o;
    double secs = 0.0;
    for (const char* n : {"uniformization-exponents-line", "uniformization-exponents-tree"}) {
      require_pass(o, R(n), [](const CheckResult& c) { return c.op == "quasimobius_fit"; });
      secs += R(n).seconds;
    }
    require_time(o, secs, 60.0);
    report(6, "quasimobius exponents of uniformizations", o, secs);
  }
  {  // 7. Inversion sandwich and the reciprocal pullback.
    Outcome o;
    const Timed& t = R("inversion-sandwich");
    require_pass(o, t);
    require_time(o, t.seconds, 10.0);
    const std::size_t disk_points = t.report.provenance.at("spaces").at("disk").at("points").get<std::size_t>();
    if (disk_points < 200) fail(o, "disk has only " + std::to_string(disk_points) + " points");
    report(7, "inversion sandwich", o, t.seconds);
  }
  {  // 8. Sphericalization of every catalog space.
    Outcome o;
    auto t0 = Clock::now();
    std::size_t spaces = 0;
    for (const auto& [name, full] : catalog_spaces()) {
      SampledSpace s = full.size() > kSphereMaxPoints ? subspace(full, thinned_ids(full, kSphereMaxPoints)) : full;
      for (PointId p : {PointId{0}, s.size() / 2}) {
        double d = space_diameter(sphericalize(s, p)).value;
        if (!(d <= 1.0 + kSphereTol)) fail(o, name + " diameter " + std::to_string(d));
      }
      ++spaces;
    }
    require_pass(o, R("sphericalization-bounded"));
    const double secs = seconds_since(t0) + R("sphericalization-bounded").seconds;
    if (o.note.empty()) o.note = std::to_string(spaces) + " spaces";
    report(8, "sphericalization bounded", o, secs);
  }
  {  // 9. Transfer bound for three test maps.
    Outcome o;
    const Timed& t = R("transfer-lipschitz");
    require_pass(o, t, [](const CheckResult& c) { return c.op == "transfer_bound"; });
    report(9, "quasihyperbolic transfer bound", o, t.seconds);
  }
  {  // 10. Rough starlikeness values and transfer.
    Outcome o;
    double secs = 0.0;
    for (const char* n : {"rough-starlikeness", "all-star"}) {
      require_pass(o, R(n));
      secs += R(n).seconds;
    }
    report(10, "rough starlikeness", o, secs);
  }
  {  // 11. Round trip on trees.
    Outcome o;
    const Timed& t = R("round-trip-tree");
    require_pass(o, t, [](const CheckResult& c) { return c.op != "harnack"; });
    report(11, "round trip tree", o, t.seconds);
  }
  {  // 12. Harnack sandwich for every uniformization in the catalog.
    Outcome o;
    double secs = 0.0;
    std::size_t stages = 0;
    for (const auto& sc : scenario_catalog()) {
      const Timed& t = R(sc.name);
      for (const auto& st : sc.pipeline) {
        if (st.at("op") != "uniformize") continue;
        ++stages;
        const std::string id = st.at("id").get<std::string>();
        bool covered = false;
        for (const auto& c : t.report.checks) {
          if (c.op != "harnack" || c.name != "harnack " + id) continue;
          covered = true;
          if (!c.pass) fail(o, sc.name + "/" + id);
        }
        if (!covered) fail(o, sc.name + "/" + id + " has no harnack check");
      }
      secs += t.seconds;
    }
    if (o.note.empty()) o.note = std::to_string(stages) + " uniformizations";
    report(12, "Harnack sandwich on uniformizations", o, secs);
  }

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
