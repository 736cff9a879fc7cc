#include "qhlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qhlab/deformations.hpp"
#include "qhlab/hyperbolic.hpp"
#include "qhlab/map_analysis.hpp"
#include "qhlab/transforms.hpp"

namespace qhlab {

namespace {

// ---- JSON helpers -----------------------------------------------------------

// JSON has no infinities; they travel as strings so that reports round-trip.
json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double num_from(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
    throw std::invalid_argument("not a number: " + s);
  }
  return j.get<double>();
}

json sanitize(const json& j) {
  if (j.is_number_float()) return num(j.get<double>());
  if (j.is_array() || j.is_object()) {
    json out = j;
    for (auto& v : out) v = sanitize(v);
    return out;
  }
  return j;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---- pipeline values ----------------------------------------------------------

struct Value {
  enum class Kind { space, deformed, map };
  Kind kind = Kind::space;
  SpacePtr space;
  std::shared_ptr<const DeformedSpace> deformed;
  std::shared_ptr<const PointMap> map;
};

const char* kind_name(Value::Kind k) {
  switch (k) {
    case Value::Kind::space: return "space";
    case Value::Kind::deformed: return "deformed space";
    case Value::Kind::map: return "map";
  }
  return "?";
}

class Store {
 public:
  void put(const std::string& id, Value v) {
    if (values_.count(id)) throw std::invalid_argument("duplicate value id '" + id + "'");
    values_.emplace(id, std::move(v));
  }

  // "X", "X.base" or "X.deformed".
  Value get(const std::string& ref, const std::string& stage) const {
    std::string head = ref, part;
    if (auto dot = ref.rfind('.'); dot != std::string::npos) {
      std::string tail = ref.substr(dot + 1);
      if (tail == "base" || tail == "deformed") {
        head = ref.substr(0, dot);
        part = tail;
      }
    }
    auto it = values_.find(head);
    if (it == values_.end()) throw std::invalid_argument("stage '" + stage + "': unknown reference '" + ref + "'");
    if (part.empty()) return it->second;
    if (it->second.kind != Value::Kind::deformed)
      throw std::invalid_argument("stage '" + stage + "': '" + head + "' is a " + kind_name(it->second.kind) +
                                  ", not a deformed space");
    Value v;
    v.space = part == "base" ? it->second.deformed->base : it->second.deformed->deformed;
    return v;
  }

  SpacePtr space(const std::string& ref, const std::string& stage) const {
    Value v = get(ref, stage);
    if (v.kind != Value::Kind::space)
      throw std::invalid_argument("stage '" + stage + "': expected a space, '" + ref + "' is a " + kind_name(v.kind));
    return v.space;
  }
  std::shared_ptr<const DeformedSpace> deformed(const std::string& ref, const std::string& stage) const {
    Value v = get(ref, stage);
    if (v.kind != Value::Kind::deformed)
      throw std::invalid_argument("stage '" + stage + "': expected a deformed space, '" + ref + "' is a " +
                                  kind_name(v.kind));
    return v.deformed;
  }
  std::shared_ptr<const PointMap> map(const std::string& ref, const std::string& stage) const {
    Value v = get(ref, stage);
    if (v.kind != Value::Kind::map)
      throw std::invalid_argument("stage '" + stage + "': expected a map, '" + ref + "' is a " + kind_name(v.kind));
    return v.map;
  }

 private:
  std::map<std::string, Value> values_;
};

PointId resolve_point(const SampledSpace& space, const json& ref, const std::string& stage) {
  PointId id;
  if (ref.is_string()) id = space.landmark(ref.get<std::string>());
  else if (ref.is_number_integer()) id = ref.get<PointId>();
  else if (ref.is_object() && ref.contains("landmark")) id = space.landmark(ref["landmark"].get<std::string>());
  else if (ref.is_object() && ref.contains("id")) id = ref["id"].get<PointId>();
  else if (ref.is_object() && ref.contains("coord")) id = nearest_point(space, {ref["coord"][0].get<double>(), ref["coord"][1].get<double>()});
  else if (ref.is_object() && ref.contains("end")) {
    std::size_t k = ref["end"].get<std::size_t>();
    if (k >= space.ends.size()) throw std::invalid_argument("stage '" + stage + "': no end " + std::to_string(k));
    id = space.ends[k];
  } else {
    throw std::invalid_argument("stage '" + stage + "': bad point reference " + ref.dump());
  }
  if (id >= space.size()) throw std::invalid_argument("stage '" + stage + "': point out of range");
  return id;
}

struct BasepointSetup {
  BasepointFunction b;
  PointId from = 0;
};

BasepointSetup resolve_basepoint(const SampledSpace& space, const json& spec, const std::string& stage) {
  BasepointSetup out;
  const std::string kind = spec.value("kind", "distance_from");
  out.from = resolve_point(space, spec.value("point", json(0)), stage);
  if (kind == "distance_from") {
    out.b = BasepointFunction::distance_from(out.from);
  } else if (kind == "busemann") {
    std::size_t k = spec.at("end").get<std::size_t>();
    if (k >= space.ends.size()) throw std::invalid_argument("stage '" + stage + "': no end " + std::to_string(k));
    auto dir = direction_toward(space, out.from, space.ends[k], k);
    double T = spec.value("truncation", 0.0);
    if (!(T > 0.0)) T = curve_length(space, dir.ray);
    out.b = BasepointFunction::busemann(space, dir, T);
  } else {
    throw std::invalid_argument("stage '" + stage + "': unknown basepoint kind '" + kind + "'");
  }
  return out;
}

std::function<Coord(const Coord&)> planar_map(const std::string& name) {
  if (name == "square") return [](const Coord& c) { return Coord{c.x * c.x, c.y}; };
  if (name == "stretch_x2") return [](const Coord& c) { return Coord{2 * c.x, c.y}; };
  if (name == "radial_square")
    return [](const Coord& c) {
      double r = std::hypot(c.x, c.y);
      return Coord{c.x * r, c.y * r};
    };
  throw std::invalid_argument("unknown planar map '" + name + "'");
}

std::function<double(const Coord&)> boundary_oracle(const std::string& name) {
  if (name == "half_line") return [](const Coord& c) { return c.x; };
  if (name == "rectangle_2x1") return [](const Coord& c) { return std::min({c.x, 2 - c.x, c.y, 1 - c.y}); };
  if (name == "unit_disk") return [](const Coord& c) { return 1 - std::hypot(c.x, c.y); };
  throw std::invalid_argument("unknown boundary oracle '" + name + "'");
}

// ---- stages -------------------------------------------------------------------

void run_stage(const json& st, Store& store) {
  const std::string id = st.at("id").get<std::string>();
  const std::string op = st.at("op").get<std::string>();
  const std::string where = id + "' (" + op;
  const std::string tag = id;
  Value v;
  if (op == "quasihyperbolize") {
    v.kind = Value::Kind::deformed;
    v.deformed = std::make_shared<const DeformedSpace>(quasihyperbolize(store.space(st.at("input"), tag)));
  } else if (op == "uniformize") {
    SpacePtr s = store.space(st.at("input"), tag);
    auto bp = resolve_basepoint(*s, st.value("basepoint", json::object()), tag);
    std::vector<BoundaryDirection> dirs;
    if (st.value("directions", std::string("ends")) == "ends") dirs = directions_from(*s, bp.from);
    v.kind = Value::Kind::deformed;
    v.deformed = std::make_shared<const DeformedSpace>(uniformize(s, bp.b, st.at("epsilon").get<double>(), dirs));
  } else if (op == "invert") {
    SpacePtr s = store.space(st.at("input"), tag);
    const json& c = st.at("center");
    InversionCenter center = c.contains("boundary") ? InversionCenter::boundary(c["boundary"].get<std::size_t>())
                                                    : InversionCenter::point(resolve_point(*s, c.at("point"), tag));
    v.space = std::make_shared<const SampledSpace>(invert(*s, center));
  } else if (op == "sphericalize") {
    SpacePtr s = store.space(st.at("input"), tag);
    if (st.contains("max_points") && s->size() > st["max_points"].get<std::size_t>())
      s = std::make_shared<const SampledSpace>(subspace(*s, thinned_ids(*s, st["max_points"].get<std::size_t>())));
    v.space = std::make_shared<const SampledSpace>(sphericalize(*s, resolve_point(*s, st.value("point", json(0)), tag)));
  } else if (op == "ray_augment") {
    SpacePtr s = store.space(st.at("input"), tag);
    Arm arm{st.value("length", 1.0), st.value("samples", std::size_t{32}), st.value("half_line", false)};
    v.space = std::make_shared<const SampledSpace>(ray_augment(*s, resolve_point(*s, st.value("point", json(0)), tag), arm));
  } else if (op == "subspace") {
    SpacePtr s = store.space(st.at("input"), tag);
    v.space = std::make_shared<const SampledSpace>(subspace(*s, thinned_ids(*s, st.at("max_points").get<std::size_t>())));
  } else if (op == "push_forward") {
    SpacePtr s = store.space(st.at("input"), tag);
    v.space = std::make_shared<const SampledSpace>(
        push_forward(*s, planar_map(st.at("transform")), boundary_oracle(st.at("target_boundary"))));
  } else if (op == "identity_map") {
    v.kind = Value::Kind::map;
    v.map = std::make_shared<const PointMap>(
        PointMap::identity(store.space(st.at("source"), tag), store.space(st.at("target"), tag)));
  } else if (op == "visual_boundary") {
    // Boundary samples of the base domain against the chained visual metric of its
    // quasihyperbolization, seen from `point`.
    auto def = store.deformed(st.at("input"), tag);
    const SampledSpace& base = *def->base;
    const SampledSpace& hyp = *def->deformed;
    const auto& bc = base.boundary_coords();
    if (bc.empty() || !base.has_coords()) throw std::invalid_argument("stage '" + tag + "': needs boundary coordinates");
    const std::size_t m = std::min(st.value("count", std::size_t{24}), bc.size());
    PointId z = resolve_point(hyp, st.value("point", json(0)), tag);
    std::vector<Coord> chosen;
    std::vector<BoundaryDirection> dirs;
    for (std::size_t i = 0; i < m; ++i) {
      const Coord& c = bc[i * bc.size() / m];
      chosen.push_back(c);
      dirs.push_back(direction_toward(hyp, z, nearest_point(base, c), i));
    }
    Quasimetric q = visual_quasimetric_table(BasepointFunction::distance_from(z), hyp, st.at("epsilon").get<double>(), dirs);
    auto target = std::make_shared<const SampledSpace>(quasimetric_chain_metrize(q));
    auto source = std::make_shared<const SampledSpace>(SampledSpace::from_coords(chosen));
    PointMap f = PointMap::identity(source, target);
    v.kind = Value::Kind::map;
    v.map = std::make_shared<const PointMap>(st.value("from_visual", false) ? f.inverse() : f);
  } else {
    throw std::invalid_argument("stage '" + where + "): unknown operation");
  }
  store.put(id, std::move(v));
}

// ---- checks -------------------------------------------------------------------

struct Measurement {
  double value = 0.0;
  json detail = json::object();
};

double select(const json& table, const std::string& key, const std::string& name) {
  if (!table.contains(key)) throw std::invalid_argument("check '" + name + "': unknown measure '" + key + "'");
  return num_from(table[key]);
}

std::vector<Polyline> rays_from(const SampledSpace& s, PointId base, const json& targets, const std::string& name) {
  std::vector<PointId> ts;
  if (targets.is_string() && targets.get<std::string>() == "ends") ts = s.ends;
  else
    for (const auto& t : targets) ts.push_back(resolve_point(s, t, name));
  std::vector<Polyline> rays;
  for (PointId t : ts)
    if (t != base) rays.push_back(geodesic(s, base, t));
  return rays;
}

// Lines from end k to every other end.
std::vector<Polyline> lines_from_end(const SampledSpace& s, std::size_t k) {
  std::vector<Polyline> lines;
  for (std::size_t j = 0; j < s.ends.size(); ++j)
    if (j != k) lines.push_back(geodesic(s, s.ends[k], s.ends[j]));
  return lines;
}

RatioSpread pair_ratios(const PointMap& m, std::size_t max_pairs, std::uint64_t seed) {
  RatioSpread r;
  for (auto [x, y] : sample_pairs(m.source->size(), max_pairs, seed)) {
    double d = m.source->dist(x, y);
    if (!(d > 0.0)) continue;
    r.add(m.target->dist(m.pairing[x], m.pairing[y]) / d, x, y);
  }
  return r;
}

Measurement run_check(const json& c, const Store& store, std::uint64_t seed) {
  const std::string name = c.at("name").get<std::string>();
  const std::string op = c.at("op").get<std::string>();
  const std::string measure = c.value("measure", std::string());
  Measurement out;
  auto input_space = [&] { return store.space(c.at("input"), name); };

  if (op == "cross_difference_identity") {
    SpacePtr s = input_space();
    double worst = 0.0;
    std::size_t bases = 0;
    if (c.value("basepoints", std::string()) == "all") {
      for (PointId z = 0; z < s->size(); ++z, ++bases)
        worst = std::max(worst, cross_difference_identity_error(*s, basepoint_values(BasepointFunction::distance_from(z), *s)));
    } else {
      auto bp = resolve_basepoint(*s, c.value("basepoint", json::object()), name);
      worst = cross_difference_identity_error(*s, basepoint_values(bp.b, *s));
      bases = 1;
    }
    out.value = worst;
    out.detail = json{{"points", s->size()}, {"basepoints", bases}};
  } else if (op == "four_point_delta") {
    SpacePtr s = input_space();
    QuadrupleBudget budget;
    budget.seed = seed;
    if (c.contains("samples")) budget.samples = c["samples"].get<std::uint64_t>();
    DeltaEstimate d = four_point_delta(*s, budget);
    out.value = d.estimate;
    out.detail = d.to_json();
    out.detail.erase("extremes");
  } else if (op == "tripod_insize") {
    SpacePtr s = input_space();
    const std::size_t n = s->size(), want = c.value("samples", std::size_t{200});
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<PointId> pick(0, n - 1);
    double insize = 0.0, thin = 0.0, snap = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < want * 4 && used < want; ++i) {
      PointId x = pick(rng), y = pick(rng), z = pick(rng);
      if (x == y || y == z || x == z) continue;
      TripodReport t = tripod_analysis(*s, x, y, z);
      insize = std::max(insize, t.insize);
      thin = std::max(thin, t.thinness);
      snap = std::max(snap, t.snap_error);
      ++used;
    }
    out.value = insize;
    out.detail = json{{"triples", used}, {"thinness", thin}, {"snap_error", snap}};
  } else if (op == "gh_constant") {
    auto def = store.deformed(c.at("input"), name);
    GHEstimate g = gh_constant(*def, c.value("pairs", std::size_t{20000}), seed);
    out.value = g.M;
    out.detail = json{{"pairs", g.pairs}, {"skipped", g.skipped}, {"worst", {g.worst.first, g.worst.second}}};
  } else if (op == "harnack") {
    auto def = store.deformed(c.at("input"), name);
    CheckTally t = harnack_check(*def, c.value("rel_tol", 1e-6));
    out.value = static_cast<double>(t.violations);
    out.detail = t.to_json();
  } else if (op == "qh_sandwich") {
    auto def = store.deformed(c.at("input"), name);
    double A = measured_uniformity(*def, c.value("uniformity_pairs", std::size_t{400}), seed);
    SandwichReport r = quasihyperbolic_sandwich(*def, A, c.value("rel_tol", 1e-6));
    out.value = static_cast<double>(r.lower.violations + r.upper.violations + r.log_ratio.violations +
                                    r.boundary_lipschitz.violations);
    out.detail = json{{"A", A},
                      {"lower", r.lower.to_json()},
                      {"upper", r.upper.to_json()},
                      {"log_ratio", r.log_ratio.to_json()},
                      {"boundary_lipschitz", r.boundary_lipschitz.to_json()}};
  } else if (op == "distance") {
    SpacePtr s = input_space();
    PointId a = resolve_point(*s, c.at("from"), name), b = resolve_point(*s, c.at("to"), name);
    out.value = s->dist(a, b);
    out.detail = json{{"from", a}, {"to", b}};
  } else if (op == "diameter") {
    SpacePtr s = input_space();
    Diameter d = space_diameter(*s);
    out.value = d.value;
    out.detail = json{{"points", s->size()}, {"unbounded", d.unbounded}, {"pair", {d.a, d.b}}};
  } else if (op == "metric_audit") {
    MetricAudit a = audit_metric(*input_space());
    out.value = static_cast<double>(a.violations);
    out.detail = json{{"triples", a.triples}, {"worst_excess", a.worst_excess}};
  } else if (op == "quasimobius_fit" || op == "quasisymmetry_fit") {
    auto m = store.map(c.at("input"), name);
    FitOptions fo;
    fo.samples = c.value("samples", std::size_t{100000});
    fo.seed = seed;
    fo.symmetric = c.value("symmetric", false);
    ControlFit f = op == "quasimobius_fit" ? quasimobius_fit(*m, fo) : quasisymmetry_fit(*m, fo);
    out.detail = f.to_json();
    out.value = select(out.detail, measure.empty() ? "exponent_hi" : measure, name);
  } else if (op == "partial_lipschitz") {
    auto m = store.map(c.at("input"), name);
    PartialLipschitz p = partial_lipschitz_data(*m, c.at("lambda").get<double>(), c.value("two_sided", false));
    out.detail = p.to_json();
    out.value = select(out.detail, measure.empty() ? "L" : measure, name);
  } else if (op == "transfer_bound") {
    auto m = store.map(c.at("input"), name);
    // Boundary-relative data at the smallest lambda with enough qualifying balls.
    std::vector<double> grid = c.value("lambdas", std::vector<double>{0.4, 0.2, 0.1, 0.05});
    std::sort(grid.begin(), grid.end());
    std::optional<PartialLipschitz> data;
    for (double lam : grid) {
      try {
        data = partial_lipschitz_data(*m, lam);
        break;
      } catch (const std::runtime_error&) {
      }
    }
    if (!data) throw std::runtime_error("check '" + name + "': resolution insufficient for every lambda");
    DeformedSpace qs = quasihyperbolize(m->source), qt = quasihyperbolize(m->target);
    PointMap qmap{qs.deformed, qt.deformed, m->pairing};
    double H = qh_lipschitz_constant(qmap, false, c.value("pairs", std::size_t{200000}), seed);
    double A = std::max(measured_uniformity(qs, 400, seed), measured_uniformity(qt, 400, seed));
    double bound = 4 * A * A * data->L;
    out.value = H / bound;
    out.detail = json{{"H", H}, {"A", A}, {"L", data->L}, {"lambda", data->lambda}, {"bound", bound}};
  } else if (op == "starlikeness") {
    SpacePtr s = input_space();
    double K;
    if (c.contains("end")) {
      std::size_t k = c["end"].get<std::size_t>();
      if (k >= s->ends.size()) throw std::invalid_argument("check '" + name + "': no end " + std::to_string(k));
      K = starlikeness_constant(*s, direction_toward(*s, s->ends[k], s->ends[k], k), lines_from_end(*s, k));
      out.detail = json{{"base", "end " + std::to_string(k)}};
    } else {
      PointId base = resolve_point(*s, c.at("point"), name);
      K = starlikeness_constant(*s, base, rays_from(*s, base, c.value("targets", json("ends")), name));
      out.detail = json{{"base", base}};
    }
    out.value = K;
  } else if (op == "star_transfer") {
    // K(x) - K(omega) - 10 delta, from a point x and an end omega.
    SpacePtr s = input_space();
    PointId x = resolve_point(*s, c.at("point"), name);
    std::size_t k = c.at("end").get<std::size_t>();
    if (k >= s->ends.size()) throw std::invalid_argument("check '" + name + "': no end " + std::to_string(k));
    double Kx = starlikeness_constant(*s, x, rays_from(*s, x, json("ends"), name));
    double Kw = starlikeness_constant(*s, direction_toward(*s, s->ends[k], s->ends[k], k), lines_from_end(*s, k));
    QuadrupleBudget budget;
    budget.seed = seed;
    double delta = four_point_delta(*s, budget).estimate;
    out.value = Kx - Kw - 10 * delta;
    out.detail = json{{"K_point", Kx}, {"K_end", Kw}, {"delta", delta}};
  } else if (op == "rough_ray") {
    // dist(p, x omega) - (K + 8 delta) over all p, for the ray from x to end k.
    SpacePtr s = input_space();
    PointId x = resolve_point(*s, c.at("point"), name);
    std::size_t k = c.value("end", std::size_t{0});
    if (k >= s->ends.size()) throw std::invalid_argument("check '" + name + "': no end " + std::to_string(k));
    double K = starlikeness_constant(*s, x, rays_from(*s, x, json("ends"), name));
    double far = starlikeness_constant(*s, x, {geodesic(*s, x, s->ends[k])});
    QuadrupleBudget budget;
    budget.seed = seed;
    double delta = four_point_delta(*s, budget).estimate;
    out.value = far - K - 8 * delta;
    out.detail = json{{"ray_distance", far}, {"K", K}, {"delta", delta}};
  } else if (op == "boundary_spread") {
    SpacePtr s = input_space();
    PointId x = resolve_point(*s, c.at("point"), name);
    SpreadReport r = boundary_spread(*s, x, directions_from(*s, x));
    out.detail = json{{"spread", r.spread}, {"spread_half_scale", r.spread_half_scale}, {"stable", r.stable},
                      {"pair_product", r.pair_product}};
    out.value = select(out.detail, measure.empty() ? "spread" : measure, name);
  } else if (op == "inversion_ratio") {
    SpacePtr s = input_space();
    if (!s->provenance.contains("sandwich_ratio_achieved"))
      throw std::invalid_argument("check '" + name + "': input is not an inverted space");
    out.detail = s->provenance["sandwich_ratio_achieved"];
    out.value = select(out.detail, measure.empty() ? "min" : measure, name);
  } else if (op == "reciprocal_pullback") {
    // |d(x,y) - |1/x - 1/y|| on a space whose coordinates are positions on (0, inf).
    SpacePtr s = input_space();
    if (!s->has_coords()) throw std::invalid_argument("check '" + name + "': needs coordinates");
    double worst = 0.0;
    for (PointId a = 0; a < s->size(); ++a)
      for (PointId b = a + 1; b < s->size(); ++b) {
        double e = std::abs(1 / s->coords()[a].x - 1 / s->coords()[b].x);
        worst = std::max(worst, std::abs(s->dist(a, b) - e));
      }
    out.value = worst;
    out.detail = json{{"points", s->size()}};
  } else if (op == "pair_ratio_spread") {
    auto m = store.map(c.at("input"), name);
    RatioSpread r = pair_ratios(*m, c.value("pairs", std::size_t{200000}), seed);
    out.value = r.spread();
    out.detail = json{{"min", r.min}, {"max", r.max}};
  } else if (op == "spread_stability") {
    // Relative change of the pair-ratio spread between two resolutions.
    const auto& in = c.at("inputs");
    if (in.size() != 2) throw std::invalid_argument("check '" + name + "': needs two maps");
    auto a = store.map(in[0], name), b = store.map(in[1], name);
    double sa = pair_ratios(*a, c.value("pairs", std::size_t{200000}), seed).spread();
    double sb = pair_ratios(*b, c.value("pairs", std::size_t{200000}), seed).spread();
    out.value = std::abs(sb / sa - 1);
    out.detail = json{{"spread_coarse", sa}, {"spread_fine", sb}};
  } else if (op == "go_to_infinity") {
    // Along the geodesic from z to each end, classify the tail as escaping or not, once
    // by d_eps(z, .) and once by (.|omega)_z, and report the fraction of ends where the
    // two agree. d_eps escapes when its increments stop shrinking; the Gromov product
    // escapes when it keeps pace with at least half the distance travelled.
    auto def = store.deformed(c.at("input"), name);
    const SampledSpace& X = *def->base;
    PointId z = resolve_point(X, c.at("point"), name);
    std::size_t k = c.at("end").get<std::size_t>();
    if (k >= X.ends.size()) throw std::invalid_argument("check '" + name + "': no end " + std::to_string(k));
    auto dz = def->deformed->row(z);
    auto G = [&](PointId x) { return gromov_product_point(X, x, X.ends[k], z); };
    std::size_t agree = 0;
    out.detail = json::array();
    for (std::size_t j = 0; j < X.ends.size(); ++j) {
      Polyline ray = geodesic(X, z, X.ends[j]);
      if (ray.size() < 4) throw std::invalid_argument("check '" + name + "': ray to end " + std::to_string(j) + " is too short");
      const std::size_t m = ray.size() - 1;
      const PointId a = ray[m / 3], b = ray[2 * m / 3], e = ray[m];
      bool by_dist = dz[e] - dz[b] >= dz[b] - dz[a];
      bool by_product = G(e) - G(b) >= 0.5 * X.dist(b, e);
      agree += by_dist == by_product;
      out.detail.push_back(json{{"end", j}, {"escapes_by_distance", by_dist}, {"escapes_by_product", by_product}});
    }
    out.value = static_cast<double>(agree) / X.ends.size();
  } else if (op == "tightness_bound") {
    // K(z) - log(1 + 2 phi) with phi = diam / diam of the boundary, on a quasihyperbolization.
    auto def = store.deformed(c.at("input"), name);
    const SampledSpace& base = *def->base;
    PointId z = resolve_point(*def->deformed, c.at("point"), name);
    double K = starlikeness_constant(*def->deformed, z, rays_from(*def->deformed, z, c.at("targets"), name));
    double dbd = 0.0;
    for (std::size_t i = 0; i < base.boundary_count(); ++i)
      for (std::size_t j = i + 1; j < base.boundary_count(); ++j) dbd = std::max(dbd, boundary_pair_dist(base, i, j));
    if (!(dbd > 0.0)) throw std::invalid_argument("check '" + name + "': boundary needs two points");
    double phi = space_diameter(base).value / dbd;
    out.value = K - std::log(1 + 2 * phi);
    out.detail = json{{"K", K}, {"phi", phi}};
  } else if (op == "gh_scan") {
    SpacePtr s = input_space();
    auto bp = resolve_basepoint(*s, c.value("basepoint", json::object()), name);
    std::vector<double> grid = c.at("eps_grid").get<std::vector<double>>();
    GHScan scan = gh_scan(s, bp.b, grid, c.value("M", 20.0), c.value("pairs", std::size_t{5000}), seed);
    out.value = scan.largest_admissible_eps;
    out.detail = json::array();
    for (const auto& p : scan.points) out.detail.push_back(json{{"eps", p.eps}, {"M", p.estimate.M}});
    out.detail = json{{"scan", out.detail}};
  } else {
    throw std::invalid_argument("check '" + name + "': unknown operation '" + op + "'");
  }
  return out;
}

const std::vector<std::string>& comparators() {
  static const std::vector<std::string> c{"le", "lt", "ge", "gt", "abs_within", "rel_within"};
  return c;
}

}  // namespace

bool compare(const std::string& comparator, double m, double t, double tol) {
  if (std::isnan(m)) return false;
  if (comparator == "le") return m <= t;
  if (comparator == "lt") return m < t;
  if (comparator == "ge") return m >= t;
  if (comparator == "gt") return m > t;
  if (comparator == "abs_within") return std::abs(m - t) <= tol;
  if (comparator == "rel_within") return std::abs(m - t) <= tol * std::abs(t);
  throw std::invalid_argument("unknown comparator '" + comparator + "'");
}

// ---- Scenario -------------------------------------------------------------------

std::vector<std::string> Scenario::anchors() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    std::string a = c.value("anchor", std::string());
    if (!a.empty() && std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  }
  return out;
}

void Scenario::validate() const {
  if (name.empty()) throw std::invalid_argument("scenario needs a name");
  if (!spaces.is_object() || !pipeline.is_array() || !checks.is_array())
    throw std::invalid_argument("scenario '" + name + "': malformed");
  std::set<std::string> known;
  for (auto it = spaces.begin(); it != spaces.end(); ++it) known.insert(it.key());
  auto require = [&](const json& ref, const std::string& where) {
    std::string r = ref.get<std::string>();
    std::string head = r;
    if (auto dot = r.rfind('.'); dot != std::string::npos) {
      std::string tail = r.substr(dot + 1);
      if (tail == "base" || tail == "deformed") head = r.substr(0, dot);
    }
    if (!known.count(head)) throw std::invalid_argument("scenario '" + name + "': " + where + " references undeclared '" + r + "'");
  };
  for (const auto& st : pipeline) {
    const std::string id = st.at("id").get<std::string>();
    for (const char* key : {"input", "source", "target"})
      if (st.contains(key)) require(st[key], "stage '" + id + "'");
    if (known.count(id)) throw std::invalid_argument("scenario '" + name + "': duplicate id '" + id + "'");
    known.insert(id);
  }
  for (const auto& c : checks) {
    const std::string cn = c.at("name").get<std::string>();
    if (c.contains("input")) require(c["input"], "check '" + cn + "'");
    if (c.contains("inputs"))
      for (const auto& r : c["inputs"]) require(r, "check '" + cn + "'");
    if (c.value("anchor", std::string()).empty()) throw std::invalid_argument("check '" + cn + "' has no anchor");
    const std::string cmp = c.at("comparator").get<std::string>();
    if (std::find(comparators().begin(), comparators().end(), cmp) == comparators().end())
      throw std::invalid_argument("check '" + cn + "': unknown comparator '" + cmp + "'");
    double t = num_from(c.at("threshold"));
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("check '" + cn + "': threshold must be positive");
    if (cmp == "abs_within" || cmp == "rel_within") {
      double tol = c.at("tolerance").get<double>();
      if (!(tol > 0.0)) throw std::invalid_argument("check '" + cn + "': tolerance must be positive");
    }
  }
}

json Scenario::to_json() const {
  return json{{"name", name}, {"description", description}, {"seed", seed},
              {"spaces", spaces}, {"pipeline", pipeline}, {"checks", checks}};
}

Scenario Scenario::from_json(const json& j) {
  Scenario s;
  s.name = j.at("name").get<std::string>();
  s.description = j.value("description", std::string());
  s.seed = j.value("seed", std::uint64_t{0});
  s.spaces = j.value("spaces", json::object());
  s.pipeline = j.value("pipeline", json::array());
  s.checks = j.value("checks", json::array());
  return s;
}

Scenario with_options(Scenario s, const RunOptions& opts) {
  if (opts.seed) s.seed = *opts.seed;
  for (auto& spec : s.spaces) {
    if (opts.window && spec.contains("window")) spec["window"] = *opts.window;
    if (opts.resolution && spec.contains("resolution")) spec["resolution"] = *opts.resolution;
    if (opts.resolution_scale != 1.0 && spec.contains("resolution")) {
      int r = static_cast<int>(std::lround(spec["resolution"].get<double>() * opts.resolution_scale));
      spec["resolution"] = std::max(r, 3);
    }
  }
  return s;
}

// ---- reports ---------------------------------------------------------------------

json CheckResult::to_json() const {
  return json{{"name", name},          {"op", op},         {"anchor", anchor},
              {"measured", num(measured)}, {"comparator", comparator}, {"threshold", num(threshold)},
              {"tolerance", num(tolerance)}, {"pass", pass},   {"detail", sanitize(detail)}};
}

CheckResult CheckResult::from_json(const json& j) {
  CheckResult c;
  c.name = j.at("name").get<std::string>();
  c.op = j.at("op").get<std::string>();
  c.anchor = j.at("anchor").get<std::string>();
  c.measured = num_from(j.at("measured"));
  c.comparator = j.at("comparator").get<std::string>();
  c.threshold = num_from(j.at("threshold"));
  c.tolerance = num_from(j.at("tolerance"));
  c.pass = j.at("pass").get<bool>();
  c.detail = j.value("detail", json::object());
  return c;
}

std::size_t Report::passed() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; }));
}

json Report::to_json() const {
  json cs = json::array();
  for (const auto& c : checks) cs.push_back(c.to_json());
  return json{{"scenario", scenario}, {"passed", passed()}, {"failed", failed()},
              {"checks", cs}, {"provenance", sanitize(provenance)}};
}

Report Report::from_json(const json& j) {
  Report r;
  r.scenario = j.at("scenario").get<std::string>();
  for (const auto& c : j.at("checks")) r.checks.push_back(CheckResult::from_json(c));
  r.provenance = j.value("provenance", json::object());
  return r;
}

Report run_scenario(const Scenario& input, const RunOptions& opts) {
  const Scenario sc = with_options(input, opts);
  sc.validate();
  Report report;
  report.scenario = sc.name;
  report.provenance["seed"] = sc.seed;
  report.provenance["spaces"] = json::object();

  Store store;
  for (auto it = sc.spaces.begin(); it != sc.spaces.end(); ++it) {
    ModelSpec spec = ModelSpec::from_json(it.value());
    if (!it.value().contains("seed")) spec.seed = sc.seed;
    Value v;
    v.space = std::make_shared<const SampledSpace>(build_model_space(spec));
    json prov{{"model", spec.to_json()}, {"points", v.space->size()}};
    for (const char* key : {"truncation_window", "step"})
      if (v.space->provenance.contains(key)) prov[key] = v.space->provenance[key];
    report.provenance["spaces"][it.key()] = prov;
    store.put(it.key(), std::move(v));
  }
  for (const auto& st : sc.pipeline) run_stage(st, store);

  for (std::size_t i = 0; i < sc.checks.size(); ++i) {
    const json& c = sc.checks[i];
    CheckResult r;
    r.name = c.at("name").get<std::string>();
    r.op = c.at("op").get<std::string>();
    r.anchor = c.at("anchor").get<std::string>();
    r.comparator = c.at("comparator").get<std::string>();
    r.threshold = num_from(c.at("threshold"));
    r.tolerance = c.value("tolerance", 0.0);
    // Each check draws its own seed so that adding checks does not shift the others.
    // A measurement the sampling cannot support (too coarse a grid, say) fails the
    // check instead of aborting the run; malformed scenarios still throw.
    try {
      Measurement m = run_check(c, store, sc.seed * 1000003ULL + i);
      r.measured = m.value;
      r.detail = std::move(m.detail);
      r.pass = compare(r.comparator, r.measured, r.threshold, r.tolerance);
    } catch (const std::runtime_error& e) {
      r.measured = std::numeric_limits<double>::quiet_NaN();
      r.detail = json{{"error", e.what()}};
      r.pass = false;
    }
    report.checks.push_back(std::move(r));
  }
  return report;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "text-table" || name == "text") return ReportFormat::text_table;
  if (name == "structured" || name == "json") return ReportFormat::structured;
  if (name == "csv") return ReportFormat::csv;
  throw std::invalid_argument("unknown report format '" + name + "'");
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

// Always leaves at least one space so long values stay separated.
std::string pad(std::string s, std::size_t w) {
  s.append(s.size() < w ? w - s.size() : 1, ' ');
  return s;
}

}  // namespace

std::string render_report(const Report& report, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::structured:
      out << report.to_json().dump(2) << "\n";
      break;
    case ReportFormat::csv:
      out << "scenario,check,op,measured,comparator,threshold,tolerance,pass,anchor\n";
      for (const auto& c : report.checks)
        out << csv_field(report.scenario) << ',' << csv_field(c.name) << ',' << c.op << ',' << fmt(c.measured) << ','
            << c.comparator << ',' << fmt(c.threshold) << ',' << fmt(c.tolerance) << ',' << (c.pass ? "pass" : "fail")
            << ',' << csv_field(c.anchor) << "\n";
      break;
    case ReportFormat::text_table: {
      std::size_t w = 5;
      for (const auto& c : report.checks) w = std::max(w, c.name.size() + 1);
      out << "scenario: " << report.scenario << "\n";
      out << pad("check", w) << "  " << pad("measured", 18) << pad("comparator", 12) << pad("threshold", 16)
          << "result\n";
      for (const auto& c : report.checks) {
        out << pad(c.name, w) << "  " << pad(fmt(c.measured), 18) << pad(c.comparator, 12) << pad(fmt(c.threshold), 16)
            << (c.pass ? "pass" : "FAIL") << "\n";
        out << pad("", w) << "  anchor: " << c.anchor << "\n";
      }
      if (!report.checks.empty()) out << "passed " << report.passed() << " of " << report.checks.size() << "\n";
      break;
    }
  }
  return out.str();
}

void emit_report(const Report& report, ReportFormat format, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("unwritable path: " + path);
  f << render_report(report, format);
  if (!f) throw std::runtime_error("unwritable path: " + path);
}

Scenario find_scenario(const std::string& name) {
  for (auto& s : scenario_catalog())
    if (s.name == name) return s;
  throw std::invalid_argument("no catalog scenario named '" + name + "'");
}

}  // namespace qhlab
