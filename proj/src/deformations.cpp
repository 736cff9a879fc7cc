#include "qhlab/deformations.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace qhlab {

// ---- densities ------------------------------------------------------------

Density Density::constant(std::size_t n, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("density must be positive");
  Density d;
  d.source = Source::constant;
  d.values.assign(n, c);
  return d;
}

Density Density::quasihyperbolic(const SampledSpace& space) {
  Density d;
  d.source = Source::quasihyperbolic;
  d.values.resize(space.size());
  for (PointId x = 0; x < space.size(); ++x) {
    double dom = space.d_omega(x);
    if (!(dom > 0.0) || !std::isfinite(dom)) throw std::invalid_argument("d_omega must be positive and finite");
    d.values[x] = 1.0 / dom;
  }
  return d;
}

Density Density::exponential(std::vector<double> b_values, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  Density d;
  d.source = Source::exponential;
  d.epsilon = eps;
  d.values.resize(b_values.size());
  for (std::size_t i = 0; i < b_values.size(); ++i) d.values[i] = std::exp(-eps * b_values[i]);
  d.b_values = std::move(b_values);
  return d;
}

Density Density::generic(std::vector<double> values) {
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("density must be positive");
  Density d;
  d.source = Source::generic;
  d.values = std::move(values);
  return d;
}

std::string Density::source_name() const {
  switch (source) {
    case Source::constant: return "constant";
    case Source::quasihyperbolic: return "quasihyperbolic";
    case Source::exponential: return "exponential";
    case Source::generic: return "generic";
  }
  return "generic";
}

namespace {

// Exact integral of 1/d over a segment on which d is affine.
double affine_reciprocal(double len, double du, double dv) {
  double m = 0.5 * (du + dv);
  if (std::abs(du - dv) <= 1e-9 * m) return len / m;
  return len * (std::log(du) - std::log(dv)) / (du - dv);
}

// Exact integral of e^{-eps b} over a segment on which b is affine.
double log_linear(double len, double ru, double rv) {
  double m = 0.5 * (ru + rv);
  if (std::abs(ru - rv) <= 1e-9 * m) return len * m;
  return len * (ru - rv) / (std::log(ru) - std::log(rv));
}

struct Deformation {
  SampledSpace space;
  json provenance;
};

Deformation deform_impl(const SampledSpace& base, const Density& rho) {
  if (!base.graph()) throw std::invalid_argument("need length-graph carrier");
  if (rho.values.size() != base.size()) throw std::invalid_argument("density does not match the space");
  const LengthGraph& g = *base.graph();
  auto out = std::make_shared<LengthGraph>(g.vertex_count());

  const bool refine = rho.source == Density::Source::quasihyperbolic && base.d_omega_oracle() && base.has_coords();
  const double step = base.provenance.value("step", 0.0);
  std::size_t refined = 0;
  double refinement_delta = 0.0;
  std::string rule;
  switch (rho.source) {
    case Density::Source::quasihyperbolic: rule = "affine-distance exact"; break;
    case Density::Source::exponential: rule = "log-linear exact"; break;
    default: rule = "trapezoid"; break;
  }

  for (const Edge& e : g.edges()) {
    const double ru = rho.values[e.u], rv = rho.values[e.v];
    double w = 0.0;
    switch (rho.source) {
      case Density::Source::quasihyperbolic: {
        const double du = 1.0 / ru, dv = 1.0 / rv;
        w = affine_reciprocal(e.w, du, dv);
        const double h = step > 0.0 ? step : e.w;
        if (refine && std::min(du, dv) < 2 * h) {
          // Geometric subdivision towards the endpoint nearer the boundary.
          const Coord& low = du <= dv ? base.coords()[e.u] : base.coords()[e.v];
          const Coord& high = du <= dv ? base.coords()[e.v] : base.coords()[e.u];
          const double fr[5] = {0.0, 0.125, 0.25, 0.5, 1.0};
          double acc = 0.0;
          double prev_d = std::min(du, dv);
          for (int k = 1; k < 5; ++k) {
            Coord c{low.x + fr[k] * (high.x - low.x), low.y + fr[k] * (high.y - low.y)};
            double dk = k == 4 ? std::max(du, dv) : base.d_omega_oracle()(c);
            acc += affine_reciprocal((fr[k] - fr[k - 1]) * e.w, prev_d, dk);
            prev_d = dk;
          }
          refinement_delta = std::max(refinement_delta, std::abs(acc - w) / acc);
          w = acc;
          ++refined;
        }
        break;
      }
      case Density::Source::exponential:
        w = log_linear(e.w, ru, rv);
        break;
      default:
        w = 0.5 * e.w * (ru + rv);
        break;
    }
    out->add_edge(e.u, e.v, w);
  }

  Deformation d;
  d.space = shortest_path_metric(std::shared_ptr<const LengthGraph>(out));
  d.space.set_tolerance(TriangleTolerance::sampled);
  if (base.has_coords()) d.space.set_coords(base.coords());
  d.space.landmarks = base.landmarks;
  d.space.ends = base.ends;
  d.provenance = {{"transform", "conformal"}, {"density", rho.source_name()}, {"quadrature", rule},
                  {"refined_edges", refined}, {"quadrature_two_grid_delta", refinement_delta}};
  if (base.provenance.contains("model")) d.provenance["model"] = base.provenance["model"];
  if (base.provenance.contains("truncation_window")) d.provenance["truncation_window"] = base.provenance["truncation_window"];
  d.space.provenance = d.provenance;
  return d;
}

}  // namespace

DeformedSpace conformal_deform(SpacePtr space, const Density& rho) {
  auto d = deform_impl(*space, rho);
  DeformedSpace out;
  out.base = space;
  out.density = rho;
  out.provenance = d.provenance;
  out.deformed = std::make_shared<const SampledSpace>(std::move(d.space));
  return out;
}

DeformedSpace quasihyperbolize(SpacePtr space) {
  if (!space->incomplete()) throw std::invalid_argument("space is complete");
  Density rho = Density::quasihyperbolic(*space);
  auto d = deform_impl(*space, rho);
  d.space.tags.insert("quasihyperbolization");
  d.space.provenance["transform"] = "quasihyperbolize";
  d.space.provenance["unbounded"] = true;
  DeformedSpace out;
  out.base = space;
  out.density = std::move(rho);
  out.provenance = d.space.provenance;
  out.deformed = std::make_shared<const SampledSpace>(std::move(d.space));
  return out;
}

DeformedSpace uniformize(SpacePtr hyp, const BasepointFunction& b, double eps,
                         const std::vector<BoundaryDirection>& directions) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  Density rho = Density::exponential(basepoint_values(b, *hyp), eps);
  auto d = deform_impl(*hyp, rho);
  d.space.tags.insert("uniformization");
  d.space.provenance["transform"] = "uniformize";
  d.space.provenance["epsilon"] = eps;
  d.space.provenance["basepoint"] = b.tag();
  d.space.provenance["unbounded"] = b.kind == BasepointFunction::Kind::busemann;

  // Boundary points are far ray endpoints; beyond the window b is taken to grow at unit
  // rate, which adds the tail rho(far)/eps.
  std::vector<PointId> far;
  for (const auto& dir : directions) {
    if (b.kind == BasepointFunction::Kind::busemann && dir.id == b.direction) continue;
    far.push_back(dir.ray.back());
  }
  std::vector<double> boundary;
  if (!far.empty()) {
    const std::size_t n = hyp->size(), m = far.size();
    std::vector<double> table(n * m);
    for (std::size_t j = 0; j < m; ++j) {
      auto row = d.space.row(far[j]);
      const double tail = rho.values[far[j]] / eps;
      for (std::size_t x = 0; x < n; ++x) table[x * m + j] = row[x] + tail;
    }
    d.space.set_boundary_table(m, std::move(table));
    boundary.resize(n);
    for (std::size_t x = 0; x < n; ++x) boundary[x] = d.space.d_omega(x);
    d.space.provenance["boundary_tail"] = "unit-rate extrapolation beyond window";
  }
  DeformedSpace out;
  out.base = hyp;
  out.density = std::move(rho);
  out.boundary_distance = std::move(boundary);
  out.provenance = d.space.provenance;
  out.deformed = std::make_shared<const SampledSpace>(std::move(d.space));
  return out;
}

std::vector<std::pair<PointId, PointId>> sample_pairs(std::size_t n, std::size_t max_pairs, std::uint64_t seed) {
  std::vector<std::pair<PointId, PointId>> out;
  if (n < 2) return out;
  const std::size_t all = n * (n - 1) / 2;
  if (all <= max_pairs) {
    out.reserve(all);
    for (PointId i = 0; i < n; ++i)
      for (PointId j = i + 1; j < n; ++j) out.emplace_back(i, j);
    return out;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  out.reserve(max_pairs);
  while (out.size() < max_pairs) {
    PointId a = pick(rng), b = pick(rng);
    if (a == b) continue;
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  return out;
}

// ---- Gehring-Hayman constant ----------------------------------------------

GHEstimate gh_constant(const DeformedSpace& def, const std::vector<std::pair<PointId, PointId>>& pairs) {
  const LengthGraph& base = *def.base->graph();
  const LengthGraph& dg = *def.deformed->graph();
  std::map<PointId, std::vector<PointId>> by_target;
  for (auto [a, b] : pairs) by_target[b].push_back(a);
  std::vector<std::pair<PointId, std::vector<PointId>>> groups(by_target.begin(), by_target.end());

  std::vector<GHEstimate> partial(64);
  parallel_blocks(groups.size(), [&](std::size_t lo, std::size_t hi, std::size_t blk) {
    GHEstimate est;
    for (std::size_t g = lo; g < hi; ++g) {
      const PointId b = groups[g].first;
      auto to_b = base.distances_from(b);
      for (PointId a : groups[g].second) {
        double drho = def.deformed->dist(a, b);
        if (!(drho > 0.0)) {
          ++est.skipped;
          continue;
        }
        Polyline path = geodesic_walk(base, to_b, a, b);
        double len = 0.0;
        for (std::size_t i = 1; i < path.size(); ++i) len += edge_length(dg, path[i - 1], path[i]);
        ++est.pairs;
        double ratio = len / drho;
        if (ratio > est.M) {
          est.M = ratio;
          est.worst = {a, b};
        }
      }
    }
    partial[blk] = est;
  }, 64);
  GHEstimate out;
  for (const auto& p : partial) {
    out.pairs += p.pairs;
    out.skipped += p.skipped;
    if (p.M > out.M) {
      out.M = p.M;
      out.worst = p.worst;
    }
  }
  return out;
}

GHEstimate gh_constant(const DeformedSpace& def, std::size_t max_pairs, std::uint64_t seed) {
  return gh_constant(def, sample_pairs(def.base->size(), max_pairs, seed));
}

GHScan gh_scan(SpacePtr hyp, const BasepointFunction& b, const std::vector<double>& eps_grid, double threshold,
               std::size_t max_pairs, std::uint64_t seed) {
  GHScan scan;
  auto pairs = sample_pairs(hyp->size(), max_pairs, seed);
  for (double eps : eps_grid) {
    auto uni = uniformize(hyp, b, eps);
    GHScanPoint p{eps, gh_constant(uni, pairs)};
    if (p.estimate.M <= threshold) scan.largest_admissible_eps = std::max(scan.largest_admissible_eps, eps);
    scan.points.push_back(p);
  }
  return scan;
}

// ---- profiles -------------------------------------------------------------

void RatioSpread::add(double r, PointId a, PointId b) {
  if (r < min) {
    min = r;
    argmin = {a, b};
  }
  if (r > max) {
    max = r;
    argmax = {a, b};
  }
}

namespace {
json spread_json(const RatioSpread& r) {
  if (!std::isfinite(r.min)) return json{{"min", nullptr}, {"max", nullptr}, {"spread", nullptr}};
  return json{{"min", r.min}, {"max", r.max}, {"spread", r.spread()},
              {"argmin", {r.argmin.first, r.argmin.second}}, {"argmax", {r.argmax.first, r.argmax.second}}};
}
}  // namespace

json DistanceProfile::to_json() const {
  return json{{"pair_ratio", spread_json(pair_ratio)}, {"boundary_ratio", spread_json(boundary_ratio)}, {"pairs", pairs}};
}

DistanceProfile distance_profile_check(const DeformedSpace& def, std::size_t max_pairs, std::uint64_t seed) {
  if (def.density.source != Density::Source::exponential)
    throw std::invalid_argument("distance profile needs a uniformization");
  const auto& bv = def.density.b_values;
  const double eps = def.density.epsilon;
  DistanceProfile prof;
  for (auto [x, y] : sample_pairs(def.base->size(), max_pairs, seed)) {
    double d = def.base->dist(x, y);
    double gp = 0.5 * (bv[x] + bv[y] - d);
    double denom = std::exp(-eps * gp) * std::min(1.0, d);
    prof.pair_ratio.add(def.deformed->dist(x, y) / denom, x, y);
    ++prof.pairs;
  }
  for (PointId x = 0; x < def.boundary_distance.size(); ++x)
    prof.boundary_ratio.add(def.boundary_distance[x] / def.density.values[x], x, x);
  return prof;
}

json HeightProfile::to_json() const {
  return json{{"lower_bound_violations", lower_bound_violations},
              {"worst_lower_ratio", std::isfinite(worst_lower_ratio) ? json(worst_lower_ratio) : json(nullptr)},
              {"decay_exponent", decay_exponent}, {"decay_constant", decay_constant}, {"apex", apex},
              {"apex_height", apex_height}, {"endpoint_distance", endpoint_distance}, {"b_apex", b_apex},
              {"b_min", b_min}};
}

HeightProfile geodesic_height_profile(const DeformedSpace& hyp, const Polyline& gamma, const std::vector<double>& b_values) {
  if (gamma.size() < 2) throw std::invalid_argument("degenerate curve");
  const SampledSpace& base = *hyp.base;
  const SampledSpace& k = *hyp.deformed;
  std::vector<double> s(gamma.size(), 0.0), h(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (i) s[i] = s[i - 1] + k.dist(gamma[i - 1], gamma[i]);
    h[i] = base.d_omega(gamma[i]);
  }
  if (s.back() > 1.01 * k.dist(gamma.front(), gamma.back())) throw std::invalid_argument("non-geodesic polyline");

  HeightProfile p;
  p.endpoint_distance = base.dist(gamma.front(), gamma.back());
  std::size_t apex = 0;
  for (std::size_t i = 1; i < gamma.size(); ++i)
    if (h[i] > h[apex]) apex = i;  // strict: ties keep the smallest arclength
  p.apex = gamma[apex];
  p.apex_height = h[apex];

  for (std::size_t i = 0; i < gamma.size(); ++i)
    for (std::size_t j = i + 1; j < gamma.size(); ++j) {
      double gap = s[j] - s[i];
      double r = std::min(h[j] / h[i], h[i] / h[j]) * std::exp(gap);
      p.worst_lower_ratio = std::min(p.worst_lower_ratio, r);
      if (r < 1.0 - 1e-9) ++p.lower_bound_violations;
    }

  // Decay away from the apex on each side.
  auto fit_side = [&](std::vector<std::size_t> idx, double& u, double& c) {
    if (idx.size() < 2) return false;
    double mt = 0, ml = 0;
    for (auto i : idx) {
      mt += std::abs(s[i] - s[apex]);
      ml += std::log(h[i]);
    }
    mt /= idx.size();
    ml /= idx.size();
    double sxy = 0, sxx = 0;
    for (auto i : idx) {
      double t = std::abs(s[i] - s[apex]) - mt;
      sxy += t * (std::log(h[i]) - ml);
      sxx += t * t;
    }
    if (!(sxx > 0.0)) return false;
    u = -sxy / sxx;
    c = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        double gap = std::abs(s[idx[b]] - s[idx[a]]);
        c = std::max(c, h[idx[b]] / h[idx[a]] * std::exp(u * gap));
      }
    return true;
  };
  std::vector<std::size_t> after, before;
  for (std::size_t i = apex; i < gamma.size(); ++i) after.push_back(i);
  for (std::size_t i = apex + 1; i-- > 0;) before.push_back(i);
  bool any = false;
  double u_best = kInf, c_best = 1.0;
  for (auto* side : {&after, &before}) {
    double u = 0, c = 1;
    if (fit_side(*side, u, c)) {
      any = true;
      u_best = std::min(u_best, u);
      c_best = std::max(c_best, c);
    }
  }
  p.decay_exponent = any ? u_best : 0.0;
  p.decay_constant = c_best;

  if (!b_values.empty()) {
    p.b_apex = b_values.at(p.apex);
    p.b_min = kInf;
    for (PointId x : gamma) p.b_min = std::min(p.b_min, b_values.at(x));
  }
  return p;
}

// ---- inequality checks ------------------------------------------------------

json CheckTally::to_json() const { return json{{"checked", checked}, {"violations", violations}, {"worst", worst}}; }

namespace {
// lhs <= rhs with relative tolerance; records the relative excess.
void tally(CheckTally& t, double lhs, double rhs, double rel_tol) {
  ++t.checked;
  double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  double excess = (lhs - rhs) / scale;
  t.worst = std::max(t.worst, excess);
  if (lhs - rhs > rel_tol * scale) ++t.violations;
}
}  // namespace

SandwichReport quasihyperbolic_sandwich(const DeformedSpace& qh, double A, double rel_tol) {
  const SampledSpace& om = *qh.base;
  const SampledSpace& k = *qh.deformed;
  SandwichReport rep;
  rep.A = A;
  const std::size_t n = om.size();
  std::vector<SandwichReport> partial(64);
  parallel_blocks(n, [&](std::size_t lo, std::size_t hi, std::size_t blk) {
    SandwichReport r;
    for (PointId x = lo; x < hi; ++x) {
      auto dr = om.row(x);
      auto kr = k.row(x);
      for (PointId y = x + 1; y < n; ++y) {
        double dx = om.d_omega(x), dy = om.d_omega(y);
        double base = std::log1p(dr[y] / std::min(dx, dy));
        tally(r.lower, base, kr[y], rel_tol);
        tally(r.upper, kr[y], 4 * A * A * base, rel_tol);
        tally(r.log_ratio, std::abs(std::log(dx / dy)), kr[y], rel_tol);
        tally(r.boundary_lipschitz, std::abs(dx - dy), dr[y], rel_tol);
      }
    }
    partial[blk] = r;
  }, 64);
  auto merge = [](CheckTally& a, const CheckTally& b) {
    a.checked += b.checked;
    a.violations += b.violations;
    a.worst = std::max(a.worst, b.worst);
  };
  for (const auto& p : partial) {
    merge(rep.lower, p.lower);
    merge(rep.upper, p.upper);
    merge(rep.log_ratio, p.log_ratio);
    merge(rep.boundary_lipschitz, p.boundary_lipschitz);
  }
  return rep;
}

CheckTally harnack_check(const DeformedSpace& uni, double rel_tol) {
  if (uni.density.source != Density::Source::exponential) throw std::invalid_argument("Harnack check needs a uniformization");
  const double eps = uni.density.epsilon;
  const auto& rho = uni.density.values;
  const std::size_t n = uni.base->size();
  std::vector<CheckTally> partial(64);
  parallel_blocks(n, [&](std::size_t lo, std::size_t hi, std::size_t blk) {
    CheckTally t;
    for (PointId x = lo; x < hi; ++x) {
      auto dr = uni.base->row(x);
      auto er = uni.deformed->row(x);
      for (PointId y = 0; y < n; ++y) {
        if (y == x) continue;
        double lower = rho[x] * -std::expm1(-eps * dr[y]) / eps;
        double upper = rho[x] * std::expm1(eps * dr[y]) / eps;
        tally(t, lower, er[y], rel_tol);
        tally(t, er[y], upper, rel_tol);
      }
    }
    partial[blk] = t;
  }, 64);
  CheckTally out;
  for (const auto& p : partial) {
    out.checked += p.checked;
    out.violations += p.violations;
    out.worst = std::max(out.worst, p.worst);
  }
  return out;
}

double measured_uniformity(const DeformedSpace& qh, std::size_t max_pairs, std::uint64_t seed) {
  const LengthGraph& kg = *qh.deformed->graph();
  std::map<PointId, std::vector<PointId>> by_target;
  for (auto [a, b] : sample_pairs(qh.base->size(), max_pairs, seed)) by_target[b].push_back(a);
  double A = 1.0;
  for (const auto& [b, sources] : by_target) {
    auto to_b = kg.distances_from(b);
    for (PointId a : sources) A = std::max(A, uniformity_constant(*qh.base, geodesic_walk(kg, to_b, a, b)));
  }
  return A;
}

}  // namespace qhlab
