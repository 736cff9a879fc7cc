#include "qhlab/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qhlab {

double boundary_pair_dist(const SampledSpace& space, std::size_t a, std::size_t b) {
  if (a == b) return 0.0;
  if (!space.boundary_coords().empty()) return euclid(space.boundary_coords().at(a), space.boundary_coords().at(b));
  double best = kInf;
  for (PointId x = 0; x < space.size(); ++x) best = std::min(best, space.boundary_dist(x, a) + space.boundary_dist(x, b));
  return best;
}

Quasimetric inversion_quasimetric(const SampledSpace& space, InversionCenter p, std::vector<PointId>* retained) {
  std::vector<PointId> keep;
  std::vector<double> to_p;
  for (PointId x = 0; x < space.size(); ++x) {
    if (p.kind == InversionCenter::Kind::point && x == p.index) continue;
    double d = p.kind == InversionCenter::Kind::point ? space.dist(x, p.index) : space.boundary_dist(x, p.index);
    if (!(d > 0.0)) throw std::invalid_argument("point coincides with inversion center");
    keep.push_back(x);
    to_p.push_back(d);
  }
  Quasimetric q(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = i + 1; j < keep.size(); ++j) q.set(i, j, space.dist(keep[i], keep[j]) / (to_p[i] * to_p[j]));
  if (retained) *retained = std::move(keep);
  return q;
}

Quasimetric chain_metric(const Quasimetric& q) {
  Quasimetric d = q;
  const std::size_t n = d.size();
  auto& v = d.raw();
  for (std::size_t k = 0; k < n; ++k) {
    const double* rk = &v[k * n];
    parallel_blocks(n, [&](std::size_t lo, std::size_t hi, std::size_t) {
      for (std::size_t i = lo; i < hi; ++i) {
        double* ri = &v[i * n];
        const double dik = ri[k];
        for (std::size_t j = 0; j < n; ++j) {
          double c = dik + rk[j];
          if (c < ri[j]) ri[j] = c;
        }
      }
    }, 16);
  }
  return d;
}

SampledSpace quasimetric_chain_metrize(const Quasimetric& q) {
  SampledSpace s = SampledSpace::from_table(chain_metric(q));
  s.set_tolerance(TriangleTolerance::sampled);
  s.provenance["transform"] = "chain_metrize";
  return s;
}

namespace {

// Inverts about p over interior points plus the other boundary samples (and the point at
// infinity for unbounded windows), metrizes, then splits interior and boundary again.
SampledSpace invert_impl(const SampledSpace& space, InversionCenter p, const std::vector<bool>& keep_in_output) {
  const std::size_t n = space.size();
  const bool at_point = p.kind == InversionCenter::Kind::point;
  auto to_center = [&](PointId x) { return at_point ? space.dist(x, p.index) : space.boundary_dist(x, p.index); };

  std::vector<PointId> pts;
  for (PointId x = 0; x < n; ++x)
    if (!(at_point && x == p.index)) pts.push_back(x);
  std::vector<std::size_t> bnd;
  for (std::size_t j = 0; j < space.boundary_count(); ++j)
    if (at_point || j != p.index) bnd.push_back(j);
  const bool infinity = space.unbounded();

  const std::size_t N = pts.size() + bnd.size() + (infinity ? 1 : 0);
  std::vector<double> dp(N);
  for (std::size_t i = 0; i < pts.size(); ++i) dp[i] = to_center(pts[i]);
  for (std::size_t j = 0; j < bnd.size(); ++j) {
    double d = at_point ? space.boundary_dist(p.index, bnd[j]) : boundary_pair_dist(space, p.index, bnd[j]);
    dp[pts.size() + j] = d;
  }
  for (std::size_t i = 0; i + (infinity ? 1 : 0) < N; ++i)
    if (!(dp[i] > 0.0)) throw std::invalid_argument("point coincides with inversion center");

  auto raw = [&](std::size_t a, std::size_t b) -> double {
    const std::size_t P = pts.size();
    const bool ia = infinity && a == N - 1, ib = infinity && b == N - 1;
    if (ia || ib) {
      std::size_t o = ia ? b : a;  // exact limit of i^p(x, y) as y runs off to infinity
      return 1.0 / dp[o];
    }
    double d;
    if (a < P && b < P) d = space.dist(pts[a], pts[b]);
    else if (a < P) d = space.boundary_dist(pts[a], bnd[b - P]);
    else if (b < P) d = space.boundary_dist(pts[b], bnd[a - P]);
    else d = boundary_pair_dist(space, bnd[a - P], bnd[b - P]);
    return d / (dp[a] * dp[b]);
  };

  Quasimetric q(N);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = a + 1; b < N; ++b) q.set(a, b, raw(a, b));
  Quasimetric m = chain_metric(q);

  double rmin = kInf, rmax = 0.0;
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = a + 1; b < N; ++b) {
      double r = m(a, b) / q(a, b);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }

  std::vector<std::size_t> out_idx;  // indices into pts
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep_in_output[pts[i]]) out_idx.push_back(i);
  Quasimetric t(out_idx.size());
  for (std::size_t a = 0; a < out_idx.size(); ++a)
    for (std::size_t b = a + 1; b < out_idx.size(); ++b) t.set(a, b, m(out_idx[a], out_idx[b]));
  SampledSpace s = SampledSpace::from_table(std::move(t));
  s.set_tolerance(TriangleTolerance::sampled);

  const std::size_t M = N - pts.size();
  if (M > 0) {
    std::vector<double> bt(out_idx.size() * M);
    for (std::size_t a = 0; a < out_idx.size(); ++a)
      for (std::size_t j = 0; j < M; ++j) bt[a * M + j] = m(out_idx[a], pts.size() + j);
    s.set_boundary_table(M, std::move(bt));
  }

  // Carrier graph: the base graph's edges among retained points, reweighted.
  std::vector<long> new_id(n, -1);
  for (std::size_t a = 0; a < out_idx.size(); ++a) new_id[pts[out_idx[a]]] = static_cast<long>(a);
  if (space.graph()) {
    auto g = std::make_shared<LengthGraph>(out_idx.size());
    for (const Edge& e : space.graph()->edges())
      if (new_id[e.u] >= 0 && new_id[e.v] >= 0)
        g->add_edge(new_id[e.u], new_id[e.v], s.dist(new_id[e.u], new_id[e.v]));
    if (g->connected()) s.set_graph(g);
  }
  if (space.has_coords()) {
    std::vector<Coord> c;
    for (auto i : out_idx) c.push_back(space.coords()[pts[i]]);
    s.set_coords(std::move(c));
  }
  for (const auto& [name, id] : space.landmarks)
    if (id < n && new_id[id] >= 0) s.landmarks[name] = new_id[id];

  s.provenance["source_ids"] = json::array();
  for (auto i : out_idx) s.provenance["source_ids"].push_back(pts[i]);
  s.provenance["center"] = json{{"kind", at_point ? "point" : "boundary_sample"}, {"index", p.index}};
  s.provenance["sandwich_ratio_achieved"] = json{{"min", rmin}, {"max", rmax}};
  s.provenance["boundary_sources"] = json::array();
  for (auto j : bnd) s.provenance["boundary_sources"].push_back(j);
  if (infinity) {
    s.provenance["boundary_sources"].push_back("infinity");
    s.provenance["infinity_extrapolated"] = true;
  }
  if (space.provenance.contains("model")) s.provenance["model"] = space.provenance["model"];
  return s;
}

}  // namespace

SampledSpace invert(const SampledSpace& space, InversionCenter p) {
  if (p.kind == InversionCenter::Kind::boundary_sample && p.index >= space.boundary_count())
    throw std::invalid_argument("unknown boundary sample");
  if (p.kind == InversionCenter::Kind::point && p.index >= space.size()) throw std::invalid_argument("unknown point id");
  SampledSpace s = invert_impl(space, p, std::vector<bool>(space.size(), true));
  s.provenance["transform"] = "invert";
  // A bounded space becomes unbounded when inverted about a boundary point.
  s.provenance["unbounded"] = p.kind == InversionCenter::Kind::boundary_sample;
  return s;
}

SampledSpace ray_augment(const SampledSpace& space, PointId z, const Arm& arm) {
  if (z >= space.size()) throw std::invalid_argument("augmentation point is not interior");
  if (arm.length < 0.0) throw std::invalid_argument("arm length must be nonnegative");
  const std::size_t n = space.size();
  const std::size_t k = arm.length > 0.0 ? std::max<std::size_t>(1, arm.samples) : 0;
  const std::size_t N = n + k;
  std::vector<double> t(k);
  for (std::size_t j = 0; j < k; ++j) t[j] = arm.length * static_cast<double>(j + 1) / static_cast<double>(k);

  Quasimetric q(N);
  auto zr = space.row(z);
  for (PointId x = 0; x < n; ++x) {
    auto r = space.row(x);
    for (PointId y = x + 1; y < n; ++y) q.set(x, y, r[y]);
    for (std::size_t j = 0; j < k; ++j) q.set(x, n + j, zr[x] + t[j]);
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) q.set(n + a, n + b, t[b] - t[a]);
  SampledSpace s = SampledSpace::from_table(std::move(q));
  s.set_tolerance(space.tolerance_kind());

  if (space.boundary_count() > 0) {
    const std::size_t m = space.boundary_count();
    std::vector<double> bt(N * m);
    for (PointId x = 0; x < n; ++x)
      for (std::size_t j = 0; j < m; ++j) bt[x * m + j] = space.boundary_dist(x, j);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t j = 0; j < m; ++j) bt[(n + a) * m + j] = t[a] + space.boundary_dist(z, j);
    s.set_boundary_table(m, std::move(bt));
  }
  if (space.graph()) {
    auto g = std::make_shared<LengthGraph>(*space.graph());
    PointId prev = z;
    for (std::size_t a = 0; a < k; ++a) {
      PointId id = g->add_vertex();
      g->add_edge(prev, id, a == 0 ? t[0] : t[a] - t[a - 1]);
      prev = id;
    }
    s.set_graph(g);
  }
  s.landmarks = space.landmarks;
  s.landmarks["augment_base"] = z;
  if (k > 0) s.landmarks["arm_tip"] = N - 1;
  s.ends = space.ends;
  if (arm.half_line && k > 0) s.ends.push_back(N - 1);
  s.provenance = space.provenance;
  s.provenance["transform"] = "ray_augment";
  s.provenance["arm"] = json{{"length", arm.length}, {"samples", k}, {"half_line", arm.half_line}};
  s.provenance["unbounded"] = space.unbounded() || arm.half_line;
  return s;
}

SampledSpace sphericalize(const SampledSpace& space, PointId p) {
  if (p >= space.size()) throw std::invalid_argument("sphericalization point is not interior");
  const std::size_t n = space.size();
  if (n == 1) {
    SampledSpace s = SampledSpace::from_table(Quasimetric(1));
    s.provenance["transform"] = "sphericalize";
    return s;
  }
  SampledSpace aug = ray_augment(space, p, Arm{1.0, 32, false});
  std::vector<bool> keep(aug.size(), false);
  std::fill(keep.begin(), keep.begin() + static_cast<std::ptrdiff_t>(n), true);
  SampledSpace s = invert_impl(aug, InversionCenter::point(aug.size() - 1), keep);
  s.landmarks.erase("arm_tip");
  s.provenance["transform"] = "sphericalize";
  s.provenance["center"] = p;
  s.provenance["unbounded"] = false;
  Diameter d = space_diameter(s);
  s.provenance["diameter"] = d.value;
  if (d.value > 1.0 + 1e-9) throw std::logic_error("sphericalization diameter exceeds 1");
  return s;
}

}  // namespace qhlab
