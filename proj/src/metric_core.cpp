#include "qhlab/metric_core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <list>
#include <mutex>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace qhlab {

double euclid(const Coord& a, const Coord& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// ---- LengthGraph --------------------------------------------------------

PointId LengthGraph::add_vertex() {
  adj_.emplace_back();
  return adj_.size() - 1;
}

void LengthGraph::add_edge(PointId u, PointId v, double w) {
  if (u >= adj_.size() || v >= adj_.size()) throw std::out_of_range("edge endpoint is not a vertex");
  if (u == v) throw std::invalid_argument("self loop");
  if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("edge length must be positive and finite");
  adj_[u].emplace_back(v, w);
  adj_[v].emplace_back(u, w);
  edges_.push_back({u, v, w});
}

bool LengthGraph::connected() const {
  if (adj_.empty()) return true;
  std::vector<char> seen(adj_.size(), 0);
  std::vector<PointId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    PointId u = stack.back();
    stack.pop_back();
    for (auto [v, w] : adj_[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == adj_.size();
}

std::vector<double> LengthGraph::distances_from(PointId src) const {
  std::vector<double> d(adj_.size(), kInf);
  using Item = std::pair<double, PointId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d.at(src) = 0.0;
  pq.emplace(0.0, src);
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (du > d[u]) continue;
    for (auto [v, w] : adj_[u]) {
      double nd = du + w;
      if (nd < d[v]) {
        d[v] = nd;
        pq.emplace(nd, v);
      }
    }
  }
  return d;
}

// ---- parallel helper ----------------------------------------------------

std::size_t worker_count() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

void parallel_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                     std::size_t max_blocks) {
  if (n == 0) return;
  // The partition depends only on n so that reductions are reproducible.
  std::size_t blocks = max_blocks ? max_blocks : 64;
  blocks = std::min(blocks, n);
  std::size_t per = (n + blocks - 1) / blocks;
  blocks = (n + per - 1) / per;
  std::size_t threads = std::min(worker_count(), blocks);
  if (threads <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b * per, std::min(n, (b + 1) * per), b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t b = next.fetch_add(1);
        if (b >= blocks) return;
        try {
          fn(b * per, std::min(n, (b + 1) * per), b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---- SampledSpace -------------------------------------------------------

struct SampledSpace::RowCache {
  std::mutex mu;
  std::size_t capacity = 512;
  std::list<PointId> order;
  std::unordered_map<PointId, std::pair<std::shared_ptr<const std::vector<double>>, std::list<PointId>::iterator>> rows;
};

SampledSpace SampledSpace::from_table(Quasimetric table) {
  SampledSpace s;
  s.n_ = table.size();
  s.storage_ = Storage::dense;
  s.table_ = std::move(table.raw());
  return s;
}

SampledSpace SampledSpace::from_coords(std::vector<Coord> coords) {
  SampledSpace s;
  s.n_ = coords.size();
  s.storage_ = Storage::euclidean;
  s.coords_ = std::move(coords);
  return s;
}

std::shared_ptr<const std::vector<double>> SampledSpace::lazy_row(PointId a) const {
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->rows.find(a);
    if (it != cache_->rows.end()) {
      cache_->order.splice(cache_->order.begin(), cache_->order, it->second.second);
      return it->second.first;
    }
  }
  auto row = std::make_shared<const std::vector<double>>(graph_->distances_from(a));
  std::lock_guard<std::mutex> lock(cache_->mu);
  auto it = cache_->rows.find(a);
  if (it != cache_->rows.end()) return it->second.first;
  cache_->order.push_front(a);
  cache_->rows.emplace(a, std::make_pair(row, cache_->order.begin()));
  while (cache_->rows.size() > cache_->capacity) {
    cache_->rows.erase(cache_->order.back());
    cache_->order.pop_back();
  }
  return row;
}

double SampledSpace::dist(PointId a, PointId b) const {
  switch (storage_) {
    case Storage::dense:
      return table_[a * n_ + b];
    case Storage::euclidean:
      return euclid(coords_[a], coords_[b]);
    case Storage::graph_rows:
      return (*lazy_row(a))[b];
  }
  return kInf;
}

std::vector<double> SampledSpace::row(PointId a) const {
  if (a >= n_) throw std::out_of_range("unknown point id");
  switch (storage_) {
    case Storage::dense:
      return std::vector<double>(table_.begin() + static_cast<std::ptrdiff_t>(a * n_),
                                 table_.begin() + static_cast<std::ptrdiff_t>((a + 1) * n_));
    case Storage::euclidean: {
      std::vector<double> r(n_);
      for (std::size_t j = 0; j < n_; ++j) r[j] = euclid(coords_[a], coords_[j]);
      return r;
    }
    case Storage::graph_rows:
      return *lazy_row(a);
  }
  return {};
}

double SampledSpace::boundary_dist(PointId x, std::size_t j) const {
  if (j >= boundary_count_) throw std::out_of_range("unknown boundary sample");
  if (!boundary_table_.empty()) return boundary_table_[x * boundary_count_ + j];
  return euclid(coords_.at(x), boundary_coords_.at(j));
}

void SampledSpace::set_boundary_table(std::size_t m, std::vector<double> table) {
  if (table.size() != n_ * m) throw std::invalid_argument("boundary table has wrong shape");
  boundary_count_ = m;
  boundary_table_ = std::move(table);
  refresh_d_omega();
}

void SampledSpace::set_boundary_coords(std::vector<Coord> bc) {
  boundary_coords_ = std::move(bc);
  if (!boundary_table_.empty() && boundary_coords_.size() != boundary_count_)
    throw std::invalid_argument("boundary coordinate list has wrong length");
  if (boundary_table_.empty()) {
    if (storage_ != Storage::euclidean && !boundary_coords_.empty())
      throw std::invalid_argument("boundary coordinates need a euclidean carrier or a table");
    boundary_count_ = boundary_coords_.size();
  }
  refresh_d_omega();
}

void SampledSpace::set_coords(std::vector<Coord> c) {
  if (c.size() != n_) throw std::invalid_argument("coordinate list has wrong length");
  if (storage_ == Storage::euclidean) throw std::logic_error("euclidean carrier coordinates are fixed");
  coords_ = std::move(c);
}

PointId nearest_point(const SampledSpace& space, const Coord& c) {
  if (!space.has_coords()) throw std::invalid_argument("space has no coordinates");
  PointId best = 0;
  double bd = kInf;
  for (PointId p = 0; p < space.size(); ++p) {
    double d = euclid(space.coords()[p], c);
    if (d < bd) {
      bd = d;
      best = p;
    }
  }
  return best;
}

void SampledSpace::set_d_omega_values(std::vector<double> exact) {
  if (exact.size() != n_) throw std::invalid_argument("d_omega has wrong length");
  for (double v : exact)
    if (!(v > 0.0)) throw std::invalid_argument("d_omega must be positive on interior points");
  d_omega_ = std::move(exact);
  has_oracle_values_ = true;
}

void SampledSpace::set_d_omega_oracle(std::function<double(const Coord&)> oracle) {
  if (coords_.size() != n_) throw std::invalid_argument("oracle needs coordinates");
  std::vector<double> v(n_);
  for (std::size_t i = 0; i < n_; ++i) v[i] = oracle(coords_[i]);
  set_d_omega_values(std::move(v));
  oracle_ = std::move(oracle);
}

void SampledSpace::refresh_d_omega() {
  if (has_oracle_values_) return;
  if (boundary_count_ == 0) {
    d_omega_.clear();
    return;
  }
  d_omega_.assign(n_, kInf);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < boundary_count_; ++j) d_omega_[i] = std::min(d_omega_[i], boundary_dist(i, j));
}

double SampledSpace::triangle_tolerance(double scale) const {
  if (tolerance_ == TriangleTolerance::exact) return 1e-9;
  return 1e-6 * std::max(1.0, scale);
}

PointId SampledSpace::landmark(const std::string& name) const {
  auto it = landmarks.find(name);
  if (it == landmarks.end()) throw std::invalid_argument("no landmark named '" + name + "'");
  return it->second;
}

// ---- shortest paths -----------------------------------------------------

SampledSpace shortest_path_metric(std::shared_ptr<const LengthGraph> graph) {
  if (!graph->connected()) throw std::runtime_error("not rectifiably connected");
  const std::size_t n = graph->vertex_count();
  SampledSpace s;
  s.n_ = n;
  s.graph_ = graph;
  if (n <= SampledSpace::kDenseLimit) {
    s.storage_ = SampledSpace::Storage::dense;
    s.table_.assign(n * n, 0.0);
    parallel_blocks(n, [&](std::size_t b, std::size_t e, std::size_t) {
      for (std::size_t i = b; i < e; ++i) {
        auto d = graph->distances_from(i);
        std::copy(d.begin(), d.end(), s.table_.begin() + static_cast<std::ptrdiff_t>(i * n));
      }
    });
    // Dijkstra from both ends can differ in the last ulp; keep the table exactly symmetric.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double m = std::min(s.table_[i * n + j], s.table_[j * n + i]);
        s.table_[i * n + j] = s.table_[j * n + i] = m;
      }
  } else {
    s.storage_ = SampledSpace::Storage::graph_rows;
    s.cache_ = std::make_shared<SampledSpace::RowCache>();
  }
  return s;
}

SampledSpace shortest_path_metric(const LengthGraph& graph) {
  return shortest_path_metric(std::make_shared<const LengthGraph>(graph));
}

Polyline geodesic(const LengthGraph& graph, PointId a, PointId b) {
  if (a >= graph.vertex_count() || b >= graph.vertex_count()) throw std::out_of_range("unknown point id");
  return geodesic_walk(graph, graph.distances_from(b), a, b);
}

double edge_length(const LengthGraph& graph, PointId u, PointId v) {
  double best = kInf;
  for (auto [w, len] : graph.neighbours(u))
    if (w == v) best = std::min(best, len);
  return best;
}

Polyline geodesic_walk(const LengthGraph& graph, const std::vector<double>& to_b, PointId a, PointId b) {
  if (!std::isfinite(to_b.at(a))) throw std::runtime_error("not rectifiably connected");
  Polyline path{a};
  PointId u = a;
  while (u != b) {
    PointId best = graph.vertex_count();
    for (auto [v, w] : graph.neighbours(u)) {
      double slack = to_b[v] + w - to_b[u];
      if (slack <= 1e-12 * std::max(1.0, to_b[u]) && v < best) best = v;
    }
    if (best == graph.vertex_count()) throw std::logic_error("geodesic walk stalled");
    path.push_back(best);
    u = best;
  }
  return path;
}

Polyline geodesic(const SampledSpace& space, PointId a, PointId b) {
  if (!space.graph()) throw std::invalid_argument("need length-graph carrier");
  return geodesic(*space.graph(), a, b);
}

// ---- curves -------------------------------------------------------------

double curve_length(const SampledSpace& space, const Polyline& gamma) {
  for (PointId p : gamma)
    if (p >= space.size()) throw std::out_of_range("unknown point id");
  double len = 0.0;
  for (std::size_t i = 1; i < gamma.size(); ++i) len += space.dist(gamma[i - 1], gamma[i]);
  return len;
}

double uniformity_constant(const SampledSpace& space, const Polyline& gamma) {
  if (gamma.size() < 2) throw std::invalid_argument("degenerate curve");
  for (PointId p : gamma)
    if (p >= space.size()) throw std::out_of_range("unknown point id");
  const double chord = space.dist(gamma.front(), gamma.back());
  if (!(chord > 0.0)) throw std::invalid_argument("degenerate curve");

  std::vector<double> prefix(gamma.size(), 0.0);
  for (std::size_t i = 1; i < gamma.size(); ++i) prefix[i] = prefix[i - 1] + space.dist(gamma[i - 1], gamma[i]);
  const double total = prefix.back();
  double a = total / chord;
  for (std::size_t i = 1; i + 1 < gamma.size(); ++i) {
    double dom = space.d_omega(gamma[i]);
    if (!std::isfinite(dom)) continue;
    a = std::max(a, std::min(prefix[i], total - prefix[i]) / dom);
  }
  return std::max(a, 1.0);
}

SampledSpace subspace(const SampledSpace& space, const std::vector<PointId>& ids) {
  const std::size_t k = ids.size();
  std::vector<long> where(space.size(), -1);
  for (std::size_t a = 0; a < k; ++a) {
    if (ids[a] >= space.size()) throw std::out_of_range("subspace id out of range");
    if (where[ids[a]] >= 0) throw std::invalid_argument("subspace ids must be distinct");
    where[ids[a]] = static_cast<long>(a);
  }
  Quasimetric q(k);
  for (std::size_t a = 0; a < k; ++a) {
    auto r = space.row(ids[a]);
    for (std::size_t b = a + 1; b < k; ++b) q.set(a, b, r[ids[b]]);
  }
  SampledSpace s = SampledSpace::from_table(std::move(q));
  s.set_tolerance(space.tolerance_kind());
  const std::size_t m = space.boundary_count();
  if (m > 0) {
    std::vector<double> bt(k * m);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t j = 0; j < m; ++j) bt[a * m + j] = space.boundary_dist(ids[a], j);
    s.set_boundary_table(m, std::move(bt));
    if (!space.boundary_coords().empty()) s.set_boundary_coords(space.boundary_coords());
  }
  if (space.has_coords()) {
    std::vector<Coord> c;
    for (PointId x : ids) c.push_back(space.coords()[x]);
    s.set_coords(std::move(c));
  }
  if (space.incomplete()) {
    std::vector<double> dom;
    bool finite = true;
    for (PointId x : ids) {
      dom.push_back(space.d_omega(x));
      finite = finite && std::isfinite(dom.back()) && dom.back() > 0.0;
    }
    if (finite) s.set_d_omega_values(std::move(dom));
  }
  for (const auto& [name, id] : space.landmarks)
    if (where[id] >= 0) s.landmarks[name] = static_cast<PointId>(where[id]);
  for (PointId e : space.ends)
    if (where[e] >= 0) s.ends.push_back(static_cast<PointId>(where[e]));
  s.tags = space.tags;
  s.provenance = space.provenance;
  s.provenance["subspace"] = json{{"of", space.size()}, {"kept", k}};
  return s;
}

std::vector<PointId> thinned_ids(const SampledSpace& space, std::size_t max_points) {
  const std::size_t n = space.size();
  if (max_points == 0) throw std::invalid_argument("max_points must be positive");
  std::vector<bool> keep(n, false);
  const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
  for (std::size_t i = 0; i < n; i += stride) keep[i] = true;
  for (const auto& [name, id] : space.landmarks) keep[id] = true;
  for (PointId e : space.ends) keep[e] = true;
  std::vector<PointId> ids;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) ids.push_back(i);
  return ids;
}

Diameter space_diameter(const SampledSpace& space) {
  Diameter out;
  out.unbounded = space.unbounded();
  const std::size_t n = space.size();
  if (n < 2) return out;
  std::vector<Diameter> partial(64);
  parallel_blocks(n, [&](std::size_t b, std::size_t e, std::size_t blk) {
    Diameter best;
    for (std::size_t i = b; i < e; ++i) {
      auto r = space.row(i);
      for (std::size_t j = i + 1; j < n; ++j)
        if (r[j] > best.value) best = {r[j], false, i, j};
    }
    partial[blk] = best;
  }, 64);
  for (const auto& p : partial)
    if (p.value > out.value) {
      out.value = p.value;
      out.a = p.a;
      out.b = p.b;
    }
  return out;
}

MetricAudit audit_metric(const SampledSpace& space) {
  const std::size_t n = space.size();
  std::vector<std::vector<double>> rows(n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = space.row(i);
    for (double v : rows[i]) scale = std::max(scale, v);
  }
  const double tol = space.triangle_tolerance(scale);
  MetricAudit audit;
  std::vector<MetricAudit> partial(64);
  parallel_blocks(n, [&](std::size_t b, std::size_t e, std::size_t blk) {
    MetricAudit a;
    for (std::size_t x = b; x < e; ++x) {
      if (rows[x][x] != 0.0) ++a.violations;
      for (std::size_t y = 0; y < n; ++y) {
        if (rows[x][y] != rows[y][x] || rows[x][y] < 0.0) ++a.violations;
        if (y != x && !(rows[x][y] > 0.0)) ++a.violations;
        for (std::size_t z = 0; z < n; ++z) {
          ++a.triples;
          double excess = rows[x][z] - rows[x][y] - rows[y][z];
          if (excess > tol) ++a.violations;
          a.worst_excess = std::max(a.worst_excess, excess);
        }
      }
    }
    partial[blk] = a;
  }, 64);
  for (const auto& p : partial) {
    audit.triples += p.triples;
    audit.violations += p.violations;
    audit.worst_excess = std::max(audit.worst_excess, p.worst_excess);
  }
  return audit;
}

// ---- I/O ----------------------------------------------------------------

void write_distance_csv(const SampledSpace& space, std::ostream& out) {
  char buf[64];
  out << "id";
  for (std::size_t j = 0; j < space.size(); ++j) out << ',' << j;
  out << '\n';
  for (std::size_t i = 0; i < space.size(); ++i) {
    out << i;
    auto r = space.row(i);
    for (double v : r) {
      std::snprintf(buf, sizeof buf, "%.12g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

ModelSpec ModelSpec::from_json(const json& j) {
  ModelSpec s;
  s.kind = j.at("kind").get<std::string>();
  if (j.contains("params")) s.params = j.at("params");
  s.window = j.value("window", 0.0);
  s.resolution = j.value("resolution", 0);
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

json ModelSpec::to_json() const {
  return json{{"kind", kind}, {"params", params}, {"window", window}, {"resolution", resolution}, {"seed", seed}};
}

}  // namespace qhlab
