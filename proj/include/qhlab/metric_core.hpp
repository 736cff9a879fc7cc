#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace qhlab {

using PointId = std::size_t;
using Polyline = std::vector<PointId>;
using json = nlohmann::json;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Coord {
  double x = 0.0;
  double y = 0.0;
};

double euclid(const Coord& a, const Coord& b);

struct Edge {
  PointId u;
  PointId v;
  double w;
};

/// Undirected graph with positive edge lengths.
class LengthGraph {
 public:
  explicit LengthGraph(std::size_t n = 0) : adj_(n) {}

  PointId add_vertex();
  void add_edge(PointId u, PointId v, double w);

  std::size_t vertex_count() const { return adj_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::pair<PointId, double>>& neighbours(PointId u) const { return adj_.at(u); }
  bool connected() const;

  // Single-source shortest path distances (Dijkstra).
  std::vector<double> distances_from(PointId src) const;

 private:
  std::vector<std::vector<std::pair<PointId, double>>> adj_;
  std::vector<Edge> edges_;
};

/// Symmetric nonnegative table, zero on the diagonal. Triangle inequality not assumed.
class Quasimetric {
 public:
  explicit Quasimetric(std::size_t n = 0) : n_(n), v_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(PointId a, PointId b) const { return v_[a * n_ + b]; }
  void set(PointId a, PointId b, double d) {
    v_[a * n_ + b] = d;
    v_[b * n_ + a] = d;
  }
  const std::vector<double>& raw() const { return v_; }
  std::vector<double>& raw() { return v_; }

 private:
  std::size_t n_;
  std::vector<double> v_;
};

enum class TriangleTolerance { exact, sampled };

/// Finite metric space with optional boundary samples and a distance-to-boundary
/// function. Construction goes through the set_* calls; afterwards the object is
/// treated as immutable and may be shared across threads.
class SampledSpace {
 public:
  enum class Storage { dense, euclidean, graph_rows };
  static constexpr std::size_t kDenseLimit = 2000;

  SampledSpace() = default;

  static SampledSpace from_table(Quasimetric table);
  // Euclidean distances between coordinates; the graph (if any) is only a carrier.
  static SampledSpace from_coords(std::vector<Coord> coords);

  std::size_t size() const { return n_; }
  Storage storage() const { return storage_; }
  double dist(PointId a, PointId b) const;
  std::vector<double> row(PointId a) const;

  // Boundary samples live outside the interior table.
  std::size_t boundary_count() const { return boundary_count_; }
  double boundary_dist(PointId x, std::size_t j) const;
  double d_omega(PointId x) const { return d_omega_.empty() ? kInf : d_omega_[x]; }
  bool incomplete() const { return boundary_count_ > 0 || has_oracle_values_; }

  const std::vector<Coord>& coords() const { return coords_; }
  bool has_coords() const { return !coords_.empty(); }
  const std::vector<Coord>& boundary_coords() const { return boundary_coords_; }

  const std::shared_ptr<const LengthGraph>& graph() const { return graph_; }
  const std::function<double(const Coord&)>& d_omega_oracle() const { return oracle_; }

  // Construction.
  void set_graph(std::shared_ptr<const LengthGraph> g) { graph_ = std::move(g); }
  void set_coords(std::vector<Coord> c);  // labels only, unless storage is euclidean
  void set_boundary_table(std::size_t m, std::vector<double> table_n_by_m);
  void set_boundary_coords(std::vector<Coord> bc);
  void set_d_omega_values(std::vector<double> exact);
  void set_d_omega_oracle(std::function<double(const Coord&)> oracle);
  void set_tolerance(TriangleTolerance t) { tolerance_ = t; }

  TriangleTolerance tolerance_kind() const { return tolerance_; }
  double triangle_tolerance(double scale) const;

  std::map<std::string, PointId> landmarks;
  std::vector<PointId> ends;  // far endpoints standing in for boundary directions
  std::set<std::string> tags;
  json provenance = json::object();

  PointId landmark(const std::string& name) const;
  bool unbounded() const { return provenance.value("unbounded", false); }

 private:
  friend SampledSpace shortest_path_metric(const LengthGraph& graph);
  friend SampledSpace shortest_path_metric(std::shared_ptr<const LengthGraph> graph);

  struct RowCache;
  void refresh_d_omega();
  std::shared_ptr<const std::vector<double>> lazy_row(PointId a) const;

  std::size_t n_ = 0;
  Storage storage_ = Storage::dense;
  std::vector<double> table_;
  std::vector<Coord> coords_;
  std::shared_ptr<const LengthGraph> graph_;
  std::shared_ptr<RowCache> cache_;

  std::size_t boundary_count_ = 0;
  std::vector<double> boundary_table_;
  std::vector<Coord> boundary_coords_;
  std::vector<double> d_omega_;
  bool has_oracle_values_ = false;
  std::function<double(const Coord&)> oracle_;
  TriangleTolerance tolerance_ = TriangleTolerance::exact;
};

using SpacePtr = std::shared_ptr<const SampledSpace>;

// Graph path metric. Dense table up to kDenseLimit vertices, cached Dijkstra rows beyond.
SampledSpace shortest_path_metric(const LengthGraph& graph);
SampledSpace shortest_path_metric(std::shared_ptr<const LengthGraph> graph);

// Shortest path in the space's carrier graph; ties broken towards the
// lexicographically smallest vertex sequence.
Polyline geodesic(const SampledSpace& space, PointId a, PointId b);
Polyline geodesic(const LengthGraph& graph, PointId a, PointId b);
// Same walk given precomputed distances to b (one Dijkstra serves many sources).
Polyline geodesic_walk(const LengthGraph& graph, const std::vector<double>& to_b, PointId a, PointId b);
// Length of an edge between adjacent vertices (shortest if parallel), +inf if absent.
double edge_length(const LengthGraph& graph, PointId u, PointId v);

double curve_length(const SampledSpace& space, const Polyline& gamma);
double uniformity_constant(const SampledSpace& space, const Polyline& gamma);

struct Diameter {
  double value = 0.0;
  bool unbounded = false;  // the sample is a window of an unbounded model
  PointId a = 0;
  PointId b = 0;
};
Diameter space_diameter(const SampledSpace& space);

struct MetricAudit {
  std::size_t triples = 0;
  std::size_t violations = 0;
  double worst_excess = 0.0;
};
// Checks symmetry, zero diagonal and the triangle inequality over all triples.
MetricAudit audit_metric(const SampledSpace& space);

// ---- model spaces -------------------------------------------------------

struct ModelSpec {
  std::string kind;
  json params = json::object();
  double window = 0.0;
  int resolution = 0;
  std::uint64_t seed = 0;

  static ModelSpec from_json(const json& j);
  json to_json() const;
};

SampledSpace build_model_space(const ModelSpec& spec);

PointId nearest_point(const SampledSpace& space, const Coord& c);

// Restriction to the listed points as a dense table; boundary samples, coordinates,
// distance-to-boundary values, landmarks and ends that survive are carried over.
SampledSpace subspace(const SampledSpace& space, const std::vector<PointId>& ids);
// Every k-th point, k chosen so at most max_points remain; landmarks are always kept.
std::vector<PointId> thinned_ids(const SampledSpace& space, std::size_t max_points);

// ---- I/O ----------------------------------------------------------------

void write_distance_csv(const SampledSpace& space, std::ostream& out);

// Deterministic block partition used by the parallel scans. fn(begin, end, block).
void parallel_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                     std::size_t max_blocks = 0);
std::size_t worker_count();

}  // namespace qhlab
