#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qhlab/metric_core.hpp"

using namespace qhlab;

namespace qhlab {
// Readable parameter values in gtest output.
void PrintTo(const ModelSpec& m, std::ostream* os) { *os << m.to_json().dump(); }
}  // namespace qhlab

namespace {

SampledSpace model(const std::string& kind, json params, double window, int res, std::uint64_t seed = 0) {
  return build_model_space(ModelSpec{kind, std::move(params), window, res, seed});
}

// Path sums in a tree by walking parent pointers, independent of any shortest path code.
std::vector<std::vector<double>> tree_oracle(const LengthGraph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, -1.0));
  for (PointId s = 0; s < n; ++s) {
    std::vector<PointId> stack{s};
    d[s][s] = 0.0;
    while (!stack.empty()) {
      PointId u = stack.back();
      stack.pop_back();
      for (auto [v, w] : g.neighbours(u))
        if (d[s][v] < 0) {
          d[s][v] = d[s][u] + w;
          stack.push_back(v);
        }
    }
  }
  return d;
}

LengthGraph random_tree_graph(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(0.5, 2.0);
  LengthGraph g(n);
  for (int i = 1; i < n; ++i) g.add_edge(std::uniform_int_distribution<int>(0, i - 1)(rng), i, w(rng));
  return g;
}

}  // namespace

TEST(ShortestPathMetric, PathGraph) {
  LengthGraph g(3);
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 2, 1.0);
  SampledSpace s = shortest_path_metric(g);
  EXPECT_DOUBLE_EQ(s.dist(0, 2), 2.0);
  EXPECT_EQ(s.boundary_count(), 0u);
}

TEST(ShortestPathMetric, FourCycle) {
  LengthGraph g(4);
  for (int i = 0; i < 4; ++i) g.add_edge(i, (i + 1) % 4, 1.0);
  SampledSpace s = shortest_path_metric(g);
  EXPECT_DOUBLE_EQ(s.dist(0, 2), 2.0);
  EXPECT_DOUBLE_EQ(s.dist(1, 3), 2.0);
}

TEST(ShortestPathMetric, RandomTreeMatchesPathSums) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    LengthGraph g = random_tree_graph(30, seed);
    SampledSpace s = shortest_path_metric(g);
    auto oracle = tree_oracle(g);
    for (PointId a = 0; a < 30; ++a)
      for (PointId b = 0; b < 30; ++b) EXPECT_NEAR(s.dist(a, b), oracle[a][b], 1e-12);
  }
}

TEST(ShortestPathMetric, DisconnectedGraphIsRejected) {
  LengthGraph g(3);
  g.add_edge(0, 1, 1.0);
  try {
    shortest_path_metric(g);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_STREQ(e.what(), "not rectifiably connected");
  }
}

TEST(ShortestPathMetric, IdempotentOnItsOwnCompleteGraph) {
  LengthGraph g = random_tree_graph(25, 9);
  g.add_edge(3, 17, 0.7);
  g.add_edge(5, 22, 1.3);
  SampledSpace s = shortest_path_metric(g);
  LengthGraph complete(s.size());
  for (PointId a = 0; a < s.size(); ++a)
    for (PointId b = a + 1; b < s.size(); ++b) complete.add_edge(a, b, s.dist(a, b));
  SampledSpace again = shortest_path_metric(complete);
  for (PointId a = 0; a < s.size(); ++a)
    for (PointId b = 0; b < s.size(); ++b) EXPECT_DOUBLE_EQ(again.dist(a, b), s.dist(a, b));
}

TEST(ShortestPathMetric, LargeGraphsUseRowsOnDemand) {
  LengthGraph g(2500);
  for (PointId i = 0; i + 1 < 2500; ++i) g.add_edge(i, i + 1, 0.5);
  SampledSpace s = shortest_path_metric(g);
  EXPECT_EQ(s.storage(), SampledSpace::Storage::graph_rows);
  EXPECT_DOUBLE_EQ(s.dist(0, 2499), 2499 * 0.5);
  EXPECT_DOUBLE_EQ(s.dist(1000, 10), 495.0);
}

TEST(ModelSpaces, GluedIntervalHasThreeRays) {
  SampledSpace s = model("glued_interval_Xt", {{"t", 2.0}}, 10.0, 100);
  const PointId o = s.landmark("origin"), tip = s.landmark("tip");
  EXPECT_NEAR(s.dist(o, tip), 2.0, 1e-12);
  ASSERT_EQ(s.ends.size(), 2u);
  EXPECT_NEAR(s.dist(o, s.ends[0]), 10.0, 1e-12);
  EXPECT_NEAR(s.dist(o, s.ends[1]), 10.0, 1e-12);
  // Three branches meet at the origin: paths between distinct branches pass through it.
  EXPECT_NEAR(s.dist(tip, s.ends[0]), 12.0, 1e-12);
  EXPECT_NEAR(s.dist(s.ends[0], s.ends[1]), 20.0, 1e-12);
}

TEST(ModelSpaces, DiskCenterIsAtUnitDistanceFromTheBoundary) {
  SampledSpace s = model("euclidean_disk", json::object(), 0, 20);
  EXPECT_DOUBLE_EQ(s.d_omega(s.landmark("center")), 1.0);
}

TEST(ModelSpaces, GluedDomainBoundaryDistances) {
  SampledSpace s = model("glued_domain", {{"r", 1.0}, {"s", 3.0}}, 0, 100);
  // Oracle: minimum over the boundary samples, which sit at the two ends of (-r, r).
  auto via_samples = [&](PointId x) {
    double m = kInf;
    for (std::size_t j = 0; j < s.boundary_count(); ++j) m = std::min(m, s.boundary_dist(x, j));
    return m;
  };
  const PointId junction = s.landmark("junction"), tip = s.landmark("tip");
  EXPECT_NEAR(s.d_omega(junction), 1.0, 1e-12);
  EXPECT_NEAR(via_samples(junction), 1.0, 1e-12);
  EXPECT_NEAR(s.d_omega(tip), via_samples(tip), 1e-12);
  EXPECT_NEAR(s.d_omega(tip), 4.0, 1e-12);
}

TEST(ModelSpaces, NonpositiveParametersAreRejected) {
  EXPECT_THROW(model("glued_interval_Xt", {{"t", -1.0}}, 10.0, 100), std::invalid_argument);
  EXPECT_THROW(model("glued_domain", {{"r", 0.0}, {"s", 1.0}}, 0, 100), std::invalid_argument);
  EXPECT_THROW(model("line", json::object(), -2.0, 100), std::invalid_argument);
  EXPECT_THROW(model("random_tree", {{"n", 0}}, 0, 0), std::invalid_argument);
  EXPECT_THROW(model("no_such_model", json::object(), 1.0, 10), std::invalid_argument);
}

TEST(ModelSpaces, UnboundedModelsRecordTheirWindow) {
  SampledSpace s = model("line", json::object(), 7.0, 70);
  EXPECT_TRUE(s.unbounded());
  EXPECT_DOUBLE_EQ(s.provenance.at("truncation_window").get<double>(), 7.0);
  EXPECT_FALSE(model("square", json::object(), 0, 8).unbounded());
}

TEST(ModelSpaces, SpecRoundTripsThroughJson) {
  ModelSpec spec{"random_tree", json{{"n", 12}, {"ray_length", 3.0}}, 0.0, 0, 42};
  ModelSpec back = ModelSpec::from_json(spec.to_json());
  EXPECT_EQ(back.kind, spec.kind);
  EXPECT_EQ(back.params, spec.params);
  EXPECT_EQ(back.seed, spec.seed);
}

TEST(CurveLength, Basics) {
  LengthGraph g(3);
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 2, 1.0);
  SampledSpace s = shortest_path_metric(g);
  EXPECT_DOUBLE_EQ(curve_length(s, {0}), 0.0);
  EXPECT_DOUBLE_EQ(curve_length(s, {0, 1, 2}), 2.0);
  EXPECT_THROW(curve_length(s, {0, 7}), std::out_of_range);
}

TEST(CurveLength, RadialSegmentInTheDisk) {
  SampledSpace s = model("euclidean_disk", json::object(), 0, 40);
  const PointId c = s.landmark("center");
  const PointId far = nearest_point(s, {0.9, 0.0});
  Polyline gamma = geodesic(s, c, far);
  const double step = s.provenance.at("step").get<double>();
  EXPECT_NEAR(curve_length(s, gamma), 0.9, step);
}

TEST(UniformityConstant, StraightSegmentOfTheHalfLine) {
  SampledSpace s = model("half_line", {{"open", true}}, 3.0, 30);
  // Points sit at (i + 1) / 10, so ids 9 and 19 are 1 and 2.
  Polyline gamma;
  for (PointId i = 9; i <= 19; ++i) gamma.push_back(i);
  EXPECT_DOUBLE_EQ(uniformity_constant(s, gamma), 1.0);
}

TEST(UniformityConstant, JunctionPathInGluedDomain) {
  SampledSpace s = model("glued_domain", {{"r", 1.0}, {"s", 3.0}}, 0, 40);
  Polyline gamma = geodesic(s, s.landmark("left"), s.landmark("right"));
  EXPECT_NEAR(uniformity_constant(s, gamma), 1.0, 1e-12);
}

TEST(UniformityConstant, DetourInTheDiskEqualsTheLargestRatio) {
  SampledSpace s = model("euclidean_disk", json::object(), 0, 40);
  // Walk a half circle of radius 0.5 from (-0.5, 0) to (0.5, 0).
  Polyline gamma;
  for (int k = 0; k <= 40; ++k) {
    double a = M_PI - M_PI * k / 40;
    PointId p = nearest_point(s, {0.5 * std::cos(a), 0.5 * std::sin(a)});
    if (gamma.empty() || gamma.back() != p) gamma.push_back(p);
  }
  double total = 0.0;
  std::vector<double> prefix{0.0};
  for (std::size_t i = 1; i < gamma.size(); ++i) prefix.push_back(total += s.dist(gamma[i - 1], gamma[i]));
  double expect = total / s.dist(gamma.front(), gamma.back());
  for (std::size_t i = 1; i + 1 < gamma.size(); ++i)
    expect = std::max(expect, std::min(prefix[i], total - prefix[i]) / s.d_omega(gamma[i]));
  const double A = uniformity_constant(s, gamma);
  EXPECT_GT(A, 1.0);
  EXPECT_NEAR(A, expect, 1e-12);
}

TEST(UniformityConstant, CoincidentEndpointsAreDegenerate) {
  LengthGraph g(3);
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 2, 1.0);
  SampledSpace s = shortest_path_metric(g);
  try {
    uniformity_constant(s, {0, 1, 0});
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "degenerate curve");
  }
}

TEST(UniformityConstant, SubpathsOfTreeGeodesicsAreOneUniform) {
  SampledSpace s = model("random_tree", {{"n", 30}}, 0, 0, 5);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<PointId> pick(0, s.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    PointId a = pick(rng), b = pick(rng);
    if (a == b) continue;
    Polyline gamma = geodesic(s, a, b);
    std::size_t i = std::uniform_int_distribution<std::size_t>(0, gamma.size() - 1)(rng);
    std::size_t j = std::uniform_int_distribution<std::size_t>(0, gamma.size() - 1)(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    Polyline sub(gamma.begin() + i, gamma.begin() + j + 1);
    EXPECT_NEAR(uniformity_constant(s, sub), 1.0, 1e-12);
  }
}

TEST(Diameter, SinglePointAndDisk) {
  SampledSpace one = SampledSpace::from_table(Quasimetric(1));
  EXPECT_EQ(space_diameter(one).value, 0.0);

  SampledSpace disk = model("euclidean_disk", json::object(), 0, 20);
  double brute = 0.0;
  for (PointId a = 0; a < disk.size(); ++a)
    for (PointId b = 0; b < disk.size(); ++b) brute = std::max(brute, disk.dist(a, b));
  Diameter d = space_diameter(disk);
  EXPECT_DOUBLE_EQ(d.value, brute);
  // Samples lie strictly inside; the extreme pair is within two grid steps of the rim.
  EXPECT_LT(d.value, 2.0);
  EXPECT_GT(d.value, 2.0 - 2 * 0.1);
  EXPECT_FALSE(d.unbounded);
}

TEST(Diameter, GluedIntervalGrowsWithTheWindow) {
  for (double W : {5.0, 10.0, 20.0}) {
    Diameter d = space_diameter(model("glued_interval_Xt", {{"t", 2.0}}, W, 100));
    EXPECT_NEAR(d.value, 2 * W, 1e-9);
    EXPECT_TRUE(d.unbounded);
  }
}

// ---- properties -----------------------------------------------------------

class ModelProperties : public ::testing::TestWithParam<ModelSpec> {};

TEST_P(ModelProperties, MetricAxiomsOverAllTriples) {
  SampledSpace s = build_model_space(GetParam());
  ASSERT_LE(s.size(), 300u);
  MetricAudit audit = audit_metric(s);
  EXPECT_EQ(audit.violations, 0u) << "worst excess " << audit.worst_excess;
  // Independent pass over the table.
  const std::size_t n = s.size();
  std::size_t bad = 0;
  for (PointId x = 0; x < n; ++x) {
    if (s.dist(x, x) != 0.0) ++bad;
    for (PointId y = 0; y < n; ++y) {
      if (s.dist(x, y) != s.dist(y, x) || s.dist(x, y) < 0) ++bad;
      for (PointId z = 0; z < n; ++z)
        if (s.dist(x, z) > s.dist(x, y) + s.dist(y, z) + s.triangle_tolerance(s.dist(x, z))) ++bad;
    }
  }
  EXPECT_EQ(bad, 0u);
}

TEST_P(ModelProperties, DistanceToBoundaryIsOneLipschitz) {
  SampledSpace s = build_model_space(GetParam());
  if (!s.incomplete()) {
    for (PointId x = 0; x < s.size(); ++x) EXPECT_EQ(s.d_omega(x), kInf);
    return;
  }
  for (PointId x = 0; x < s.size(); ++x) {
    EXPECT_GT(s.d_omega(x), 0.0);
    for (PointId y = 0; y < s.size(); ++y)
      EXPECT_LE(std::abs(s.d_omega(x) - s.d_omega(y)), s.dist(x, y) + 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(
    SmallModels, ModelProperties,
    ::testing::Values(ModelSpec{"line", json::object(), 5.0, 60, 0},
                      ModelSpec{"half_line", json{{"open", true}}, 4.0, 50, 0},
                      ModelSpec{"glued_interval_Xt", json{{"t", 1.5}}, 4.0, 40, 0},
                      ModelSpec{"glued_domain", json{{"r", 1.0}, {"s", 2.0}}, 0, 40, 0},
                      ModelSpec{"euclidean_disk", json::object(), 0, 16, 0},
                      ModelSpec{"euclidean_half_plane", json::object(), 1.0, 12, 0},
                      ModelSpec{"square", json::object(), 0, 12, 0},
                      ModelSpec{"random_tree", json{{"n", 30}, {"ray_length", 4.0}}, 0, 0, 8},
                      ModelSpec{"hyperbolic_grid", json::object(), 2.0, 5, 0}),
    [](const ::testing::TestParamInfo<ModelSpec>& info) { return info.param.kind; });

TEST(Subspace, KeepsDistancesLandmarksAndBoundary) {
  SampledSpace s = model("glued_domain", {{"r", 1.0}, {"s", 2.0}}, 0, 40);
  std::vector<PointId> ids = thinned_ids(s, 20);
  EXPECT_LE(ids.size(), 20u + s.landmarks.size());
  SampledSpace sub = subspace(s, ids);
  ASSERT_EQ(sub.size(), ids.size());
  for (std::size_t a = 0; a < ids.size(); ++a) {
    EXPECT_DOUBLE_EQ(sub.d_omega(a), s.d_omega(ids[a]));
    for (std::size_t b = 0; b < ids.size(); ++b) EXPECT_DOUBLE_EQ(sub.dist(a, b), s.dist(ids[a], ids[b]));
  }
  for (const auto& [name, p] : s.landmarks) EXPECT_EQ(ids[sub.landmark(name)], p) << name;
  EXPECT_EQ(sub.boundary_count(), s.boundary_count());
  EXPECT_THROW(subspace(s, {0, 0}), std::invalid_argument);
}

TEST(DistanceCsv, HeadersAndTwelveSignificantDigits) {
  LengthGraph g(2);
  g.add_edge(0, 1, 1.0 / 3.0);
  std::ostringstream os;
  write_distance_csv(shortest_path_metric(g), os);
  EXPECT_EQ(os.str(), "id,0,1\n0,0,0.333333333333\n1,0.333333333333,0\n");
}

TEST(ParallelBlocks, PartitionIsFixed) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges(8);
  parallel_blocks(100, [&](std::size_t lo, std::size_t hi, std::size_t blk) { ranges[blk] = {lo, hi}; }, 8);
  std::size_t expect = 0;
  for (auto [lo, hi] : ranges) {
    EXPECT_EQ(lo, expect);
    expect = hi;
  }
  EXPECT_EQ(expect, 100u);
}
