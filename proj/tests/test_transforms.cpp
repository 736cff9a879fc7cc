#include <cmath>

#include <gtest/gtest.h>

#include "qhlab/transforms.hpp"

using namespace qhlab;

namespace qhlab {
// Readable parameter values in gtest output.
void PrintTo(const ModelSpec& m, std::ostream* os) { *os << m.to_json().dump(); }
}  // namespace qhlab

namespace {

SampledSpace model(const std::string& kind, json params, double window, int res, std::uint64_t seed = 0) {
  return build_model_space(ModelSpec{kind, std::move(params), window, res, seed});
}

// Open half-line with samples at (i + 1) / 10, boundary sample at 0.
SampledSpace open_ray(double window = 3.0, int res = 30) {
  return model("half_line", {{"open", true}}, window, res);
}

std::size_t triangle_violations(const Quasimetric& q, double tol) {
  std::size_t bad = 0;
  for (PointId x = 0; x < q.size(); ++x)
    for (PointId y = 0; y < q.size(); ++y)
      for (PointId z = 0; z < q.size(); ++z)
        if (q(x, z) > q(x, y) + q(y, z) + tol * q(x, z)) ++bad;
  return bad;
}

}  // namespace

TEST(InversionQuasimetric, HalfLineAboutZero) {
  SampledSpace s = open_ray();
  std::vector<PointId> kept;
  Quasimetric q = inversion_quasimetric(s, InversionCenter::boundary(0), &kept);
  ASSERT_EQ(kept.size(), s.size());
  EXPECT_NEAR(q(9, 19), 0.5, 1e-12);  // points 1 and 2
  for (PointId a = 0; a < q.size(); ++a)
    for (PointId b = 0; b < q.size(); ++b) {
      EXPECT_EQ(q(a, b), q(b, a));
      EXPECT_NEAR(q(a, b), std::abs(1 / s.coords()[a].x - 1 / s.coords()[b].x), 1e-9);
    }
  // Pullback of the euclidean metric under t -> 1/t: already a metric.
  EXPECT_EQ(triangle_violations(q, 1e-12), 0u);
}

TEST(InversionQuasimetric, CenterOnASampleIsRejected) {
  SampledSpace s = SampledSpace::from_table(Quasimetric(2));
  EXPECT_THROW(inversion_quasimetric(s, InversionCenter::point(0)), std::invalid_argument);
  Quasimetric q(3);
  q.set(0, 1, 1.0);
  q.set(1, 2, 1.0);
  q.set(0, 2, 2.0);
  SampledSpace t = SampledSpace::from_table(q);
  t.set_boundary_table(1, {0.0, 1.0, 2.0});
  try {
    inversion_quasimetric(t, InversionCenter::boundary(0));
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "point coincides with inversion center");
  }
}

TEST(ChainMetrize, MetricsAreFixed) {
  SampledSpace s = model("random_tree", {{"n", 15}}, 0, 0, 3);
  Quasimetric q(s.size());
  for (PointId a = 0; a < s.size(); ++a)
    for (PointId b = a + 1; b < s.size(); ++b) q.set(a, b, s.dist(a, b));
  SampledSpace m = quasimetric_chain_metrize(q);
  for (PointId a = 0; a < s.size(); ++a)
    for (PointId b = 0; b < s.size(); ++b) EXPECT_DOUBLE_EQ(m.dist(a, b), s.dist(a, b));
}

TEST(ChainMetrize, ThreePointShortcut) {
  Quasimetric q(3);
  q.set(0, 2, 10.0);
  q.set(0, 1, 1.0);
  q.set(1, 2, 1.0);
  SampledSpace m = quasimetric_chain_metrize(q);
  EXPECT_DOUBLE_EQ(m.dist(0, 2), 2.0);
  EXPECT_DOUBLE_EQ(m.dist(0, 1), 1.0);
}

TEST(ChainMetrize, DiskInversionSandwich) {
  SampledSpace disk = model("euclidean_disk", json::object(), 0, 14);
  for (std::size_t j : {std::size_t{0}, disk.boundary_count() / 3}) {
    std::vector<PointId> kept;
    Quasimetric q = inversion_quasimetric(disk, InversionCenter::boundary(j), &kept);
    Quasimetric d = chain_metric(q);
    for (PointId a = 0; a < q.size(); ++a)
      for (PointId b = a + 1; b < q.size(); ++b) {
        EXPECT_LE(d(a, b), q(a, b) * (1 + 1e-12));
        EXPECT_GE(d(a, b), 0.25 * q(a, b));
      }
  }
}

TEST(Invert, HalfLineIsIsometricToItsReciprocal) {
  SampledSpace s = open_ray(10.0, 200);
  SampledSpace inv = invert(s, InversionCenter::boundary(0));
  ASSERT_EQ(inv.size(), s.size());
  for (PointId a = 0; a < s.size(); a += 7)
    for (PointId b = 0; b < s.size(); b += 11)
      EXPECT_NEAR(inv.dist(a, b), std::abs(1 / s.coords()[a].x - 1 / s.coords()[b].x), 1e-9);
  EXPECT_EQ(inv.provenance.at("transform"), "invert");
  EXPECT_GE(inv.provenance.at("sandwich_ratio_achieved").at("min").get<double>(), 0.25);
}

TEST(Invert, DiskAboutABoundaryPointIsUnbounded) {
  double prev = 0.0;
  for (int R : {8, 16, 24}) {
    SampledSpace inv = invert(model("euclidean_disk", json::object(), 0, R), InversionCenter::boundary(0));
    const double diam = space_diameter(inv).value;
    EXPECT_GT(diam, prev) << "resolution " << R;
    prev = diam;
    EXPECT_TRUE(inv.unbounded());
  }
}

TEST(Invert, DoubleInversionWithinFactorSixteen) {
  SampledSpace disk = model("euclidean_disk", json::object(), 0, 10);
  SampledSpace once = invert(disk, InversionCenter::boundary(0));
  // The removed center becomes the point at infinity of the inverted space, at distance
  // 1 / d(x, p) from x; inverting again about it returns to the original scale.
  std::vector<double> to_infinity(once.size());
  Quasimetric t(once.size());
  for (PointId a = 0; a < once.size(); ++a) {
    to_infinity[a] = 1.0 / disk.boundary_dist(a, 0);
    for (PointId b = a + 1; b < once.size(); ++b) t.set(a, b, once.dist(a, b));
  }
  SampledSpace carrier = SampledSpace::from_table(t);
  carrier.set_boundary_table(1, to_infinity);
  SampledSpace twice = invert(carrier, InversionCenter::boundary(0));
  for (PointId a = 0; a < disk.size(); a += 3)
    for (PointId b = a + 1; b < disk.size(); b += 4) {
      const double r = twice.dist(a, b) / disk.dist(a, b);
      EXPECT_GE(r, 1.0 / 16 - 1e-12);
      EXPECT_LE(r, 1.0 + 1e-12);
    }
}

TEST(RayAugment, ZeroLengthArmIsTheIdentity) {
  SampledSpace s = model("random_tree", {{"n", 12}}, 0, 0, 1);
  SampledSpace a = ray_augment(s, 3, Arm{0.0, 32, false});
  ASSERT_EQ(a.size(), s.size());
  for (PointId x = 0; x < s.size(); ++x)
    for (PointId y = 0; y < s.size(); ++y) EXPECT_EQ(a.dist(x, y), s.dist(x, y));
}

TEST(RayAugment, ArmDistancesAddUp) {
  SampledSpace s = model("euclidean_disk", json::object(), 0, 10);
  const PointId z = s.landmark("center");
  SampledSpace a = ray_augment(s, z, Arm{1.0, 32, false});
  const PointId tip = a.landmark("arm_tip");
  for (PointId x = 0; x < s.size(); ++x) EXPECT_DOUBLE_EQ(a.dist(x, tip), s.dist(x, z) + 1.0);
  EXPECT_THROW(ray_augment(s, s.size() + 3, Arm{}), std::invalid_argument);
}

TEST(RayAugment, LineWithAHalfLineIsATripod) {
  const double W = 5.0;
  SampledSpace line = model("line", json::object(), W, 50);
  SampledSpace a = ray_augment(line, line.landmark("origin"), Arm{W, 25, true});
  SampledSpace xt = model("glued_interval_Xt", {{"t", W}}, W, 50);
  // Same vertex order: line samples first, then the arm from the origin outwards.
  ASSERT_EQ(a.size(), xt.size());
  for (PointId x = 0; x < a.size(); ++x)
    for (PointId y = 0; y < a.size(); ++y) EXPECT_NEAR(a.dist(x, y), xt.dist(x, y), 1e-12);
  EXPECT_EQ(a.ends.size(), 3u);
}

TEST(Sphericalize, PreMetrizationQuasimetricOnTheLine) {
  SampledSpace line = model("line", json::object(), 4.0, 40);
  const PointId o = line.landmark("origin");
  SampledSpace aug = ray_augment(line, o, Arm{1.0, 32, false});
  std::vector<PointId> kept;
  Quasimetric q = inversion_quasimetric(aug, InversionCenter::point(aug.landmark("arm_tip")), &kept);
  for (std::size_t a = 0; a < kept.size(); ++a) {
    if (kept[a] >= line.size()) continue;
    for (std::size_t b = 0; b < kept.size(); ++b) {
      if (kept[b] >= line.size()) continue;
      const double x = line.coords()[kept[a]].x, y = line.coords()[kept[b]].x;
      EXPECT_NEAR(q(a, b), std::abs(x - y) / ((1 + std::abs(x)) * (1 + std::abs(y))), 1e-12);
    }
  }
}

TEST(Sphericalize, SinglePoint) {
  SampledSpace one = SampledSpace::from_table(Quasimetric(1));
  EXPECT_EQ(space_diameter(sphericalize(one, 0)).value, 0.0);
}

// ---- properties -----------------------------------------------------------

class BoundedAfterSphericalization : public ::testing::TestWithParam<ModelSpec> {};

TEST_P(BoundedAfterSphericalization, DiameterAtMostOne) {
  SampledSpace s = build_model_space(GetParam());
  for (PointId p : {PointId{0}, s.size() / 2, s.size() - 1}) {
    SampledSpace sph = sphericalize(s, p);
    EXPECT_LE(space_diameter(sph).value, 1.0 + 1e-9);
    EXPECT_EQ(audit_metric(sph).violations, 0u);
  }
}

INSTANTIATE_TEST_SUITE_P(Models, BoundedAfterSphericalization,
                         ::testing::Values(ModelSpec{"line", json::object(), 50.0, 100, 0},
                                           ModelSpec{"half_line", json::object(), 40.0, 80, 0},
                                           ModelSpec{"glued_interval_Xt", json{{"t", 3.0}}, 30.0, 60, 0},
                                           ModelSpec{"euclidean_half_plane", json::object(), 3.0, 14, 0},
                                           ModelSpec{"random_tree", json{{"n", 30}, {"ray_length", 20.0}}, 0, 0, 2},
                                           ModelSpec{"euclidean_disk", json::object(), 0, 12, 0}),
                         [](const ::testing::TestParamInfo<ModelSpec>& info) { return info.param.kind; });

TEST(TransformProperties, InversionSandwichOnTheGluedDomain) {
  SampledSpace om = model("glued_domain", {{"r", 1.0}, {"s", 2.0}}, 0, 30);
  for (std::size_t j : {std::size_t{0}, std::size_t{1}}) {
    Quasimetric q = inversion_quasimetric(om, InversionCenter::boundary(j));
    Quasimetric d = chain_metric(q);
    for (PointId a = 0; a < q.size(); ++a)
      for (PointId b = a + 1; b < q.size(); ++b) {
        EXPECT_LE(d(a, b), q(a, b) * (1 + 1e-12));
        EXPECT_GE(d(a, b), 0.25 * q(a, b));
      }
  }
}

TEST(TransformProperties, InvertedDiskCurvesStayUniform) {
  SampledSpace inv = invert(model("euclidean_disk", json::object(), 0, 12), InversionCenter::boundary(0));
  ASSERT_TRUE(inv.graph());
  double worst = 1.0;
  for (PointId a = 0; a < inv.size(); a += 5)
    for (PointId b = a + 1; b < inv.size(); b += 7) worst = std::max(worst, uniformity_constant(inv, geodesic(inv, a, b)));
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_LT(worst, 50.0);
}
