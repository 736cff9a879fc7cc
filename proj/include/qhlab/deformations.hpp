#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qhlab/hyperbolic.hpp"
#include "qhlab/metric_core.hpp"

namespace qhlab {

struct Density {
  enum class Source { constant, quasihyperbolic, exponential, generic };
  Source source = Source::generic;
  std::vector<double> values;
  double epsilon = 0.0;          // exponential only
  std::vector<double> b_values;  // exponential only

  static Density constant(std::size_t n, double c);
  static Density quasihyperbolic(const SampledSpace& space);
  static Density exponential(std::vector<double> b_values, double eps);
  static Density generic(std::vector<double> values);

  std::string source_name() const;
};

struct DeformedSpace {
  SpacePtr base;
  Density density;
  SpacePtr deformed;
  // d_rho(x) to the deformed boundary; empty when the deformed space is complete.
  std::vector<double> boundary_distance;
  json provenance = json::object();
};

DeformedSpace conformal_deform(SpacePtr space, const Density& rho);
DeformedSpace quasihyperbolize(SpacePtr space);
// Directions realise the boundary of the uniformized space; the base direction of a
// Busemann function is skipped.
DeformedSpace uniformize(SpacePtr hyp, const BasepointFunction& b, double eps,
                         const std::vector<BoundaryDirection>& directions = {});

std::vector<std::pair<PointId, PointId>> sample_pairs(std::size_t n, std::size_t max_pairs, std::uint64_t seed);

struct GHEstimate {
  double M = 1.0;
  std::size_t pairs = 0;
  std::size_t skipped = 0;
  std::pair<PointId, PointId> worst{0, 0};
};
// Ratio of the deformed length of the base geodesic to the deformed distance.
GHEstimate gh_constant(const DeformedSpace& def, const std::vector<std::pair<PointId, PointId>>& pairs);
GHEstimate gh_constant(const DeformedSpace& def, std::size_t max_pairs = 20000, std::uint64_t seed = 0);

struct GHScanPoint {
  double eps = 0.0;
  GHEstimate estimate;
};
struct GHScan {
  std::vector<GHScanPoint> points;
  double largest_admissible_eps = 0.0;  // 0 when no grid value reaches the threshold
};
GHScan gh_scan(SpacePtr hyp, const BasepointFunction& b, const std::vector<double>& eps_grid, double threshold = 20.0,
               std::size_t max_pairs = 5000, std::uint64_t seed = 0);

struct RatioSpread {
  double min = kInf;
  double max = 0.0;
  double spread() const { return min > 0.0 && std::isfinite(min) ? max / min : kInf; }
  std::pair<PointId, PointId> argmin{0, 0}, argmax{0, 0};
  void add(double r, PointId a, PointId b);
};

struct DistanceProfile {
  RatioSpread pair_ratio;      // d_eps(x,y) / (e^{-eps (x|y)_b} min{1, d(x,y)})
  RatioSpread boundary_ratio;  // d_eps(x) / rho(x)
  std::size_t pairs = 0;
  json to_json() const;
};
DistanceProfile distance_profile_check(const DeformedSpace& def, std::size_t max_pairs = 200000, std::uint64_t seed = 0);

struct HeightProfile {
  std::size_t lower_bound_violations = 0;
  double worst_lower_ratio = kInf;  // min of (d_s/d_t) e^{|s-t|}, >= 1 means no violation
  double decay_exponent = 0.0;      // fitted u
  double decay_constant = 1.0;      // fitted C
  PointId apex = 0;
  double apex_height = 0.0;
  double endpoint_distance = 0.0;
  double b_apex = 0.0;
  double b_min = 0.0;
  json to_json() const;
};
HeightProfile geodesic_height_profile(const DeformedSpace& hyp, const Polyline& gamma,
                                      const std::vector<double>& b_values = {});

struct CheckTally {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // largest relative excess
  json to_json() const;
};

struct SandwichReport {
  CheckTally lower;      // log(1 + d/min) <= k
  CheckTally upper;      // k <= 4A^2 log(1 + d/min)
  CheckTally log_ratio;  // |log(d(x)/d(y))| <= k
  CheckTally boundary_lipschitz;  // |d(x) - d(y)| <= d(x,y)
  double A = 1.0;
};
SandwichReport quasihyperbolic_sandwich(const DeformedSpace& qh, double A, double rel_tol = 1e-6);

// Harnack integration bounds for rho = e^{-eps b}.
CheckTally harnack_check(const DeformedSpace& uni, double rel_tol = 1e-6);

// Largest uniformity constant of quasihyperbolic geodesics, measured in the base metric.
double measured_uniformity(const DeformedSpace& qh, std::size_t max_pairs = 400, std::uint64_t seed = 0);

}  // namespace qhlab
