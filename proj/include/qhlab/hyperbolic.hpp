#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "qhlab/metric_core.hpp"

namespace qhlab {

struct QuadrupleBudget {
  std::uint64_t exhaustive_limit = 2'000'000;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 0;
};

struct DeltaEstimate {
  double estimate = 0.0;
  std::string method;  // "exhaustive" or "sampled"
  std::uint64_t sample_size = 0;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  // Largest offenders, for audit.
  std::vector<std::pair<double, std::array<PointId, 4>>> extremes;

  json to_json() const;
};

// Four-point condition: half the gap between the two largest pair-sum pairings.
// The value is reported as measured; no conversion to a thin-triangle constant.
DeltaEstimate four_point_delta(const SampledSpace& space, const QuadrupleBudget& budget = {});
double four_point_value(const SampledSpace& space, PointId x, PointId y, PointId z, PointId w);
void write_quadruple_csv(const DeltaEstimate& est, std::ostream& out);

double gromov_product_point(const SampledSpace& space, PointId x, PointId y, PointId z);

/// A boundary point represented by a geodesic ray sampled as a polyline.
struct BoundaryDirection {
  Polyline ray;
  std::size_t id = 0;
};

BoundaryDirection direction_toward(const SampledSpace& space, PointId from, PointId far_end, std::size_t id);
// One direction per recorded far end of the space, rays starting at `from`.
std::vector<BoundaryDirection> directions_from(const SampledSpace& space, PointId from);

struct BasepointFunction {
  enum class Kind { distance_from, busemann };
  Kind kind = Kind::distance_from;
  PointId z = 0;
  Polyline ray;
  std::size_t direction = 0;
  double truncation = 0.0;
  double shift = 0.0;

  static BasepointFunction distance_from(PointId z, double shift = 0.0);
  // Shift chosen so that b(ray start) = 0.
  static BasepointFunction busemann(const SampledSpace& space, const BoundaryDirection& dir, double truncation);

  std::string tag() const;
};

struct BasepointEvaluation {
  double value = 0.0;
  bool stable = true;  // T and T/2 evaluations agree
};

double evaluate_basepoint_function(const BasepointFunction& b, const SampledSpace& space, PointId x);
BasepointEvaluation evaluate_with_stability(const BasepointFunction& b, const SampledSpace& space, PointId x);
std::vector<double> basepoint_values(const BasepointFunction& b, const SampledSpace& space);

double gromov_product_base(const BasepointFunction& b, const SampledSpace& space, PointId x, PointId y);
inline double gromov_product_base(const std::vector<double>& bvals, const SampledSpace& space, PointId x, PointId y) {
  return 0.5 * (bvals[x] + bvals[y] - space.dist(x, y));
}

// Largest min{(x|y)_b,(y|z)_b} - (x|z)_b over all triples.
double gromov_inequality_defect(const SampledSpace& space, const std::vector<double>& bvals);

struct TripodReport {
  PointId x_hat = 0;  // on yz
  PointId y_hat = 0;  // on xz
  PointId z_hat = 0;  // on xy
  double insize = 0.0;
  double thinness = 0.0;
  double snap_error = 0.0;
  bool degenerate = false;

  json to_json() const;
};

TripodReport tripod_analysis(const SampledSpace& space, PointId x, PointId y, PointId z);

using StarBase = std::variant<PointId, BoundaryDirection>;

// Max over points of the distance to the nearest listed ray (or line).
double starlikeness_constant(const SampledSpace& space, const StarBase& base, const std::vector<Polyline>& rays);

struct SpreadReport {
  double spread = 0.0;
  double spread_half_scale = 0.0;
  bool stable = true;
  double pair_product = 0.0;
  double pair_bound = 0.0;  // pair product + 8 delta
};

SpreadReport boundary_spread(const SampledSpace& space, PointId x, const std::vector<BoundaryDirection>& directions,
                             std::pair<std::size_t, std::size_t> pair = {0, 1}, double delta = 0.0);

double visual_quasimetric(const BasepointFunction& b, const SampledSpace& space, double eps,
                          const BoundaryDirection& xi, const BoundaryDirection& zeta);
Quasimetric visual_quasimetric_table(const BasepointFunction& b, const SampledSpace& space, double eps,
                                     const std::vector<BoundaryDirection>& directions);

}  // namespace qhlab
