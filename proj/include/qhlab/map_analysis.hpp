#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qhlab/metric_core.hpp"

namespace qhlab {

struct PointMap {
  SpacePtr source;
  SpacePtr target;
  std::vector<PointId> pairing;  // pairing[x] = f(x)

  static PointMap identity(SpacePtr source, SpacePtr target);
  PointMap inverse() const;
  void validate() const;
};

// Image of a space with coordinates under a planar map; the image is measured with the
// euclidean metric, so it must be convex. The carrier graph keeps the source edges.
SampledSpace push_forward(const SampledSpace& source, const std::function<Coord(const Coord&)>& f,
                          std::function<double(const Coord&)> target_d_omega);

double cross_ratio(const SampledSpace& space, PointId x, PointId y, PointId z, PointId w);
double cross_difference(const SampledSpace& space, PointId x, PointId y, PointId z, PointId w);

// Largest |(x|y)_b + (z|w)_b - (x|z)_b - (y|w)_b - <x,y,z,w>| over all ordered quadruples.
double cross_difference_identity_error(const SampledSpace& space, const std::vector<double>& bvals);

struct PartialLipschitz {
  double lambda = 0.0;
  double L = 0.0;
  std::size_t centers = 0;
  std::size_t qualified = 0;
  bool warning = false;  // some centers had too few samples in their ball
  // Two-sided variant.
  double L_inverse = 0.0;
  std::size_t inclusion_checked = 0;
  std::size_t inclusion_failures = 0;
  json to_json() const;
};

PartialLipschitz partial_lipschitz_data(const PointMap& map, double lambda, bool two_sided = false);
std::vector<PartialLipschitz> partial_lipschitz_scan(const PointMap& map, const std::vector<double>& lambdas = {0.4, 0.2, 0.1, 0.05},
                                                     bool two_sided = false);

struct ControlFit {
  double C = 1.0;
  double exponent_lo = 1.0;  // t < 1
  double exponent_hi = 1.0;  // t >= 1
  double residual = 0.0;
  std::vector<std::pair<double, double>> cloud;
  std::string method;
  std::size_t n_samples = 0;
  std::size_t n_filtered = 0;
  std::uint64_t seed = 0;
  double separation_witness = 0.0;  // quasisymmetry only: max t' over t <= 1

  double eta(double t) const;
  json to_json() const;
};

struct FitOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  // Fit one control function valid for the map and its inverse.
  bool symmetric = false;
  std::optional<std::pair<double, double>> fixed_exponents;  // (lo, hi): only C is fitted
  // Exponents are fitted on log t inside this range; C still covers the whole cloud.
  // Symmetric fits default to the range of the forward cloud.
  std::optional<std::pair<double, double>> log_t_range;
};

ControlFit fit_envelope(std::vector<std::pair<double, double>> cloud, const FitOptions& opts = {});
ControlFit quasimobius_fit(const PointMap& map, const FitOptions& opts = {});
ControlFit quasisymmetry_fit(const PointMap& map, const FitOptions& opts = {});

// Both directions of 1/eta(1/t) <= t' <= eta(t) over a cloud; returns the number of violations.
std::size_t two_sided_envelope_violations(const ControlFit& fit, const std::vector<std::pair<double, double>>& cloud,
                                          double rel_tol = 1e-9);

double qh_lipschitz_constant(const PointMap& map, bool bilipschitz = false, std::size_t max_pairs = 200000,
                             std::uint64_t seed = 0);

struct PartialData {
  double L = 1.0;
  double lambda = 0.5;
};
PartialData compose_partial_data(PartialData first, PartialData second, bool bilipschitz = false);

// Per-center scale factors c_x with d'(fy,fz) ~ c_x d(y,z) on small balls.
struct QuasisimilarityFactors {
  std::vector<double> c;
  double worst_local_spread = 1.0;
};
QuasisimilarityFactors quasisimilarity_factors(const PointMap& map, double lambda);

// Empirical C0, c0 with <fx,fy,fz,fw>' >= <x,y,z,w>/C0 - c0. Not constants from the theory.
struct CrossDifferenceFit {
  double C0 = 1.0;
  double c0 = 0.0;
  std::size_t samples = 0;
};
CrossDifferenceFit cross_difference_fit(const PointMap& map, std::size_t samples = 20000, std::uint64_t seed = 0);

}  // namespace qhlab
