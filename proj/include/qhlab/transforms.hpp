#pragma once

#include <vector>

#include "qhlab/metric_core.hpp"

namespace qhlab {

struct InversionCenter {
  enum class Kind { boundary_sample, point };
  Kind kind = Kind::boundary_sample;
  std::size_t index = 0;

  static InversionCenter boundary(std::size_t j) { return {Kind::boundary_sample, j}; }
  static InversionCenter point(PointId p) { return {Kind::point, p}; }
};

// Distance between two boundary samples: euclidean when coordinates exist, otherwise
// the infimum over interior points of d(x, a) + d(x, b).
double boundary_pair_dist(const SampledSpace& space, std::size_t a, std::size_t b);

// i^p(x,y) = d(x,y) / (d(x,p) d(y,p)) over the retained points (all points except p).
Quasimetric inversion_quasimetric(const SampledSpace& space, InversionCenter p,
                                  std::vector<PointId>* retained = nullptr);

// Least chain sum over the complete q-weighted graph; an honest metric.
Quasimetric chain_metric(const Quasimetric& q);
SampledSpace quasimetric_chain_metrize(const Quasimetric& q);

SampledSpace invert(const SampledSpace& space, InversionCenter p);

struct Arm {
  double length = 1.0;
  std::size_t samples = 32;
  bool half_line = false;  // window of [0, inf) rather than [0, 1]
};
SampledSpace ray_augment(const SampledSpace& space, PointId z, const Arm& arm);

SampledSpace sphericalize(const SampledSpace& space, PointId p);

}  // namespace qhlab
