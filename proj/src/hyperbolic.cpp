#include "qhlab/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

namespace qhlab {
namespace {

using Extreme = std::pair<double, std::array<PointId, 4>>;
constexpr std::size_t kKeepExtremes = 16;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t choose4(std::uint64_t n) {
  if (n < 4) return 0;
  long double c = static_cast<long double>(n) * (n - 1) * (n - 2) * (n - 3) / 24.0L;
  return c > 1.8e19L ? UINT64_MAX : static_cast<std::uint64_t>(c);
}

void keep_extreme(std::vector<Extreme>& top, double v, std::array<PointId, 4> q) {
  if (top.size() < kKeepExtremes) {
    top.emplace_back(v, q);
    std::push_heap(top.begin(), top.end(), [](const Extreme& a, const Extreme& b) { return a.first > b.first; });
    return;
  }
  if (v <= top.front().first) return;
  auto cmp = [](const Extreme& a, const Extreme& b) { return a.first > b.first; };
  std::pop_heap(top.begin(), top.end(), cmp);
  top.back() = {v, q};
  std::push_heap(top.begin(), top.end(), cmp);
}

std::vector<double> prefix_lengths(const SampledSpace& space, const Polyline& p) {
  std::vector<double> pre(p.size(), 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) pre[i] = pre[i - 1] + space.dist(p[i - 1], p[i]);
  return pre;
}

std::size_t snap(const std::vector<double>& prefix, double target) {
  auto it = std::lower_bound(prefix.begin(), prefix.end(), target);
  if (it == prefix.end()) return prefix.size() - 1;
  std::size_t k = static_cast<std::size_t>(it - prefix.begin());
  if (k > 0 && target - prefix[k - 1] <= prefix[k] - target) return k - 1;
  return k;
}

}  // namespace

double four_point_value(const SampledSpace& space, PointId x, PointId y, PointId z, PointId w) {
  double s[3] = {space.dist(x, y) + space.dist(z, w), space.dist(x, z) + space.dist(y, w),
                 space.dist(x, w) + space.dist(y, z)};
  std::sort(s, s + 3);
  return 0.5 * (s[2] - s[1]);
}

DeltaEstimate four_point_delta(const SampledSpace& space, const QuadrupleBudget& budget) {
  const std::size_t n = space.size();
  if (n < 4) throw std::invalid_argument("four-point condition needs at least 4 points");
  DeltaEstimate est;
  est.seed = budget.seed;
  const std::uint64_t total = choose4(n);
  constexpr std::size_t kBlocks = 64;
  std::vector<std::vector<Extreme>> tops(kBlocks);
  std::vector<double> best(kBlocks, 0.0);

  if (total <= budget.exhaustive_limit) {
    est.method = "exhaustive";
    est.sample_size = total;
    parallel_blocks(n, [&](std::size_t b, std::size_t e, std::size_t blk) {
      for (std::size_t i = b; i < e; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          for (std::size_t k = j + 1; k < n; ++k)
            for (std::size_t l = k + 1; l < n; ++l) {
              double v = four_point_value(space, i, j, k, l);
              if (v > best[blk]) best[blk] = v;
              if (v > 0.0) keep_extreme(tops[blk], v, {i, j, k, l});
            }
    }, kBlocks);
  } else {
    est.method = "sampled";
    est.sample_size = budget.samples;
    parallel_blocks(budget.samples, [&](std::size_t b, std::size_t e, std::size_t blk) {
      std::mt19937_64 rng(splitmix64(budget.seed ^ (0x51ed2701ULL * (blk + 1))));
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t s = b; s < e; ++s) {
        std::array<PointId, 4> q;
        for (int a = 0; a < 4; ++a) {
          bool fresh;
          do {
            q[a] = pick(rng);
            fresh = true;
            for (int c = 0; c < a; ++c) fresh = fresh && q[c] != q[a];
          } while (!fresh);
        }
        double v = four_point_value(space, q[0], q[1], q[2], q[3]);
        if (v > best[blk]) best[blk] = v;
        if (v > 0.0) keep_extreme(tops[blk], v, q);
      }
    }, kBlocks);
  }
  double scale = 0.0;
  for (std::size_t b = 0; b < kBlocks; ++b) {
    est.estimate = std::max(est.estimate, best[b]);
    est.extremes.insert(est.extremes.end(), tops[b].begin(), tops[b].end());
  }
  std::sort(est.extremes.begin(), est.extremes.end(),
            [](const Extreme& a, const Extreme& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  if (est.extremes.size() > kKeepExtremes) est.extremes.resize(kKeepExtremes);
  if (!est.extremes.empty()) {
    auto q = est.extremes.front().second;
    scale = space.dist(q[0], q[1]) + space.dist(q[2], q[3]);
  }
  est.tolerance = space.triangle_tolerance(scale);
  return est;
}

json DeltaEstimate::to_json() const {
  return json{{"estimate", estimate}, {"method", method}, {"sample_size", sample_size},
              {"seed", seed}, {"tolerance", tolerance}, {"notion", "four-point"}};
}

void write_quadruple_csv(const DeltaEstimate& est, std::ostream& out) {
  char buf[64];
  out << "value,x,y,z,w\n";
  for (const auto& [v, q] : est.extremes) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out << buf << ',' << q[0] << ',' << q[1] << ',' << q[2] << ',' << q[3] << '\n';
  }
}

double gromov_product_point(const SampledSpace& space, PointId x, PointId y, PointId z) {
  return 0.5 * (space.dist(x, z) + space.dist(y, z) - space.dist(x, y));
}

// ---- boundary directions and basepoint functions ------------------------

BoundaryDirection direction_toward(const SampledSpace& space, PointId from, PointId far_end, std::size_t id) {
  BoundaryDirection d;
  d.ray = geodesic(space, from, far_end);
  d.id = id;
  return d;
}

std::vector<BoundaryDirection> directions_from(const SampledSpace& space, PointId from) {
  std::vector<BoundaryDirection> out;
  for (std::size_t i = 0; i < space.ends.size(); ++i) {
    if (space.ends[i] == from) continue;
    out.push_back(direction_toward(space, from, space.ends[i], i));
  }
  return out;
}

BasepointFunction BasepointFunction::distance_from(PointId z, double shift) {
  BasepointFunction b;
  b.kind = Kind::distance_from;
  b.z = z;
  b.shift = shift;
  return b;
}

BasepointFunction BasepointFunction::busemann(const SampledSpace& space, const BoundaryDirection& dir, double truncation) {
  if (dir.ray.size() < 2) throw std::invalid_argument("truncation insufficient");
  auto pre = prefix_lengths(space, dir.ray);
  if (truncation > pre.back() * (1 + 1e-12) || !(truncation > 0.0)) throw std::invalid_argument("truncation insufficient");
  BasepointFunction b;
  b.kind = Kind::busemann;
  b.ray = dir.ray;
  b.direction = dir.id;
  b.truncation = truncation;
  b.shift = 0.0;
  b.shift = -evaluate_basepoint_function(b, space, dir.ray.front());
  return b;
}

std::string BasepointFunction::tag() const {
  if (kind == Kind::distance_from) return "point:" + std::to_string(z);
  return "direction:" + std::to_string(direction);
}

namespace {

std::pair<PointId, double> ray_point(const SampledSpace& space, const Polyline& ray, double t) {
  auto pre = prefix_lengths(space, ray);
  if (t > pre.back() * (1 + 1e-12)) throw std::invalid_argument("truncation insufficient");
  std::size_t k = snap(pre, t);
  return {ray[k], pre[k]};
}

}  // namespace

BasepointEvaluation evaluate_with_stability(const BasepointFunction& b, const SampledSpace& space, PointId x) {
  if (x >= space.size()) throw std::out_of_range("unknown point id");
  if (b.kind == BasepointFunction::Kind::distance_from) return {space.dist(b.z, x) + b.shift, true};
  auto [p, T] = ray_point(space, b.ray, b.truncation);
  auto [q, T2] = ray_point(space, b.ray, b.truncation / 2);
  double full = space.dist(p, x) - T + b.shift;
  double half = space.dist(q, x) - T2 + b.shift;
  return {full, std::abs(full - half) <= space.triangle_tolerance(T)};
}

double evaluate_basepoint_function(const BasepointFunction& b, const SampledSpace& space, PointId x) {
  return evaluate_with_stability(b, space, x).value;
}

std::vector<double> basepoint_values(const BasepointFunction& b, const SampledSpace& space) {
  std::vector<double> v;
  if (b.kind == BasepointFunction::Kind::distance_from) {
    v = space.row(b.z);
    for (double& e : v) e += b.shift;
  } else {
    auto [p, T] = ray_point(space, b.ray, b.truncation);
    v = space.row(p);
    for (double& e : v) e += b.shift - T;
  }
  return v;
}

double gromov_product_base(const BasepointFunction& b, const SampledSpace& space, PointId x, PointId y) {
  return 0.5 * (evaluate_basepoint_function(b, space, x) + evaluate_basepoint_function(b, space, y) - space.dist(x, y));
}

double gromov_inequality_defect(const SampledSpace& space, const std::vector<double>& bvals) {
  const std::size_t n = space.size();
  std::vector<double> partial(64, -kInf);
  parallel_blocks(n, [&](std::size_t b, std::size_t e, std::size_t blk) {
    double worst = -kInf;
    for (std::size_t x = b; x < e; ++x)
      for (std::size_t y = 0; y < n; ++y) {
        double xy = gromov_product_base(bvals, space, x, y);
        for (std::size_t z = 0; z < n; ++z) {
          double d = std::min(xy, gromov_product_base(bvals, space, y, z)) - gromov_product_base(bvals, space, x, z);
          worst = std::max(worst, d);
        }
      }
    partial[blk] = worst;
  }, 64);
  return *std::max_element(partial.begin(), partial.end());
}

// ---- tripods ------------------------------------------------------------

TripodReport tripod_analysis(const SampledSpace& space, PointId x, PointId y, PointId z) {
  if (x == y || y == z || x == z) throw std::invalid_argument("tripod needs three distinct points");
  const Polyline xy = geodesic(space, x, y), xz = geodesic(space, x, z), yz = geodesic(space, y, z);
  const auto pxy = prefix_lengths(space, xy), pxz = prefix_lengths(space, xz), pyz = prefix_lengths(space, yz);
  const double gx = gromov_product_point(space, y, z, x);
  const double gy = gromov_product_point(space, x, z, y);
  const double gz = gromov_product_point(space, x, y, z);

  TripodReport r;
  const double scale = std::max({pxy.back(), pxz.back(), pyz.back()});
  r.degenerate = std::min({gx, gy, gz}) <= space.triangle_tolerance(scale);
  std::size_t kz = snap(pxy, gx), ky = snap(pxz, gx), kx = snap(pyz, gy);
  r.z_hat = xy[kz];
  r.y_hat = xz[ky];
  r.x_hat = yz[kx];
  r.snap_error = std::max({std::abs(pxy[kz] - gx), std::abs(pxz[ky] - gx), std::abs(pyz[kx] - gy)});
  r.insize = std::max({space.dist(r.x_hat, r.y_hat), space.dist(r.y_hat, r.z_hat), space.dist(r.x_hat, r.z_hat)});

  // Points at equal distance from a common corner, up to the equiradial point.
  auto side_pair = [&](const Polyline& a, const std::vector<double>& pa, const Polyline& b,
                       const std::vector<double>& pb, double reach) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size() && pa[i] <= reach + 1e-12; ++i) {
      std::size_t j = snap(pb, pa[i]);
      worst = std::max(worst, space.dist(a[i], b[j]) - std::abs(pa[i] - pb[j]));
    }
    return worst;
  };
  auto reversed = [](Polyline p) {
    std::reverse(p.begin(), p.end());
    return p;
  };
  const Polyline yx = reversed(xy), zx = reversed(xz), zy = reversed(yz);
  const auto pyx = prefix_lengths(space, yx), pzx = prefix_lengths(space, zx), pzy = prefix_lengths(space, zy);
  r.thinness = std::max({side_pair(xy, pxy, xz, pxz, gx), side_pair(xz, pxz, xy, pxy, gx),
                         side_pair(yx, pyx, yz, pyz, gy), side_pair(yz, pyz, yx, pyx, gy),
                         side_pair(zx, pzx, zy, pzy, gz), side_pair(zy, pzy, zx, pzx, gz)});
  return r;
}

json TripodReport::to_json() const {
  return json{{"x_hat", x_hat}, {"y_hat", y_hat}, {"z_hat", z_hat}, {"insize", insize},
              {"thinness", thinness}, {"snap_error", snap_error}, {"degenerate", degenerate}};
}

// ---- rough starlikeness -------------------------------------------------

double starlikeness_constant(const SampledSpace& space, const StarBase& base, const std::vector<Polyline>& rays) {
  if (rays.empty()) throw std::invalid_argument("empty ray set");
  if (const PointId* p = std::get_if<PointId>(&base)) {
    for (const auto& r : rays)
      if (r.empty() || r.front() != *p) throw std::invalid_argument("ray does not emanate from the basepoint");
  }
  std::vector<PointId> verts;
  for (const auto& r : rays) verts.insert(verts.end(), r.begin(), r.end());
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  std::vector<double> near(space.size(), kInf);
  for (PointId v : verts) {
    auto row = space.row(v);
    for (std::size_t x = 0; x < space.size(); ++x) near[x] = std::min(near[x], row[x]);
  }
  return *std::max_element(near.begin(), near.end());
}

SpreadReport boundary_spread(const SampledSpace& space, PointId x, const std::vector<BoundaryDirection>& directions,
                             std::pair<std::size_t, std::size_t> pair, double delta) {
  const std::size_t m = directions.size();
  if (m < 2) throw std::invalid_argument("boundary spread needs at least two directions");
  if (pair.first >= m || pair.second >= m || pair.first == pair.second)
    throw std::invalid_argument("invalid direction pair");
  std::vector<PointId> far(m), half(m);
  double reach = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& ray = directions[i].ray;
    auto pre = prefix_lengths(space, ray);
    far[i] = ray.back();
    half[i] = ray[snap(pre, pre.back() / 2)];
    reach = std::max(reach, pre.back());
  }
  auto spread_with = [&](const std::vector<PointId>& pts) {
    double s = -kInf;
    for (std::size_t i = 0; i < m; ++i) {
      double mn = kInf;
      for (std::size_t j = 0; j < m; ++j)
        if (j != i && directions[j].id != directions[i].id) mn = std::min(mn, gromov_product_point(space, pts[i], pts[j], x));
      s = std::max(s, mn);
    }
    return s;
  };
  SpreadReport r;
  r.spread = spread_with(far);
  r.spread_half_scale = spread_with(half);
  r.stable = std::abs(r.spread - r.spread_half_scale) <= space.triangle_tolerance(reach);
  r.pair_product = gromov_product_point(space, far[pair.first], far[pair.second], x);
  r.pair_bound = r.pair_product + 8 * delta;
  return r;
}

double visual_quasimetric(const BasepointFunction& b, const SampledSpace& space, double eps,
                          const BoundaryDirection& xi, const BoundaryDirection& zeta) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (b.kind == BasepointFunction::Kind::busemann && (xi.id == b.direction || zeta.id == b.direction))
    throw std::invalid_argument("undefined at basepoint");
  if (xi.id == zeta.id) return 0.0;
  return std::exp(-eps * gromov_product_base(b, space, xi.ray.back(), zeta.ray.back()));
}

Quasimetric visual_quasimetric_table(const BasepointFunction& b, const SampledSpace& space, double eps,
                                     const std::vector<BoundaryDirection>& directions) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  auto bv = basepoint_values(b, space);
  Quasimetric q(directions.size());
  for (std::size_t i = 0; i < directions.size(); ++i)
    for (std::size_t j = i + 1; j < directions.size(); ++j) {
      if (b.kind == BasepointFunction::Kind::busemann &&
          (directions[i].id == b.direction || directions[j].id == b.direction))
        throw std::invalid_argument("undefined at basepoint");
      double v = directions[i].id == directions[j].id
                     ? 0.0
                     : std::exp(-eps * gromov_product_base(bv, space, directions[i].ray.back(), directions[j].ray.back()));
      q.set(i, j, v);
    }
  return q;
}

}  // namespace qhlab
