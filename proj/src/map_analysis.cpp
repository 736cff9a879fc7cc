#include "qhlab/map_analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "qhlab/deformations.hpp"

namespace qhlab {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kDegenerate = 1e-12;

// Seeded k-tuples of distinct ids, generated block by block so the result does not depend
// on the number of worker threads.
template <std::size_t K, class Fn>
void sample_tuples(std::size_t n, std::size_t count, std::uint64_t seed, Fn&& per_block_sink) {
  constexpr std::size_t kBlocks = 64;
  parallel_blocks(count, [&](std::size_t lo, std::size_t hi, std::size_t blk) {
    std::mt19937_64 rng(mix(seed ^ (0x2545f4914f6cdd1dULL * (blk + 1))));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t s = lo; s < hi; ++s) {
      std::array<PointId, K> q;
      for (std::size_t a = 0; a < K; ++a) {
        bool fresh;
        do {
          q[a] = pick(rng);
          fresh = true;
          for (std::size_t c = 0; c < a; ++c) fresh = fresh && q[c] != q[a];
        } while (!fresh);
      }
      per_block_sink(blk, q);
    }
  }, kBlocks);
}

struct SideFit {
  bool ok = false;
  double slope = 1.0;
  double sq_residual = 0.0;
  std::size_t vertices = 0;
};

constexpr double kBinWidth = 0.25;
// The shoulder around t = 1 is where eta departs from a pure power.
constexpr double kShoulder = 1.0;
// Bins with fewer samples than this fraction of the median bin are skipped.
constexpr double kSparseBin = 0.02;

// Least-squares slope through the per-bin maxima of log t' over log t bins. Each
// envelope vertex sits at the sample attaining its bin maximum, so a cloud lying on
// an exact power law is fitted exactly.
SideFit fit_side(const std::vector<std::pair<double, double>>& pts) {
  struct Bin {
    double lt = 0.0;
    double ltp = 0.0;
    std::size_t count = 0;
  };
  SideFit f;
  std::map<long, Bin> best;
  for (const auto& [lt, ltp] : pts) {
    Bin& b = best[static_cast<long>(std::floor(lt / kBinWidth))];
    if (b.count == 0 || ltp > b.ltp) {
      b.lt = lt;
      b.ltp = ltp;
    }
    ++b.count;
  }
  // A bin holding a stray sample or two, next to bins with hundreds, is an outlier of
  // the sampling rather than part of the envelope.
  std::vector<std::size_t> counts;
  for (const auto& [k, b] : best) counts.push_back(b.count);
  std::nth_element(counts.begin(), counts.begin() + counts.size() / 2, counts.end());
  const double min_count = kSparseBin * (counts.empty() ? 0.0 : static_cast<double>(counts[counts.size() / 2]));
  std::vector<std::pair<double, double>> env;
  for (const auto& [k, b] : best) {
    double centre = (k + 0.5) * kBinWidth;
    if (std::abs(centre) >= kShoulder && static_cast<double>(b.count) >= min_count) env.emplace_back(b.lt, b.ltp);
  }
  if (env.size() < 3) {
    env.clear();
    for (const auto& [k, b] : best) env.emplace_back(b.lt, b.ltp);
  }
  f.vertices = env.size();
  if (env.size() < 2) return f;
  double mx = 0, my = 0;
  for (const auto& p : env) {
    mx += p.first;
    my += p.second;
  }
  mx /= env.size();
  my /= env.size();
  double sxy = 0, sxx = 0;
  for (const auto& p : env) {
    sxy += (p.first - mx) * (p.second - my);
    sxx += (p.first - mx) * (p.first - mx);
  }
  if (!(sxx > 0)) return f;
  f.slope = sxy / sxx;
  for (const auto& p : env) {
    double r = p.second - (my + f.slope * (p.first - mx));
    f.sq_residual += r * r;
  }
  f.ok = true;
  return f;
}

}  // namespace

// ---- maps ---------------------------------------------------------------------

PointMap PointMap::identity(SpacePtr source, SpacePtr target) {
  PointMap m;
  m.source = std::move(source);
  m.target = std::move(target);
  m.pairing.resize(m.source->size());
  for (PointId i = 0; i < m.pairing.size(); ++i) m.pairing[i] = i;
  m.validate();
  return m;
}

void PointMap::validate() const {
  if (!source || !target) throw std::invalid_argument("map needs both spaces");
  if (source->size() != target->size() || pairing.size() != source->size())
    throw std::invalid_argument("map is not a bijection between equal-size samples");
  std::vector<char> hit(target->size(), 0);
  for (PointId p : pairing) {
    if (p >= target->size() || hit[p]) throw std::invalid_argument("map is not a bijection");
    hit[p] = 1;
  }
}

PointMap PointMap::inverse() const {
  PointMap m;
  m.source = target;
  m.target = source;
  m.pairing.resize(pairing.size());
  for (PointId x = 0; x < pairing.size(); ++x) m.pairing[pairing[x]] = x;
  return m;
}

SampledSpace push_forward(const SampledSpace& source, const std::function<Coord(const Coord&)>& f,
                          std::function<double(const Coord&)> target_d_omega) {
  if (!source.has_coords()) throw std::invalid_argument("push-forward needs coordinates");
  std::vector<Coord> img;
  img.reserve(source.size());
  for (const auto& c : source.coords()) img.push_back(f(c));
  SampledSpace s = SampledSpace::from_coords(img);
  if (source.graph()) {
    auto g = std::make_shared<LengthGraph>(source.size());
    for (const Edge& e : source.graph()->edges()) g->add_edge(e.u, e.v, euclid(img[e.u], img[e.v]));
    s.set_graph(g);
  }
  std::vector<Coord> bc;
  for (const auto& c : source.boundary_coords()) bc.push_back(f(c));
  if (!bc.empty()) s.set_boundary_coords(std::move(bc));
  if (target_d_omega) s.set_d_omega_oracle(std::move(target_d_omega));
  s.landmarks = source.landmarks;
  s.ends = source.ends;
  s.provenance = source.provenance;
  s.provenance["transform"] = "push_forward";
  // Source spacing times the largest edge stretch; the longest image edge when the
  // source records no spacing.
  const double src_step = source.provenance.value("step", 0.0);
  double step = 0.0, stretch = 0.0;
  if (s.graph())
    for (const Edge& e : s.graph()->edges()) {
      step = std::max(step, e.w);
      const double w0 = edge_length(*source.graph(), e.u, e.v);
      if (w0 > 0.0) stretch = std::max(stretch, e.w / w0);
    }
  s.provenance["step"] = src_step > 0.0 && stretch > 0.0 ? src_step * stretch : step;
  return s;
}

double cross_ratio(const SampledSpace& space, PointId x, PointId y, PointId z, PointId w) {
  if (x == y || x == z || x == w || y == z || y == w || z == w) throw std::invalid_argument("cross-ratio needs four distinct points");
  return space.dist(x, z) * space.dist(y, w) / (space.dist(x, y) * space.dist(z, w));
}

double cross_difference(const SampledSpace& space, PointId x, PointId y, PointId z, PointId w) {
  return 0.5 * (space.dist(x, z) + space.dist(y, w) - space.dist(x, y) - space.dist(z, w));
}

double cross_difference_identity_error(const SampledSpace& space, const std::vector<double>& bvals) {
  const std::size_t n = space.size();
  if (bvals.size() != n) throw std::invalid_argument("basepoint values do not match the space");
  Quasimetric d(n), g(n);
  for (PointId x = 0; x < n; ++x)
    for (PointId y = 0; y < n; ++y) {
      d.raw()[x * n + y] = space.dist(x, y);
      g.raw()[x * n + y] = 0.5 * (bvals[x] + bvals[y] - d(x, y));
    }
  std::vector<double> worst(64, 0.0);
  parallel_blocks(n, [&](std::size_t lo, std::size_t hi, std::size_t blk) {
    double w = 0.0;
    for (PointId x = lo; x < hi; ++x)
      for (PointId y = 0; y < n; ++y)
        for (PointId z = 0; z < n; ++z)
          for (PointId v = 0; v < n; ++v) {
            double lhs = g(x, y) + g(z, v) - g(x, z) - g(y, v);
            double rhs = 0.5 * (d(x, z) + d(y, v) - d(x, y) - d(z, v));
            w = std::max(w, std::abs(lhs - rhs));
          }
    worst[blk] = w;
  });
  return *std::max_element(worst.begin(), worst.end());
}

// ---- boundary-relative Lipschitz data ----------------------------------------------

json PartialLipschitz::to_json() const {
  return json{{"lambda", lambda}, {"L", L}, {"centers", centers}, {"qualified", qualified}, {"warning", warning},
              {"L_inverse", L_inverse}, {"inclusion_checked", inclusion_checked},
              {"inclusion_failures", inclusion_failures}};
}

namespace {

std::vector<PointId> ball(const std::vector<double>& row, double radius) {
  std::vector<PointId> out;
  for (PointId y = 0; y < row.size(); ++y)
    if (row[y] < radius) out.push_back(y);
  return out;
}

// Evenly spaced subsample by distance from the center, always keeping the extremes.
std::vector<PointId> thin(std::vector<PointId> members, const std::vector<double>& row, std::size_t cap) {
  if (members.size() <= cap) return members;
  std::sort(members.begin(), members.end(), [&](PointId a, PointId b) { return row[a] < row[b] || (row[a] == row[b] && a < b); });
  std::vector<PointId> out;
  for (std::size_t i = 0; i < cap; ++i) out.push_back(members[i * (members.size() - 1) / (cap - 1)]);
  return out;
}

constexpr std::size_t kBallCap = 64;

}  // namespace

PartialLipschitz partial_lipschitz_data(const PointMap& map, double lambda, bool two_sided) {
  map.validate();
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0,1)");
  const SampledSpace& S = *map.source;
  const SampledSpace& T = *map.target;
  if (!S.incomplete() || !T.incomplete()) throw std::invalid_argument("both spaces need boundary structure");
  const auto& f = map.pairing;
  const std::size_t n = S.size();

  struct Partial {
    double L = 0, Linv = 0;
    std::size_t qualified = 0, checked = 0, failures = 0;
  };
  std::vector<Partial> partial(64);
  parallel_blocks(n, [&](std::size_t lo, std::size_t hi, std::size_t blk) {
    Partial p;
    for (PointId x = lo; x < hi; ++x) {
      const double dx = S.d_omega(x), dfx = T.d_omega(f[x]);
      auto row = S.row(x);
      auto members = ball(row, lambda * dx);
      if (members.size() < 3) continue;  // the center plus two others
      ++p.qualified;
      auto use = thin(members, row, kBallCap);
      for (std::size_t a = 0; a < use.size(); ++a)
        for (std::size_t b = a + 1; b < use.size(); ++b) {
          double num = T.dist(f[use[a]], f[use[b]]) / dfx;
          double den = S.dist(use[a], use[b]) / dx;
          p.L = std::max(p.L, num / den);
        }
    }
    partial[blk] = p;
  }, 64);
  PartialLipschitz out;
  out.lambda = lambda;
  out.centers = n;
  for (const auto& p : partial) {
    out.L = std::max(out.L, p.L);
    out.qualified += p.qualified;
  }
  if (out.qualified * 2 < n || out.qualified == 0) throw std::runtime_error("resolution insufficient for λ");
  out.warning = out.qualified < n;

  if (two_sided) {
    const double shrunk = lambda / std::max(out.L, 1.0);
    std::vector<Partial> second(64);
    parallel_blocks(n, [&](std::size_t lo, std::size_t hi, std::size_t blk) {
      Partial p;
      for (PointId x = lo; x < hi; ++x) {
        const double dx = S.d_omega(x), dfx = T.d_omega(f[x]);
        auto row = S.row(x);
        auto use = thin(ball(row, shrunk * dx), row, kBallCap);
        for (std::size_t a = 0; a < use.size(); ++a)
          for (std::size_t b = a + 1; b < use.size(); ++b) {
            double num = S.dist(use[a], use[b]) / dx;
            double den = T.dist(f[use[a]], f[use[b]]) / dfx;
            p.Linv = std::max(p.Linv, num / den);
          }
        // Controlled inclusion: the shrunken target ball must come from the source ball.
        for (PointId y = 0; y < n; ++y) {
          if (T.dist(f[x], f[y]) < shrunk * dfx) {
            ++p.checked;
            if (!(row[y] < lambda * dx)) ++p.failures;
          }
        }
      }
      second[blk] = p;
    }, 64);
    for (const auto& p : second) {
      out.L_inverse = std::max(out.L_inverse, p.Linv);
      out.inclusion_checked += p.checked;
      out.inclusion_failures += p.failures;
    }
  }
  return out;
}

std::vector<PartialLipschitz> partial_lipschitz_scan(const PointMap& map, const std::vector<double>& lambdas, bool two_sided) {
  std::vector<PartialLipschitz> out;
  for (double l : lambdas) out.push_back(partial_lipschitz_data(map, l, two_sided));
  return out;
}

// ---- control functions ------------------------------------------------------------

double ControlFit::eta(double t) const { return C * std::max(std::pow(t, exponent_hi), std::pow(t, exponent_lo)); }

json ControlFit::to_json() const {
  return json{{"C", C}, {"exponent_lo", exponent_lo}, {"exponent_hi", exponent_hi}, {"residual", residual},
              {"n_samples", n_samples}, {"n_filtered", n_filtered}, {"seed", seed}, {"method", method},
              {"separation_witness", separation_witness}};
}

namespace {

// Symmetric clouds carry inverse-map points beyond the forward sample range, where
// the envelope is unsupported by forward data.
FitOptions forward_range_options(const FitOptions& opts, const std::vector<std::pair<double, double>>& cloud,
                                 std::size_t stride) {
  FitOptions o = opts;
  if (!opts.symmetric || opts.log_t_range) return o;
  std::vector<double> mag;
  for (std::size_t i = 0; i < cloud.size(); i += stride) mag.push_back(std::abs(std::log(cloud[i].first)));
  if (mag.empty()) return o;
  // A high quantile rather than the maximum: isolated extreme samples leave bins
  // populated only by inverse-map points.
  std::size_t k = static_cast<std::size_t>(0.995 * (mag.size() - 1));
  std::nth_element(mag.begin(), mag.begin() + k, mag.end());
  if (mag[k] > 0.0) o.log_t_range = std::make_pair(-mag[k], mag[k]);
  return o;
}

}  // namespace

ControlFit fit_envelope(std::vector<std::pair<double, double>> cloud, const FitOptions& opts) {
  if (cloud.empty()) throw std::invalid_argument("degenerate cloud");
  bool all_equal = true;
  for (const auto& p : cloud) all_equal = all_equal && std::abs(p.first - cloud.front().first) <= 1e-12 * cloud.front().first;
  if (all_equal) throw std::invalid_argument("degenerate cloud");

  ControlFit fit;
  fit.method = "binned-max-loglog";
  if (opts.fixed_exponents) {
    fit.exponent_lo = opts.fixed_exponents->first;
    fit.exponent_hi = opts.fixed_exponents->second;
    fit.method = "fixed-exponents";
  } else {
    std::vector<std::pair<double, double>> lo, hi;
    for (const auto& [t, tp] : cloud) {
      double lt = std::log(t);
      if (opts.log_t_range && (lt < opts.log_t_range->first || lt > opts.log_t_range->second)) continue;
      (t < 1.0 ? lo : hi).emplace_back(lt, std::log(tp));
    }
    SideFit flo = fit_side(lo), fhi = fit_side(hi);
    if (!flo.ok && !fhi.ok) throw std::invalid_argument("degenerate cloud");
    fit.exponent_lo = flo.ok ? flo.slope : fhi.slope;
    fit.exponent_hi = fhi.ok ? fhi.slope : flo.slope;
    std::size_t nv = (flo.ok ? flo.vertices : 0) + (fhi.ok ? fhi.vertices : 0);
    fit.residual = std::sqrt((flo.sq_residual + fhi.sq_residual) / std::max<std::size_t>(nv, 1));
  }
  // Smallest C that puts every point under the envelope.
  double logC = 0.0;
  for (const auto& [t, tp] : cloud) {
    double lt = std::log(t);
    logC = std::max(logC, std::log(tp) - std::max(fit.exponent_hi * lt, fit.exponent_lo * lt));
  }
  fit.C = std::exp(logC);
  fit.cloud = std::move(cloud);
  return fit;
}

ControlFit quasimobius_fit(const PointMap& map, const FitOptions& opts) {
  map.validate();
  if (opts.samples < 100) throw std::invalid_argument("quasimobius fit needs at least 100 quadruples");
  const SampledSpace& S = *map.source;
  const SampledSpace& T = *map.target;
  if (S.size() < 4) throw std::invalid_argument("quasimobius fit needs at least 4 points");
  const auto& f = map.pairing;
  std::vector<std::vector<std::pair<double, double>>> parts(64);
  std::vector<std::size_t> filtered(64, 0);
  sample_tuples<4>(S.size(), opts.samples, opts.seed, [&](std::size_t blk, const std::array<PointId, 4>& q) {
    const auto [x, y, z, w] = q;
    double a = S.dist(x, z), b = S.dist(y, w), c = S.dist(x, y), d = S.dist(z, w);
    double a2 = T.dist(f[x], f[z]), b2 = T.dist(f[y], f[w]), c2 = T.dist(f[x], f[y]), d2 = T.dist(f[z], f[w]);
    double t = a * b / (c * d), tp = a2 * b2 / (c2 * d2);
    if (std::min({a, b, c, d, a2, b2, c2, d2}) < kDegenerate || !std::isfinite(t) || !std::isfinite(tp) || !(t > 0) ||
        !(tp > 0)) {
      ++filtered[blk];
      return;
    }
    auto& out = parts[blk];
    // [w,y,z,x] is the reciprocal quadruple.
    out.emplace_back(t, tp);
    out.emplace_back(1 / t, 1 / tp);
    if (opts.symmetric) {
      out.emplace_back(tp, t);
      out.emplace_back(1 / tp, 1 / t);
    }
  });
  std::vector<std::pair<double, double>> cloud;
  std::size_t nf = 0;
  for (std::size_t b = 0; b < parts.size(); ++b) {
    cloud.insert(cloud.end(), parts[b].begin(), parts[b].end());
    nf += filtered[b];
  }
  ControlFit fit = fit_envelope(cloud, forward_range_options(opts, cloud, opts.symmetric ? 4 : 2));
  fit.n_samples = opts.samples;
  fit.n_filtered = nf;
  fit.seed = opts.seed;
  fit.method = "quasimobius/" + fit.method + (opts.symmetric ? "/symmetric" : "");
  return fit;
}

ControlFit quasisymmetry_fit(const PointMap& map, const FitOptions& opts) {
  map.validate();
  if (opts.samples < 100) throw std::invalid_argument("quasisymmetry fit needs at least 100 triples");
  const SampledSpace& S = *map.source;
  const SampledSpace& T = *map.target;
  if (S.size() < 3) throw std::invalid_argument("quasisymmetry fit needs at least 3 points");
  const auto& f = map.pairing;
  std::vector<std::vector<std::pair<double, double>>> parts(64);
  std::vector<std::size_t> filtered(64, 0);
  sample_tuples<3>(S.size(), opts.samples, opts.seed, [&](std::size_t blk, const std::array<PointId, 3>& q) {
    const auto [x, y, z] = q;
    double a = S.dist(x, y), b = S.dist(x, z), a2 = T.dist(f[x], f[y]), b2 = T.dist(f[x], f[z]);
    if (std::min({a, b, a2, b2}) < kDegenerate) {
      ++filtered[blk];
      return;
    }
    parts[blk].emplace_back(a / b, a2 / b2);
    if (opts.symmetric) parts[blk].emplace_back(a2 / b2, a / b);
  });
  std::vector<std::pair<double, double>> cloud;
  std::size_t nf = 0;
  for (std::size_t b = 0; b < parts.size(); ++b) {
    cloud.insert(cloud.end(), parts[b].begin(), parts[b].end());
    nf += filtered[b];
  }
  double kappa = 0.0;
  for (const auto& [t, tp] : cloud)
    if (t <= 1.0) kappa = std::max(kappa, tp);
  ControlFit fit = fit_envelope(cloud, forward_range_options(opts, cloud, opts.symmetric ? 2 : 1));
  fit.n_samples = opts.samples;
  fit.n_filtered = nf;
  fit.seed = opts.seed;
  fit.separation_witness = kappa;
  fit.method = "quasisymmetry/" + fit.method + (opts.symmetric ? "/symmetric" : "");
  return fit;
}

std::size_t two_sided_envelope_violations(const ControlFit& fit, const std::vector<std::pair<double, double>>& cloud,
                                          double rel_tol) {
  std::size_t bad = 0;
  for (const auto& [t, tp] : cloud) {
    if (tp > fit.eta(t) * (1 + rel_tol)) ++bad;
    else if (tp < (1 - rel_tol) / fit.eta(1 / t)) ++bad;
  }
  return bad;
}

// ---- quasihyperbolic Lipschitz constant ---------------------------------------------

double qh_lipschitz_constant(const PointMap& map, bool bilipschitz, std::size_t max_pairs, std::uint64_t seed) {
  map.validate();
  if (!map.source->tags.count("quasihyperbolization") || !map.target->tags.count("quasihyperbolization"))
    throw std::invalid_argument("qh Lipschitz constant needs quasihyperbolized spaces");
  double H = 0.0;
  for (auto [x, y] : sample_pairs(map.source->size(), max_pairs, seed)) {
    double k = map.source->dist(x, y), k2 = map.target->dist(map.pairing[x], map.pairing[y]);
    if (!(k > 0.0) || !(k2 > 0.0)) continue;
    H = std::max(H, k2 / k);
    if (bilipschitz) H = std::max(H, k / k2);
  }
  return H;
}

PartialData compose_partial_data(PartialData first, PartialData second, bool bilipschitz) {
  PartialData out;
  out.L = second.L * first.L;
  out.lambda = bilipschitz ? std::min(first.lambda / second.L, second.lambda / first.L)
                           : std::min(first.lambda, second.lambda / first.L);
  return out;
}

QuasisimilarityFactors quasisimilarity_factors(const PointMap& map, double lambda) {
  map.validate();
  const SampledSpace& S = *map.source;
  const SampledSpace& T = *map.target;
  QuasisimilarityFactors q;
  q.c.assign(S.size(), 0.0);
  for (PointId x = 0; x < S.size(); ++x) {
    auto row = S.row(x);
    auto use = thin(ball(row, lambda * S.d_omega(x)), row, kBallCap);
    double lo = kInf, hi = 0.0;
    for (std::size_t a = 0; a < use.size(); ++a)
      for (std::size_t b = a + 1; b < use.size(); ++b) {
        double r = T.dist(map.pairing[use[a]], map.pairing[use[b]]) / S.dist(use[a], use[b]);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
    if (hi > 0.0) {
      q.c[x] = std::sqrt(lo * hi);
      q.worst_local_spread = std::max(q.worst_local_spread, hi / lo);
    }
  }
  return q;
}

CrossDifferenceFit cross_difference_fit(const PointMap& map, std::size_t samples, std::uint64_t seed) {
  map.validate();
  const SampledSpace& S = *map.source;
  const SampledSpace& T = *map.target;
  std::vector<std::vector<std::pair<double, double>>> parts(64);
  sample_tuples<4>(S.size(), samples, seed, [&](std::size_t blk, const std::array<PointId, 4>& q) {
    const auto& f = map.pairing;
    parts[blk].emplace_back(cross_difference(S, q[0], q[1], q[2], q[3]),
                            cross_difference(T, f[q[0]], f[q[1]], f[q[2]], f[q[3]]));
  });
  double sxy = 0, sxx = 0;
  std::size_t count = 0;
  for (const auto& p : parts)
    for (const auto& [u, v] : p) {
      sxy += u * v;
      sxx += u * u;
      ++count;
    }
  CrossDifferenceFit fit;
  fit.samples = count;
  double slope = sxx > 0 ? sxy / sxx : 1.0;
  fit.C0 = slope > 0 ? std::max(1.0, 1.0 / slope) : 1.0;
  for (const auto& p : parts)
    for (const auto& [u, v] : p) fit.c0 = std::max(fit.c0, u / fit.C0 - v);
  return fit;
}

}  // namespace qhlab
