#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "qhlab/metric_core.hpp"

namespace qhlab {
namespace {

double positive(const json& params, const char* key, double fallback = -1.0) {
  double v = params.contains(key) ? params.at(key).get<double>() : fallback;
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string("parameter '") + key + "' must be positive");
  return v;
}

double require_window(const ModelSpec& spec) {
  if (!(spec.window > 0.0)) throw std::invalid_argument("window must be positive");
  return spec.window;
}

int require_resolution(const ModelSpec& spec) {
  if (spec.resolution < 3) throw std::invalid_argument("resolution must be at least 3");
  return spec.resolution;
}

void stamp(SampledSpace& s, const ModelSpec& spec, bool unbounded) {
  s.provenance["model"] = spec.to_json();
  s.provenance["unbounded"] = unbounded;
  if (unbounded) s.provenance["truncation_window"] = spec.window;
}

// Ids in a regular grid, -1 where the cell is dropped.
void grid_edges(LengthGraph& g, const std::vector<std::vector<long>>& id, double h) {
  const long nx = static_cast<long>(id.size());
  for (long i = 0; i < nx; ++i) {
    const long ny = static_cast<long>(id[i].size());
    for (long j = 0; j < ny; ++j) {
      if (id[i][j] < 0) continue;
      const int di[4] = {1, 0, 1, 1};
      const int dj[4] = {0, 1, 1, -1};
      for (int k = 0; k < 4; ++k) {
        long a = i + di[k], b = j + dj[k];
        if (a < 0 || a >= nx || b < 0 || b >= static_cast<long>(id[a].size()) || id[a][b] < 0) continue;
        g.add_edge(static_cast<PointId>(id[i][j]), static_cast<PointId>(id[a][b]),
                   (di[k] && dj[k]) ? h * std::sqrt(2.0) : h);
      }
    }
  }
}

SampledSpace make_line(const ModelSpec& spec) {
  const double W = require_window(spec);
  int R = require_resolution(spec);
  if (R % 2) ++R;
  const double h = 2 * W / R;
  auto g = std::make_shared<LengthGraph>(R + 1);
  for (int i = 0; i < R; ++i) g->add_edge(i, i + 1, h);
  SampledSpace s = shortest_path_metric(std::shared_ptr<const LengthGraph>(g));
  std::vector<Coord> xs;
  for (int i = 0; i <= R; ++i) xs.push_back({-W + i * h, 0.0});
  s.set_coords(xs);
  s.landmarks["origin"] = R / 2;
  s.ends = {0, static_cast<PointId>(R)};
  s.provenance["step"] = h;
  stamp(s, spec, true);
  return s;
}

SampledSpace make_half_line(const ModelSpec& spec) {
  const double W = require_window(spec);
  const int R = require_resolution(spec);
  const bool open = spec.params.value("open", false);
  const double h = W / R;
  const int first = open ? 1 : 0;
  const int n = R + 1 - first;
  auto g = std::make_shared<LengthGraph>(n);
  for (int i = 0; i + 1 < n; ++i) g->add_edge(i, i + 1, h);
  SampledSpace s = shortest_path_metric(std::shared_ptr<const LengthGraph>(g));
  std::vector<Coord> xs;
  for (int i = 0; i < n; ++i) xs.push_back({(i + first) * h, 0.0});
  s.set_coords(xs);
  if (open) {
    std::vector<double> bd(n), dom(n);
    for (int i = 0; i < n; ++i) bd[i] = dom[i] = (i + first) * h;
    s.set_boundary_table(1, bd);
    s.set_boundary_coords({{0.0, 0.0}});
    s.set_d_omega_values(dom);
    s.provenance["boundary_positions"] = json::array({0.0});
  } else {
    s.landmarks["origin"] = 0;
  }
  s.ends = {static_cast<PointId>(n - 1)};
  s.provenance["step"] = h;
  s.provenance["first_position"] = first * h;
  stamp(s, spec, true);
  return s;
}

SampledSpace make_glued_interval(const ModelSpec& spec) {
  const double t = positive(spec.params, "t");
  const double W = require_window(spec);
  int R = require_resolution(spec);
  if (R % 2) ++R;
  const double h = 2 * W / R;
  const int m = std::max(1, static_cast<int>(std::lround(t / h)));
  auto g = std::make_shared<LengthGraph>(R + 1 + m);
  for (int i = 0; i < R; ++i) g->add_edge(i, i + 1, h);
  const PointId origin = R / 2;
  PointId prev = origin;
  for (int j = 1; j <= m; ++j) {
    PointId id = R + j;
    g->add_edge(prev, id, t / m);
    prev = id;
  }
  SampledSpace s = shortest_path_metric(std::shared_ptr<const LengthGraph>(g));
  std::vector<Coord> xs;
  for (int i = 0; i <= R; ++i) xs.push_back({-W + i * h, 0.0});
  for (int j = 1; j <= m; ++j) xs.push_back({0.0, t * j / m});
  s.set_coords(xs);
  s.landmarks["origin"] = origin;
  s.landmarks["tip"] = prev;
  s.ends = {0, static_cast<PointId>(R)};
  s.provenance["step"] = h;
  stamp(s, spec, true);
  return s;
}

SampledSpace make_glued_domain(const ModelSpec& spec) {
  const double r = positive(spec.params, "r");
  const double sarm = positive(spec.params, "s");
  int R = require_resolution(spec);
  if (R % 2) ++R;
  const double h = 2 * r / R;
  const int m = std::max(1, static_cast<int>(std::lround(sarm / h)));
  const int nline = R - 1;  // open interval, endpoints are boundary
  auto g = std::make_shared<LengthGraph>(nline + m);
  std::vector<double> bd, dom;
  for (int i = 0; i < nline; ++i) {
    double x = -r + (i + 1) * h;
    if (i + 1 < nline) g->add_edge(i, i + 1, h);
    bd.push_back(x + r);
    bd.push_back(r - x);
    dom.push_back(r - std::abs(x));
  }
  const PointId junction = nline / 2;
  PointId prev = junction;
  for (int j = 1; j <= m; ++j) {
    PointId id = nline + j - 1;
    double u = sarm * j / m;
    g->add_edge(prev, id, sarm / m);
    bd.push_back(r + u);
    bd.push_back(r + u);
    dom.push_back(r + u);
    prev = id;
  }
  SampledSpace s = shortest_path_metric(std::shared_ptr<const LengthGraph>(g));
  std::vector<Coord> xs;
  for (int i = 0; i < nline; ++i) xs.push_back({-r + (i + 1) * h, 0.0});
  for (int j = 1; j <= m; ++j) xs.push_back({0.0, sarm * j / m});
  s.set_coords(xs);
  s.set_boundary_table(2, bd);
  s.set_boundary_coords({{-r, 0.0}, {r, 0.0}});
  s.set_d_omega_values(dom);
  s.landmarks["junction"] = junction;
  s.landmarks["tip"] = prev;
  s.landmarks["left"] = 0;
  s.landmarks["right"] = nline - 1;
  s.provenance["step"] = h;
  stamp(s, spec, false);
  return s;
}

SampledSpace make_disk(const ModelSpec& spec) {
  const int R = require_resolution(spec);
  const double h = 2.0 / R;
  std::vector<Coord> pts;
  std::vector<std::vector<long>> id(R + 1, std::vector<long>(R + 1, -1));
  for (int i = 0; i <= R; ++i)
    for (int j = 0; j <= R; ++j) {
      Coord c{-1 + i * h, -1 + j * h};
      if (std::hypot(c.x, c.y) < 1 - h / 4) {
        id[i][j] = static_cast<long>(pts.size());
        pts.push_back(c);
      }
    }
  auto g = std::make_shared<LengthGraph>(pts.size());
  grid_edges(*g, id, h);
  if (!g->connected()) throw std::runtime_error("not rectifiably connected");
  SampledSpace s = SampledSpace::from_coords(pts);
  s.set_graph(g);
  const int M = std::max(64, 8 * R);
  std::vector<Coord> bc;
  for (int k = 0; k < M; ++k) {
    double a = 2 * M_PI * k / M;
    bc.push_back({std::cos(a), std::sin(a)});
  }
  s.set_boundary_coords(bc);
  s.set_d_omega_oracle([](const Coord& c) { return 1.0 - std::hypot(c.x, c.y); });
  PointId centre = 0;
  for (PointId p = 0; p < pts.size(); ++p)
    if (std::hypot(pts[p].x, pts[p].y) < std::hypot(pts[centre].x, pts[centre].y)) centre = p;
  s.landmarks["center"] = centre;
  s.provenance["step"] = h;
  stamp(s, spec, false);
  return s;
}

SampledSpace make_half_plane(const ModelSpec& spec) {
  const double W = require_window(spec);
  const int R = require_resolution(spec);
  const double h = 2 * W / R;
  std::vector<Coord> pts;
  std::vector<std::vector<long>> id(R + 1, std::vector<long>(R, -1));
  for (int i = 0; i <= R; ++i)
    for (int j = 1; j <= R; ++j) {
      id[i][j - 1] = static_cast<long>(pts.size());
      pts.push_back({-W + i * h, j * h});
    }
  auto g = std::make_shared<LengthGraph>(pts.size());
  grid_edges(*g, id, h);
  SampledSpace s = SampledSpace::from_coords(pts);
  s.set_graph(g);
  std::vector<Coord> bc;
  for (int i = 0; i <= R; ++i) bc.push_back({-W + i * h, 0.0});
  s.set_boundary_coords(bc);
  s.set_d_omega_oracle([](const Coord& c) { return c.y; });
  s.provenance["step"] = h;
  stamp(s, spec, true);
  return s;
}

SampledSpace make_square(const ModelSpec& spec) {
  const int R = require_resolution(spec);
  const double h = 1.0 / R;
  std::vector<Coord> pts;
  std::vector<std::vector<long>> id(R - 1, std::vector<long>(R - 1, -1));
  for (int i = 1; i < R; ++i)
    for (int j = 1; j < R; ++j) {
      id[i - 1][j - 1] = static_cast<long>(pts.size());
      pts.push_back({i * h, j * h});
    }
  auto g = std::make_shared<LengthGraph>(pts.size());
  grid_edges(*g, id, h);
  SampledSpace s = SampledSpace::from_coords(pts);
  s.set_graph(g);
  std::vector<Coord> bc;
  for (int k = 0; k < 2 * R; ++k) {
    double u = k * h / 2;
    bc.push_back({u, 0.0});
    bc.push_back({1.0, u});
    bc.push_back({1.0 - u, 1.0});
    bc.push_back({0.0, 1.0 - u});
  }
  s.set_boundary_coords(bc);
  s.set_d_omega_oracle([](const Coord& c) { return std::min({c.x, 1 - c.x, c.y, 1 - c.y}); });
  s.landmarks["center"] = pts.size() / 2;
  s.provenance["step"] = h;
  stamp(s, spec, false);
  return s;
}

SampledSpace make_random_tree(const ModelSpec& spec) {
  const int n = static_cast<int>(positive(spec.params, "n"));
  const double ray = spec.params.value("ray_length", 0.0);
  const double ray_step = spec.params.value("ray_step", 0.5);
  // Rays go on the first max_rays leaves; default is every leaf.
  const int max_rays = spec.params.value("max_rays", n);
  if (ray < 0.0 || !(ray_step > 0.0)) throw std::invalid_argument("ray parameters must be positive");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  auto g = std::make_shared<LengthGraph>(n);
  std::vector<int> degree(n, 0);
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    int parent = pick(rng);
    g->add_edge(parent, i, weight(rng));
    ++degree[parent];
    ++degree[i];
  }
  std::vector<PointId> ends;
  if (ray > 0.0) {
    const int steps = std::max(1, static_cast<int>(std::ceil(ray / ray_step)));
    for (int v = 1; v < n; ++v) {
      if (degree[v] != 1 || static_cast<int>(ends.size()) >= max_rays) continue;
      PointId prev = v;
      for (int k = 0; k < steps; ++k) {
        PointId id = g->add_vertex();
        g->add_edge(prev, id, ray / steps);
        prev = id;
      }
      ends.push_back(prev);
    }
  }
  SampledSpace s = shortest_path_metric(std::shared_ptr<const LengthGraph>(g));
  s.landmarks["root"] = 0;
  s.ends = ends;
  s.tags.insert("tree");
  stamp(s, spec, ray > 0.0);
  return s;
}

SampledSpace make_hyperbolic_grid(const ModelSpec& spec) {
  const double W = require_window(spec);
  const int levels = require_resolution(spec);
  const double sigma = spec.params.value("spacing", 0.5);
  std::vector<Coord> pts;
  std::vector<std::vector<PointId>> level(levels);
  for (int j = 0; j < levels; ++j) {
    double y = std::ldexp(1.0, -j);
    int count = static_cast<int>(std::floor(2 * W / (sigma * y)));
    for (int i = 0; i <= count; ++i) {
      level[j].push_back(pts.size());
      pts.push_back({-W + i * sigma * y, y});
    }
  }
  auto hyp = [&](PointId a, PointId b) {
    double dx = pts[a].x - pts[b].x, dy = pts[a].y - pts[b].y;
    return std::acosh(1 + (dx * dx + dy * dy) / (2 * pts[a].y * pts[b].y));
  };
  auto g = std::make_shared<LengthGraph>(pts.size());
  for (int j = 0; j < levels; ++j) {
    for (std::size_t i = 0; i + 1 < level[j].size(); ++i) g->add_edge(level[j][i], level[j][i + 1], hyp(level[j][i], level[j][i + 1]));
    if (j == 0) continue;
    // Each point links to the two nearest points one level up.
    const auto& up = level[j - 1];
    for (PointId p : level[j]) {
      auto it = std::lower_bound(up.begin(), up.end(), pts[p].x,
                                 [&](PointId q, double x) { return pts[q].x < x; });
      std::size_t k = static_cast<std::size_t>(it - up.begin());
      if (k < up.size()) g->add_edge(p, up[k], hyp(p, up[k]));
      if (k > 0) g->add_edge(p, up[k - 1], hyp(p, up[k - 1]));
    }
  }
  SampledSpace s = shortest_path_metric(std::shared_ptr<const LengthGraph>(g));
  s.set_tolerance(TriangleTolerance::sampled);
  s.provenance["levels"] = levels;
  stamp(s, spec, true);
  s.set_coords(pts);
  return s;
}

}  // namespace

SampledSpace build_model_space(const ModelSpec& spec) {
  const std::string& k = spec.kind;
  if (k == "line") return make_line(spec);
  if (k == "half_line") return make_half_line(spec);
  if (k == "glued_interval_Xt") return make_glued_interval(spec);
  if (k == "glued_domain_Ωrs" || k == "glued_domain") return make_glued_domain(spec);
  if (k == "euclidean_disk") return make_disk(spec);
  if (k == "euclidean_half_plane") return make_half_plane(spec);
  if (k == "square") return make_square(spec);
  if (k == "random_tree") return make_random_tree(spec);
  if (k == "hyperbolic_grid") return make_hyperbolic_grid(spec);
  throw std::invalid_argument("unknown model kind '" + k + "'");
}

}  // namespace qhlab
