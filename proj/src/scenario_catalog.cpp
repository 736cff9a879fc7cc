#include <cmath>
#include <string>
#include <vector>

#include "qhlab/harness.hpp"

namespace qhlab {

namespace {

// Anchor quotes for the statements each check exercises.
constexpr const char* kCrossDifference = "-(x|z)_b - (y|w)_b + (x|y)_b + (z|w)_b = <x,y,z,w>";
constexpr const char* kTreeExact = "X_t is 0-hyperbolic and 0-roughly starlike from x";
constexpr const char* kDependenceUniform = "isometric to the space X_t with t = log(1 + s/r)";
constexpr const char* kSandwich = "log(1 + d(x,y)/min{d(x),d(y)}) <= k(x,y) <= 4A^2 log(1 + d(x,y)/min{d(x),d(y)})";
constexpr const char* kDiameter = "diam X_{eps,z} <= 2 eps^{-1}";
constexpr const char* kHarnack = "rho(x)(1 - e^{-eps d})/eps <= d_eps(x,y) <= rho(x)(e^{eps d} - 1)/eps";
constexpr const char* kUniformizations = "eta-quasimobius with eta(t) = C max{t^{eps'/eps}, t^{eps/eps'}}";
constexpr const char* kInversionSandwich = "(1/4) i_p(x,y) <= d_p(x,y) <= i_p(x,y)";
constexpr const char* kSphericalization = "satisfies diam of the sphericalization <= 1";
constexpr const char* kTransfer = "we may in fact take H = 4A^2 L";
constexpr const char* kHomothety = "eta depending only on A and L";
constexpr const char* kDependence = "X_t is t-roughly starlike from p and from either point of its boundary";
constexpr const char* kAllStar = "K'-roughly starlike from all points";
constexpr const char* kStarBoundary = "(K + 10 delta)-roughly starlike from any point";
constexpr const char* kUniformStarlike = "roughly starlike from any point of";
constexpr const char* kTightness = "t <= log(1 + 2 phi(Omega))";
constexpr const char* kQsBoundary = "quasisymmetric with eta(t)=C max";
constexpr const char* kGoToInfinity = "if and only if (x_n|omega)_z -> infinity";
constexpr const char* kRoughRay = "with K' = K + 8 delta";
constexpr const char* kBiLipCircle = "identity map X -> Y is H-biLipschitz";
constexpr const char* kInversionTheorem = "partial-biLipschitz with data (L, lambda) and eta-quasisymmetric";
constexpr const char* kGehringHayman = "a GH-density on X with constant M = 20";

json model(const std::string& kind, json params, double window, int resolution, std::uint64_t seed = 0) {
  json j{{"kind", kind}, {"params", std::move(params)}, {"window", window}, {"resolution", resolution}};
  if (seed) j["seed"] = seed;
  return j;
}

json check(const std::string& name, const char* anchor, const std::string& op, const std::string& input,
           const std::string& comparator, double threshold, json extra = json::object()) {
  json j{{"name", name}, {"anchor", anchor}, {"op", op}, {"comparator", comparator}, {"threshold", threshold}};
  if (!input.empty()) j["input"] = input;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

json within(const std::string& name, const char* anchor, const std::string& op, const std::string& input,
            double expected, double tol, bool relative, json extra = json::object()) {
  json j = check(name, anchor, op, input, relative ? "rel_within" : "abs_within", expected, std::move(extra));
  j["tolerance"] = tol;
  return j;
}

json uniformize_stage(const std::string& id, const std::string& input, double eps, json basepoint) {
  return json{{"id", id}, {"op", "uniformize"}, {"input", input}, {"epsilon", eps}, {"basepoint", std::move(basepoint)}};
}

json from_point(json p) { return json{{"kind", "distance_from"}, {"point", std::move(p)}}; }

json harnack(const std::string& id) {
  return check("harnack " + id, kHarnack, "harnack", id, "lt", 1, json{{"rel_tol", 1e-6}});
}

Scenario cross_difference_identity() {
  Scenario s;
  s.name = "cross-difference-identity";
  s.description = "Gromov products against the cross-difference on every small model";
  s.seed = 11;
  s.spaces = json{{"tree", model("random_tree", {{"n", 30}}, 0, 0, 11)},
                  {"line", model("line", json::object(), 2.0, 20)},
                  {"xt", model("glued_interval_Xt", {{"t", 1.0}}, 2.0, 16)},
                  {"half_line", model("half_line", json::object(), 3.0, 30)},
                  {"square", model("square", json::object(), 0, 6)},
                  {"disk", model("euclidean_disk", json::object(), 0, 6)}};
  for (const char* sp : {"tree", "line", "xt", "half_line", "square", "disk"})
    s.checks.push_back(check(std::string("identity on ") + sp, kCrossDifference, "cross_difference_identity", sp, "le",
                             1e-10, json{{"basepoints", "all"}}));
  return s;
}

Scenario tree_exactness() {
  Scenario s;
  s.name = "tree-exactness";
  s.description = "Four-point delta, Gehring-Hayman constant and tripod insize vanish on trees";
  s.seed = 1;
  for (int k = 1; k <= 5; ++k) {
    std::string t = "tree" + std::to_string(k), u = "U" + std::to_string(k);
    s.spaces[t] = model("random_tree", {{"n", 30}}, 0, 0, static_cast<std::uint64_t>(k));
    s.pipeline.push_back(uniformize_stage(u, t, 1.0, from_point("root")));
    s.checks.push_back(check("delta " + t, kTreeExact, "four_point_delta", t, "le", 1e-9));
    s.checks.push_back(within("gh constant " + t, kGehringHayman, "gh_constant", u, 1.0, 1e-9, true));
    s.checks.push_back(check("tripod insize " + t, kTreeExact, "tripod_insize", t, "le", 1e-9, json{{"samples", 300}}));
    s.checks.push_back(harnack(u));
  }
  return s;
}

Scenario quasihyperbolic_values() {
  Scenario s;
  s.name = "quasihyperbolic-values";
  s.description = "Closed-form quasihyperbolic distances in the half-plane and in glued domains";
  s.spaces = json{{"plane", model("euclidean_half_plane", json::object(), 1.0, 200)},
                  {"omega13", model("glued_domain_Ωrs", {{"r", 1.0}, {"s", 3.0}}, 0, 200)},
                  {"omega21", model("glued_domain_Ωrs", {{"r", 2.0}, {"s", 1.0}}, 0, 200)}};
  s.pipeline = json::array({json{{"id", "Kp"}, {"op", "quasihyperbolize"}, {"input", "plane"}},
                            json{{"id", "K13"}, {"op", "quasihyperbolize"}, {"input", "omega13"}},
                            json{{"id", "K21"}, {"op", "quasihyperbolize"}, {"input", "omega21"}}});
  s.checks.push_back(within("half-plane vertical pair", kSandwich, "distance", "Kp.deformed", std::log(10.0), 0.02, true,
                            json{{"from", {{"coord", {0.0, 0.1}}}}, {"to", {{"coord", {0.0, 1.0}}}}}));
  s.checks.push_back(within("junction to tip r=1 s=3", kDependenceUniform, "distance", "K13.deformed", std::log(4.0), 0.02,
                            true, json{{"from", "junction"}, {"to", "tip"}}));
  s.checks.push_back(within("junction to tip r=2 s=1", kDependenceUniform, "distance", "K21.deformed", std::log(1.5), 0.02,
                            true, json{{"from", "junction"}, {"to", "tip"}}));
  return s;
}

Scenario quasihyperbolic_sandwich() {
  Scenario s;
  s.name = "quasihyperbolic-sandwich";
  s.description = "Two-sided comparison of k with log(1 + d/min d) using the measured uniformity constant";
  s.seed = 4;
  s.spaces = json{{"disk", model("euclidean_disk", json::object(), 0, 16)},
                  {"omega13", model("glued_domain_Ωrs", {{"r", 1.0}, {"s", 3.0}}, 0, 100)}};
  s.pipeline = json::array({json{{"id", "Kd"}, {"op", "quasihyperbolize"}, {"input", "disk"}},
                            json{{"id", "Ko"}, {"op", "quasihyperbolize"}, {"input", "omega13"}}});
  s.checks.push_back(check("sandwich disk", kSandwich, "qh_sandwich", "Kd", "lt", 1));
  s.checks.push_back(check("sandwich glued domain", kSandwich, "qh_sandwich", "Ko", "lt", 1));
  return s;
}

Scenario uniformized_line_diameter() {
  Scenario s;
  s.name = "uniformized-line-diameter";
  s.description = "Diameter of the line uniformized by distance from the origin";
  s.spaces = json{{"line", model("line", json::object(), 60.0, 1200)}};
  for (double eps : {0.1, 0.5, 1.0}) {
    char id[16];
    std::snprintf(id, sizeof id, "U%g", eps);
    s.pipeline.push_back(uniformize_stage(id, "line", eps, from_point("origin")));
    s.checks.push_back(within(std::string("diameter ") + id, kDiameter, "diameter", std::string(id) + ".deformed", 2 / eps,
                              0.02, true));
    s.checks.push_back(check(std::string("diameter bound ") + id, kDiameter, "diameter", std::string(id) + ".deformed", "le",
                             2 / eps * (1 + 1e-9)));
    s.checks.push_back(harnack(id));
  }
  return s;
}

Scenario uniformization_exponents(bool tree) {
  Scenario s;
  s.name = tree ? "uniformization-exponents-tree" : "uniformization-exponents-line";
  s.description = "Control function between uniformizations at eps and 2 eps";
  s.seed = 5;
  const std::string base = tree ? "root" : "origin";
  s.spaces["X"] = tree ? model("random_tree", {{"n", 30}, {"ray_length", 20.0}, {"ray_step", 0.25}}, 0, 0, 3)
                       : model("line", json::object(), 30.0, 400);
  s.pipeline.push_back(uniformize_stage("U1", "X", 0.5, from_point(base)));
  s.pipeline.push_back(uniformize_stage("U2", "X", 1.0, from_point(base)));
  s.pipeline.push_back(json{{"id", "F"}, {"op", "identity_map"}, {"source", "U1.deformed"}, {"target", "U2.deformed"}});
  json fit{{"samples", 100000}, {"symmetric", true}};
  json hi = fit, lo = fit;
  hi["measure"] = "exponent_hi";
  lo["measure"] = "exponent_lo";
  s.checks.push_back(within("exponent for t > 1", kUniformizations, "quasimobius_fit", "F", 2.0, 0.1, true, hi));
  s.checks.push_back(within("exponent for t < 1", kUniformizations, "quasimobius_fit", "F", 0.5, 0.1, true, lo));
  s.checks.push_back(harnack("U1"));
  s.checks.push_back(harnack("U2"));
  return s;
}

Scenario inversion_sandwich() {
  Scenario s;
  s.name = "inversion-sandwich";
  s.description = "Chain metrization of the inversion quasimetric stays within a factor 4";
  s.spaces = json{{"disk", model("euclidean_disk", json::object(), 0, 17)},
                  {"ray", model("half_line", {{"open", true}}, 10.0, 200)}};
  s.pipeline = json::array({json{{"id", "Id"}, {"op", "invert"}, {"input", "disk"}, {"center", {{"boundary", 0}}}},
                            json{{"id", "Ir"}, {"op", "invert"}, {"input", "ray"}, {"center", {{"boundary", 0}}}}});
  for (const char* id : {"Id", "Ir"}) {
    s.checks.push_back(check(std::string("lower ratio ") + id, kInversionSandwich, "inversion_ratio", id, "ge", 0.25,
                             json{{"measure", "min"}}));
    s.checks.push_back(check(std::string("upper ratio ") + id, kInversionSandwich, "inversion_ratio", id, "le",
                             1 + 1e-12, json{{"measure", "max"}}));
  }
  s.checks.push_back(check("reciprocal pullback", kInversionSandwich, "reciprocal_pullback", "Ir", "le", 1e-9));
  return s;
}

Scenario sphericalization_bounded() {
  Scenario s;
  s.name = "sphericalization-bounded";
  s.description = "Sphericalized models have diameter at most one";
  s.seed = 8;
  s.spaces = json{{"line", model("line", json::object(), 20.0, 200)},
                  {"half_line", model("half_line", json::object(), 20.0, 200)},
                  {"plane", model("euclidean_half_plane", json::object(), 1.0, 40)},
                  {"tree", model("random_tree", {{"n", 30}, {"ray_length", 10.0}, {"ray_step", 0.5}}, 0, 0, 8)},
                  {"grid", model("hyperbolic_grid", json::object(), 2.0, 6)},
                  {"disk", model("euclidean_disk", json::object(), 0, 16)},
                  {"xt", model("glued_interval_Xt", {{"t", 2.0}}, 10.0, 100)}};
  for (auto it = s.spaces.begin(); it != s.spaces.end(); ++it) {
    std::string id = "S_" + it.key();
    s.pipeline.push_back(json{{"id", id}, {"op", "sphericalize"}, {"input", it.key()}, {"point", 0}, {"max_points", 600}});
    s.checks.push_back(check("diameter " + id, kSphericalization, "diameter", id, "le", 1 + 1e-9));
  }
  return s;
}

Scenario transfer_lipschitz() {
  Scenario s;
  s.name = "transfer-lipschitz";
  s.description = "Quasihyperbolic Lipschitz constant against 4 A^2 L for three boundary-Lipschitz maps";
  s.seed = 9;
  s.spaces = json{{"ray", model("half_line", {{"open", true}}, 4.0, 200)},
                  {"square", model("square", json::object(), 0, 20)},
                  {"disk", model("euclidean_disk", json::object(), 0, 16)}};
  s.pipeline = json::array(
      {json{{"id", "ray2"}, {"op", "push_forward"}, {"input", "ray"}, {"transform", "square"}, {"target_boundary", "half_line"}},
       json{{"id", "rect"}, {"op", "push_forward"}, {"input", "square"}, {"transform", "stretch_x2"},
            {"target_boundary", "rectangle_2x1"}},
       json{{"id", "disk2"}, {"op", "push_forward"}, {"input", "disk"}, {"transform", "radial_square"},
            {"target_boundary", "unit_disk"}},
       json{{"id", "f_ray"}, {"op", "identity_map"}, {"source", "ray"}, {"target", "ray2"}},
       json{{"id", "f_rect"}, {"op", "identity_map"}, {"source", "square"}, {"target", "rect"}},
       json{{"id", "f_disk"}, {"op", "identity_map"}, {"source", "disk"}, {"target", "disk2"}}});
  for (const char* f : {"f_ray", "f_rect", "f_disk"})
    s.checks.push_back(check(std::string("H over 4A^2L ") + f, kTransfer, "transfer_bound", f, "le", 1.05));
  s.checks.push_back(check("quasimobius exponent f_rect", kHomothety, "quasimobius_fit", "f_rect", "le", 1.5,
                           json{{"samples", 20000}, {"measure", "exponent_hi"}}));
  return s;
}

Scenario rough_starlikeness() {
  Scenario s;
  s.name = "rough-starlikeness";
  s.description = "Starlikeness constants of the half-line and of X_t";
  s.spaces = json{{"half_line", model("half_line", json::object(), 10.0, 100)},
                  {"xt", model("glued_interval_Xt", {{"t", 2.0}}, 10.0, 100)}};
  s.checks.push_back(within("half-line from t=3", kRoughRay, "starlikeness", "half_line", 3.0, 0.1, false,
                            json{{"point", {{"coord", {3.0, 0.0}}}}}));
  s.checks.push_back(check("X_t from the tip", kTreeExact, "starlikeness", "xt", "le", 1e-9, json{{"point", "tip"}}));
  s.checks.push_back(within("X_t from the origin", kDependence, "starlikeness", "xt", 2.0, 0.1, false,
                            json{{"point", "origin"}}));
  s.checks.push_back(within("X_t from an end", kDependence, "starlikeness", "xt", 2.0, 0.1, false, json{{"end", 0}}));
  s.checks.push_back(within("boundary product at the tip", kDependence, "boundary_spread", "xt", 2.0, 0.1, false,
                            json{{"point", "tip"}, {"measure", "pair_product"}}));
  for (const char* p : {"origin", "tip"})
    s.checks.push_back(check(std::string("transfer from ") + p, kStarBoundary, "star_transfer", "xt", "le", 0.1,
                             json{{"point", p}, {"end", 0}}));
  return s;
}

Scenario all_star() {
  Scenario s;
  s.name = "all-star";
  s.description = "Starlikeness from an end controls starlikeness from interior points of a tree";
  s.seed = 12;
  s.spaces = json{{"tree", model("random_tree", {{"n", 30}, {"ray_length", 8.0}, {"ray_step", 0.5}}, 0, 0, 12)}};
  for (int p : {0, 5, 17, 29})
    s.checks.push_back(check("transfer from vertex " + std::to_string(p), kAllStar, "star_transfer", "tree", "le", 1e-9,
                             json{{"point", p}, {"end", 0}}));
  return s;
}

Scenario uniform_starlike() {
  Scenario s;
  s.name = "uniform-starlike";
  s.description = "Quasihyperbolized glued domain is roughly starlike within the tightness bound";
  s.spaces = json{{"omega13", model("glued_domain_Ωrs", {{"r", 1.0}, {"s", 3.0}}, 0, 100)}};
  s.pipeline = json::array({json{{"id", "K"}, {"op", "quasihyperbolize"}, {"input", "omega13"}}});
  s.checks.push_back(within("starlikeness from the junction", kUniformStarlike, "starlikeness", "K.deformed",
                            std::log(4.0), 0.05, true, json{{"point", "junction"}, {"targets", {"left", "right"}}}));
  s.checks.push_back(check("tightness bound", kTightness, "tightness_bound", "K", "le", 0.05,
                           json{{"point", "junction"}, {"targets", {"left", "right"}}}));
  return s;
}

Scenario round_trip_tree() {
  Scenario s;
  s.name = "round-trip-tree";
  s.description = "Quasihyperbolizing a uniformized tree recovers the tree metric up to bounded distortion";
  s.seed = 7;
  s.spaces = json{{"coarse", model("random_tree", {{"n", 30}, {"ray_length", 6.0}, {"ray_step", 0.5}}, 0, 0, 7)},
                  {"fine", model("random_tree", {{"n", 30}, {"ray_length", 6.0}, {"ray_step", 0.25}}, 0, 0, 7)}};
  for (const char* t : {"coarse", "fine"}) {
    std::string u = std::string("U_") + t, q = std::string("Q_") + t, m = std::string("f_") + t;
    s.pipeline.push_back(uniformize_stage(u, t, 0.5, from_point("root")));
    s.pipeline.push_back(json{{"id", q}, {"op", "quasihyperbolize"}, {"input", u + ".deformed"}});
    s.pipeline.push_back(json{{"id", m}, {"op", "identity_map"}, {"source", t}, {"target", q + ".deformed"}});
    s.checks.push_back(check("pair ratio spread " + std::string(t), kBiLipCircle, "pair_ratio_spread", m, "le", 50.0));
    s.checks.push_back(harnack(u));
  }
  s.checks.push_back(check("spread stability", kBiLipCircle, "spread_stability", "", "le", 0.1,
                           json{{"inputs", {"f_coarse", "f_fine"}}}));
  return s;
}

Scenario quasisymmetric_boundary() {
  Scenario s;
  s.name = "quasisymmetric-boundary";
  s.description = "Visual metric on the boundary of the quasihyperbolized disk against the euclidean circle";
  s.seed = 13;
  s.spaces = json{{"disk", model("euclidean_disk", json::object(), 0, 32)}};
  s.pipeline = json::array({json{{"id", "K"}, {"op", "quasihyperbolize"}, {"input", "disk"}},
                            json{{"id", "V"}, {"op", "visual_boundary"}, {"input", "K"}, {"point", "center"},
                                 {"epsilon", 0.5}, {"count", 24}, {"from_visual", true}}});
  s.checks.push_back(within("exponent for t > 1", kQsBoundary, "quasisymmetry_fit", "V", 2.0, 0.25, true,
                            json{{"samples", 20000}, {"measure", "exponent_hi"}}));
  s.checks.push_back(check("control at t <= 1 stays finite", kQsBoundary, "quasisymmetry_fit", "V", "le", 10.0,
                           json{{"samples", 20000}, {"measure", "separation_witness"}}));
  return s;
}

Scenario go_to_infinity() {
  Scenario s;
  s.name = "go-to-infinity";
  s.description = "Rays escape in the Busemann uniformization exactly when their Gromov product with the base end does";
  s.seed = 14;
  s.spaces = json{{"tree", model("random_tree", {{"n", 30}, {"ray_length", 10.0}, {"ray_step", 0.5}}, 0, 0, 14)}};
  s.pipeline.push_back(uniformize_stage("U", "tree", 0.5, json{{"kind", "busemann"}, {"point", "root"}, {"end", 0}}));
  s.checks.push_back(check("escape agreement", kGoToInfinity, "go_to_infinity", "U", "ge", 1.0,
                           json{{"point", "root"}, {"end", 0}}));
  s.checks.push_back(harnack("U"));
  return s;
}

Scenario rough_ray() {
  Scenario s;
  s.name = "rough-ray";
  s.description = "A tree with a single end stays within K + 8 delta of any ray to that end";
  s.seed = 15;
  s.spaces = json{{"tree", model("random_tree", {{"n", 30}, {"ray_length", 10.0}, {"ray_step", 0.5}, {"max_rays", 1}}, 0,
                                 0, 15)}};
  for (int p : {0, 10, 20})
    s.checks.push_back(check("ray from vertex " + std::to_string(p), kRoughRay, "rough_ray", "tree", "le", 1e-9,
                             json{{"point", p}, {"end", 0}}));
  return s;
}

Scenario inversion_of_uniformization() {
  Scenario s;
  s.name = "inversion-of-uniformization";
  s.description = "Inverting X_{eps,z} about an end compares with the Busemann uniformization, and dually";
  s.seed = 16;
  s.spaces = json{{"line", model("line", json::object(), 20.0, 200)}};
  s.pipeline = json::array(
      {uniformize_stage("Uz", "line", 0.5, from_point("origin")),
       uniformize_stage("Ub", "line", 0.5, json{{"kind", "busemann"}, {"point", "origin"}, {"end", 1}}),
       json{{"id", "I"}, {"op", "invert"}, {"input", "Uz.deformed"}, {"center", {{"boundary", 1}}}},
       json{{"id", "S"}, {"op", "sphericalize"}, {"input", "Ub.deformed"}, {"point", "origin"}},
       json{{"id", "f_inv"}, {"op", "identity_map"}, {"source", "Ub.deformed"}, {"target", "I"}},
       json{{"id", "f_sph"}, {"op", "identity_map"}, {"source", "Uz.deformed"}, {"target", "S"}}});
  for (const char* f : {"f_inv", "f_sph"}) {
    s.checks.push_back(check(std::string("boundary Lipschitz ") + f, kInversionTheorem, "partial_lipschitz", f, "le",
                             10.0, json{{"lambda", 0.2}, {"two_sided", true}}));
    s.checks.push_back(check(std::string("quasisymmetry exponent ") + f, kInversionTheorem, "quasisymmetry_fit", f, "le",
                             2.0, json{{"samples", 20000}, {"measure", "exponent_hi"}, {"symmetric", true}}));
  }
  s.checks.push_back(harnack("Uz"));
  s.checks.push_back(harnack("Ub"));
  return s;
}

Scenario gh_density_scan() {
  Scenario s;
  s.name = "gh-density-scan";
  s.description = "Largest eps on a grid for which the exponential density has Gehring-Hayman constant at most 20";
  s.seed = 17;
  s.spaces = json{{"grid", model("hyperbolic_grid", json::object(), 2.0, 6)}};
  s.checks.push_back(check("admissible eps", kGehringHayman, "gh_scan", "grid", "ge", 0.05,
                           json{{"eps_grid", {0.05, 0.1, 0.2, 0.4, 0.8}}, {"basepoint", from_point(0)}}));
  return s;
}

}  // namespace

std::vector<Scenario> scenario_catalog() {
  return {cross_difference_identity(),  tree_exactness(),           quasihyperbolic_values(),
          quasihyperbolic_sandwich(),   uniformized_line_diameter(), uniformization_exponents(false),
          uniformization_exponents(true), inversion_sandwich(),     sphericalization_bounded(),
          transfer_lipschitz(),         rough_starlikeness(),       all_star(),
          uniform_starlike(),           round_trip_tree(),          quasisymmetric_boundary(),
          go_to_infinity(),             rough_ray(),                inversion_of_uniformization(),
          gh_density_scan()};
}

}  // namespace qhlab
