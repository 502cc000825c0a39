#include "holonomy/finite.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>

namespace holonomy {

namespace {

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "hyph-%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void require_same(const Group& a, const Group& b, const char* what) {
  if (a != b) throw SpecMismatch(std::string(what) + ": group specs differ");
}

void require_shape(const ShapePtr& a, const ShapePtr& b, const char* what) {
  if (!a || !b || !(*a == *b)) throw InvalidArgument(std::string(what) + ": hyph shapes differ");
}

Json shape_json(const HyphShape& s) {
  Json v = Json::array(), e = Json::array();
  for (const auto& p : s.vertices) v.push_back({p.x, p.y});
  for (const auto& [a, b] : s.ends) e.push_back({a, b});
  return {{"hyph_id", s.id}, {"vertices", v}, {"ends", e}};
}

ShapePtr shape_from(const Json& j) {
  std::vector<Point> vs;
  for (const auto& p : j.at("vertices")) vs.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  for (const auto& e : j.at("ends")) ends.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  return make_shape(j.at("hyph_id").get<std::string>(), std::move(vs), std::move(ends));
}

template <class T>
Json values_json(const T& x) {
  Json out = shape_json(*x.shape);
  out["spec"] = x.group.spec().to_json();
  Json vals = Json::array();
  for (const auto& v : x.values) vals.push_back(v.to_json());
  out["values"] = vals;
  return out;
}

template <class T>
T values_from(const Json& j, std::size_t (*count)(const HyphShape&)) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "spec" && it.key() != "hyph_id" && it.key() != "vertices" && it.key() != "ends" &&
        it.key() != "values")
      throw InvalidArgument("unknown field '" + it.key() + "'");
  T out{Group(GroupSpec::from_json(j.at("spec"))), shape_from(j), {}};
  for (const auto& v : j.at("values")) out.values.push_back(GroupElement::from_json(out.group, v));
  if (out.values.size() != count(*out.shape)) throw InvalidArgument("field 'values' has the wrong length");
  return out;
}

std::size_t edge_count(const HyphShape& s) { return s.edge_count(); }
std::size_t vertex_count(const HyphShape& s) { return s.vertices.size(); }

// Local search state for the orbit objective; per-edge distances are cached so that a
// coordinate move re-evaluates only the incident edges.
class OrbitProblem {
 public:
  OrbitProblem(const FiniteConnection& c1, const FiniteConnection& c2)
      : c1_(c1), c2_(c2), incident_(c1.shape->vertices.size()) {
    for (std::size_t e = 0; e < c1.shape->ends.size(); ++e) {
      incident_[c1.shape->ends[e].first].push_back(e);
      if (c1.shape->ends[e].second != c1.shape->ends[e].first) incident_[c1.shape->ends[e].second].push_back(e);
    }
  }

  double edge_dist(const std::vector<GroupElement>& g, std::size_t e) const {
    const auto [s, t] = c1_.shape->ends[e];
    return op_norm_dist(compose(compose(inverse(g[s]), c1_.values[e]), g[t]), c2_.values[e]);
  }

  void load(const std::vector<GroupElement>& g) {
    g_ = g;
    d_.resize(c1_.values.size());
    for (std::size_t e = 0; e < d_.size(); ++e) d_[e] = edge_dist(g_, e);
  }

  double max_obj() const { return d_.empty() ? 0.0 : *std::max_element(d_.begin(), d_.end()); }
  double sum_obj() const {
    double s = 0.0;
    for (double x : d_) s += x * x;
    return s;
  }

  // Tries g_v := candidate; keeps it when the objective drops. Returns true on acceptance.
  bool try_move(std::size_t v, const GroupElement& candidate, bool use_max) {
    const double before = use_max ? max_obj() : sum_obj();
    const GroupElement old = g_[v];
    std::vector<double> saved;
    g_[v] = candidate;
    for (std::size_t e : incident_[v]) {
      saved.push_back(d_[e]);
      d_[e] = edge_dist(g_, e);
    }
    const double after = use_max ? max_obj() : sum_obj();
    if (after < before) return true;
    g_[v] = old;
    for (std::size_t k = 0; k < saved.size(); ++k) d_[incident_[v][k]] = saved[k];
    return false;
  }

  const std::vector<GroupElement>& gauge() const { return g_; }

 private:
  const FiniteConnection& c1_;
  const FiniteConnection& c2_;
  std::vector<std::vector<std::size_t>> incident_;
  std::vector<GroupElement> g_;
  std::vector<double> d_;
};

// Gauge that makes every edge of a BFS spanning forest match exactly. roots[k] is the value
// at the first vertex of the k-th connected component; an empty roots vector only counts them.
std::vector<GroupElement> tree_gauge(const FiniteConnection& c1, const FiniteConnection& c2,
                                     const std::vector<GroupElement>& roots, std::size_t* components = nullptr) {
  const auto& sh = *c1.shape;
  const std::size_t n = sh.vertices.size();
  std::vector<std::optional<GroupElement>> g(n);
  std::vector<bool> seen(n, false);
  std::size_t k = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (seen[r]) continue;
    seen[r] = true;
    if (!roots.empty()) g[r] = roots[k];
    ++k;
    std::vector<std::size_t> queue{r};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t v = queue[qi];
      for (std::size_t e = 0; e < sh.ends.size(); ++e) {
        const auto [s, t] = sh.ends[e];
        if (s == v && !seen[t]) {
          seen[t] = true;
          if (!roots.empty()) g[t] = compose(compose(inverse(c1.values[e]), *g[s]), c2.values[e]);
          queue.push_back(t);
        } else if (t == v && !seen[s]) {
          seen[s] = true;
          if (!roots.empty()) g[s] = compose(compose(c1.values[e], *g[t]), inverse(c2.values[e]));
          queue.push_back(s);
        }
      }
    }
  }
  if (components) *components = k;
  std::vector<GroupElement> out;
  if (!roots.empty())
    for (auto& x : g) out.push_back(*x);
  return out;
}

// Random algebra direction of the given length.
GroupElement nudge(const Group& G, const GroupElement& x, double step, SeededRng& rng) {
  auto u = G.random_algebra(rng, 1.0);
  double norm = 0.0;
  for (double c : u.coords) norm += c * c;
  norm = std::sqrt(norm);
  for (double& c : u.coords) c *= step / norm;
  GroupElement out = compose(x, G.exp(u));
  if (G.component_count() > 1 && rng.coin(0.05)) out = compose(out, G.haar_sample(rng));
  return out;
}

}  // namespace

std::size_t HyphShape::vertex_index(Point p) const {
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (near(vertices[i], p)) return i;
  throw InvalidArgument("point is not a vertex of hyph " + id);
}

ShapePtr make_shape(std::string id, std::vector<Point> vertices,
                    std::vector<std::pair<std::size_t, std::size_t>> ends) {
  for (const auto& [a, b] : ends)
    if (a >= vertices.size() || b >= vertices.size()) throw InvalidArgument("edge endpoint is not a vertex");
  return std::make_shared<HyphShape>(HyphShape{std::move(id), std::move(vertices), std::move(ends)});
}

ShapePtr shape_of(const Hyph& h) {
  auto vs = h.vertices();
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  for (const auto& e : h.edges()) ends.emplace_back(h.vertex_index(e.start()), h.vertex_index(e.end()));
  return make_shape(fingerprint(h.to_json().dump()), std::move(vs), std::move(ends));
}

Json FiniteConnection::to_json() const { return values_json(*this); }
FiniteConnection FiniteConnection::from_json(const Json& j) { return values_from<FiniteConnection>(j, edge_count); }
Json FiniteGauge::to_json() const { return values_json(*this); }
FiniteGauge FiniteGauge::from_json(const Json& j) { return values_from<FiniteGauge>(j, vertex_count); }

FiniteConnection identity_connection(const Group& g, ShapePtr shape) {
  const std::size_t m = shape->edge_count();
  return {g, std::move(shape), std::vector<GroupElement>(m, g.identity())};
}

FiniteGauge identity_gauge(const Group& g, ShapePtr shape) {
  const std::size_t n = shape->vertices.size();
  return {g, std::move(shape), std::vector<GroupElement>(n, g.identity())};
}

FiniteConnection project_smooth(const HolonomyEvaluator& A, const Hyph& h) {
  FiniteConnection c{A.group(), shape_of(h), {}};
  for (const auto& w : h.edges()) c.values.push_back(A.holonomy(w));
  return c;
}

FiniteConnection project_embedded(const HolonomyEvaluator& A, const Trivialization& xi, const Hyph& h) {
  FiniteConnection c{A.group(), shape_of(h), {}};
  for (const auto& w : h.edges()) c.values.push_back(embedded_holonomy(A, xi, w));
  return c;
}

FiniteConnection random_generalized(const Group& g, ShapePtr shape, SeededRng& rng) {
  FiniteConnection c{g, std::move(shape), {}};
  for (std::size_t e = 0; e < c.shape->edge_count(); ++e) c.values.push_back(g.haar_sample(rng));
  return c;
}

FiniteGauge random_finite_gauge(const Group& g, ShapePtr shape, SeededRng& rng) {
  FiniteGauge out{g, std::move(shape), {}};
  for (std::size_t v = 0; v < out.shape->vertices.size(); ++v) out.values.push_back(g.haar_sample(rng));
  return out;
}

FiniteConnection act_gauge(const FiniteConnection& c, const FiniteGauge& g) {
  require_same(c.group, g.group, "act_gauge");
  require_shape(c.shape, g.shape, "act_gauge");
  FiniteConnection out{c.group, c.shape, {}};
  for (std::size_t e = 0; e < c.values.size(); ++e) {
    const auto [s, t] = c.shape->ends[e];
    out.values.push_back(compose(compose(inverse(g.values[s]), c.values[e]), g.values[t]));
  }
  return out;
}

FiniteGauge gauge_product(const FiniteGauge& g, const FiniteGauge& h) {
  require_same(g.group, h.group, "gauge_product");
  require_shape(g.shape, h.shape, "gauge_product");
  FiniteGauge out{g.group, g.shape, {}};
  for (std::size_t v = 0; v < g.values.size(); ++v) out.values.push_back(compose(g.values[v], h.values[v]));
  return out;
}

FiniteGauge gauge_conjugate(const FiniteGauge& g, const FiniteGauge& h) {
  require_same(g.group, h.group, "gauge_conjugate");
  require_shape(g.shape, h.shape, "gauge_conjugate");
  FiniteGauge out{g.group, g.shape, {}};
  for (std::size_t v = 0; v < g.values.size(); ++v) out.values.push_back(conjugate(g.values[v], h.values[v]));
  return out;
}

FiniteGauge restrict_gauge(const SmoothGauge& phi, ShapePtr shape) {
  FiniteGauge out{phi.group(), std::move(shape), {}};
  for (const auto& p : out.shape->vertices) out.values.push_back(phi.value(p));
  return out;
}

double max_edge_distance(const FiniteConnection& a, const FiniteConnection& b) {
  require_same(a.group, b.group, "max_edge_distance");
  if (a.values.size() != b.values.size()) throw InvalidArgument("max_edge_distance: edge counts differ");
  double d = 0.0;
  for (std::size_t e = 0; e < a.values.size(); ++e) d = std::max(d, op_norm_dist(a.values[e], b.values[e]));
  return d;
}

OrbitDistance orbit_distance(const FiniteConnection& c1, const FiniteConnection& c2, const OrbitSearch& opts,
                             SeededRng& rng) {
  require_same(c1.group, c2.group, "orbit_distance");
  require_shape(c1.shape, c2.shape, "orbit_distance");
  if (opts.budget == 0 || opts.restarts == 0) throw InvalidArgument("orbit_distance: budget must be positive");
  const Group& G = c1.group;
  const std::size_t n = c1.shape->vertices.size();
  OrbitDistance best{std::numeric_limits<double>::infinity(), 0, identity_gauge(G, c1.shape)};
  OrbitProblem prob(c1, c2);
  std::vector<GroupElement> all;
  if (G.is_finite()) all = G.elements();
  std::size_t comps = 0;
  tree_gauge(c1, c2, {}, &comps);
  auto keep = [&] {
    if (prob.max_obj() < best.distance) {
      best.distance = prob.max_obj();
      best.best.values = prob.gauge();
    }
  };

  // Restarts search the root values only: tree edges stay exact, so an orbit member is a
  // zero of the remaining edges. Half of the budget goes here.
  const std::size_t share = std::max<std::size_t>(1, opts.budget / (2 * opts.restarts));
  for (std::size_t r = 0; r < opts.restarts && best.distance > opts.tolerance; ++r) {
    const std::size_t stop = std::min(opts.budget, best.evaluations + share);
    std::vector<GroupElement> roots;
    for (std::size_t k = 0; k < comps; ++k) roots.push_back(r == 0 ? G.identity() : G.haar_sample(rng));
    prob.load(tree_gauge(c1, c2, roots));
    ++best.evaluations;
    double cur = prob.sum_obj();
    std::vector<double> step(comps, 0.5);
    for (bool live = true; live && best.evaluations < stop && prob.max_obj() > opts.tolerance;) {
      live = false;
      for (std::size_t k = 0; k < comps && best.evaluations < stop; ++k) {
        const std::size_t tries = G.is_finite() ? all.size() : 1;
        for (std::size_t i = 0; i < tries && best.evaluations < stop; ++i) {
          if (!G.is_finite() && step[k] < 1e-13) continue;
          auto trial = roots;
          trial[k] = G.is_finite() ? all[i] : nudge(G, roots[k], step[k], rng);
          auto gauge = tree_gauge(c1, c2, trial);
          OrbitProblem cand(c1, c2);
          cand.load(gauge);
          ++best.evaluations;
          const bool better = cand.sum_obj() < cur;
          if (better) {
            roots = std::move(trial);
            cur = cand.sum_obj();
            prob.load(gauge);
          }
          if (G.is_finite()) {
            live |= better;
          } else {
            live = true;
            step[k] *= better ? 1.5 : 0.8;
          }
        }
      }
    }
    keep();
  }

  // Coordinatewise refinement of the best gauge on all vertices, first on the smooth sum
  // of squares and then on the max itself.
  prob.load(best.best.values);
  for (int phase = 0; phase < 2 && best.distance > opts.tolerance; ++phase) {
    const bool use_max = phase == 1;
    if (G.is_finite()) {
      for (bool changed = true; changed && best.evaluations < opts.budget;) {
        changed = false;
        for (std::size_t v = 0; v < n; ++v)
          for (const auto& x : all) {
            if (best.evaluations >= opts.budget) break;
            ++best.evaluations;
            changed |= prob.try_move(v, x, use_max);
          }
      }
    } else {
      std::vector<double> step(n, use_max ? 1e-2 : 0.1);
      for (bool live = true; live && best.evaluations < opts.budget && prob.max_obj() > opts.tolerance;) {
        live = false;
        for (std::size_t v = 0; v < n && best.evaluations < opts.budget; ++v) {
          if (step[v] < 1e-13) continue;
          live = true;
          ++best.evaluations;
          step[v] *= prob.try_move(v, nudge(G, prob.gauge()[v], step[v], rng), use_max) ? 1.5 : 0.8;
        }
      }
    }
    keep();
  }
  return best;
}

FiniteGauge equivalence_witness(const Trivialization& xi1, const Trivialization& xi2, ShapePtr shape) {
  require_same(xi1.group(), xi2.group(), "equivalence_witness");
  FiniteGauge out{xi1.group(), std::move(shape), {}};
  for (const auto& p : out.shape->vertices) {
    if (!xi1.has(p) || !xi2.has(p)) throw InvalidArgument("equivalence_witness: vertex missing from a trivialization");
    out.values.push_back(compose(inverse(xi1.at(p)), xi2.at(p)));
  }
  return out;
}

}  // namespace holonomy
