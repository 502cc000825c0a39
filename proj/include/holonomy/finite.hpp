#pragma once

#include <memory>
#include <string>
#include <vector>

#include "holonomy/field.hpp"

namespace holonomy {

/// Combinatorial shape of a hyph: its vertices and, per edge, the indices of the start
/// and end vertices. `id` identifies the hyph in serialized data.
struct HyphShape {
  std::string id;
  std::vector<Point> vertices;
  std::vector<std::pair<std::size_t, std::size_t>> ends;

  std::size_t edge_count() const { return ends.size(); }
  std::size_t vertex_index(Point p) const;
  friend bool operator==(const HyphShape&, const HyphShape&) = default;
};

using ShapePtr = std::shared_ptr<const HyphShape>;

ShapePtr shape_of(const Hyph& h);
/// Shape from explicit endpoints (edges need not come from a registry).
ShapePtr make_shape(std::string id, std::vector<Point> vertices,
                    std::vector<std::pair<std::size_t, std::size_t>> ends);

/// A point of G^{#edges}: one group element per hyph edge, in hyph order.
struct FiniteConnection {
  Group group;
  ShapePtr shape;
  std::vector<GroupElement> values;

  Json to_json() const;
  static FiniteConnection from_json(const Json& j);
};

/// A point of G^{#vertices}.
struct FiniteGauge {
  Group group;
  ShapePtr shape;
  std::vector<GroupElement> values;

  const GroupElement& at(Point p) const { return values.at(shape->vertex_index(p)); }

  Json to_json() const;
  static FiniteGauge from_json(const Json& j);
};

FiniteConnection identity_connection(const Group& g, ShapePtr shape);
FiniteGauge identity_gauge(const Group& g, ShapePtr shape);

/// Holonomies of the hyph edges under a smooth connection.
FiniteConnection project_smooth(const HolonomyEvaluator& A, const Hyph& h);
/// Embedded holonomies Xi_s^-1 h_A Xi_t of the hyph edges.
FiniteConnection project_embedded(const HolonomyEvaluator& A, const Trivialization& xi, const Hyph& h);

/// Independent Haar entries (the truncation of the uniform measure on generalized connections).
FiniteConnection random_generalized(const Group& g, ShapePtr shape, SeededRng& rng);
FiniteGauge random_finite_gauge(const Group& g, ShapePtr shape, SeededRng& rng);

/// Right action: each edge value v becomes g_{start}^-1 v g_{end}.
FiniteConnection act_gauge(const FiniteConnection& c, const FiniteGauge& g);
/// Pointwise product g g'.
FiniteGauge gauge_product(const FiniteGauge& g, const FiniteGauge& h);
/// Action of gauges on gauges by pointwise conjugation: g' -> h^-1 g' h.
FiniteGauge gauge_conjugate(const FiniteGauge& g, const FiniteGauge& h);
/// Values of a smooth gauge at the vertices.
FiniteGauge restrict_gauge(const SmoothGauge& phi, ShapePtr shape);

/// Largest per-edge op_norm_dist.
double max_edge_distance(const FiniteConnection& a, const FiniteConnection& b);

struct OrbitSearch {
  std::size_t restarts = 8;
  std::size_t budget = 100000;  // objective evaluations, shared by all restarts
  double tolerance = 1e-12;     // stop once the objective is this small
};

struct OrbitDistance {
  double distance = 0.0;  // upper bound on the distance from orbit(c1) to c2
  std::size_t evaluations = 0;
  FiniteGauge best;
};

/// min over gauges g of max_edge_distance(act_gauge(c1, g), c2), by seeded restarts
/// (spanning-tree propagation from a random root value) followed by coordinatewise
/// local search on each vertex. Finite groups are searched exhaustively per coordinate.
OrbitDistance orbit_distance(const FiniteConnection& c1, const FiniteConnection& c2, const OrbitSearch& opts,
                             SeededRng& rng);

/// Gauge relating two embeddings: g_x = Xi1_x^-1 Xi2_x, so that
/// Xi2-embedded holonomy = g_start^-1 (Xi1-embedded holonomy) g_end.
FiniteGauge equivalence_witness(const Trivialization& xi1, const Trivialization& xi2, ShapePtr shape);

}  // namespace holonomy
