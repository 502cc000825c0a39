#pragma once

#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "holonomy/errors.hpp"

namespace holonomy {

using Json = nlohmann::json;

/// Chart is the open square (-4, 4)^2.
inline constexpr double kChartHalfWidth = 4.0;
/// Tolerance for matching user-supplied endpoints.
inline constexpr double kPointTol = 1e-9;

struct Point {
  double x = 0.0, y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);
bool near(Point a, Point b, double tol = kPointTol);

struct Segment {
  Point p0, p1;
};

/// Circular arc from angle0 to angle1 (signed sweep angle1 - angle0, |sweep| <= 2 pi).
/// A sweep of +-2 pi is a closed circle.
struct Arc {
  Point center;
  double radius = 1.0;
  double angle0 = 0.0;
  double angle1 = 0.0;

  double sweep() const { return angle1 - angle0; }
  bool closed() const;
  Point at(double s) const;  // s in [0, 1]
};

/// Accumulating chain of semicircles. Level j >= first_level is the semicircle of radius
/// 2^-j centred at apex + (3 * 2^-j, 0), running from apex + (2^(1-j), 0) to
/// apex + (2^(2-j), 0) over the upper half (sign +1) or lower half (sign -1). The sign
/// of level j is pattern[j mod pattern.size()]. The path starts at the apex, where the
/// levels accumulate, and ends at apex + (2^(2-first_level), 0).
struct WiggleTail {
  Point apex;
  int first_level = 1;
  std::vector<int> pattern;

  int sign(int level) const;
  /// Semicircle of one level, oriented outward.
  Arc level_arc(int level) const;
  /// Levels whose radius is at least min_radius, innermost first (path order).
  std::vector<int> levels(double min_radius) const;
  /// Path parameter interval [lo, hi] occupied by a level.
  std::pair<double, double> level_span(int level) const;
};

using Geometry = std::variant<Segment, Arc, WiggleTail>;

/// Immersive(r) edges carry their smoothness class as metadata (-1 = C^infinity).
/// NonImmersiveWitness edges are the reparametrisation t -> t^2 of a base edge.
struct ParamClass {
  enum class Kind { Immersive, NonImmersiveWitness };
  Kind kind = Kind::Immersive;
  int smoothness = -1;
  int base_id = 0;
};

struct PrimitiveEdge {
  int id = 0;
  Geometry geometry;
  ParamClass param;

  Point start() const;
  Point end() const;
  bool closed() const { return near(start(), end(), 0.0); }
  bool is_witness() const { return param.kind == ParamClass::Kind::NonImmersiveWitness; }
};

/// Append-only store of primitive edges; ids are 1, 2, ...
class EdgeRegistry {
 public:
  int add_segment(Point p0, Point p1);
  int add_arc(Point center, double radius, double angle0, double angle1);
  int add_tail(Point apex, int first_level, std::vector<int> pattern);
  /// Adds the t -> t^2 copy of a closed immersive edge.
  int add_witness(int base_id);
  int add(PrimitiveEdge e);

  const PrimitiveEdge& edge(int id) const;
  std::size_t size() const { return edges_.size(); }
  const std::vector<PrimitiveEdge>& edges() const { return edges_; }

  Json to_json() const;
  static EdgeRegistry from_json(const Json& j);

 private:
  std::vector<PrimitiveEdge> edges_;
};

using RegistryPtr = std::shared_ptr<EdgeRegistry>;

struct Letter {
  int id = 0;
  bool forward = true;
  friend bool operator==(const Letter&, const Letter&) = default;
};

/// A path as a word over oriented primitive edges, with cached endpoints. The empty word
/// is the identity at its base point.
class PathWord {
 public:
  PathWord() = default;
  static PathWord identity(Point at);
  static PathWord from_letters(const EdgeRegistry& reg, std::vector<Letter> letters);
  static PathWord single(const EdgeRegistry& reg, int id, bool forward = true);
  /// Signed ids: +id traverses edge id forward, -id backward.
  static PathWord from_signed(const EdgeRegistry& reg, const std::vector<int>& ids);

  const std::vector<Letter>& letters() const { return letters_; }
  Point start() const { return start_; }
  Point end() const { return end_; }
  bool empty() const { return letters_.empty(); }
  std::size_t size() const { return letters_.size(); }
  bool closed() const { return near(start_, end_, 0.0); }
  std::vector<int> signed_ids() const;

  friend bool operator==(const PathWord& a, const PathWord& b) {
    return a.letters_ == b.letters_ && a.start_ == b.start_ && a.end_ == b.end_;
  }

 private:
  friend PathWord concat(const PathWord&, const PathWord&);
  friend PathWord reduce(const PathWord&);
  friend PathWord inverse(const PathWord&);
  std::vector<Letter> letters_;
  Point start_, end_;
};

/// Concatenation without reduction; throws GeometryError if end(a) != start(b).
PathWord concat(const PathWord& a, const PathWord& b);
/// Free reduction: cancels adjacent (e,+)(e,-) and (e,-)(e,+) pairs.
PathWord reduce(const PathWord& w);
PathWord compose_paths(const PathWord& a, const PathWord& b);
PathWord inverse(const PathWord& w);

/// Signed area enclosed by a closed word (counterclockwise positive).
double signed_area(const EdgeRegistry& reg, const PathWord& w);
double enclosed_area(const EdgeRegistry& reg, const PathWord& w);

/// Point on an edge at its own parameter s in [0, 1].
Point edge_point(const PrimitiveEdge& e, double s);
/// True if every point of the edge lies inside the chart.
bool inside_chart(const PrimitiveEdge& e);

/// Witness of a free point: letter index in the edge word, parameter t in [0, 1] along
/// that letter in path direction, and direction +1 (towards t = 1) or -1.
struct FreePointWitness {
  std::size_t letter = 0;
  double t = 0.0;
  int dir = 1;
};

class Hyph {
 public:
  Hyph() = default;
  Hyph(RegistryPtr reg, std::vector<PathWord> edges,
       std::vector<std::optional<FreePointWitness>> witnesses = {});

  const EdgeRegistry& registry() const { return *reg_; }
  const RegistryPtr& registry_ptr() const { return reg_; }
  const std::vector<PathWord>& edges() const { return edges_; }
  const std::vector<std::optional<FreePointWitness>>& witnesses() const { return witnesses_; }
  std::size_t size() const { return edges_.size(); }
  /// All edge endpoints, deduplicated, in order of first appearance.
  std::vector<Point> vertices() const;
  /// Index of a vertex in vertices(); throws if absent.
  std::size_t vertex_index(Point p) const;

  Json to_json() const;
  static Hyph from_json(const Json& j);

 private:
  RegistryPtr reg_;
  std::vector<PathWord> edges_;
  std::vector<std::optional<FreePointWitness>> witnesses_;
};

struct HyphReport {
  bool ok = true;
  std::size_t offending = 0;  // 1-based index of the first edge without a free point
  std::string message;
  std::vector<FreePointWitness> witnesses;
};

/// Checks that every edge has a free point w.r.t. the edges before it. Supplied witnesses
/// are verified; missing ones are searched for.
HyphReport validate_hyph(const Hyph& h);

/// True when the edges meet at most in endpoints (segment/arc geometry only).
bool is_graph(const EdgeRegistry& reg, const std::vector<int>& ids, std::string* why = nullptr);

struct BaezSawin {
  Hyph hyph;                         // alpha_1 .. alpha_4, closed at the origin
  std::vector<PathWord> gamma_i;     // gamma_1 .. gamma_4 (origin to m')
  PathWord gamma;                    // m' to origin
  std::vector<int> delta_plus;       // ids of delta_j^+, j = 1..J
  std::vector<int> delta_minus;      // ids of delta_j^-
  std::vector<int> tails;            // tail ids per alpha_i
  std::vector<int> connectors;       // connector segment ids
  PathWord w12, w43;                 // alpha_1 alpha_2 and alpha_4 alpha_3
  int levels = 0;
};

BaezSawin build_baez_sawin(int J);

/// Counterclockwise circle of radius rho centred at `center`, starting and ending at the
/// point at `start_angle`.
PathWord circle_loop(EdgeRegistry& reg, Point center, double rho, double start_angle = std::numbers::pi);

/// The edge and its t -> t^2 reparametrisation.
std::pair<PathWord, PathWord> tau_square_pair(EdgeRegistry& reg, int edge_id);

}  // namespace holonomy
