#include "holonomy/paths.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace holonomy {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGeomTol = 1e-9;
// Tails are expanded down to this radius when their image matters.
constexpr double kTailMinRadius = 0x1.0p-50;

// cos/sin that are exact at multiples of pi/2, so constructed endpoints are exact dyadics.
std::pair<double, double> cos_sin(double a) {
  const double q = a / (0.5 * kPi);
  const double r = std::round(q);
  if (std::abs(q - r) < 1e-12) {
    const long k = ((static_cast<long>(r) % 4) + 4) % 4;
    static constexpr double c[4] = {1.0, 0.0, -1.0, 0.0};
    static constexpr double s[4] = {0.0, 1.0, 0.0, -1.0};
    return {c[k], s[k]};
  }
  return {std::cos(a), std::sin(a)};
}

double wrap2pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  return r;
}

double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
Point sub(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }

bool in_chart(Point p) { return std::abs(p.x) < kChartHalfWidth && std::abs(p.y) < kChartHalfWidth; }

Point letter_start(const EdgeRegistry& reg, const Letter& l) {
  const auto& e = reg.edge(l.id);
  return l.forward ? e.start() : e.end();
}

Point letter_end(const EdgeRegistry& reg, const Letter& l) {
  const auto& e = reg.edge(l.id);
  return l.forward ? e.end() : e.start();
}

Json point_json(Point p) { return Json::array({p.x, p.y}); }

Point point_from(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InvalidArgument("field '" + what + "' must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

// ---------------------------------------------------------------- coverage machinery

using Piece = std::variant<Segment, Arc>;

std::vector<Piece> expand(const PrimitiveEdge& e) {
  if (const auto* s = std::get_if<Segment>(&e.geometry)) return {*s};
  if (const auto* a = std::get_if<Arc>(&e.geometry)) return {*a};
  const auto& t = std::get<WiggleTail>(e.geometry);
  std::vector<Piece> out;
  for (int j : t.levels(kTailMinRadius)) out.push_back(t.level_arc(j));
  return out;
}

// A one-sided neighbourhood of the point at parameter s of a piece, heading in direction ds.
struct Germ {
  Piece piece;
  double s;
  int ds;
};

bool arc_contains(const Arc& a, double phi, double tol) {
  if (a.closed()) return true;
  const double S = a.sweep();
  double v = wrap2pi((phi - a.angle0) * (S > 0 ? 1.0 : -1.0));
  if (v > kTwoPi - tol) v = 0.0;
  return v <= std::abs(S) + tol;
}

bool same_circle(const Arc& a, const Arc& b) {
  return near(a.center, b.center, kGeomTol) && std::abs(a.radius - b.radius) < kGeomTol;
}

bool collinear(const Segment& a, const Segment& b) {
  const Point d = sub(a.p1, a.p0);
  const double len = std::sqrt(dot(d, d));
  return std::abs(cross(d, sub(b.p0, a.p0))) / len < kGeomTol &&
         std::abs(cross(d, sub(b.p1, a.p0))) / len < kGeomTol;
}

bool covers(const Piece& q, const Germ& g) {
  if (const auto* gs = std::get_if<Segment>(&g.piece)) {
    const auto* qs = std::get_if<Segment>(&q);
    if (!qs || !collinear(*gs, *qs)) return false;
    const Point d = sub(gs->p1, gs->p0);
    const Point x{gs->p0.x + g.s * d.x, gs->p0.y + g.s * d.y};
    const Point qd = sub(qs->p1, qs->p0);
    const double qlen2 = dot(qd, qd);
    const double u = dot(sub(x, qs->p0), qd) / qlen2;
    const double du = (dot(d, qd) > 0 ? 1 : -1) * g.ds;
    const double tol = kGeomTol / std::sqrt(qlen2);
    if (u < -tol || u > 1 + tol) return false;
    return du > 0 ? u < 1 - tol : u > tol;
  }
  const auto& ga = std::get<Arc>(g.piece);
  const auto* qa = std::get_if<Arc>(&q);
  if (!qa || !same_circle(ga, *qa)) return false;
  if (qa->closed()) return true;
  const double phi = ga.angle0 + g.s * ga.sweep();
  const double dphi = (ga.sweep() > 0 ? 1 : -1) * g.ds;
  const double S = qa->sweep();
  const double sgn = S > 0 ? 1.0 : -1.0;
  const double tol = kGeomTol / qa->radius;
  double v = wrap2pi((phi - qa->angle0) * sgn);
  if (v > kTwoPi - tol) v = 0.0;
  const double dv = dphi * sgn;
  if (v > std::abs(S) + tol) return false;
  return dv > 0 ? v < std::abs(S) - tol : v > tol;
}

// Parameter intervals of piece p covered by piece q.
std::vector<std::pair<double, double>> covered_intervals(const Piece& p, const Piece& q) {
  std::vector<std::pair<double, double>> out;
  auto clip = [&](double a, double b) {
    const double lo = std::max(0.0, std::min(a, b)), hi = std::min(1.0, std::max(a, b));
    if (hi > lo) out.emplace_back(lo, hi);
  };
  if (const auto* ps = std::get_if<Segment>(&p)) {
    const auto* qs = std::get_if<Segment>(&q);
    if (!qs || !collinear(*ps, *qs)) return out;
    const Point d = sub(ps->p1, ps->p0);
    const double l2 = dot(d, d);
    clip(dot(sub(qs->p0, ps->p0), d) / l2, dot(sub(qs->p1, ps->p0), d) / l2);
    return out;
  }
  const auto& pa = std::get<Arc>(p);
  const auto* qa = std::get_if<Arc>(&q);
  if (!qa || !same_circle(pa, *qa)) return out;
  if (qa->closed()) {
    clip(0.0, 1.0);
    return out;
  }
  const double lo = std::min(qa->angle0, qa->angle1), hi = std::max(qa->angle0, qa->angle1);
  for (int k = -3; k <= 3; ++k)
    clip((lo + kTwoPi * k - pa.angle0) / pa.sweep(), (hi + kTwoPi * k - pa.angle0) / pa.sweep());
  return out;
}

// Largest uncovered open gap of [0, 1]; returns its midpoint if wider than the tolerance.
std::optional<double> free_gap(std::vector<std::pair<double, double>> iv) {
  std::sort(iv.begin(), iv.end());
  double reach = 0.0, best_len = 0.0, best_mid = 0.0;
  for (const auto& [lo, hi] : iv) {
    if (lo - reach > best_len) {
      best_len = lo - reach;
      best_mid = 0.5 * (lo + reach);
    }
    reach = std::max(reach, hi);
  }
  if (1.0 - reach > best_len) {
    best_len = 1.0 - reach;
    best_mid = 0.5 * (1.0 + reach);
  }
  if (best_len > 1e-9) return best_mid;
  return std::nullopt;
}

bool eventually_equal(const WiggleTail& a, const WiggleTail& b) {
  const std::size_t pa = a.pattern.size(), pb = b.pattern.size();
  const std::size_t period = std::lcm(pa, pb);
  const int from = std::max(a.first_level, b.first_level);
  for (std::size_t k = 0; k < period; ++k)
    if (a.sign(from + static_cast<int>(k)) != b.sign(from + static_cast<int>(k))) return false;
  return true;
}

struct Earlier {
  std::vector<Piece> pieces;
  std::vector<const WiggleTail*> tails;
  std::vector<int> witness_bases;
};

Earlier collect(const EdgeRegistry& reg, const std::vector<PathWord>& edges, std::size_t upto) {
  Earlier out;
  for (std::size_t i = 0; i < upto; ++i)
    for (const auto& l : edges[i].letters()) {
      const auto& e = reg.edge(l.id);
      auto ps = expand(e);
      out.pieces.insert(out.pieces.end(), ps.begin(), ps.end());
      if (const auto* t = std::get_if<WiggleTail>(&e.geometry)) out.tails.push_back(t);
      if (e.is_witness()) out.witness_bases.push_back(e.param.base_id);
    }
  return out;
}

bool germ_free(const Earlier& earlier, const Germ& g) {
  for (const auto& q : earlier.pieces)
    if (covers(q, g)) return false;
  return true;
}

// Checks a single witness; returns an empty string when the germ is free.
std::string check_witness(const EdgeRegistry& reg, const PathWord& w, const FreePointWitness& fw,
                          const Earlier& earlier) {
  if (fw.letter >= w.size()) return "witness letter index out of range";
  if (!(fw.t >= 0.0 && fw.t <= 1.0)) return "witness parameter outside [0, 1]";
  if (fw.dir != 1 && fw.dir != -1) return "witness direction must be +1 or -1";
  if ((fw.t == 0.0 && fw.dir < 0) || (fw.t == 1.0 && fw.dir > 0)) return "witness direction leaves the letter";
  const Letter& l = w.letters()[fw.letter];
  const auto& e = reg.edge(l.id);
  const double s = l.forward ? fw.t : 1.0 - fw.t;
  const int ds = l.forward ? fw.dir : -fw.dir;

  if (const auto* tail = std::get_if<WiggleTail>(&e.geometry)) {
    if (s == 0.0) {
      for (const auto* other : earlier.tails)
        if (near(other->apex, tail->apex, kGeomTol) && eventually_equal(*tail, *other))
          return "tail germ at the apex repeats an earlier tail";
      return {};
    }
    for (int j : tail->levels(kTailMinRadius)) {
      const auto [lo, hi] = tail->level_span(j);
      const bool inside = ds > 0 ? (lo <= s && s < hi) : (lo < s && s <= hi);
      if (!inside) continue;
      const Germ g{tail->level_arc(j), (s - lo) / (hi - lo), ds};
      return germ_free(earlier, g) ? std::string{} : "witness germ is covered by an earlier edge";
    }
    return "witness lies too close to the tail apex";
  }
  if (e.is_witness() && s == 0.0 && ds > 0) {
    for (int b : earlier.witness_bases)
      if (b == e.param.base_id) return "non-immersive germ repeats an earlier edge";
    return {};
  }
  const Germ g{expand(e).front(), s, ds};
  return germ_free(earlier, g) ? std::string{} : "witness germ is covered by an earlier edge";
}

std::optional<FreePointWitness> search_witness(const EdgeRegistry& reg, const PathWord& w, const Earlier& earlier) {
  for (std::size_t k = 0; k < w.size(); ++k) {
    const Letter& l = w.letters()[k];
    const auto& e = reg.edge(l.id);
    const FreePointWitness at_start{k, l.forward ? 0.0 : 1.0, l.forward ? 1 : -1};
    if (std::holds_alternative<WiggleTail>(e.geometry)) {
      if (check_witness(reg, w, at_start, earlier).empty()) return at_start;
      continue;
    }
    if (e.is_witness() && check_witness(reg, w, at_start, earlier).empty()) return at_start;
    const Piece p = expand(e).front();
    std::vector<std::pair<double, double>> iv;
    for (const auto& q : earlier.pieces) {
      auto c = covered_intervals(p, q);
      iv.insert(iv.end(), c.begin(), c.end());
    }
    if (auto gap = free_gap(std::move(iv))) {
      const double t = l.forward ? *gap : 1.0 - *gap;
      return FreePointWitness{k, t, 1};
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- intersections

std::vector<Point> intersections(const Piece& a, const Piece& b, bool& overlap) {
  overlap = false;
  std::vector<Point> pts;
  const auto* sa = std::get_if<Segment>(&a);
  const auto* sb = std::get_if<Segment>(&b);
  const auto* aa = std::get_if<Arc>(&a);
  const auto* ab = std::get_if<Arc>(&b);
  if (sa && sb) {
    const Point r = sub(sa->p1, sa->p0), s = sub(sb->p1, sb->p0);
    const double den = cross(r, s);
    if (std::abs(den) < 1e-14 * std::sqrt(dot(r, r) * dot(s, s))) {
      if (!collinear(*sa, *sb)) return pts;
      auto iv = covered_intervals(a, b);
      const double len = std::sqrt(dot(r, r));
      for (const auto& [lo, hi] : iv)
        if ((hi - lo) * len > kGeomTol) overlap = true;
      for (Point p : {sb->p0, sb->p1}) {
        const double u = dot(sub(p, sa->p0), r) / dot(r, r);
        if (u > -kGeomTol && u < 1 + kGeomTol) pts.push_back(p);
      }
      for (Point p : {sa->p0, sa->p1}) {
        const double u = dot(sub(p, sb->p0), s) / dot(s, s);
        if (u > -kGeomTol && u < 1 + kGeomTol) pts.push_back(p);
      }
      return pts;
    }
    const Point qp = sub(sb->p0, sa->p0);
    const double t = cross(qp, s) / den, u = cross(qp, r) / den;
    if (t > -kGeomTol && t < 1 + kGeomTol && u > -kGeomTol && u < 1 + kGeomTol)
      pts.push_back({sa->p0.x + t * r.x, sa->p0.y + t * r.y});
    return pts;
  }
  if (aa && sb) return intersections(b, a, overlap);
  if (sa && ab) {
    const Point d = sub(sa->p1, sa->p0), f = sub(sa->p0, ab->center);
    const double A = dot(d, d), B = 2 * dot(f, d), C = dot(f, f) - ab->radius * ab->radius;
    const double disc = B * B - 4 * A * C;
    if (disc < -1e-12) return pts;
    const double sq = std::sqrt(std::max(0.0, disc));
    for (double u : {(-B - sq) / (2 * A), (-B + sq) / (2 * A)}) {
      if (u < -kGeomTol || u > 1 + kGeomTol) continue;
      const Point p{sa->p0.x + u * d.x, sa->p0.y + u * d.y};
      if (arc_contains(*ab, std::atan2(p.y - ab->center.y, p.x - ab->center.x), kGeomTol / ab->radius))
        pts.push_back(p);
    }
    return pts;
  }
  if (same_circle(*aa, *ab)) {
    for (const auto& [lo, hi] : covered_intervals(a, b))
      if ((hi - lo) * std::abs(aa->sweep()) * aa->radius > kGeomTol) overlap = true;
    for (Point p : {ab->at(0.0), ab->at(1.0)})
      if (arc_contains(*aa, std::atan2(p.y - aa->center.y, p.x - aa->center.x), kGeomTol)) pts.push_back(p);
    for (Point p : {aa->at(0.0), aa->at(1.0)})
      if (arc_contains(*ab, std::atan2(p.y - ab->center.y, p.x - ab->center.x), kGeomTol)) pts.push_back(p);
    return pts;
  }
  const double d = distance(aa->center, ab->center);
  const double r1 = aa->radius, r2 = ab->radius;
  if (d > r1 + r2 + kGeomTol || d < std::abs(r1 - r2) - kGeomTol || d < kGeomTol) return pts;
  const double x = (r1 * r1 - r2 * r2 + d * d) / (2 * d);
  const double h = std::sqrt(std::max(0.0, r1 * r1 - x * x));
  const Point u{(ab->center.x - aa->center.x) / d, (ab->center.y - aa->center.y) / d};
  const Point m{aa->center.x + x * u.x, aa->center.y + x * u.y};
  for (double sgn : {1.0, -1.0}) {
    const Point p{m.x - sgn * h * u.y, m.y + sgn * h * u.x};
    if (arc_contains(*aa, std::atan2(p.y - aa->center.y, p.x - aa->center.x), kGeomTol / r1) &&
        arc_contains(*ab, std::atan2(p.y - ab->center.y, p.x - ab->center.x), kGeomTol / r2))
      pts.push_back(p);
    if (h == 0.0) break;
  }
  return pts;
}

}  // namespace

// ---------------------------------------------------------------- basic geometry

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }
bool near(Point a, Point b, double tol) { return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol; }

bool Arc::closed() const { return std::abs(std::abs(sweep()) - kTwoPi) < 1e-12; }

Point Arc::at(double s) const {
  if (closed() && s == 1.0) s = 0.0;
  const auto [c, sn] = cos_sin(angle0 + s * sweep());
  return {center.x + radius * c, center.y + radius * sn};
}

int WiggleTail::sign(int level) const {
  const int p = static_cast<int>(pattern.size());
  return pattern[((level % p) + p) % p];
}

Arc WiggleTail::level_arc(int level) const {
  const double r = std::ldexp(1.0, -level);
  return Arc{{apex.x + 3.0 * r, apex.y}, r, kPi, sign(level) > 0 ? 0.0 : kTwoPi};
}

std::vector<int> WiggleTail::levels(double min_radius) const {
  std::vector<int> out;
  for (int j = first_level; j < first_level + 400 && std::ldexp(1.0, -j) >= min_radius; ++j) out.push_back(j);
  std::reverse(out.begin(), out.end());
  return out;
}

std::pair<double, double> WiggleTail::level_span(int level) const {
  return {std::ldexp(1.0, first_level - 1 - level), std::ldexp(1.0, first_level - level)};
}

Point PrimitiveEdge::start() const {
  if (const auto* s = std::get_if<Segment>(&geometry)) return s->p0;
  if (const auto* a = std::get_if<Arc>(&geometry)) return a->at(0.0);
  return std::get<WiggleTail>(geometry).apex;
}

Point PrimitiveEdge::end() const {
  if (const auto* s = std::get_if<Segment>(&geometry)) return s->p1;
  if (const auto* a = std::get_if<Arc>(&geometry)) return a->at(1.0);
  const auto& t = std::get<WiggleTail>(geometry);
  return {t.apex.x + std::ldexp(1.0, 2 - t.first_level), t.apex.y};
}

Point edge_point(const PrimitiveEdge& e, double s) {
  if (const auto* seg = std::get_if<Segment>(&e.geometry))
    return {seg->p0.x + s * (seg->p1.x - seg->p0.x), seg->p0.y + s * (seg->p1.y - seg->p0.y)};
  if (const auto* a = std::get_if<Arc>(&e.geometry)) return a->at(s);
  const auto& t = std::get<WiggleTail>(e.geometry);
  if (s <= 0.0) return t.apex;
  for (int j : t.levels(kTailMinRadius)) {
    const auto [lo, hi] = t.level_span(j);
    if (s >= lo && s <= hi) return t.level_arc(j).at((s - lo) / (hi - lo));
  }
  return t.apex;
}

bool inside_chart(const PrimitiveEdge& e) {
  if (const auto* s = std::get_if<Segment>(&e.geometry)) return in_chart(s->p0) && in_chart(s->p1);
  if (const auto* a = std::get_if<Arc>(&e.geometry)) {
    if (!in_chart(a->at(0.0)) || !in_chart(a->at(1.0))) return false;
    for (int k = 0; k < 4; ++k) {
      const double phi = k * 0.5 * kPi;
      if (arc_contains(*a, phi, 0.0)) {
        const auto [c, sn] = cos_sin(phi);
        if (!in_chart({a->center.x + a->radius * c, a->center.y + a->radius * sn})) return false;
      }
    }
    return true;
  }
  const auto& t = std::get<WiggleTail>(e.geometry);
  const double w = std::ldexp(1.0, 2 - t.first_level), h = std::ldexp(1.0, -t.first_level);
  return in_chart(t.apex) && in_chart({t.apex.x + w, t.apex.y + h}) && in_chart({t.apex.x + w, t.apex.y - h});
}

// ---------------------------------------------------------------- registry

int EdgeRegistry::add(PrimitiveEdge e) {
  if (const auto* s = std::get_if<Segment>(&e.geometry)) {
    if (distance(s->p0, s->p1) <= kGeomTol) throw GeometryError("segment has zero length");
  } else if (const auto* a = std::get_if<Arc>(&e.geometry)) {
    if (!(a->radius > 0)) throw GeometryError("arc radius must be positive");
    const double sw = std::abs(a->sweep());
    if (!(sw > 1e-12) || sw > kTwoPi + 1e-12) throw GeometryError("arc sweep must lie in (0, 2 pi]");
  } else {
    const auto& t = std::get<WiggleTail>(e.geometry);
    if (t.first_level < 1 || t.pattern.empty()) throw GeometryError("tail needs first_level >= 1 and a pattern");
    for (int s : t.pattern)
      if (s != 1 && s != -1) throw GeometryError("tail pattern entries must be +1 or -1");
  }
  if (!inside_chart(e)) throw GeometryError("edge exits the chart");
  if (e.is_witness()) {
    const auto& base = edge(e.param.base_id);
    if (base.is_witness()) throw GeometryError("witness of a witness edge");
  }
  e.id = static_cast<int>(edges_.size()) + 1;
  edges_.push_back(std::move(e));
  return edges_.back().id;
}

int EdgeRegistry::add_segment(Point p0, Point p1) { return add({0, Segment{p0, p1}, {}}); }

int EdgeRegistry::add_arc(Point center, double radius, double angle0, double angle1) {
  return add({0, Arc{center, radius, angle0, angle1}, {}});
}

int EdgeRegistry::add_tail(Point apex, int first_level, std::vector<int> pattern) {
  return add({0, WiggleTail{apex, first_level, std::move(pattern)}, {}});
}

int EdgeRegistry::add_witness(int base_id) {
  const auto& base = edge(base_id);
  if (!base.closed()) throw GeometryError("tau-square copy needs a closed edge");
  if (base.is_witness()) throw GeometryError("tau-square copy needs an immersive edge");
  PrimitiveEdge w{0, base.geometry, {ParamClass::Kind::NonImmersiveWitness, base.param.smoothness, base_id}};
  return add(std::move(w));
}

const PrimitiveEdge& EdgeRegistry::edge(int id) const {
  if (id < 1 || static_cast<std::size_t>(id) > edges_.size())
    throw InvalidArgument("unknown edge id " + std::to_string(id));
  return edges_[id - 1];
}

Json EdgeRegistry::to_json() const {
  Json out = Json::array();
  for (const auto& e : edges_) {
    Json j;
    j["id"] = e.id;
    if (const auto* s = std::get_if<Segment>(&e.geometry)) {
      j["kind"] = "segment";
      j["p0"] = point_json(s->p0);
      j["p1"] = point_json(s->p1);
    } else if (const auto* a = std::get_if<Arc>(&e.geometry)) {
      j["kind"] = "arc";
      j["center"] = point_json(a->center);
      j["radius"] = a->radius;
      j["angle0"] = a->angle0;
      j["angle1"] = a->angle1;
    } else {
      const auto& t = std::get<WiggleTail>(e.geometry);
      j["kind"] = "tail";
      j["apex"] = point_json(t.apex);
      j["first_level"] = t.first_level;
      j["pattern"] = t.pattern;
    }
    if (e.is_witness()) {
      j["param"] = "nonimmersive";
      j["base"] = e.param.base_id;
    } else {
      j["param"] = "immersive";
      j["r"] = e.param.smoothness;
    }
    out.push_back(j);
  }
  return out;
}

EdgeRegistry EdgeRegistry::from_json(const Json& j) {
  if (!j.is_array()) throw InvalidArgument("field 'edges' must be an array");
  EdgeRegistry reg;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& e = j[i];
    const std::string where = "edges[" + std::to_string(i) + "]";
    if (!e.is_object()) throw InvalidArgument("field '" + where + "' must be an object");
    auto get = [&](const char* key) -> const Json& {
      if (!e.contains(key)) throw InvalidArgument("missing field '" + where + "." + key + "'");
      return e.at(key);
    };
    const std::string kind = get("kind").get<std::string>();
    const std::string param = e.value("param", std::string("immersive"));
    PrimitiveEdge pe;
    if (param == "nonimmersive") {
      const int base = get("base").get<int>();
      const int id = reg.add_witness(base);
      if (e.contains("id") && e.at("id").get<int>() != id)
        throw InvalidArgument("field '" + where + ".id' must equal its position (" + std::to_string(id) + ")");
      continue;
    }
    if (param != "immersive") throw InvalidArgument("field '" + where + ".param' has unknown value '" + param + "'");
    if (kind == "segment") {
      pe.geometry = Segment{point_from(get("p0"), where + ".p0"), point_from(get("p1"), where + ".p1")};
    } else if (kind == "arc") {
      pe.geometry = Arc{point_from(get("center"), where + ".center"), get("radius").get<double>(),
                        get("angle0").get<double>(), get("angle1").get<double>()};
    } else if (kind == "tail") {
      pe.geometry = WiggleTail{point_from(get("apex"), where + ".apex"), get("first_level").get<int>(),
                               get("pattern").get<std::vector<int>>()};
    } else {
      throw InvalidArgument("field '" + where + ".kind' has unknown value '" + kind + "'");
    }
    pe.param.smoothness = e.value("r", -1);
    const int id = reg.add(std::move(pe));
    if (e.contains("id") && e.at("id").get<int>() != id)
      throw InvalidArgument("field '" + where + ".id' must equal its position (" + std::to_string(id) + ")");
  }
  return reg;
}

// ---------------------------------------------------------------- words

PathWord PathWord::identity(Point at) {
  PathWord w;
  w.start_ = w.end_ = at;
  return w;
}

PathWord PathWord::from_letters(const EdgeRegistry& reg, std::vector<Letter> letters) {
  if (letters.empty()) throw InvalidArgument("from_letters: empty word has no base point; use identity()");
  for (std::size_t i = 0; i + 1 < letters.size(); ++i)
    if (!near(letter_end(reg, letters[i]), letter_start(reg, letters[i + 1])))
      throw GeometryError("letters " + std::to_string(i) + " and " + std::to_string(i + 1) + " are not composable");
  PathWord w;
  w.start_ = letter_start(reg, letters.front());
  w.end_ = letter_end(reg, letters.back());
  w.letters_ = std::move(letters);
  return w;
}

PathWord PathWord::single(const EdgeRegistry& reg, int id, bool forward) {
  return from_letters(reg, {Letter{id, forward}});
}

PathWord PathWord::from_signed(const EdgeRegistry& reg, const std::vector<int>& ids) {
  std::vector<Letter> letters;
  for (int s : ids) {
    if (s == 0) throw InvalidArgument("edge id 0 is not allowed in a word");
    letters.push_back({std::abs(s), s > 0});
  }
  return from_letters(reg, std::move(letters));
}

std::vector<int> PathWord::signed_ids() const {
  std::vector<int> out;
  for (const auto& l : letters_) out.push_back(l.forward ? l.id : -l.id);
  return out;
}

PathWord concat(const PathWord& a, const PathWord& b) {
  if (!near(a.end_, b.start_)) throw GeometryError("compose: end of first path does not match start of second");
  PathWord w;
  w.start_ = a.start_;
  w.end_ = b.end_;
  w.letters_ = a.letters_;
  w.letters_.insert(w.letters_.end(), b.letters_.begin(), b.letters_.end());
  if (a.empty()) w.start_ = b.start_;
  if (b.empty()) w.end_ = a.end_;
  return w;
}

PathWord reduce(const PathWord& w) {
  PathWord out;
  out.start_ = w.start_;
  out.end_ = w.end_;
  for (const auto& l : w.letters_) {
    if (!out.letters_.empty() && out.letters_.back().id == l.id && out.letters_.back().forward != l.forward)
      out.letters_.pop_back();
    else
      out.letters_.push_back(l);
  }
  if (out.letters_.empty()) out.end_ = out.start_;
  return out;
}

PathWord compose_paths(const PathWord& a, const PathWord& b) { return reduce(concat(a, b)); }

PathWord inverse(const PathWord& w) {
  PathWord out;
  out.start_ = w.end_;
  out.end_ = w.start_;
  for (auto it = w.letters_.rbegin(); it != w.letters_.rend(); ++it) out.letters_.push_back({it->id, !it->forward});
  return out;
}

namespace {

double piece_area(const Piece& p) {
  if (const auto* s = std::get_if<Segment>(&p)) return 0.5 * cross(s->p0, s->p1);
  const auto& a = std::get<Arc>(p);
  const double r = a.radius;
  const double integral = r * r * a.sweep() + r * a.center.x * (std::sin(a.angle1) - std::sin(a.angle0)) -
                          r * a.center.y * (std::cos(a.angle1) - std::cos(a.angle0));
  return 0.5 * integral;
}

}  // namespace

double signed_area(const EdgeRegistry& reg, const PathWord& w) {
  if (!w.closed()) throw GeometryError("enclosed area needs a closed path");
  double total = 0.0;
  for (const auto& l : w.letters()) {
    double a = 0.0;
    for (const auto& p : expand(reg.edge(l.id))) a += piece_area(p);
    total += l.forward ? a : -a;
  }
  return total;
}

double enclosed_area(const EdgeRegistry& reg, const PathWord& w) { return std::abs(signed_area(reg, w)); }

// ---------------------------------------------------------------- hyphs

Hyph::Hyph(RegistryPtr reg, std::vector<PathWord> edges, std::vector<std::optional<FreePointWitness>> witnesses)
    : reg_(std::move(reg)), edges_(std::move(edges)), witnesses_(std::move(witnesses)) {
  if (!reg_) throw InvalidArgument("hyph needs an edge registry");
  for (const auto& e : edges_)
    if (e.empty()) throw InvalidArgument("hyph edges must be nonempty paths");
  if (witnesses_.empty()) witnesses_.resize(edges_.size());
  if (witnesses_.size() != edges_.size()) throw InvalidArgument("one witness slot per hyph edge expected");
}

std::vector<Point> Hyph::vertices() const {
  std::vector<Point> out;
  auto add = [&](Point p) {
    for (const auto& q : out)
      if (near(p, q)) return;
    out.push_back(p);
  };
  for (const auto& e : edges_) {
    add(e.start());
    add(e.end());
  }
  return out;
}

std::size_t Hyph::vertex_index(Point p) const {
  const auto vs = vertices();
  for (std::size_t i = 0; i < vs.size(); ++i)
    if (near(vs[i], p)) return i;
  throw InvalidArgument("point is not a vertex of the hyph");
}

Json Hyph::to_json() const {
  Json words = Json::array(), wit = Json::array();
  for (const auto& e : edges_) words.push_back(e.signed_ids());
  for (const auto& w : witnesses_) {
    if (w)
      wit.push_back({{"letter", w->letter}, {"t", w->t}, {"dir", w->dir}});
    else
      wit.push_back(nullptr);
  }
  return {{"edges", reg_->to_json()}, {"hyph", words}, {"witnesses", wit}};
}

Hyph Hyph::from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("hyph JSON must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "edges" && it.key() != "hyph" && it.key() != "witnesses")
      throw InvalidArgument("unknown field '" + it.key() + "'");
  if (!j.contains("edges")) throw InvalidArgument("missing field 'edges'");
  if (!j.contains("hyph")) throw InvalidArgument("missing field 'hyph'");
  auto reg = std::make_shared<EdgeRegistry>(EdgeRegistry::from_json(j.at("edges")));
  std::vector<PathWord> words;
  const Json& hs = j.at("hyph");
  if (!hs.is_array()) throw InvalidArgument("field 'hyph' must be an array of signed id arrays");
  for (const auto& w : hs) words.push_back(PathWord::from_signed(*reg, w.get<std::vector<int>>()));
  std::vector<std::optional<FreePointWitness>> wit(words.size());
  if (j.contains("witnesses")) {
    const Json& ws = j.at("witnesses");
    if (!ws.is_array() || ws.size() != words.size())
      throw InvalidArgument("field 'witnesses' must have one entry per hyph edge");
    for (std::size_t i = 0; i < ws.size(); ++i) {
      if (ws[i].is_null()) continue;
      const std::string where = "witnesses[" + std::to_string(i) + "]";
      if (!ws[i].contains("letter") || !ws[i].contains("t") || !ws[i].contains("dir"))
        throw InvalidArgument("field '" + where + "' needs letter, t and dir");
      wit[i] = FreePointWitness{ws[i].at("letter").get<std::size_t>(), ws[i].at("t").get<double>(),
                                ws[i].at("dir").get<int>()};
    }
  }
  return Hyph(std::move(reg), std::move(words), std::move(wit));
}

HyphReport validate_hyph(const Hyph& h) {
  HyphReport rep;
  const auto& reg = h.registry();
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Earlier earlier = collect(reg, h.edges(), i);
    const auto& given = h.witnesses()[i];
    std::optional<FreePointWitness> found;
    if (given) {
      const std::string why = check_witness(reg, h.edges()[i], *given, earlier);
      if (why.empty()) {
        found = given;
      } else {
        rep.ok = false;
        rep.offending = i + 1;
        rep.message = "edge " + std::to_string(i + 1) + ": " + why;
        return rep;
      }
    } else {
      found = search_witness(reg, h.edges()[i], earlier);
    }
    if (!found) {
      rep.ok = false;
      rep.offending = i + 1;
      rep.message = "edge " + std::to_string(i + 1) + " has no free point";
      return rep;
    }
    rep.witnesses.push_back(*found);
  }
  return rep;
}

bool is_graph(const EdgeRegistry& reg, const std::vector<int>& ids, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (std::size_t a = 0; a < ids.size(); ++a) {
    const auto& ea = reg.edge(ids[a]);
    if (std::holds_alternative<WiggleTail>(ea.geometry))
      throw GeometryError("unsupported geometry pair: graph checks need segments and arcs");
    for (std::size_t b = a + 1; b < ids.size(); ++b) {
      const auto& eb = reg.edge(ids[b]);
      if (std::holds_alternative<WiggleTail>(eb.geometry))
        throw GeometryError("unsupported geometry pair: graph checks need segments and arcs");
      bool overlap = false;
      const auto pts = intersections(expand(ea).front(), expand(eb).front(), overlap);
      const std::string pair = "edges " + std::to_string(ids[a]) + " and " + std::to_string(ids[b]);
      if (overlap) return fail(pair + " overlap");
      for (Point p : pts) {
        const bool end_a = near(p, ea.start(), 1e-7) || near(p, ea.end(), 1e-7);
        const bool end_b = near(p, eb.start(), 1e-7) || near(p, eb.end(), 1e-7);
        if (!end_a || !end_b) return fail(pair + " cross away from their endpoints");
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------- builders

BaezSawin build_baez_sawin(int J) {
  if (J < 1) throw InvalidArgument("build_baez_sawin: J must be >= 1");
  if (J > 40) throw InvalidArgument("build_baez_sawin: J must be <= 40");
  auto reg = std::make_shared<EdgeRegistry>();
  BaezSawin bs;
  bs.levels = J;
  const Point m{0.0, 0.0};
  // sign patterns by level: all +, all -, complement of alternating, alternating
  const std::vector<std::vector<int>> patterns = {{1}, {-1}, {-1, 1}, {1, -1}};
  for (const auto& p : patterns) bs.tails.push_back(reg->add_tail(m, J + 1, p));
  for (int j = 1; j <= J; ++j) {
    const double r = std::ldexp(1.0, -j);
    bs.delta_plus.push_back(reg->add_arc({3.0 * r, 0.0}, r, kPi, 0.0));
    bs.delta_minus.push_back(reg->add_arc({3.0 * r, 0.0}, r, kPi, kTwoPi));
  }
  bs.connectors.push_back(reg->add_segment({2.0, 0.0}, {2.0, 2.0}));
  bs.connectors.push_back(reg->add_segment({2.0, 2.0}, {-1.0, 2.0}));
  bs.connectors.push_back(reg->add_segment({-1.0, 2.0}, {-1.0, 0.0}));
  const int g = reg->add_segment({-1.0, 0.0}, m);
  bs.gamma = PathWord::single(*reg, g);

  std::vector<PathWord> alphas;
  for (int i = 0; i < 4; ++i) {
    const auto& tail = std::get<WiggleTail>(reg->edge(bs.tails[i]).geometry);
    std::vector<Letter> letters = {{bs.tails[i], true}};
    for (int j = J; j >= 1; --j)
      letters.push_back({tail.sign(j) > 0 ? bs.delta_plus[j - 1] : bs.delta_minus[j - 1], true});
    for (int c : bs.connectors) letters.push_back({c, true});
    bs.gamma_i.push_back(PathWord::from_letters(*reg, letters));
    alphas.push_back(concat(bs.gamma_i.back(), bs.gamma));
  }
  bs.w12 = concat(alphas[0], alphas[1]);
  bs.w43 = concat(alphas[3], alphas[2]);
  std::vector<std::optional<FreePointWitness>> wit(4, FreePointWitness{0, 0.0, 1});
  bs.hyph = Hyph(reg, alphas, wit);
  return bs;
}

PathWord circle_loop(EdgeRegistry& reg, Point center, double rho, double start_angle) {
  if (!(rho > 0)) throw GeometryError("circle radius must be positive");
  const int id = reg.add_arc(center, rho, start_angle, start_angle + kTwoPi);
  return PathWord::single(reg, id);
}

std::pair<PathWord, PathWord> tau_square_pair(EdgeRegistry& reg, int edge_id) {
  const int w = reg.add_witness(edge_id);
  return {PathWord::single(reg, edge_id), PathWord::single(reg, w)};
}

}  // namespace holonomy
