#include "holonomy/proj.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "holonomy/parallel.hpp"

namespace holonomy {

namespace {

constexpr std::size_t kMaxPoints = 64;

Mask bit(std::size_t x) { return Mask{1} << x; }

Mask preimage(const PointMap& f, Mask m) {
  Mask out = 0;
  for (std::size_t x = 0; x < f.size(); ++x)
    if (m & bit(static_cast<std::size_t>(f[x]))) out |= bit(x);
  return out;
}

Mask image(const PointMap& f, Mask m) {
  Mask out = 0;
  for (std::size_t x = 0; x < f.size(); ++x)
    if (m & bit(x)) out |= bit(static_cast<std::size_t>(f[x]));
  return out;
}

std::string level(std::size_t a) { return "level " + std::to_string(a); }

// Union-find over the hidden space used by the random generators.
struct Partition {
  std::vector<int> parent;
  explicit Partition(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
  // Class label per point, classes numbered by their smallest point.
  std::vector<int> labels() {
    std::vector<int> out(parent.size(), -1);
    std::map<int, int> ids;
    for (std::size_t x = 0; x < parent.size(); ++x) {
      auto [it, fresh] = ids.emplace(find(static_cast<int>(x)), static_cast<int>(ids.size()));
      out[x] = it->second;
    }
    return out;
  }
};

FinitePoset random_poset(SeededRng& rng, std::size_t n, bool directed) {
  // Index order is a linear extension; `directed` adds a top element.
  const std::size_t body = directed ? n - 1 : n;
  FinitePoset p{n, std::vector<std::vector<char>>(n, std::vector<char>(n, 0))};
  for (std::size_t i = 0; i < n; ++i) p.leq_table[i][i] = 1;
  for (std::size_t i = 0; i < body; ++i)
    for (std::size_t j = i + 1; j < body; ++j)
      if (rng.coin(0.4)) p.leq_table[i][j] = 1;
  if (directed)
    for (std::size_t i = 0; i < n; ++i) p.leq_table[i][n - 1] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (p.leq_table[i][k] && p.leq_table[k][j]) p.leq_table[i][j] = 1;
  return p;
}

// Group of the hidden space: Z_m acting by rotating the first coordinate of Z_m x {0..k-1}.
struct HiddenAction {
  std::size_t m = 1, k = 1;
  std::size_t size() const { return m * k; }
  int act(std::size_t g, int x) const {
    const std::size_t i = static_cast<std::size_t>(x) % m, j = static_cast<std::size_t>(x) / m;
    return static_cast<int>((i + g) % m + j * m);
  }
};

struct Built {
  ProjSystem sys;
  std::vector<std::vector<int>> labels;  // per level: hidden point -> point of X_a
  std::vector<std::vector<PointMap>> perms;  // per level: group element -> permutation of X_a
};

Built build_system(SeededRng& rng, const FinitePoset& poset, const HiddenAction& act) {
  const std::size_t n = poset.size, H = act.size();
  Built out;
  out.labels.assign(n, {});
  // partitions from the top down, each coarser than those above it and invariant
  for (std::size_t a = n; a-- > 0;) {
    Partition p(H);
    for (std::size_t b = a + 1; b < n; ++b) {
      if (!poset.leq(a, b)) continue;
      std::map<int, int> first;
      for (std::size_t x = 0; x < H; ++x) {
        auto [it, fresh] = first.emplace(out.labels[b][x], static_cast<int>(x));
        if (!fresh) p.unite(static_cast<int>(x), it->second);
      }
    }
    for (std::uint64_t r = rng.below(3); r > 0; --r)
      p.unite(static_cast<int>(rng.below(H)), static_cast<int>(rng.below(H)));
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t x = 0; x < H; ++x)
        for (std::size_t y = x + 1; y < H; ++y) {
          if (p.find(static_cast<int>(x)) != p.find(static_cast<int>(y))) continue;
          for (std::size_t g = 1; g < act.m; ++g) {
            const int gx = act.act(g, static_cast<int>(x)), gy = act.act(g, static_cast<int>(y));
            if (p.find(gx) != p.find(gy)) {
              p.unite(gx, gy);
              changed = true;
            }
          }
        }
    }
    out.labels[a] = p.labels();
  }

  ProjSystem& s = out.sys;
  s.poset = poset;
  s.spaces.resize(n);
  s.bonds.assign(n, std::vector<PointMap>(n));
  std::vector<std::vector<int>> rep(n);
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t size = static_cast<std::size_t>(*std::max_element(out.labels[a].begin(), out.labels[a].end())) + 1;
    rep[a].assign(size, -1);
    for (std::size_t x = H; x-- > 0;) rep[a][out.labels[a][x]] = static_cast<int>(x);
    s.spaces[a].size = size;
  }
  out.perms.assign(n, {});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t g = 0; g < act.m; ++g) {
      PointMap perm(s.spaces[a].size);
      for (std::size_t c = 0; c < perm.size(); ++c) perm[c] = out.labels[a][act.act(g, rep[a][c])];
      out.perms[a].push_back(perm);
    }
  for (std::size_t a1 = 0; a1 < n; ++a1)
    for (std::size_t a2 = 0; a2 < n; ++a2) {
      if (!poset.leq(a1, a2)) continue;
      PointMap f(s.spaces[a2].size);
      for (std::size_t c = 0; c < f.size(); ++c) f[c] = out.labels[a1][rep[a2][c]];
      s.bonds[a1][a2] = f;
    }
  // topologies from the bottom up: pulled-back opens plus a few random invariant sets
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<Mask> sub;
    for (std::size_t b = 0; b < a; ++b)
      if (poset.leq(b, a))
        for (Mask u : s.spaces[b].opens) sub.push_back(preimage(s.bonds[b][a], u));
    const Mask full = (Mask{1} << s.spaces[a].size) - 1;
    for (std::uint64_t r = rng.below(4); r > 0; --r) {
      const Mask m = rng.next() & full;
      for (const auto& perm : out.perms[a]) sub.push_back(image(perm, m));
    }
    s.spaces[a] = FiniteSpace::generated(s.spaces[a].size, sub);
  }
  return out;
}

std::vector<Thread> random_subset(SeededRng& rng, const std::vector<Thread>& threads) {
  std::vector<Thread> X;
  static const double ps[] = {0.0, 0.1, 0.3, 0.6, 0.9, 1.0};
  const double p = ps[rng.below(6)];
  for (const auto& t : threads)
    if (rng.coin(p)) X.push_back(t);
  return X;
}

void check_subset(const std::vector<Thread>& threads, const std::vector<Thread>& X) {
  for (const auto& x : X)
    if (std::find(threads.begin(), threads.end(), x) == threads.end())
      throw InvalidArgument("subset contains a family that is not a thread of the limit");
}

}  // namespace

// ---------------------------------------------------------------- posets and spaces

void FinitePoset::validate() const {
  if (leq_table.size() != size) throw InvalidArgument("poset relation has the wrong size");
  for (const auto& row : leq_table)
    if (row.size() != size) throw InvalidArgument("poset relation has the wrong size");
  for (std::size_t a = 0; a < size; ++a) {
    if (!leq(a, a)) throw InvalidArgument("poset relation is not reflexive at " + std::to_string(a));
    for (std::size_t b = 0; b < size; ++b) {
      if (a != b && leq(a, b) && leq(b, a)) throw InvalidArgument("poset relation is not antisymmetric");
      for (std::size_t c = 0; c < size; ++c)
        if (leq(a, b) && leq(b, c) && !leq(a, c)) throw InvalidArgument("poset relation is not transitive");
    }
  }
}

bool FinitePoset::directed() const {
  for (std::size_t a = 0; a < size; ++a)
    for (std::size_t b = a + 1; b < size; ++b) {
      bool bound = false;
      for (std::size_t c = 0; c < size && !bound; ++c) bound = leq(a, c) && leq(b, c);
      if (!bound) return false;
    }
  return true;
}

std::vector<std::size_t> FinitePoset::linear_extension() const {
  // sort by the number of elements below; a < b strictly implies fewer below a
  std::vector<std::size_t> below(size, 0), order(size);
  for (std::size_t a = 0; a < size; ++a)
    for (std::size_t b = 0; b < size; ++b) below[a] += leq(b, a);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return below[x] < below[y]; });
  return order;
}

FinitePoset FinitePoset::chain(std::size_t n) {
  FinitePoset p{n, std::vector<std::vector<char>>(n, std::vector<char>(n, 0))};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) p.leq_table[i][j] = 1;
  return p;
}

bool FiniteSpace::is_open(Mask m) const { return std::find(opens.begin(), opens.end(), m) != opens.end(); }

Mask FiniteSpace::min_open(std::size_t x) const {
  Mask out = full();
  for (Mask u : opens)
    if (u & bit(x)) out &= u;
  return out;
}

Mask FiniteSpace::closure(Mask m) const {
  // complement of the union of opens missing m
  Mask outside = 0;
  for (Mask u : opens)
    if ((u & m) == 0) outside |= u;
  return full() & ~outside;
}

void FiniteSpace::validate() const {
  if (size == 0 || size > kMaxPoints) throw InvalidArgument("finite space size must be in [1, 64]");
  if (!is_open(0) || !is_open(full())) throw InvalidArgument("topology must contain the empty set and the space");
  for (Mask u : opens) {
    if (u & ~full()) throw InvalidArgument("open set has points outside the space");
    for (Mask v : opens)
      if (!is_open(u | v) || !is_open(u & v)) throw InvalidArgument("topology is not closed under union/intersection");
  }
}

FiniteSpace FiniteSpace::discrete(std::size_t n) {
  std::vector<Mask> sub;
  for (std::size_t x = 0; x < n; ++x) sub.push_back(bit(x));
  return generated(n, sub);
}

FiniteSpace FiniteSpace::indiscrete(std::size_t n) { return generated(n, {}); }

FiniteSpace FiniteSpace::generated(std::size_t n, const std::vector<Mask>& subbase) {
  if (n == 0 || n > kMaxPoints) throw InvalidArgument("finite space size must be in [1, 64]");
  FiniteSpace s{n, {}};
  std::set<Mask> sets{0, s.full()};
  for (Mask m : subbase) sets.insert(m & s.full());
  for (bool grew = true; grew;) {
    grew = false;
    const std::vector<Mask> cur(sets.begin(), sets.end());
    for (std::size_t i = 0; i < cur.size(); ++i)
      for (std::size_t j = i + 1; j < cur.size(); ++j) {
        grew |= sets.insert(cur[i] | cur[j]).second;
        grew |= sets.insert(cur[i] & cur[j]).second;
      }
  }
  s.opens.assign(sets.begin(), sets.end());
  return s;
}

// ---------------------------------------------------------------- systems

void ProjSystem::validate() const {
  poset.validate();
  const std::size_t n = poset.size;
  if (spaces.size() != n || bonds.size() != n) throw InvalidArgument("one space per poset element required");
  for (std::size_t a = 0; a < n; ++a) {
    try {
      spaces[a].validate();
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(level(a) + ": " + e.what());
    }
    if (bonds[a].size() != n) throw InvalidArgument(level(a) + ": bond table has the wrong size");
  }
  for (std::size_t a1 = 0; a1 < n; ++a1)
    for (std::size_t a2 = 0; a2 < n; ++a2) {
      const PointMap& f = bonds[a1][a2];
      if (!poset.leq(a1, a2)) {
        if (!f.empty()) throw InvalidArgument("bond between incomparable levels");
        continue;
      }
      if (f.size() != spaces[a2].size) throw InvalidArgument("bond has the wrong domain size");
      Mask hit = 0;
      for (std::size_t x = 0; x < f.size(); ++x) {
        if (f[x] < 0 || static_cast<std::size_t>(f[x]) >= spaces[a1].size) throw InvalidArgument("bond leaves its target");
        if (a1 == a2 && f[x] != static_cast<int>(x)) throw InvalidArgument("bond of a level to itself must be the identity");
        hit |= bit(static_cast<std::size_t>(f[x]));
      }
      if (hit != spaces[a1].full()) throw InvalidArgument("bond " + std::to_string(a2) + " -> " + std::to_string(a1) + " is not surjective");
      for (Mask u : spaces[a1].opens)
        if (!spaces[a2].is_open(preimage(f, u)))
          throw InvalidArgument("bond " + std::to_string(a2) + " -> " + std::to_string(a1) + " is not continuous");
    }
  for (std::size_t a1 = 0; a1 < n; ++a1)
    for (std::size_t a2 = 0; a2 < n; ++a2)
      for (std::size_t a3 = 0; a3 < n; ++a3) {
        if (!poset.leq(a1, a2) || !poset.leq(a2, a3)) continue;
        for (std::size_t x = 0; x < spaces[a3].size; ++x)
          if (bonds[a1][a2][bonds[a2][a3][x]] != bonds[a1][a3][x]) throw InvalidArgument("bonds violate the cocycle law");
      }
}

std::size_t ProjSystem::product_size() const {
  std::size_t p = 1;
  for (const auto& s : spaces) {
    if (p > (std::size_t{1} << 40)) return p;
    p *= s.size;
  }
  return p;
}

Json ProjSystem::to_json() const {
  Json sp = Json::array(), bd = Json::array();
  for (const auto& s : spaces) sp.push_back({{"size", s.size}, {"opens", s.opens}});
  for (std::size_t a1 = 0; a1 < poset.size; ++a1)
    for (std::size_t a2 = 0; a2 < poset.size; ++a2)
      if (!bonds[a1][a2].empty()) bd.push_back({{"to", a1}, {"from", a2}, {"map", bonds[a1][a2]}});
  Json order = Json::array();
  for (const auto& row : poset.leq_table) {
    Json r = Json::array();
    for (char c : row) r.push_back(c != 0 ? 1 : 0);
    order.push_back(r);
  }
  return {{"leq", order}, {"spaces", sp}, {"bonds", bd}};
}

ProjSystem ProjSystem::from_json(const Json& j) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "leq" && it.key() != "spaces" && it.key() != "bonds")
      throw InvalidArgument("unknown field '" + it.key() + "'");
  ProjSystem s;
  const Json& leq = j.at("leq");
  s.poset.size = leq.size();
  for (const auto& row : leq) {
    std::vector<char> r;
    for (const auto& c : row) r.push_back(c.get<int>() != 0);
    s.poset.leq_table.push_back(r);
  }
  for (const auto& sp : j.at("spaces")) s.spaces.push_back({sp.at("size").get<std::size_t>(), sp.at("opens").get<std::vector<Mask>>()});
  s.bonds.assign(s.poset.size, std::vector<PointMap>(s.poset.size));
  for (const auto& b : j.at("bonds")) {
    const auto to = b.at("to").get<std::size_t>(), from = b.at("from").get<std::size_t>();
    if (to >= s.poset.size || from >= s.poset.size) throw InvalidArgument("field 'bonds' names an unknown level");
    s.bonds[to][from] = b.at("map").get<PointMap>();
  }
  for (auto& sp : s.spaces) std::sort(sp.opens.begin(), sp.opens.end());
  s.validate();
  return s;
}

std::vector<Thread> limit_points(const ProjSystem& s, std::size_t budget) {
  if (s.product_size() > budget)
    throw BudgetExceeded("limit_points: product of the spaces exceeds the budget of " + std::to_string(budget));
  auto order = s.poset.linear_extension();
  std::reverse(order.begin(), order.end());
  const std::size_t n = order.size();
  std::vector<Thread> out;
  Thread x(n, -1);
  auto fits = [&](std::size_t k) {
    const std::size_t a = order[k];
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t b = order[i];
      if (s.poset.leq(a, b) && s.bonds[a][b][x[b]] != x[a]) return false;
      if (s.poset.leq(b, a) && s.bonds[b][a][x[a]] != x[b]) return false;
    }
    return true;
  };
  auto rec = [&](auto&& self, std::size_t k) -> void {
    if (k == n) {
      out.push_back(x);
      return;
    }
    const std::size_t a = order[k];
    for (std::size_t v = 0; v < s.spaces[a].size; ++v) {
      x[a] = static_cast<int>(v);
      if (fits(k)) self(self, k + 1);
    }
    x[a] = -1;
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Thread> limit_closure(const ProjSystem& s, const std::vector<Thread>& threads, const std::vector<Thread>& X) {
  check_subset(threads, X);
  std::vector<Thread> out;
  for (const auto& t : threads) {
    bool hit = false;
    for (const auto& y : X) {
      bool inside = true;
      for (std::size_t a = 0; a < t.size() && inside; ++a) inside = (s.spaces[a].min_open(t[a]) & bit(y[a])) != 0;
      if (inside) {
        hit = true;
        break;
      }
    }
    if (hit) out.push_back(t);
  }
  return out;
}

bool is_dense(const ProjSystem& s, const std::vector<Thread>& X) {
  const auto threads = limit_points(s);
  return limit_closure(s, threads, X).size() == threads.size();
}

namespace {

bool levelwise_dense(const ProjSystem& s, const std::vector<Thread>& X) {
  for (std::size_t a = 0; a < s.poset.size; ++a) {
    Mask m = 0;
    for (const auto& x : X) m |= bit(x[a]);
    if (s.spaces[a].closure(m) != s.spaces[a].full()) return false;
  }
  return true;
}

}  // namespace

DenseCrit densecrit_check(const ProjSystem& s, const std::vector<Thread>& X) {
  if (!s.poset.directed())
    throw HypothesisViolation("densecrit_check: the index poset is not directed, so level-wise denseness "
                              "does not control denseness in the limit");
  DenseCrit r;
  r.lhs = is_dense(s, X);
  r.rhs = levelwise_dense(s, X);
  r.agree = r.lhs == r.rhs;
  return r;
}

// ---------------------------------------------------------------- group actions

void ActedProjSystem::validate() const {
  base.validate();
  const std::size_t n = base.poset.size;
  if (groups.size() != n || homs.size() != n) throw InvalidArgument("one group per level required");
  std::vector<std::map<PointMap, int>> index(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& G = groups[a];
    const auto& X = base.spaces[a];
    if (G.empty()) throw InvalidArgument(level(a) + ": empty group");
    for (std::size_t g = 0; g < G.size(); ++g) {
      if (G[g].size() != X.size) throw InvalidArgument(level(a) + ": permutation has the wrong size");
      Mask hit = 0;
      for (int y : G[g]) hit |= bit(static_cast<std::size_t>(y));
      if (hit != X.full()) throw InvalidArgument(level(a) + ": group element is not a permutation");
      for (Mask u : X.opens)
        if (!X.is_open(image(G[g], u))) throw InvalidArgument(level(a) + ": group does not act by homeomorphisms");
      index[a].emplace(G[g], static_cast<int>(g));
    }
    for (std::size_t x = 0; x < X.size; ++x)
      if (G[0][x] != static_cast<int>(x)) throw InvalidArgument(level(a) + ": first group element must be the identity");
    for (const auto& g : G)
      for (const auto& h : G) {
        PointMap gh(X.size);
        for (std::size_t x = 0; x < X.size; ++x) gh[x] = g[h[x]];
        if (!index[a].count(gh)) throw InvalidArgument(level(a) + ": group is not closed under composition");
      }
  }
  for (std::size_t a1 = 0; a1 < n; ++a1)
    for (std::size_t a2 = 0; a2 < n; ++a2) {
      if (!base.poset.leq(a1, a2)) continue;
      const auto& phi = homs[a1][a2];
      if (phi.size() != groups[a2].size()) throw InvalidArgument("group map has the wrong domain");
      for (std::size_t g = 0; g < phi.size(); ++g) {
        if (phi[g] < 0 || static_cast<std::size_t>(phi[g]) >= groups[a1].size()) throw InvalidArgument("group map leaves its target");
        for (std::size_t x = 0; x < base.spaces[a2].size; ++x)
          if (base.bonds[a1][a2][groups[a2][g][x]] != groups[a1][phi[g]][base.bonds[a1][a2][x]])
            throw InvalidArgument("bond " + std::to_string(a2) + " -> " + std::to_string(a1) + " is not equivariant");
      }
      for (std::size_t g = 0; g < phi.size(); ++g)
        for (std::size_t h = 0; h < phi.size(); ++h) {
          PointMap gh(base.spaces[a2].size), img(base.spaces[a1].size);
          for (std::size_t x = 0; x < gh.size(); ++x) gh[x] = groups[a2][g][groups[a2][h][x]];
          for (std::size_t x = 0; x < img.size(); ++x) img[x] = groups[a1][phi[g]][groups[a1][phi[h]][x]];
          if (groups[a1][phi[index[a2].at(gh)]] != img) throw InvalidArgument("group map is not a homomorphism");
        }
    }
}

ProjSystem quotient_system(const ActedProjSystem& s, std::vector<std::vector<int>>* orbit_of) {
  const std::size_t n = s.base.poset.size;
  std::vector<std::vector<int>> orb(n);
  ProjSystem q;
  q.poset = s.base.poset;
  q.bonds.assign(n, std::vector<PointMap>(n));
  for (std::size_t a = 0; a < n; ++a) {
    const auto& X = s.base.spaces[a];
    orb[a].assign(X.size, -1);
    int count = 0;
    for (std::size_t x = 0; x < X.size; ++x) {
      if (orb[a][x] >= 0) continue;
      for (const auto& g : s.groups[a]) orb[a][g[x]] = count;
      ++count;
    }
    // quotient topology: a set of orbits is open iff its preimage is open
    std::vector<Mask> opens;
    const std::size_t m = static_cast<std::size_t>(count);
    if (m > 20) throw BudgetExceeded("quotient_system: too many orbits for exhaustive topology");
    for (Mask u = 0; u < (Mask{1} << m); ++u)
      if (X.is_open(preimage(orb[a], u))) opens.push_back(u);
    q.spaces.push_back({m, opens});
  }
  for (std::size_t a1 = 0; a1 < n; ++a1)
    for (std::size_t a2 = 0; a2 < n; ++a2) {
      if (!q.poset.leq(a1, a2)) continue;
      PointMap f(q.spaces[a2].size);
      for (std::size_t x = 0; x < s.base.spaces[a2].size; ++x) f[orb[a2][x]] = orb[a1][s.base.bonds[a1][a2][x]];
      q.bonds[a1][a2] = f;
    }
  if (orbit_of) *orbit_of = orb;
  return q;
}

bool quotient_maps_open(const ActedProjSystem& s) {
  for (std::size_t a = 0; a < s.base.poset.size; ++a)
    for (Mask u : s.base.spaces[a].opens) {
      Mask sat = 0;
      for (const auto& g : s.groups[a]) sat |= image(g, u);
      if (!s.base.spaces[a].is_open(sat)) return false;
    }
  return true;
}

QuotientCrit quotient_densecrit_check(const ActedProjSystem& s, const std::vector<Thread>& X) {
  if (!s.base.poset.directed()) throw HypothesisViolation("quotient_densecrit_check: the index poset is not directed");
  const std::size_t n = s.base.poset.size;
  const auto threads = limit_points(s.base);
  check_subset(threads, X);
  std::vector<std::vector<int>> orb;
  const ProjSystem q = quotient_system(s, &orb);
  QuotientCrit r;

  std::set<Thread> qx;
  for (const auto& x : X) {
    Thread t(n);
    for (std::size_t a = 0; a < n; ++a) t[a] = orb[a][x[a]];
    qx.insert(t);
  }
  r.lhs = is_dense(q, std::vector<Thread>(qx.begin(), qx.end()));
  r.rhs = levelwise_dense(q, std::vector<Thread>(qx.begin(), qx.end()));

  // second route: saturate X under the limit group, i.e. threads whose orbit-thread is hit
  std::vector<Thread> sat;
  for (const auto& t : threads) {
    Thread o(n);
    for (std::size_t a = 0; a < n; ++a) o[a] = orb[a][t[a]];
    if (qx.count(o)) sat.push_back(t);
  }
  r.lhs_saturated = limit_closure(s.base, threads, sat).size() == threads.size();
  r.agree = r.lhs == r.rhs && r.lhs == r.lhs_saturated;

  r.surjective_case = true;
  for (std::size_t a = 0; a < n; ++a) {
    Mask m = 0, saturated = 0;
    for (const auto& x : X) m |= bit(x[a]);
    r.surjective_case &= m == s.base.spaces[a].full();
    for (const auto& g : s.groups[a]) saturated |= image(g, m);
    if (s.base.spaces[a].closure(saturated) != s.base.spaces[a].full()) r.invariant_container = true;
  }
  r.special_cases_ok = !(r.surjective_case && !r.lhs) && !(r.invariant_container && r.lhs);
  return r;
}

// ---------------------------------------------------------------- random instances

ProjSystem random_proj_system(SeededRng& rng, const RandomSystemOptions& opts) {
  const std::size_t lo = opts.directed ? 1 : 2;
  const std::size_t n = lo + rng.below(opts.max_poset - lo + 1);
  FinitePoset p = random_poset(rng, n, opts.directed);
  if (!opts.directed && p.directed()) {
    // adjoin a maximal element incomparable to everything else
    for (auto& row : p.leq_table) row.push_back(0);
    p.leq_table.push_back(std::vector<char>(n + 1, 0));
    p.leq_table[n][n] = 1;
    p.size = n + 1;
  }
  HiddenAction act{1, 1 + rng.below(opts.max_space)};
  return build_system(rng, p, act).sys;
}

ActedProjSystem random_acted_system(SeededRng& rng, const RandomSystemOptions& opts) {
  const std::size_t n = 1 + rng.below(opts.max_poset);
  const FinitePoset p = random_poset(rng, n, true);
  HiddenAction act;
  act.m = 1 + rng.below(std::min<std::size_t>(3, opts.max_space));
  act.k = 1 + rng.below(std::max<std::size_t>(1, opts.max_space / act.m));
  Built b = build_system(rng, p, act);
  ActedProjSystem out{std::move(b.sys), std::move(b.perms), {}};
  out.homs.assign(n, std::vector<std::vector<int>>(n));
  std::vector<int> id(act.m);
  std::iota(id.begin(), id.end(), 0);
  for (std::size_t a1 = 0; a1 < n; ++a1)
    for (std::size_t a2 = 0; a2 < n; ++a2)
      if (p.leq(a1, a2)) out.homs[a1][a2] = id;
  return out;
}

FuzzSummary densecrit_fuzz(std::size_t instances, std::size_t acted_instances, std::uint64_t seed) {
  struct Slot {
    bool disagree = false, dense = false, nd_tested = false, nd_refused = false;
    bool qdisagree = false, special_fail = false, open_fail = false;
  };
  std::vector<Slot> slots(instances), qslots(acted_instances);
  const std::uint64_t plain_root = mix_seed(seed, 0), acted_root = mix_seed(seed, 1);
  parallel_for(instances, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(plain_root, i);
    const ProjSystem s = random_proj_system(rng);
    const auto X = random_subset(rng, limit_points(s));
    const DenseCrit c = densecrit_check(s, X);
    slots[i].disagree = !c.agree;
    slots[i].dense = c.lhs;
    if (i % 10 == 0) {
      const ProjSystem bad = random_proj_system(rng, {4, 6, false});
      slots[i].nd_tested = true;
      try {
        densecrit_check(bad, limit_points(bad));
      } catch (const HypothesisViolation&) {
        slots[i].nd_refused = true;
      }
    }
  });
  parallel_for(acted_instances, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(acted_root, i);
    const ActedProjSystem s = random_acted_system(rng);
    const auto X = random_subset(rng, limit_points(s.base));
    const QuotientCrit c = quotient_densecrit_check(s, X);
    qslots[i].qdisagree = !c.agree;
    qslots[i].special_fail = !c.special_cases_ok;
    qslots[i].open_fail = !quotient_maps_open(s);
  });
  FuzzSummary out;
  out.instances = instances;
  out.acted_instances = acted_instances;
  for (const auto& s : slots) {
    out.disagreements += s.disagree;
    out.dense_instances += s.dense;
    out.non_directed_tested += s.nd_tested;
    out.non_directed_refused += s.nd_refused;
  }
  for (const auto& s : qslots) {
    out.quotient_disagreements += s.qdisagree;
    out.special_case_failures += s.special_fail;
    out.open_map_failures += s.open_fail;
  }
  return out;
}

}  // namespace holonomy
