#pragma once

#include <cstdint>
#include <vector>

#include "holonomy/errors.hpp"
#include "holonomy/paths.hpp"
#include "holonomy/rng.hpp"

namespace holonomy {

/// Subset of a finite space of at most 64 points.
using Mask = std::uint64_t;

struct FinitePoset {
  std::size_t size = 0;
  std::vector<std::vector<char>> leq_table;

  bool leq(std::size_t a, std::size_t b) const { return leq_table[a][b] != 0; }
  /// Throws InvalidArgument unless the relation is a partial order.
  void validate() const;
  /// Every pair has an upper bound.
  bool directed() const;
  /// Elements ordered so that a <= b implies a comes first.
  std::vector<std::size_t> linear_extension() const;

  static FinitePoset chain(std::size_t n);
};

/// Finite topological space on {0, ..., size - 1}; `opens` lists every open set.
struct FiniteSpace {
  std::size_t size = 0;
  std::vector<Mask> opens;

  Mask full() const { return size == 64 ? ~Mask{0} : (Mask{1} << size) - 1; }
  bool is_open(Mask m) const;
  /// Smallest open set containing x.
  Mask min_open(std::size_t x) const;
  Mask closure(Mask m) const;
  void validate() const;

  static FiniteSpace discrete(std::size_t n);
  static FiniteSpace indiscrete(std::size_t n);
  /// Topology generated by a subbase (closure under finite intersection and union).
  static FiniteSpace generated(std::size_t n, const std::vector<Mask>& subbase);
};

/// Map given by the image of each point.
using PointMap = std::vector<int>;

/// Inverse system over a finite poset: bond(a1, a2) maps X_{a2} onto X_{a1} for a1 <= a2.
struct ProjSystem {
  FinitePoset poset;
  std::vector<FiniteSpace> spaces;
  std::vector<std::vector<PointMap>> bonds;  // bonds[a1][a2], empty unless a1 <= a2

  const PointMap& bond(std::size_t a1, std::size_t a2) const { return bonds[a1][a2]; }
  /// Checks poset, topologies, identity bonds, continuity, surjectivity and the cocycle law.
  void validate() const;
  std::size_t product_size() const;

  Json to_json() const;
  static ProjSystem from_json(const Json& j);
};

/// A point of the limit: one coordinate per poset element.
using Thread = std::vector<int>;

inline constexpr std::size_t kLimitBudget = 10000;

/// All compatible families, by backtracking along a linear extension (largest first).
/// Throws BudgetExceeded when the full product is larger than `budget`.
std::vector<Thread> limit_points(const ProjSystem& s, std::size_t budget = kLimitBudget);

/// Closure of X in the limit topology, where the smallest neighbourhood of a thread x is
/// the set of threads y with y_a in min_open(x_a) for every a.
std::vector<Thread> limit_closure(const ProjSystem& s, const std::vector<Thread>& threads, const std::vector<Thread>& X);

/// Whether X (a subset of the limit) is dense.
bool is_dense(const ProjSystem& s, const std::vector<Thread>& X);

struct DenseCrit {
  bool lhs = false;  // X dense in the limit
  bool rhs = false;  // pi_a(X) dense in X_a for every a
  bool agree = false;
};

/// Both sides of the level-wise denseness criterion. Throws HypothesisViolation when the
/// poset is not directed.
DenseCrit densecrit_check(const ProjSystem& s, const std::vector<Thread>& X);

/// Finite groups acting on the spaces: groups[a][g] is the permutation of X_a by g (entry 0
/// is the identity) and homs[a1][a2][g] the image in G_{a1} of g in G_{a2}.
struct ActedProjSystem {
  ProjSystem base;
  std::vector<std::vector<PointMap>> groups;
  std::vector<std::vector<std::vector<int>>> homs;

  /// Group closure, action by homeomorphisms, homomorphism and equivariance laws.
  void validate() const;
};

/// The system of orbit spaces X_a / G_a with quotient topologies. orbit_of[a][x] receives
/// the orbit index of x.
ProjSystem quotient_system(const ActedProjSystem& s, std::vector<std::vector<int>>* orbit_of = nullptr);

/// Whether every canonical map X_a -> X_a / G_a is open.
bool quotient_maps_open(const ActedProjSystem& s);

struct QuotientCrit {
  bool lhs = false;                  // X/G dense in lim(X_a / G_a)
  bool lhs_saturated = false;        // G.X dense in lim X (same statement before passing to orbits)
  bool rhs = false;                  // image of pi_a(X) dense in X_a / G_a for every a
  bool agree = false;                // lhs == lhs_saturated == rhs
  bool surjective_case = false;      // every pi_a(X) = X_a (then lhs must hold)
  bool invariant_container = false;  // some G_a-saturation of pi_a(X) is not dense (then lhs fails)
  bool special_cases_ok = true;
};

QuotientCrit quotient_densecrit_check(const ActedProjSystem& s, const std::vector<Thread>& X);

struct RandomSystemOptions {
  std::size_t max_poset = 5;
  std::size_t max_space = 6;
  bool directed = true;
};

/// Random system in which every X_a is a quotient of one hidden space by a partition, the
/// partitions coarsening downward (so bonds are surjective and satisfy the cocycle law by
/// construction) and topologies are generated upward from pulled-back opens.
ProjSystem random_proj_system(SeededRng& rng, const RandomSystemOptions& opts = {});
/// Same construction with a cyclic group acting on the hidden space; partitions and
/// subbases are made invariant, and every G_a is that cyclic group.
ActedProjSystem random_acted_system(SeededRng& rng, const RandomSystemOptions& opts = {});

struct FuzzSummary {
  std::size_t instances = 0;
  std::size_t acted_instances = 0;
  std::size_t disagreements = 0;
  std::size_t quotient_disagreements = 0;
  std::size_t special_case_failures = 0;
  std::size_t non_directed_tested = 0;
  std::size_t non_directed_refused = 0;
  std::size_t dense_instances = 0;  // instances with lhs true, for coverage
  std::size_t open_map_failures = 0;
};

/// Randomized search for counterexamples to the criterion; instance i uses stream i of
/// `seed`, so the summary does not depend on the thread count.
FuzzSummary densecrit_fuzz(std::size_t instances, std::size_t acted_instances, std::uint64_t seed);

}  // namespace holonomy
