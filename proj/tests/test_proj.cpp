#include <algorithm>
#include <array>
#include <set>

#include "doctest.h"
#include "holonomy/parallel.hpp"
#include "holonomy/proj.hpp"

using namespace holonomy;

namespace {

// Full product filtered by compatibility.
std::vector<Thread> brute_limit(const ProjSystem& s) {
  const std::size_t n = s.poset.size;
  std::vector<Thread> out;
  Thread x(n, 0);
  while (true) {
    bool ok = true;
    for (std::size_t a = 0; a < n && ok; ++a)
      for (std::size_t b = 0; b < n && ok; ++b)
        if (s.poset.leq(a, b)) ok = s.bond(a, b)[x[b]] == x[a];
    if (ok) out.push_back(x);
    std::size_t k = 0;
    while (k < n && ++x[k] == static_cast<int>(s.spaces[k].size)) x[k++] = 0;
    if (k == n) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Closure in the limit computed from the full subspace topology: generate all opens from
// the subbase {threads with x_a in U} and remove every open set missing X.
bool brute_dense(const ProjSystem& s, const std::vector<Thread>& threads, const std::vector<Thread>& X) {
  const std::size_t m = threads.size();
  REQUIRE(m <= 64);
  std::vector<Mask> sub;
  for (std::size_t a = 0; a < s.poset.size; ++a)
    for (Mask u : s.spaces[a].opens) {
      Mask w = 0;
      for (std::size_t i = 0; i < m; ++i)
        if (u & (Mask{1} << threads[i][a])) w |= Mask{1} << i;
      sub.push_back(w);
    }
  const FiniteSpace lim = FiniteSpace::generated(m, sub);
  Mask xm = 0;
  for (const auto& x : X) xm |= Mask{1} << (std::find(threads.begin(), threads.end(), x) - threads.begin());
  return lim.closure(xm) == lim.full();
}

// Smallest closed superset, by brute force over all subsets.
Mask brute_closure(const FiniteSpace& s, Mask m) {
  Mask best = s.full();
  for (Mask c = 0; c <= s.full(); ++c)
    if ((c & m) == m && s.is_open(s.full() & ~c) && __builtin_popcountll(c) < __builtin_popcountll(best)) best = c;
  return best;
}

ProjSystem constant_chain(std::size_t len, const FiniteSpace& X) {
  ProjSystem s{FinitePoset::chain(len), std::vector<FiniteSpace>(len, X), {}};
  PointMap id(X.size);
  for (std::size_t i = 0; i < X.size; ++i) id[i] = static_cast<int>(i);
  s.bonds.assign(len, std::vector<PointMap>(len));
  for (std::size_t a = 0; a < len; ++a)
    for (std::size_t b = a; b < len; ++b) s.bonds[a][b] = id;
  return s;
}

}  // namespace

TEST_CASE("posets") {
  CHECK(FinitePoset::chain(4).directed());
  FinitePoset anti{2, {{1, 0}, {0, 1}}};
  anti.validate();
  CHECK_FALSE(anti.directed());
  FinitePoset loop{2, {{1, 1}, {1, 1}}};
  CHECK_THROWS_AS(loop.validate(), InvalidArgument);
  FinitePoset gap{3, {{1, 1, 0}, {0, 1, 1}, {0, 0, 1}}};
  CHECK_THROWS_AS(gap.validate(), InvalidArgument);
}

TEST_CASE("finite topologies and closures") {
  SeededRng rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<Mask> sub;
    for (std::uint64_t k = rng.below(4); k > 0; --k) sub.push_back(rng.next() & ((Mask{1} << n) - 1));
    const auto s = FiniteSpace::generated(n, sub);
    s.validate();
    const Mask m = rng.next() & s.full();
    CHECK(s.closure(m) == brute_closure(s, m));
    for (std::size_t x = 0; x < n; ++x) CHECK(s.is_open(s.min_open(x)));
  }
  CHECK(FiniteSpace::discrete(4).opens.size() == 16);
  CHECK(FiniteSpace::indiscrete(4).opens.size() == 2);
}

TEST_CASE("limit points") {
  SUBCASE("single level") {
    ProjSystem s = constant_chain(1, FiniteSpace::discrete(5));
    CHECK(limit_points(s).size() == 5);
  }
  SUBCASE("constant two-point chain gives the diagonal") {
    const auto t = limit_points(constant_chain(3, FiniteSpace::discrete(2)));
    CHECK(t == std::vector<Thread>{{0, 0, 0}, {1, 1, 1}});
  }
  SUBCASE("random systems match product filtering") {
    SeededRng rng(2);
    for (int i = 0; i < 300; ++i) {
      const auto s = random_proj_system(rng, {i % 2 ? 5u : 3u, 6, i % 3 != 0});
      s.validate();
      CHECK(limit_points(s) == brute_limit(s));
    }
  }
  SUBCASE("budget") {
    CHECK_THROWS_AS(limit_points(constant_chain(6, FiniteSpace::discrete(6))), BudgetExceeded);
  }
}

TEST_CASE("denseness in the limit") {
  const auto s = constant_chain(2, FiniteSpace::discrete(3));
  const auto t = limit_points(s);
  CHECK(is_dense(s, t));
  CHECK_FALSE(is_dense(s, {}));
  CHECK_THROWS_AS(is_dense(s, {{0, 1}}), InvalidArgument);
  const auto ind = constant_chain(3, FiniteSpace::indiscrete(3));
  CHECK(is_dense(ind, {{2, 2, 2}}));

  SeededRng rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto r = random_proj_system(rng);
    const auto threads = limit_points(r);
    std::vector<Thread> X;
    for (const auto& x : threads)
      if (rng.coin(0.3)) X.push_back(x);
    CHECK(is_dense(r, X) == brute_dense(r, threads, X));
  }
}

TEST_CASE("level-wise criterion") {
  const auto s = constant_chain(2, FiniteSpace::discrete(3));
  const auto c = densecrit_check(s, limit_points(s));
  CHECK((c.lhs && c.rhs && c.agree));

  SeededRng rng(4);
  std::size_t dense = 0, sparse = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto r = random_proj_system(rng);
    const auto threads = limit_points(r);
    std::vector<Thread> X;
    const double p = rng.uniform();
    for (const auto& x : threads)
      if (rng.coin(p)) X.push_back(x);
    const auto d = densecrit_check(r, X);
    CHECK(d.agree);
    (d.lhs ? dense : sparse)++;
  }
  CHECK(dense > 100);  // both outcomes are exercised
  CHECK(sparse > 100);

  for (int i = 0; i < 100; ++i) {
    const auto bad = random_proj_system(rng, {4, 6, false});
    CHECK_FALSE(bad.poset.directed());
    CHECK_THROWS_AS(densecrit_check(bad, limit_points(bad)), HypothesisViolation);
  }
}

TEST_CASE("acted systems") {
  SUBCASE("trivial groups reduce to the plain criterion") {
    SeededRng rng(5);
    for (int i = 0; i < 200; ++i) {
      const auto s = random_proj_system(rng);
      ActedProjSystem a{s, {}, {}};
      for (const auto& X : s.spaces) {
        PointMap id(X.size);
        for (std::size_t k = 0; k < X.size; ++k) id[k] = static_cast<int>(k);
        a.groups.push_back({id});
      }
      a.homs.assign(s.poset.size, std::vector<std::vector<int>>(s.poset.size));
      for (std::size_t p = 0; p < s.poset.size; ++p)
        for (std::size_t q = 0; q < s.poset.size; ++q)
          if (s.poset.leq(p, q)) a.homs[p][q] = {0};
      a.validate();
      const auto threads = limit_points(s);
      std::vector<Thread> X;
      for (const auto& x : threads)
        if (rng.coin(0.4)) X.push_back(x);
      const auto q = quotient_densecrit_check(a, X);
      CHECK(q.agree);
      CHECK(q.lhs == densecrit_check(s, X).lhs);
    }
  }
  SUBCASE("conjugation on a nonabelian group separates the identity") {
    // S3 as permutations of {0,1,2}, acting on itself by conjugation, discrete topology
    std::vector<std::array<int, 3>> S3;
    std::array<int, 3> p{0, 1, 2};
    do S3.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    auto idx = [&](const std::array<int, 3>& q) { return int(std::find(S3.begin(), S3.end(), q) - S3.begin()); };
    auto mul = [](const std::array<int, 3>& a, const std::array<int, 3>& b) {
      return std::array<int, 3>{a[b[0]], a[b[1]], a[b[2]]};
    };
    auto inv = [](const std::array<int, 3>& a) {
      std::array<int, 3> r{};
      for (int i = 0; i < 3; ++i) r[a[i]] = i;
      return r;
    };
    std::vector<PointMap> conj;
    for (const auto& g : S3) {
      PointMap m(6);
      for (std::size_t x = 0; x < 6; ++x) m[x] = idx(mul(mul(g, S3[x]), inv(g)));
      conj.push_back(m);
    }
    ActedProjSystem a{constant_chain(2, FiniteSpace::discrete(6)), {conj, conj}, {}};
    a.homs.assign(2, std::vector<std::vector<int>>(2));
    for (auto [x, y] : {std::pair{0, 0}, {0, 1}, {1, 1}}) a.homs[x][y] = {0, 1, 2, 3, 4, 5};
    a.validate();
    const auto q = quotient_densecrit_check(a, {{0, 0}});
    CHECK_FALSE(q.lhs);
    CHECK(q.agree);
    CHECK(q.invariant_container);
    CHECK(quotient_system(a).spaces[0].size == 3);  // conjugacy classes
    CHECK(quotient_maps_open(a));
  }
  SUBCASE("randomized acted systems") {
    SeededRng rng(6);
    for (int i = 0; i < 1000; ++i) {
      const auto s = random_acted_system(rng);
      s.validate();
      CHECK(quotient_maps_open(s));
      const auto threads = limit_points(s.base);
      std::vector<Thread> X;
      const double p = rng.uniform();
      for (const auto& x : threads)
        if (rng.coin(p)) X.push_back(x);
      const auto q = quotient_densecrit_check(s, X);
      CHECK(q.agree);
      CHECK(q.special_cases_ok);
    }
  }
}

TEST_CASE("systems round-trip through JSON") {
  SeededRng rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto s = random_proj_system(rng);
    const auto t = ProjSystem::from_json(Json::parse(s.to_json().dump()));
    CHECK(t.to_json() == s.to_json());
    CHECK(limit_points(t) == limit_points(s));
  }
  Json bad = random_proj_system(rng).to_json();
  bad["bonds"][0]["map"][0] = 99;
  CHECK_THROWS_AS(ProjSystem::from_json(bad), InvalidArgument);
}

TEST_CASE("fuzz summary is independent of the thread count") {
  set_thread_limit(1);
  const auto a = densecrit_fuzz(400, 100, 9);
  set_thread_limit(4);
  const auto b = densecrit_fuzz(400, 100, 9);
  set_thread_limit(0);
  CHECK(a.disagreements == 0);
  CHECK(a.quotient_disagreements == 0);
  CHECK(a.special_case_failures == 0);
  CHECK(a.non_directed_refused == a.non_directed_tested);
  CHECK(a.dense_instances == b.dense_instances);
  CHECK(a.non_directed_tested == 40);
}
