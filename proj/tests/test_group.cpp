#include <cmath>
#include <map>
#include <numbers>

#include "doctest.h"
#include "holonomy/group.hpp"
#include "holonomy/parallel.hpp"
#include "support.hpp"

using namespace holonomy;
using testsupport::ks_critical;
using testsupport::svd_norm;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXcd dagger(const Eigen::MatrixXcd& m) { return m.adjoint(); }

// Independent route for the quotient metric: min over coset representatives of the SVD norm.
double coset_svd_dist(const GroupElement& a, const GroupElement& b) {
  double best = 1e300;
  for (const auto& n : a.group().central_elements())
    best = std::min(best, svd_norm(a.matrix() - b.matrix() * n.matrix()));
  return best;
}

}  // namespace

TEST_CASE("spec JSON round trip and strict parsing") {
  for (const auto& s : testsupport::sample_specs()) CHECK(GroupSpec::from_json(s.to_json()) == s);
  CHECK(GroupSpec::parse(R"({"family":"torus","k":1})") == GroupSpec::torus(1));
  CHECK_THROWS_AS(GroupSpec::parse(R"({"family":"torus","k":1,"x":2})"), InvalidArgument);
  CHECK_THROWS_AS(GroupSpec::parse(R"({"family":"cyclic"})"), InvalidArgument);
  CHECK_THROWS_AS(GroupSpec::parse(R"({"family":"so3"})"), InvalidArgument);
  try {
    GroupSpec::parse(R"({"family":"product","factors":[{"family":"cyclic","n":"two"}]})");
    FAIL("expected a parse error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("factors[0].n") != std::string::npos);
  }
}

TEST_CASE("dimension and components") {
  CHECK(Group(GroupSpec::su2()).dim() == 3);
  CHECK(Group(GroupSpec::torus(2)).dim() == 2);
  CHECK(Group(GroupSpec::cyclic(7)).dim() == 0);
  const Group sxu(GroupSpec::product({GroupSpec::su2(), GroupSpec::torus(1)}));
  CHECK(sxu.dim() == 4);
  CHECK(sxu.is_connected());
  const Group so3(GroupSpec::quotient(GroupSpec::su2(), {{0.0}, {kPi}}));
  CHECK(so3.dim() == 3);
  CHECK(Group(GroupSpec::product({GroupSpec::su2(), GroupSpec::cyclic(2)})).component_count() == 2);
  CHECK(Group(GroupSpec::cyclic(6)).order() == 6);
  // the central Z2 glues the two sheets of U(1) x Z2 into one
  const Group glued(GroupSpec::quotient(GroupSpec::product({GroupSpec::torus(1), GroupSpec::cyclic(2)}),
                                        {{0.0, 0.0}, {kPi, kPi}}));
  CHECK(glued.component_count() == 1);
  CHECK(glued.dim() == 1);
  const Group z4mod2(GroupSpec::quotient(GroupSpec::cyclic(4), {{0.0}, {kPi}}));
  CHECK(z4mod2.order() == 2);
  CHECK(Group(GroupSpec::cyclic(1)).is_trivial());
}

TEST_CASE("quotient construction checks") {
  CHECK_THROWS_AS(Group(GroupSpec::quotient(GroupSpec::torus(1), {{0.0}, {0.5}})), InvalidArgument);
  CHECK_THROWS_AS(Group(GroupSpec::quotient(GroupSpec::su2(), {{0.0}, {1.0}})), InvalidArgument);
  CHECK_THROWS_AS(Group(GroupSpec::quotient(GroupSpec::cyclic(4), {{0.0}, {1.0}})), InvalidArgument);
  CHECK_THROWS_AS(Group(GroupSpec::quotient(GroupSpec::torus(1), {{0.0, 1.0}})), InvalidArgument);
  const Group z3(GroupSpec::quotient(GroupSpec::torus(1), {{0.0}, {2 * kPi / 3}, {4 * kPi / 3}}));
  CHECK(z3.central_elements().size() == 3);
  // nested quotient: (U(1)/Z2)/Z2 identifies angles mod pi/2
  const Group nested(GroupSpec::quotient(GroupSpec::quotient(GroupSpec::torus(1), {{0.0}, {kPi}}),
                                         {{0.0}, {kPi / 2}}));
  CHECK(nested.central_elements().size() == 4);
  const auto a = nested.element({}, {0.1});
  const auto b = nested.element({}, {0.1 + 3 * kPi / 2});
  CHECK(approx_equal(a, b));
  CHECK(a.phase()[0] == doctest::Approx(0.1));
}

TEST_CASE("compose: documented examples") {
  const Group t(GroupSpec::torus(1));
  const auto g = compose(t.element({}, {0.3}), t.element({}, {0.5}));
  CHECK(g.phase()[0] == doctest::Approx(0.8).epsilon(1e-14));
  const Group s(GroupSpec::su2());
  SeededRng rng(11);
  const auto h = s.haar_sample(rng);
  CHECK(op_norm_dist(compose(s.identity(), h), h) == 0.0);
  for (int i = 0; i < 200; ++i) {
    const auto a = s.haar_sample(rng);
    const auto b = s.haar_sample(rng);
    // oracle: plain matrix product and conjugate transpose
    CHECK(svd_norm(compose(a, b).matrix() - a.matrix() * b.matrix()) < 1e-12);
    CHECK(svd_norm(inverse(a).matrix() - dagger(a.matrix())) < 1e-15);
    CHECK(op_norm_dist(compose(a, inverse(a)), s.identity()) < 1e-12);
  }
  CHECK_THROWS_AS(compose(t.identity(), s.identity()), SpecMismatch);
}

TEST_CASE("group elements stay in the group") {
  SeededRng rng(5);
  for (const auto& spec : testsupport::sample_specs()) {
    const Group g(spec);
    for (int i = 0; i < 100; ++i) {
      auto x = g.haar_sample(rng);
      for (int k = 0; k < 50; ++k) x = compose(x, g.haar_sample(rng));
      const Eigen::MatrixXcd m = x.matrix();
      const Eigen::Index n = m.rows();
      CHECK(svd_norm(m.adjoint() * m - Eigen::MatrixXcd::Identity(n, n)) < 1e-12);
      for (double a : x.phase()) CHECK((a >= 0.0 && a < 2 * kPi));
      for (std::size_t k = 0; k < g.su2_count(); ++k)
        CHECK(std::abs(m.block(2 * k, 2 * k, 2, 2).determinant() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("group axioms on randomized triples") {
  SeededRng rng(2024);
  for (const auto& spec : testsupport::sample_specs()) {
    const Group g(spec);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const auto a = g.haar_sample(rng), b = g.haar_sample(rng), c = g.haar_sample(rng);
      worst = std::max(worst, op_norm_dist(compose(compose(a, b), c), compose(a, compose(b, c))));
      worst = std::max(worst, op_norm_dist(compose(a, g.identity()), a));
      worst = std::max(worst, op_norm_dist(compose(g.identity(), a), a));
      worst = std::max(worst, op_norm_dist(compose(inverse(a), a), g.identity()));
    }
    INFO(spec.describe());
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("op_norm_dist: examples and SVD oracle") {
  const Group t(GroupSpec::torus(1));
  CHECK(op_norm_dist(t.element({}, {0.0}), t.element({}, {kPi})) == doctest::Approx(2.0).epsilon(1e-15));
  const Group z(GroupSpec::cyclic(3));
  const auto els = z.elements();
  CHECK(op_norm_dist(els[0], els[1]) == 1.0);
  CHECK(op_norm_dist(els[2], els[2]) == 0.0);
  SeededRng rng(9);
  for (const auto& spec : testsupport::sample_specs()) {
    const Group g(spec);
    if (g.cyclic_count() > 0) continue;  // discrete metric is not a matrix norm
    for (int i = 0; i < 300; ++i) {
      const auto a = g.haar_sample(rng), b = g.haar_sample(rng);
      INFO(spec.describe());
      CHECK(std::abs(op_norm_dist(a, b) - coset_svd_dist(a, b)) < 1e-12);
      CHECK(op_norm_dist(a, a) == 0.0);
    }
  }
}

TEST_CASE("op_norm_dist is a bi-invariant metric") {
  SeededRng rng(77);
  for (const auto& spec : testsupport::sample_specs()) {
    const Group g(spec);
    double triangle_violation = 0.0, ad_gap = 0.0, sym_gap = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const auto a = g.haar_sample(rng), b = g.haar_sample(rng), c = g.haar_sample(rng);
      const double ab = op_norm_dist(a, b), bc = op_norm_dist(b, c), ac = op_norm_dist(a, c);
      triangle_violation = std::max(triangle_violation, ac - ab - bc);
      sym_gap = std::max(sym_gap, std::abs(ab - op_norm_dist(b, a)));
      ad_gap = std::max(ad_gap, std::abs(op_norm_dist(conjugate(a, c), conjugate(b, c)) - ab));
    }
    INFO(spec.describe());
    CHECK(triangle_violation < 1e-12);
    CHECK(sym_gap < 1e-12);
    CHECK(ad_gap < 1e-12);
  }
}

TEST_CASE("haar_sample: finite and torus marginals") {
  SeededRng rng(1);
  const Group z2(GroupSpec::cyclic(2));
  int ones = 0;
  for (int i = 0; i < 100000; ++i) ones += z2.haar_sample(rng).index()[0];
  CHECK(std::abs(ones / 1e5 - 0.5) < 0.01);

  const Group t(GroupSpec::torus(1));
  std::vector<double> angles;
  for (int i = 0; i < 100000; ++i) angles.push_back(t.haar_sample(rng).phase()[0]);
  double m = 0;
  for (double a : angles) m += a;
  m /= angles.size();
  const double sigma = 2 * kPi / std::sqrt(12.0 * angles.size());
  CHECK(std::abs(m - kPi) < 3 * sigma);
  CHECK(testsupport::ks_one_sample(angles, [](double a) { return a / (2 * kPi); }) < ks_critical(angles.size()));
}

TEST_CASE("haar_sample: SU(2) class angle follows the Weyl density") {
  // class angle theta in [0, pi] with density (2/pi) sin^2 theta; CDF (theta - sin theta cos theta)/pi
  auto weyl_cdf = [](double th) { return (th - std::sin(th) * std::cos(th)) / kPi; };
  SeededRng rng(3);
  // validate the closed-form CDF against rejection sampling first
  std::vector<double> rejected;
  while (rejected.size() < 20000) {
    const double th = rng.uniform(0.0, kPi);
    if (rng.uniform() < std::sin(th) * std::sin(th)) rejected.push_back(th);
  }
  CHECK(testsupport::ks_one_sample(rejected, weyl_cdf) < ks_critical(rejected.size()));

  const Group s(GroupSpec::su2());
  std::vector<double> th;
  for (int i = 0; i < 100000; ++i) {
    const auto g = s.haar_sample(rng);
    th.push_back(std::acos(std::clamp(g.matrix().trace().real() / 2.0, -1.0, 1.0)));
  }
  CHECK(testsupport::ks_one_sample(th, weyl_cdf) < ks_critical(th.size()));
  CHECK(testsupport::ks_two_sample(th, rejected) < ks_critical(th.size(), rejected.size()));
}

TEST_CASE("haar_sample is translation invariant") {
  SeededRng rng(8);
  const Group s(GroupSpec::su2());
  const auto g = s.haar_sample(rng);
  std::vector<double> plain, left, right;
  for (int i = 0; i < 20000; ++i) {
    plain.push_back(s.haar_sample(rng).matrix().trace().real());
    left.push_back(compose(g, s.haar_sample(rng)).matrix().trace().real());
    right.push_back(compose(s.haar_sample(rng), g).matrix().trace().real());
  }
  CHECK(testsupport::ks_two_sample(plain, left) < ks_critical(plain.size(), left.size()));
  CHECK(testsupport::ks_two_sample(plain, right) < ks_critical(plain.size(), right.size()));
  // also a non-class marginal: the (0,1) entry real part
  std::vector<double> e_plain, e_left;
  for (int i = 0; i < 20000; ++i) {
    e_plain.push_back(s.haar_sample(rng).matrix()(0, 1).real());
    e_left.push_back(compose(g, s.haar_sample(rng)).matrix()(0, 1).real());
  }
  CHECK(testsupport::ks_two_sample(e_plain, e_left) < ks_critical(e_plain.size(), e_left.size()));

  const Group t(GroupSpec::torus(1));
  const auto u = t.haar_sample(rng);
  std::vector<double> tp, tl;
  for (int i = 0; i < 20000; ++i) {
    tp.push_back(t.haar_sample(rng).phase()[0]);
    tl.push_back(compose(u, t.haar_sample(rng)).phase()[0]);
  }
  CHECK(testsupport::ks_two_sample(tp, tl) < ks_critical(tp.size(), tl.size()));
}

TEST_CASE("theta and k_distance") {
  const Group sxu(GroupSpec::product({GroupSpec::su2(), GroupSpec::torus(1)}));
  const auto e = sxu.identity();
  CHECK(op_norm_dist(theta({e, e, e, e}), e) == 0.0);
  CHECK(k_distance({e, e, e, e}) == 0.0);

  SeededRng rng(21);
  for (int i = 0; i < 200; ++i) {
    Quadruple q{sxu.haar_sample(rng), sxu.haar_sample(rng), sxu.haar_sample(rng), sxu.haar_sample(rng)};
    const Eigen::MatrixXcd direct =
        q[0].matrix() * q[1].matrix() * dagger(q[2].matrix()) * dagger(q[3].matrix());
    CHECK(svd_norm(theta(q).matrix() - direct) < 1e-12);
    // Ad-equivariance and conjugation invariance of k_distance
    const auto h = sxu.haar_sample(rng);
    Quadruple c{conjugate(q[0], h), conjugate(q[1], h), conjugate(q[2], h), conjugate(q[3], h)};
    CHECK(op_norm_dist(theta(c), conjugate(theta(q), h)) < 1e-12);
    CHECK(std::abs(k_distance(c) - k_distance(q)) < 1e-12);
  }

  const Group t(GroupSpec::torus(1));
  for (int i = 0; i < 100; ++i) {
    const auto g = t.haar_sample(rng), h = t.haar_sample(rng);
    CHECK(op_norm_dist(theta({g, h, g, h}), t.identity()) < 1e-12);
  }

  auto with_phase = [&](double a) { return sxu.element({Quat{}}, {a}); };
  const double d = k_distance({with_phase(0.2), with_phase(0.3), with_phase(0.1), with_phase(0.1)});
  CHECK(std::abs(d - std::abs(std::polar(1.0, 0.3) - 1.0)) < 1e-12);
  // the SU(2) parts never matter
  Quadruple mixed{sxu.element({Quat{0, 1, 0, 0}}, {0.2}), sxu.element({Quat{0, 0, 1, 0}}, {0.3}),
                  sxu.element({Quat{0, 0, 0, 1}}, {0.1}), with_phase(0.1)};
  CHECK(std::abs(k_distance(mixed) - d) < 1e-12);

  int zeros = 0;
  for (int i = 0; i < 10000; ++i) {
    Quadruple q{sxu.haar_sample(rng), sxu.haar_sample(rng), sxu.haar_sample(rng), sxu.haar_sample(rng)};
    if (k_distance(q) == 0.0) ++zeros;
  }
  CHECK(zeros == 0);

  const Group s(GroupSpec::su2());
  CHECK_THROWS_AS(k_distance({s.identity(), s.identity(), s.identity(), s.identity()}), InvalidArgument);

  // U(2) = (SU(2) x U(1))/Z2: theta with abelian part pi is absorbed by -1 in SU(2)
  const Group u2(GroupSpec::quotient(GroupSpec::product({GroupSpec::su2(), GroupSpec::torus(1)}),
                                     {{0.0, 0.0}, {kPi, kPi}}));
  const auto x = u2.element({Quat{}}, {kPi});
  CHECK(k_distance({x, u2.identity(), u2.identity(), u2.identity()}) < 1e-12);
}

TEST_CASE("component labels") {
  const Group z2(GroupSpec::cyclic(2));
  CHECK(component_label(z2.identity()) == 0);
  CHECK(component_label(z2.elements()[1]) == 1);
  const Group sz(GroupSpec::product({GroupSpec::su2(), GroupSpec::cyclic(2)}));
  SeededRng rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto g = sz.haar_sample(rng);
    CHECK(component_label(g) == g.index()[0]);
    const auto s = sz.element({g.su2()[0]}, {}, {1});
    CHECK(component_label(s) == 1);
  }
  const Group z6(GroupSpec::product({GroupSpec::cyclic(2), GroupSpec::cyclic(3)}));
  for (int i = 0; i < 200; ++i) {
    const auto a = z6.haar_sample(rng), b = z6.haar_sample(rng);
    CHECK(component_label(compose(a, b)) == z6.component_product(component_label(a), component_label(b)));
  }
  // finite groups: every element its own component
  std::map<int, int> seen;
  for (const auto& g : z6.elements()) seen[component_label(g)]++;
  CHECK(seen.size() == 6);
}

TEST_CASE("exp and log") {
  SeededRng rng(6);
  for (const auto& spec : testsupport::sample_specs()) {
    const Group g(spec);
    for (int i = 0; i < 100; ++i) {
      const auto x = g.random_algebra(rng, 0.5);
      const auto m = x.matrix();
      CHECK(svd_norm(m + m.adjoint()) < 1e-15);
      const auto h = g.exp(x);
      CHECK(op_norm_dist(g.exp(g.log(h)), h) < 1e-12);
      if (g.su2_count() > 0) CHECK(std::abs(m.block(0, 0, 2, 2).trace()) < 1e-15);
    }
  }
  const Group sz(GroupSpec::product({GroupSpec::su2(), GroupSpec::cyclic(2)}));
  CHECK_THROWS_AS(sz.log(sz.element({Quat{}}, {}, {1})), InvalidArgument);
  // matrix exponential oracle for SU(2)
  const Group s(GroupSpec::su2());
  for (int i = 0; i < 50; ++i) {
    const auto x = s.random_algebra(rng, 1.0);
    Eigen::MatrixXcd series = Eigen::MatrixXcd::Identity(2, 2), term = series;
    for (int k = 1; k < 40; ++k) {
      term = term * x.matrix() / double(k);
      series += term;
    }
    CHECK(svd_norm(s.exp(x).matrix() - series) < 1e-13);
  }
}

TEST_CASE("element JSON round trip") {
  SeededRng rng(10);
  for (const auto& spec : testsupport::sample_specs()) {
    const Group g(spec);
    for (int i = 0; i < 20; ++i) {
      const auto a = g.haar_sample(rng);
      const auto b = GroupElement::from_json(g, Json::parse(a.to_json().dump()));
      CHECK(op_norm_dist(a, b) < 1e-14);
    }
  }
}

TEST_CASE("ball measure") {
  SeededRng rng(12);
  for (const auto& spec : testsupport::sample_specs()) {
    const Group g(spec);
    CHECK(ball_measure_estimate(g, 2.5, 2000, rng).value == 1.0);
  }
  const Group t(GroupSpec::torus(1));
  const auto b = ball_measure_estimate(t, 0.2, 100000, rng);
  const double exact = 2 * std::asin(0.1) / kPi;
  CHECK(std::abs(b.value - exact) < 3 * std::sqrt(exact * (1 - exact) / 1e5));
  CHECK(b.samples == 100000);
  CHECK_THROWS_AS(ball_measure_estimate(t, 0.2, 0, rng), InvalidArgument);

  const Group s(GroupSpec::su2());
  const auto fit = fit_ball_exponent(s, {0.4, 0.2, 0.1, 0.05}, 100000, rng);
  CHECK(std::abs(fit.exponent - 3.0) < 0.3);
  const auto fit_t = fit_ball_exponent(t, {0.4, 0.2, 0.1, 0.05}, 100000, rng);
  CHECK(std::abs(fit_t.exponent - 1.0) < 0.1);

  // monotone in eps when evaluated on a common sample stream
  double prev = 0.0;
  for (double eps : {0.05, 0.1, 0.3, 0.6, 1.0, 1.5, 2.0}) {
    SeededRng same(99);
    const double v = ball_measure_estimate(s, eps, 20000, same).value;
    CHECK(v >= prev);
    prev = v;
  }
  const Group z2(GroupSpec::cyclic(2));
  CHECK(ball_measure_exact(z2, 0.5) == 0.5);
  CHECK(ball_measure_exact(z2, 1.5) == 1.0);
}

TEST_CASE("ball estimate does not depend on the worker count") {
  const Group s(GroupSpec::su2());
  set_thread_limit(1);
  SeededRng r1(5);
  const auto a = ball_measure_estimate(s, 0.7, 30000, r1);
  set_thread_limit(4);
  SeededRng r2(5);
  const auto b = ball_measure_estimate(s, 0.7, 30000, r2);
  set_thread_limit(0);
  CHECK(a.hits == b.hits);
}
