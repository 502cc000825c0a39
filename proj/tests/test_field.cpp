#include <cmath>
#include <numbers>
#include <thread>

#include "doctest.h"
#include "holonomy/field.hpp"
#include "support.hpp"

using namespace holonomy;

namespace {

const double kPi = std::numbers::pi;

Group su2() { return Group(GroupSpec::su2()); }
Group u1() { return Group(GroupSpec::torus(1)); }
Group su2u1() { return Group(GroupSpec::product({GroupSpec::su2(), GroupSpec::torus(1)})); }

double phase_gap(double a, double b) { return std::abs(std::remainder(a - b, 2 * kPi)); }

// Random closed word through the origin over a few loops of a shared registry.
struct Bouquet {
  RegistryPtr reg = std::make_shared<EdgeRegistry>();
  std::vector<PathWord> loops;
  Bouquet() {
    loops.push_back(circle_loop(*reg, {1.0, 0.0}, 1.0));
    loops.push_back(circle_loop(*reg, {-0.5, 0.0}, 0.5, 0.0));
    const int a = reg->add_segment({0, 0}, {0.5, 1.5});
    const int b = reg->add_arc({0.25, 0.75}, std::hypot(0.25, 0.75), std::atan2(0.75, 0.25),
                               std::atan2(0.75, 0.25) + kPi);
    loops.push_back(PathWord::from_signed(*reg, {a, b}));
  }
  PathWord random_word(SeededRng& rng, int len) const {
    PathWord w = PathWord::identity({0, 0});
    for (int i = 0; i < len; ++i) {
      const PathWord& l = loops[rng.below(loops.size())];
      w = concat(w, rng.coin(0.5) ? l : inverse(l));
    }
    return w;
  }
};

}  // namespace

TEST_CASE("zero field has trivial holonomy") {
  auto bs = build_baez_sawin(4);
  for (const auto& spec : testsupport::sample_specs()) {
    Group g(spec);
    HolonomyEvaluator H(ConnectionField(g, 2), bs.hyph.registry_ptr());
    for (const auto& e : bs.hyph.edges()) CHECK(approx_equal(H.holonomy(e), g.identity()));
  }
}

TEST_CASE("constant abelian field integrates exactly along a segment") {
  for (double c : {0.3, -1.7, 2.5}) {
    ConnectionField A(u1(), 0);
    A.affine(0, 0) = {c, 0.0, 0.0};
    EdgeRegistry reg;
    const int id = reg.add_segment({-1.0, 0.5}, {2.0, 0.5});
    const auto h = transport_edge(A, reg.edge(id), true, 8);
    CHECK(phase_gap(h.phase()[0], c * 3.0) < 1e-13);
  }
}

TEST_CASE("reverse traversal integrates to the inverse") {
  SeededRng rng(11);
  const auto A = sample_random_field(su2u1(), 3, 0.8, rng);
  auto bs = build_baez_sawin(3);
  const auto& reg = bs.hyph.registry();
  for (const auto& e : reg.edges()) {
    const auto f = transport_edge(A, e, true, 1000);
    const auto b = transport_edge(A, e, false, 1000);
    CHECK(op_norm_dist(compose(f, b), su2u1().identity()) < 1e-9);
  }
}

TEST_CASE("Magnus scheme converges at fourth order") {
  SeededRng rng(5);
  const auto A = sample_random_field(su2(), 2, 1.0, rng);
  EdgeRegistry reg;
  const int id = reg.add_arc({0.3, -0.2}, 1.6, 0.1, 0.1 + 2 * kPi);
  const auto ref = transport_edge(A, reg.edge(id), true, 2048);
  const double e8 = op_norm_dist(transport_edge(A, reg.edge(id), true, 8), ref);
  const double e16 = op_norm_dist(transport_edge(A, reg.edge(id), true, 16), ref);
  const double e32 = op_norm_dist(transport_edge(A, reg.edge(id), true, 32), ref);
  CHECK(e8 / e16 >= 3.5);
  CHECK(e16 / e32 >= 3.5);
  CHECK(e16 / e32 > 10.0);  // close to 16 for a fourth-order method
}

TEST_CASE("transports stay unitary") {
  SeededRng rng(8);
  const auto A = sample_random_field(su2u1(), 4, 3.0, rng);
  auto bs = build_baez_sawin(6);
  HolonomyEvaluator H(A, bs.hyph.registry_ptr(), 512);
  for (const auto& w : {bs.w12, bs.w43}) {
    const auto m = H.holonomy(w).matrix();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    CHECK((m * m.adjoint() - id).norm() < 1e-12);
    CHECK(std::abs(m.topLeftCorner(2, 2).determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("holonomy is a groupoid morphism") {
  SeededRng rng(21);
  Bouquet b;
  for (const auto& spec : testsupport::sample_specs()) {
    Group g(spec);
    HolonomyEvaluator H(sample_random_field(g, 2, 1.0, rng), b.reg, 64);
    for (int i = 0; i < 50; ++i) {
      const auto u = b.random_word(rng, 1 + static_cast<int>(rng.below(4)));
      const auto v = b.random_word(rng, 1 + static_cast<int>(rng.below(4)));
      CHECK(approx_equal(H.holonomy(concat(u, v)), compose(H.holonomy(u), H.holonomy(v)), 1e-11));
      CHECK(approx_equal(H.holonomy(inverse(u)), inverse(H.holonomy(u)), 1e-11));
      CHECK(approx_equal(H.holonomy(reduce(concat(u, inverse(u)))), g.identity()));
    }
  }
}

TEST_CASE("holonomy is thread-safe under concurrent evaluation") {
  SeededRng rng(3);
  Bouquet b;
  HolonomyEvaluator H(sample_random_field(su2(), 2, 1.0, rng), b.reg, 64);
  std::vector<PathWord> words;
  for (int i = 0; i < 64; ++i) words.push_back(b.random_word(rng, 5));
  std::vector<GroupElement> serial;
  {
    HolonomyEvaluator fresh(H.field(), b.reg, 64);
    for (const auto& w : words) serial.push_back(fresh.holonomy(w));
  }
  std::vector<GroupElement> out(words.size());
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < words.size(); i += 4) out[i] = H.holonomy(words[i]);
    });
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < words.size(); ++i) CHECK(approx_equal(out[i], serial[i], 0.0));
}

TEST_CASE("abelian holonomies cannot tell alpha1 alpha2 from alpha4 alpha3") {
  SeededRng rng(99);
  for (int J : {1, 3, 6}) {
    auto bs = build_baez_sawin(J);
    for (int trial = 0; trial < 5; ++trial) {
      HolonomyEvaluator H(sample_random_field(u1(), 3, 1.5, rng), bs.hyph.registry_ptr(), 256);
      CHECK(phase_gap(H.holonomy(bs.w12).phase()[0], H.holonomy(bs.w43).phase()[0]) < 1e-9);
      // same constraint on the abelian factor of SU(2) x U(1)
      HolonomyEvaluator K(sample_random_field(su2u1(), 3, 1.5, rng), bs.hyph.registry_ptr(), 256);
      Quadruple q{K.holonomy(bs.hyph.edges()[0]), K.holonomy(bs.hyph.edges()[1]),
                  K.holonomy(bs.hyph.edges()[2]), K.holonomy(bs.hyph.edges()[3])};
      CHECK(phase_gap(theta(q).phase()[0], 0.0) < 1e-9);
      CHECK(k_distance(q) < 1e-9);
    }
  }
}

TEST_CASE("an edge and its t^2 reparametrisation have equal holonomy") {
  SeededRng rng(4);
  EdgeRegistry reg;
  const int id = reg.add_arc({0.0, 0.0}, 1.2, kPi, 3 * kPi);
  auto [a, b] = tau_square_pair(reg, id);
  auto shared = std::make_shared<EdgeRegistry>(reg);
  const auto A = sample_random_field(su2u1(), 3, 1.0, rng);
  HolonomyEvaluator H(A, shared, 2048);
  // the witness is integrated along its own parametrisation, so agreement is not by construction
  const double coarse = op_norm_dist(transport_edge(A, shared->edge(id), true, 16),
                                     transport_edge(A, shared->edge(b.letters()[0].id), true, 16));
  CHECK(coarse > 1e-12);
  CHECK(coarse < 0.1);
  CHECK(approx_equal(H.holonomy(a), H.holonomy(b), 1e-9));
  const auto back = transport_edge(A, shared->edge(b.letters()[0].id), false, 2048);
  CHECK(approx_equal(compose(H.holonomy(b), back), su2u1().identity(), 1e-9));
}

TEST_CASE("constant curvature gives the area law") {
  const double F = 0.7;
  const auto A = constant_curvature_field(u1(), F);
  for (double rho : {0.1, 0.5, 1.0, 2.0}) {
    auto reg = std::make_shared<EdgeRegistry>();
    const auto loop = circle_loop(*reg, {0.5, -0.3}, rho);
    HolonomyEvaluator H(A, reg, 256);
    CHECK(phase_gap(H.holonomy(loop).phase()[0], F * kPi * rho * rho) < 1e-10);
    CHECK(phase_gap(H.holonomy(inverse(loop)).phase()[0], -F * kPi * rho * rho) < 1e-10);
  }
  auto bs = build_baez_sawin(5);
  HolonomyEvaluator H(A, bs.hyph.registry_ptr(), 256);
  const auto& reg = bs.hyph.registry();
  for (const auto& w : bs.hyph.edges())
    CHECK(phase_gap(H.holonomy(w).phase()[0], F * signed_area(reg, w)) < 1e-9);
}

TEST_CASE("gauge action matches integrating the transformed field") {
  // For U(1), phi = exp(X) turns A into A + dX; dX is again a trigonometric polynomial.
  SeededRng rng(17);
  const Group g = u1();
  const int D = 2;
  const auto A = sample_random_field(g, D, 1.0, rng);
  const auto phi = sample_random_gauge(g, D, 1.0, rng);
  ConnectionField B = A;
  SmoothGauge copy = phi;
  const auto& X = copy.coefficients()[0];
  const double w = ConnectionField::kDefaultOmega;
  for (int k1 = 0; k1 <= D; ++k1)
    for (int k2 = -D; k2 <= D; ++k2) {
      const std::size_t i = static_cast<std::size_t>(k1 * (2 * D + 1) + k2 + D);
      B.fourier(0, 0).cos_coef[i] += X.sin_coef[i] * w * k1;
      B.fourier(0, 0).sin_coef[i] -= X.cos_coef[i] * w * k1;
      B.fourier(1, 0).cos_coef[i] += X.sin_coef[i] * w * k2;
      B.fourier(1, 0).sin_coef[i] -= X.cos_coef[i] * w * k2;
    }
  auto bs = build_baez_sawin(3);
  HolonomyEvaluator HA(A, bs.hyph.registry_ptr(), 2048), HB(B, bs.hyph.registry_ptr(), 2048);
  const auto G = apply_gauge(HA, phi);
  for (const auto& w0 : bs.gamma_i) CHECK(phase_gap(G.holonomy(w0).phase()[0], HB.holonomy(w0).phase()[0]) < 1e-9);
}

TEST_CASE("gauged holonomy conjugates loops and preserves composition") {
  SeededRng rng(23);
  Bouquet b;
  const Group g = su2u1();
  HolonomyEvaluator H(sample_random_field(g, 2, 1.0, rng), b.reg, 64);
  const auto phi = sample_random_gauge(g, 2, 1.0, rng);
  const auto G = apply_gauge(H, phi);
  const auto at0 = phi.value({0, 0});
  for (int i = 0; i < 30; ++i) {
    const auto u = b.random_word(rng, 3), v = b.random_word(rng, 2);
    CHECK(approx_equal(G.holonomy(u), conjugate(H.holonomy(u), at0), 1e-11));
    CHECK(approx_equal(G.holonomy(concat(u, v)), compose(G.holonomy(u), G.holonomy(v)), 1e-11));
  }
}

TEST_CASE("embedded holonomy is a groupoid morphism") {
  SeededRng rng(31);
  auto bs = build_baez_sawin(4);
  const Group g = su2u1();
  HolonomyEvaluator H(sample_random_field(g, 2, 1.0, rng), bs.hyph.registry_ptr());
  const auto xi = random_trivialization(g, {{0, 0}, {-1, 0}, {2, 0}}, rng);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& gi = bs.gamma_i[i];
    const auto& ai = bs.hyph.edges()[i];
    CHECK(approx_equal(embedded_holonomy(H, xi, ai),
                       compose(embedded_holonomy(H, xi, gi), embedded_holonomy(H, xi, bs.gamma)), 1e-11));
  }
  CHECK(approx_equal(xi.at({3.0, 3.0}), g.identity(), 0.0));
}

TEST_CASE("random fields are deterministic and round-trip through JSON") {
  const Group g = su2u1();
  SeededRng r1(77), r2(77);
  const auto A = sample_random_field(g, 3, 0.5, r1);
  const auto B = sample_random_field(g, 3, 0.5, r2);
  CHECK(A.to_json() == B.to_json());
  const auto C = ConnectionField::from_json(Json::parse(A.to_json().dump()));
  auto bs = build_baez_sawin(2);
  HolonomyEvaluator HA(A, bs.hyph.registry_ptr(), 64), HC(C, bs.hyph.registry_ptr(), 64);
  CHECK(approx_equal(HA.holonomy(bs.w12), HC.holonomy(bs.w12), 0.0));
  Json bad = A.to_json();
  bad["colour"] = 1;
  CHECK_THROWS_AS(ConnectionField::from_json(bad), InvalidArgument);
}

TEST_CASE("degenerate fields vanish") {
  SeededRng rng(1);
  const auto Z = sample_random_field(Group(GroupSpec::cyclic(3)), 3, 1.0, rng);
  const auto A = sample_random_field(su2(), 3, 0.0, rng);
  double ax[3], ay[3];
  A.eval({0.3, 0.4}, ax, ay);
  for (int d = 0; d < 3; ++d) CHECK((ax[d] == 0.0 && ay[d] == 0.0));
  auto bs = build_baez_sawin(2);
  HolonomyEvaluator H(Z, bs.hyph.registry_ptr());
  CHECK(approx_equal(H.holonomy(bs.w12), Z.group().identity(), 0.0));
}

TEST_CASE("field amplitude sets the pointwise variance") {
  SeededRng rng(2024);
  const double a = 0.8;
  double s2 = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto A = sample_random_field(u1(), 2, a, rng);
    double ax, ay;
    A.eval({1.1, -0.7}, &ax, &ay);
    s2 += ax * ax + ay * ay;
  }
  // 2n chi-square samples: relative standard error about 1/sqrt(n)
  CHECK(std::abs(s2 / (2 * n) / (a * a) - 1.0) < 0.06);
}

TEST_CASE("gauge interpolation hits prescribed values") {
  SeededRng rng(12);
  for (const auto& spec : testsupport::sample_specs()) {
    const Group g(spec);
    std::vector<Point> pts;
    for (int i = 0; i < 5; ++i) pts.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3)});
    std::vector<GroupElement> vals;
    const auto base = g.haar_sample(rng);
    for (int i = 0; i < 5; ++i) vals.push_back(compose(base, g.exp(g.random_algebra(rng, 1.0))));
    const auto phi = interpolate_gauge(g, pts, vals);
    for (int i = 0; i < 5; ++i) CHECK(op_norm_dist(phi.value(pts[i]), vals[i]) <= 1e-9);
  }
  const Group z2(GroupSpec::product({GroupSpec::su2(), GroupSpec::cyclic(2)}));
  std::vector<GroupElement> vals{z2.identity(), z2.element({Quat{}}, {}, {1})};
  CHECK_THROWS_AS(interpolate_gauge(z2, {{0, 0}, {1, 1}}, vals), HypothesisViolation);
}
