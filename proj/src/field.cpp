#include "holonomy/field.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

#include <Eigen/QR>

namespace holonomy {

namespace {

// Commutator-free fourth-order Magnus weights and Gauss nodes.
const double kSqrt3 = std::sqrt(3.0);
const double kW1 = 0.25 - kSqrt3 / 6.0;
const double kW2 = 0.25 + kSqrt3 / 6.0;
const double kC1 = 0.5 - kSqrt3 / 6.0;
const double kC2 = 0.5 + kSqrt3 / 6.0;

constexpr double kTailMinRadius = 0x1.0p-44;
constexpr int kTailMinSteps = 16;

void fourier_add(const std::vector<FourierScalar>& f, int degree, double omega, Point p, double* out) {
  if (f.empty()) return;
  const int w = 2 * degree + 1;
  std::vector<std::complex<double>> ex(degree + 1), ey(w);
  for (int k = 0; k <= degree; ++k) ex[k] = std::polar(1.0, omega * k * p.x);
  for (int k = -degree; k <= degree; ++k) ey[k + degree] = std::polar(1.0, omega * k * p.y);
  for (int k1 = 0; k1 <= degree; ++k1)
    for (int k2 = 0; k2 < w; ++k2) {
      const std::complex<double> z = ex[k1] * ey[k2];
      const std::size_t idx = static_cast<std::size_t>(k1 * w + k2);
      for (std::size_t d = 0; d < f.size(); ++d) out[d] += f[d].cos_coef[idx] * z.real() + f[d].sin_coef[idx] * z.imag();
    }
}

std::vector<FourierScalar> zero_fourier(std::size_t dim, int degree) {
  const std::size_t t = FourierScalar::terms(degree);
  return std::vector<FourierScalar>(dim, FourierScalar{std::vector<double>(t, 0.0), std::vector<double>(t, 0.0)});
}

// Transport state on the flattened group: SU(2) quaternions and U(1) phases (unwrapped).
struct State {
  std::vector<Quat> q;
  std::vector<double> ph;
};

void right_exp(const Group& g, State& s, const std::vector<double>& X, double dt) {
  for (const auto& a : g.atoms()) {
    const double* x = X.data() + a.algebra_offset;
    if (a.kind == AtomKind::Su2) s.q[a.slot] = s.q[a.slot] * quat_exp(dt * x[0], dt * x[1], dt * x[2]);
    if (a.kind == AtomKind::Phase) s.ph[a.slot] += dt * x[0];
  }
}

// Curve of a segment or arc at parameter t in path direction, with velocity.
struct Curve {
  const Segment* seg = nullptr;
  const Arc* arc = nullptr;
  bool forward = true;
  bool squared = false;  // edge parameter t^2 (non-immersive witness edges)

  void at(double t, Point& p, Point& v) const {
    const double u = forward ? t : 1.0 - t;
    double s = u, ds = forward ? 1.0 : -1.0;
    if (squared) {
      s = u * u;
      ds *= 2.0 * u;
    }
    if (seg) {
      p = {seg->p0.x + s * (seg->p1.x - seg->p0.x), seg->p0.y + s * (seg->p1.y - seg->p0.y)};
      v = {ds * (seg->p1.x - seg->p0.x), ds * (seg->p1.y - seg->p0.y)};
    } else {
      const double phi = arc->angle0 + s * arc->sweep();
      const double c = std::cos(phi), sn = std::sin(phi);
      p = {arc->center.x + arc->radius * c, arc->center.y + arc->radius * sn};
      const double r = ds * arc->radius * arc->sweep();
      v = {-r * sn, r * c};
    }
  }
};

void integrate(const ConnectionField& A, const Curve& c, int steps, State& s) {
  const std::size_t n = static_cast<std::size_t>(A.group().dim());
  if (n == 0) return;
  std::vector<double> ax(n), ay(n), X1(n), X2(n), Y(n);
  const double dt = 1.0 / steps;
  auto sample = [&](double t, std::vector<double>& X) {
    Point p, v;
    c.at(t, p, v);
    A.eval(p, ax.data(), ay.data());
    for (std::size_t d = 0; d < n; ++d) X[d] = ax[d] * v.x + ay[d] * v.y;
  };
  for (int k = 0; k < steps; ++k) {
    const double t0 = k * dt;
    sample(t0 + kC1 * dt, X1);
    sample(t0 + kC2 * dt, X2);
    for (std::size_t d = 0; d < n; ++d) Y[d] = kW2 * X1[d] + kW1 * X2[d];
    right_exp(A.group(), s, Y, dt);
    for (std::size_t d = 0; d < n; ++d) Y[d] = kW1 * X1[d] + kW2 * X2[d];
    right_exp(A.group(), s, Y, dt);
  }
}

std::string at(const std::string& key) { return "field '" + key + "'"; }

}  // namespace

// ---------------------------------------------------------------- ConnectionField

ConnectionField::ConnectionField(Group group, int degree, double omega)
    : group_(std::move(group)), degree_(degree), omega_(omega) {
  if (degree < 0) throw InvalidArgument("field degree must be >= 0");
  const std::size_t dim = static_cast<std::size_t>(group_.dim());
  for (int c = 0; c < 2; ++c) {
    fourier_[c] = zero_fourier(dim, degree);
    affine_[c].assign(dim, {0.0, 0.0, 0.0});
  }
}

void ConnectionField::eval(Point p, double* ax, double* ay) const {
  const std::size_t dim = fourier_[0].size();
  for (std::size_t d = 0; d < dim; ++d) {
    const auto& fx = affine_[0][d];
    const auto& fy = affine_[1][d];
    ax[d] = fx[0] + fx[1] * p.x + fx[2] * p.y;
    ay[d] = fy[0] + fy[1] * p.x + fy[2] * p.y;
  }
  fourier_add(fourier_[0], degree_, omega_, p, ax);
  fourier_add(fourier_[1], degree_, omega_, p, ay);
}

Json ConnectionField::to_json() const {
  Json comps = Json::array();
  for (int c = 0; c < 2; ++c) {
    Json dirs = Json::array();
    for (std::size_t d = 0; d < fourier_[c].size(); ++d)
      dirs.push_back({{"cos", fourier_[c][d].cos_coef}, {"sin", fourier_[c][d].sin_coef}, {"affine", affine_[c][d]}});
    comps.push_back(dirs);
  }
  return {{"spec", group_.spec().to_json()}, {"degree", degree_}, {"omega", omega_}, {"amplitude", amplitude_},
          {"seed", seed_}, {"components", comps}};
}

ConnectionField ConnectionField::from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("field JSON must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k != "spec" && k != "degree" && k != "omega" && k != "amplitude" && k != "seed" && k != "components")
      throw InvalidArgument("unknown field '" + k + "'");
  }
  for (const char* k : {"spec", "degree", "components"})
    if (!j.contains(k)) throw InvalidArgument("missing " + at(k));
  ConnectionField A(Group(GroupSpec::from_json(j.at("spec"))), j.at("degree").get<int>(),
                    j.value("omega", kDefaultOmega));
  A.amplitude_ = j.value("amplitude", 0.0);
  A.seed_ = j.value("seed", std::uint64_t{0});
  const Json& comps = j.at("components");
  const std::size_t dim = static_cast<std::size_t>(A.group_.dim());
  const std::size_t t = FourierScalar::terms(A.degree_);
  if (!comps.is_array() || comps.size() != 2) throw InvalidArgument(at("components") + " must hold A_x and A_y");
  for (int c = 0; c < 2; ++c) {
    if (comps[c].size() != dim) throw InvalidArgument(at("components") + " needs one entry per algebra direction");
    for (std::size_t d = 0; d < dim; ++d) {
      const Json& e = comps[c][d];
      auto cs = e.at("cos").get<std::vector<double>>();
      auto sn = e.at("sin").get<std::vector<double>>();
      if (cs.size() != t || sn.size() != t) throw InvalidArgument(at("components") + ": coefficient count mismatch");
      A.fourier_[c][d] = {std::move(cs), std::move(sn)};
      A.affine_[c][d] = e.at("affine").get<std::array<double, 3>>();
    }
  }
  return A;
}

ConnectionField sample_random_field(const Group& group, int degree, double amplitude, SeededRng& rng) {
  if (degree < 0) throw InvalidArgument("sample_random_field: degree must be >= 0");
  if (!(amplitude >= 0)) throw InvalidArgument("sample_random_field: amplitude must be >= 0");
  ConnectionField A(group, degree);
  A.amplitude_ = amplitude;
  A.seed_ = rng.next();
  if (amplitude == 0.0 || group.dim() == 0) return A;
  SeededRng local(A.seed_);
  const std::size_t t = FourierScalar::terms(degree);
  // each point value is a sum of 2t terms of variance sigma^2 * (cos^2 or sin^2), i.e. t sigma^2
  const double sigma = amplitude / std::sqrt(static_cast<double>(t));
  for (int c = 0; c < 2; ++c)
    for (auto& f : A.fourier_[c]) {
      for (auto& x : f.cos_coef) x = sigma * local.normal();
      for (auto& x : f.sin_coef) x = sigma * local.normal();
    }
  return A;
}

ConnectionField constant_curvature_field(const Group& group, double F) {
  if (group.phase_count() == 0) throw InvalidArgument("constant_curvature_field: group has no U(1) factor");
  ConnectionField A(group, 0);
  std::size_t dir = 0;
  for (const auto& a : group.atoms())
    if (a.kind == AtomKind::Phase) {
      dir = a.algebra_offset;
      break;
    }
  A.affine(0, dir) = {0.0, 0.0, -0.5 * F};
  A.affine(1, dir) = {0.0, 0.5 * F, 0.0};
  return A;
}

// ---------------------------------------------------------------- transport

GroupElement transport_edge(const ConnectionField& A, const PrimitiveEdge& e, bool forward, int steps) {
  if (steps <= 0) throw InvalidArgument("transport_edge: step count must be positive");
  if (!inside_chart(e)) throw GeometryError("transport_edge: edge exits the chart");
  const Group& g = A.group();
  State s{std::vector<Quat>(g.su2_count()), std::vector<double>(g.phase_count(), 0.0)};
  if (const auto* seg = std::get_if<Segment>(&e.geometry)) {
    integrate(A, Curve{seg, nullptr, forward, e.is_witness()}, steps, s);
  } else if (const auto* arc = std::get_if<Arc>(&e.geometry)) {
    integrate(A, Curve{nullptr, arc, forward, e.is_witness()}, steps, s);
  } else {
    const auto& tail = std::get<WiggleTail>(e.geometry);
    auto levels = tail.levels(kTailMinRadius);  // innermost first
    if (!forward) std::reverse(levels.begin(), levels.end());
    for (int j : levels) {
      const Arc a = tail.level_arc(j);
      const int n = std::max(kTailMinSteps, steps >> std::min(30, j - tail.first_level));
      integrate(A, Curve{nullptr, &a, forward}, n, s);
    }
  }
  return g.element(std::move(s.q), std::move(s.ph), std::vector<int>(g.cyclic_count(), 0));
}

HolonomyEvaluator::HolonomyEvaluator(const ConnectionField& A, RegistryPtr reg, int steps)
    : A_(std::make_shared<ConnectionField>(A)), reg_(std::move(reg)), steps_(steps) {
  if (steps <= 0) throw InvalidArgument("holonomy: step count must be positive");
  if (!reg_) throw InvalidArgument("holonomy: missing edge registry");
}

GroupElement HolonomyEvaluator::edge(int id) const {
  {
    std::shared_lock lock(mutex_);
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
  }
  GroupElement h = transport_edge(*A_, reg_->edge(id), true, steps_);
  std::unique_lock lock(mutex_);
  return cache_.emplace(id, std::move(h)).first->second;
}

GroupElement HolonomyEvaluator::holonomy(const PathWord& w) const {
  GroupElement h = A_->group().identity();
  for (const auto& l : w.letters()) {
    const GroupElement e = edge(l.id);
    h = compose(h, l.forward ? e : inverse(e));
  }
  return h;
}

// ---------------------------------------------------------------- gauges

SmoothGauge::SmoothGauge(Group group, int degree, double omega)
    : group_(std::move(group)), degree_(degree), omega_(omega) {
  if (degree < 0) throw InvalidArgument("gauge degree must be >= 0");
  fourier_ = zero_fourier(static_cast<std::size_t>(group_.dim()), degree);
  offset_ = group_.identity();
}

LieAlgebraElement SmoothGauge::algebra(Point p) const {
  LieAlgebraElement x = group_.zero_algebra();
  fourier_add(fourier_, degree_, omega_, p, x.coords.data());
  return x;
}

GroupElement SmoothGauge::value(Point p) const { return compose(offset_, group_.exp(algebra(p))); }

SmoothGauge sample_random_gauge(const Group& group, int degree, double amplitude, SeededRng& rng,
                                bool random_component) {
  SmoothGauge phi(group, degree);
  const double sigma = amplitude / std::sqrt(static_cast<double>(FourierScalar::terms(degree)));
  for (auto& f : phi.coefficients()) {
    for (auto& x : f.cos_coef) x = sigma * rng.normal();
    for (auto& x : f.sin_coef) x = sigma * rng.normal();
  }
  if (random_component) phi.offset() = group.haar_sample(rng);
  return phi;
}

SmoothGauge interpolate_gauge(const Group& group, const std::vector<Point>& points,
                              const std::vector<GroupElement>& values) {
  if (points.size() != values.size() || points.empty())
    throw InvalidArgument("interpolate_gauge: need matching, nonempty point and value lists");
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t k = i + 1; k < points.size(); ++k)
      if (near(points[i], points[k])) throw InvalidArgument("interpolate_gauge: points must be distinct");
  const GroupElement offset = values[0];
  std::vector<LieAlgebraElement> targets;
  for (const auto& v : values) {
    if (component_label(compose(inverse(offset), v)) != 0)
      throw HypothesisViolation("interpolate_gauge: values lie in different connected components");
    targets.push_back(group.log(compose(inverse(offset), v)));
  }
  const std::size_t dim = static_cast<std::size_t>(group.dim());
  for (int degree = 1; degree <= 8; ++degree) {
    SmoothGauge phi(group, degree);
    phi.offset() = offset;
    if (dim == 0) return phi;
    const std::size_t t = FourierScalar::terms(degree);
    Eigen::MatrixXd B(points.size(), 2 * t);
    for (std::size_t i = 0; i < points.size(); ++i) {
      // basis values are the coefficients of a unit field evaluated at the point
      std::vector<FourierScalar> unit(1, {std::vector<double>(t, 0.0), std::vector<double>(t, 0.0)});
      for (std::size_t c = 0; c < 2 * t; ++c) {
        unit[0].cos_coef.assign(t, 0.0);
        unit[0].sin_coef.assign(t, 0.0);
        (c < t ? unit[0].cos_coef[c] : unit[0].sin_coef[c - t]) = 1.0;
        double v = 0.0;
        fourier_add(unit, degree, ConnectionField::kDefaultOmega, points[i], &v);
        B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
      }
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B);
    if (cod.rank() < static_cast<Eigen::Index>(points.size())) continue;
    double worst = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      Eigen::VectorXd y(points.size());
      for (std::size_t i = 0; i < points.size(); ++i) y(static_cast<Eigen::Index>(i)) = targets[i].coords[d];
      const Eigen::VectorXd c = cod.solve(y);
      worst = std::max(worst, (B * c - y).cwiseAbs().maxCoeff());
      auto& f = phi.coefficients()[d];
      for (std::size_t k = 0; k < t; ++k) {
        f.cos_coef[k] = c(static_cast<Eigen::Index>(k));
        f.sin_coef[k] = c(static_cast<Eigen::Index>(t + k));
      }
    }
    if (worst < 1e-11) return phi;
  }
  throw InvalidArgument("interpolate_gauge: no interpolating trigonometric polynomial up to degree 8");
}

GroupElement GaugedEvaluator::holonomy(const PathWord& w) const {
  return compose(compose(inverse(phi_.value(w.start())), base_.holonomy(w)), phi_.value(w.end()));
}

GaugedEvaluator apply_gauge(const HolonomyEvaluator& A, const SmoothGauge& phi) {
  if (A.group() != phi.group()) throw SpecMismatch("apply_gauge: gauge and connection use different groups");
  return GaugedEvaluator(A, phi);
}

// ---------------------------------------------------------------- trivializations

void Trivialization::set(Point p, GroupElement g) {
  if (g.group() != group_) throw SpecMismatch("trivialization value from another group");
  for (auto& [q, h] : table_)
    if (near(p, q)) {
      h = std::move(g);
      return;
    }
  table_.emplace_back(p, std::move(g));
}

GroupElement Trivialization::at(Point p) const {
  for (const auto& [q, h] : table_)
    if (near(p, q)) return h;
  return group_.identity();
}

bool Trivialization::has(Point p) const {
  for (const auto& entry : table_)
    if (near(p, entry.first)) return true;
  return false;
}

Trivialization random_trivialization(const Group& group, const std::vector<Point>& points, SeededRng& rng) {
  Trivialization xi(group);
  for (const auto& p : points) xi.set(p, group.haar_sample(rng));
  return xi;
}

GroupElement embedded_holonomy(const HolonomyEvaluator& A, const Trivialization& xi, const PathWord& w) {
  if (A.group() != xi.group()) throw SpecMismatch("embedded_holonomy: trivialization uses another group");
  return compose(compose(inverse(xi.at(w.start())), A.holonomy(w)), xi.at(w.end()));
}

}  // namespace holonomy
