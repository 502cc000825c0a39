#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "holonomy/group.hpp"
#include "holonomy/paths.hpp"

namespace holonomy {

inline constexpr int kDefaultSteps = 256;

/// Real trigonometric polynomial sum_{k1 in [0,D], k2 in [-D,D]}
///   c[k1,k2] cos(w (k1 x + k2 y)) + s[k1,k2] sin(w (k1 x + k2 y)).
struct FourierScalar {
  std::vector<double> cos_coef, sin_coef;  // index k1 * (2D+1) + (k2 + D)

  static std::size_t terms(int degree) { return static_cast<std::size_t>((degree + 1) * (2 * degree + 1)); }
};

/// Lie-algebra valued 1-form A = A_x dx + A_y dy on the chart. Each algebra coordinate of
/// A_x and A_y is a trigonometric polynomial plus an affine part a + b x + c y.
class ConnectionField {
 public:
  ConnectionField() = default;
  /// Zero field.
  ConnectionField(Group group, int degree, double omega = kDefaultOmega);

  static constexpr double kDefaultOmega = 0.39269908169872414;  // pi / 8

  const Group& group() const { return group_; }
  int degree() const { return degree_; }
  double omega() const { return omega_; }
  double amplitude() const { return amplitude_; }
  std::uint64_t seed() const { return seed_; }

  /// Fourier data of coordinate `dir` of A_x (component 0) or A_y (component 1).
  FourierScalar& fourier(int component, std::size_t dir) { return fourier_[component][dir]; }
  const FourierScalar& fourier(int component, std::size_t dir) const { return fourier_[component][dir]; }
  /// Affine part {a, b, c} of coordinate `dir` of A_x / A_y.
  std::array<double, 3>& affine(int component, std::size_t dir) { return affine_[component][dir]; }

  /// Evaluates A at p; ax, ay receive dim() algebra coordinates each.
  void eval(Point p, double* ax, double* ay) const;

  Json to_json() const;
  static ConnectionField from_json(const Json& j);

 private:
  friend ConnectionField sample_random_field(const Group&, int, double, SeededRng&);
  Group group_;
  int degree_ = 0;
  double omega_ = kDefaultOmega;
  double amplitude_ = 0.0;
  std::uint64_t seed_ = 0;
  std::array<std::vector<FourierScalar>, 2> fourier_;
  std::array<std::vector<std::array<double, 3>>, 2> affine_;
};

/// Gaussian Fourier coefficients with variance amplitude^2 / terms, so each coordinate of
/// the field has variance amplitude^2 at every point. Dimension-0 groups give the zero field.
ConnectionField sample_random_field(const Group& group, int degree, double amplitude, SeededRng& rng);

/// U(1) field (F/2)(-y dx + x dy) of constant curvature F (first U(1) coordinate).
ConnectionField constant_curvature_field(const Group& group, double F);

/// Parallel transport dh/dt = h A(gamma'(t)) along one primitive edge, h(0) = e, by a
/// fourth-order commutator-free Magnus scheme with `steps` steps per segment or arc.
/// Witness edges are integrated in their own parameter t, i.e. along the base at t^2.
GroupElement transport_edge(const ConnectionField& A, const PrimitiveEdge& e, bool forward = true,
                            int steps = kDefaultSteps);

/// Holonomies of words with per-edge transports cached; inverse letters reuse the inverse
/// of the cached forward transport, so holonomy is an exact groupoid morphism.
class HolonomyEvaluator {
 public:
  HolonomyEvaluator(const ConnectionField& A, RegistryPtr reg, int steps = kDefaultSteps);

  const Group& group() const { return A_->group(); }
  const ConnectionField& field() const { return *A_; }
  const EdgeRegistry& registry() const { return *reg_; }

  GroupElement edge(int id) const;
  GroupElement holonomy(const PathWord& w) const;

 private:
  std::shared_ptr<const ConnectionField> A_;
  RegistryPtr reg_;
  int steps_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<int, GroupElement> cache_;
};

/// Smooth gauge transformation x -> offset * exp(X(x)) with X a Fourier algebra field.
class SmoothGauge {
 public:
  SmoothGauge() = default;
  explicit SmoothGauge(Group group, int degree = 0, double omega = ConnectionField::kDefaultOmega);

  const Group& group() const { return group_; }
  GroupElement value(Point p) const;
  LieAlgebraElement algebra(Point p) const;

  std::vector<FourierScalar>& coefficients() { return fourier_; }
  GroupElement& offset() { return offset_; }
  const GroupElement& offset() const { return offset_; }
  int degree() const { return degree_; }

 private:
  Group group_;
  int degree_ = 0;
  double omega_ = ConnectionField::kDefaultOmega;
  std::vector<FourierScalar> fourier_;
  GroupElement offset_;
};

/// Random smooth gauge with Gaussian Fourier data of the given amplitude and the offset
/// drawn from Haar measure on the component group's representatives.
SmoothGauge sample_random_gauge(const Group& group, int degree, double amplitude, SeededRng& rng,
                                bool random_component = false);

/// Smooth gauge through prescribed values at distinct points. Throws HypothesisViolation
/// when the values lie in different connected components (no smooth gauge can do it).
SmoothGauge interpolate_gauge(const Group& group, const std::vector<Point>& points,
                              const std::vector<GroupElement>& values);

/// Holonomy of the gauge-transformed connection: phi(w(0))^-1 h_A(w) phi(w(1)).
class GaugedEvaluator {
 public:
  GaugedEvaluator(const HolonomyEvaluator& base, SmoothGauge phi) : base_(base), phi_(std::move(phi)) {}
  GroupElement holonomy(const PathWord& w) const;

 private:
  const HolonomyEvaluator& base_;
  SmoothGauge phi_;
};

GaugedEvaluator apply_gauge(const HolonomyEvaluator& A, const SmoothGauge& phi);

/// Per-fibre identification of the bundle with G on finitely many points; identity elsewhere.
class Trivialization {
 public:
  explicit Trivialization(Group group) : group_(std::move(group)) {}
  void set(Point p, GroupElement g);
  GroupElement at(Point p) const;
  bool has(Point p) const;
  const Group& group() const { return group_; }
  const std::vector<std::pair<Point, GroupElement>>& table() const { return table_; }

 private:
  Group group_;
  std::vector<std::pair<Point, GroupElement>> table_;
};

Trivialization random_trivialization(const Group& group, const std::vector<Point>& points, SeededRng& rng);

/// Xi_{w(0)}^-1 h_A(w) Xi_{w(1)}.
GroupElement embedded_holonomy(const HolonomyEvaluator& A, const Trivialization& xi, const PathWord& w);

}  // namespace holonomy
