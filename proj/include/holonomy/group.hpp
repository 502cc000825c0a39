#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "holonomy/errors.hpp"
#include "holonomy/rng.hpp"

namespace holonomy {

using Json = nlohmann::json;

/// Unit quaternion w + x i + y j + z k, identified with the SU(2) matrix
/// [[w + i x, y + i z], [-y + i z, w - i x]].
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  Quat conj() const { return {w, -x, -y, -z}; }
  double norm() const;
  Quat normalized() const;

  friend Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
  }
  friend bool operator==(const Quat&, const Quat&) = default;
};

/// exp of the pure quaternion (x, y, z); exact on SU(2).
Quat quat_exp(double x, double y, double z);

/// Recursive description of a compact group. Central subgroups of quotients are given as
/// angle lists with one angle per atom of the flattened base: an SU(2) atom takes 0 or pi
/// (the element e^{i angle} * 1), a U(1) atom its phase, a cyclic atom of order n a multiple
/// of 2 pi / n.
struct GroupSpec {
  enum class Family { Cyclic, Torus, Su2, Product, Quotient };

  Family family = Family::Su2;
  int n = 1;                                 // Cyclic
  int k = 0;                                 // Torus
  std::vector<GroupSpec> factors;            // Product factors; Quotient holds the base at [0]
  std::vector<std::vector<double>> central;  // Quotient

  static GroupSpec cyclic(int n);
  static GroupSpec torus(int k);
  static GroupSpec su2();
  static GroupSpec product(std::vector<GroupSpec> factors);
  static GroupSpec quotient(GroupSpec base, std::vector<std::vector<double>> central);

  Json to_json() const;
  static GroupSpec from_json(const Json& j);
  static GroupSpec parse(const std::string& text) { return from_json(Json::parse(text)); }
  std::string describe() const { return to_json().dump(); }

  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;
};

enum class AtomKind { Su2, Phase, Cyclic };

/// One indecomposable factor of the flattened group; `slot` indexes the payload array of
/// its kind and `algebra_offset` the first Lie-algebra coordinate it owns.
struct Atom {
  AtomKind kind;
  int order = 0;
  std::size_t slot = 0;
  std::size_t algebra_offset = 0;
};

namespace detail {
struct Payload {
  std::vector<Quat> su2;
  std::vector<double> phase;
  std::vector<int> index;
};
struct GroupImpl;
}  // namespace detail

class GroupElement;
struct LieAlgebraElement;

/// Immutable, cheaply copyable handle to a flattened group (G_ss^a x U(1)^b x finite)/N.
class Group {
 public:
  Group() = default;
  explicit Group(const GroupSpec& spec);

  const GroupSpec& spec() const;
  const std::vector<Atom>& atoms() const;
  std::size_t su2_count() const;
  std::size_t phase_count() const;
  std::size_t cyclic_count() const;

  int dim() const;
  int component_count() const;
  bool is_connected() const { return component_count() == 1; }
  bool is_finite() const { return dim() == 0; }
  bool is_trivial() const;
  /// Number of U(1) atoms (k in (G_ss x U(1)^k)/N).
  std::size_t abelian_rank() const { return phase_count(); }
  /// Element count of a finite group.
  std::size_t order() const;
  /// Representatives of the central subgroup N (identity first).
  std::vector<GroupElement> central_elements() const;

  GroupElement identity() const;
  GroupElement haar_sample(SeededRng& rng) const;
  GroupElement exp(const LieAlgebraElement& x) const;
  /// Principal logarithm; throws on elements outside the identity component.
  LieAlgebraElement log(const GroupElement& g) const;
  LieAlgebraElement zero_algebra() const;
  LieAlgebraElement random_algebra(SeededRng& rng, double scale) const;
  /// All elements of a finite group, in a fixed order.
  std::vector<GroupElement> elements() const;

  /// Builds an element from raw payload arrays; sizes must match the atom layout.
  GroupElement element(std::vector<Quat> su2, std::vector<double> phase = {},
                       std::vector<int> index = {}) const;
  /// Element whose defining-representation matrix is `m` (block layout as matrix()).
  GroupElement from_matrix(const Eigen::MatrixXcd& m) const;

  /// Component id of the product of two components (component group law).
  int component_product(int a, int b) const;

  bool operator==(const Group& other) const;
  bool operator!=(const Group& other) const { return !(*this == other); }
  bool valid() const { return impl_ != nullptr; }

  const detail::GroupImpl& impl() const;

 private:
  friend class GroupElement;
  std::shared_ptr<const detail::GroupImpl> impl_;
};

/// Element of a Group, stored as its canonical coset representative.
class GroupElement {
 public:
  GroupElement() = default;

  const Group& group() const { return group_; }
  const std::vector<Quat>& su2() const { return p_.su2; }
  const std::vector<double>& phase() const { return p_.phase; }
  const std::vector<int>& index() const { return p_.index; }
  const detail::Payload& payload() const { return p_; }

  /// Block-diagonal defining representation: 2x2 per SU(2) atom, 1x1 phase per U(1) atom,
  /// e^{2 pi i j / n} per cyclic atom.
  Eigen::MatrixXcd matrix() const;

  Json to_json() const;
  static GroupElement from_json(const Group& group, const Json& j);

 private:
  friend class Group;
  friend GroupElement compose(const GroupElement&, const GroupElement&);
  friend GroupElement inverse(const GroupElement&);
  GroupElement(Group g, detail::Payload p) : group_(std::move(g)), p_(std::move(p)) {}
  Group group_;
  detail::Payload p_;
};

/// Coordinates in the fixed basis: per SU(2) atom the quaternion units i, j, k
/// (i sigma_3, i sigma_2, i sigma_1), per U(1) atom the generator i.
struct LieAlgebraElement {
  Group group;
  std::vector<double> coords;

  /// Anti-hermitian block-diagonal matrix in the defining representation.
  Eigen::MatrixXcd matrix() const;
};

GroupElement compose(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& a);
/// h^{-1} g h
GroupElement conjugate(const GroupElement& g, const GroupElement& h);

/// Operator-norm distance in the defining representation (discrete 0/1 on cyclic atoms),
/// minimised over coset representatives for quotients.
double op_norm_dist(const GroupElement& a, const GroupElement& b);
bool approx_equal(const GroupElement& a, const GroupElement& b, double tol = 1e-12);

using Quadruple = std::array<GroupElement, 4>;

/// g1 g2 g3^{-1} g4^{-1}
GroupElement theta(const Quadruple& g);

/// Distance of theta(g) from K' = [G_ss x {e}]_N measured on the U(1)^k factor.
double k_distance(const Quadruple& g);

int component_label(const GroupElement& g);

struct BallEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
  std::size_t samples = 0;
};

/// Monte-Carlo Haar measure of B_eps(e) = {g : op_norm_dist(g, e) < eps}.
BallEstimate ball_measure_estimate(const Group& group, double eps, std::size_t n,
                                   SeededRng& rng);

struct BallScaling {
  std::vector<double> eps;
  std::vector<BallEstimate> estimates;
  double exponent = 0.0;
};

/// Log-log fit of the ball measure against eps. Each point is weighted by its hit count
/// (inverse variance of log of a Poisson count), so sparsely hit radii count for little.
BallScaling fit_ball_exponent(const Group& group, const std::vector<double>& eps, std::size_t n,
                              SeededRng& rng);

/// Exact Haar measure of B_eps(e) by enumeration; finite groups only.
double ball_measure_exact(const Group& group, double eps);

/// Wraps an angle into [0, 2 pi).
double wrap_angle(double a);

}  // namespace holonomy
