#include "holonomy/group.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "holonomy/parallel.hpp"
#include "holonomy/stats.hpp"

namespace holonomy {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLexTol = 1e-12;
constexpr double kSameTol = 1e-9;

std::string at(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw InvalidArgument("unknown field '" + at(path, it.key()) + "'");
  }
}

const Json& field(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw InvalidArgument("missing field '" + at(path, key) + "'");
  return j.at(key);
}

int int_field(const Json& j, const std::string& path, const char* key, int lo) {
  const Json& v = field(j, path, key);
  if (!v.is_number_integer()) throw InvalidArgument("field '" + at(path, key) + "' must be an integer");
  const auto x = v.get<long long>();
  if (x < lo || x > 1'000'000) throw InvalidArgument("field '" + at(path, key) + "' out of range");
  return static_cast<int>(x);
}

GroupSpec spec_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw InvalidArgument("group spec '" + (path.empty() ? "spec" : path) + "' must be an object");
  const Json& fam = field(j, path, "family");
  if (!fam.is_string()) throw InvalidArgument("field '" + at(path, "family") + "' must be a string");
  const std::string name = fam.get<std::string>();
  if (name == "su2") {
    require_keys(j, path, {"family"});
    return GroupSpec::su2();
  }
  if (name == "torus") {
    require_keys(j, path, {"family", "k"});
    return GroupSpec::torus(int_field(j, path, "k", 0));
  }
  if (name == "cyclic") {
    require_keys(j, path, {"family", "n"});
    return GroupSpec::cyclic(int_field(j, path, "n", 1));
  }
  if (name == "product") {
    require_keys(j, path, {"family", "factors"});
    const Json& fs = field(j, path, "factors");
    if (!fs.is_array()) throw InvalidArgument("field '" + at(path, "factors") + "' must be an array");
    std::vector<GroupSpec> factors;
    for (std::size_t i = 0; i < fs.size(); ++i)
      factors.push_back(spec_from_json(fs[i], at(path, "factors[" + std::to_string(i) + "]")));
    return GroupSpec::product(std::move(factors));
  }
  if (name == "quotient") {
    require_keys(j, path, {"family", "base", "central"});
    GroupSpec base = spec_from_json(field(j, path, "base"), at(path, "base"));
    const Json& cs = field(j, path, "central");
    if (!cs.is_array()) throw InvalidArgument("field '" + at(path, "central") + "' must be an array");
    std::vector<std::vector<double>> central;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string p = at(path, "central[" + std::to_string(i) + "]");
      if (!cs[i].is_array()) throw InvalidArgument("field '" + p + "' must be an array of angles");
      std::vector<double> angles;
      for (const auto& a : cs[i]) {
        if (!a.is_number()) throw InvalidArgument("field '" + p + "' must contain numbers");
        angles.push_back(a.get<double>());
      }
      central.push_back(std::move(angles));
    }
    return GroupSpec::quotient(std::move(base), std::move(central));
  }
  throw InvalidArgument("field '" + at(path, "family") + "' has unknown value '" + name + "'");
}

}  // namespace

double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat Quat::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

Quat quat_exp(double x, double y, double z) {
  const double t = std::sqrt(x * x + y * y + z * z);
  if (t < 1e-300) return {1.0, x, y, z};
  // sin(t)/t evaluated without cancellation for tiny t
  const double s = t < 1e-4 ? 1.0 - t * t / 6.0 : std::sin(t) / t;
  return {std::cos(t), s * x, s * y, s * z};
}

// ---------------------------------------------------------------- GroupSpec

GroupSpec GroupSpec::cyclic(int n) {
  if (n < 1) throw InvalidArgument("cyclic order must be >= 1");
  GroupSpec s;
  s.family = Family::Cyclic;
  s.n = n;
  return s;
}

GroupSpec GroupSpec::torus(int k) {
  if (k < 0) throw InvalidArgument("torus rank must be >= 0");
  GroupSpec s;
  s.family = Family::Torus;
  s.k = k;
  return s;
}

GroupSpec GroupSpec::su2() { return GroupSpec{}; }

GroupSpec GroupSpec::product(std::vector<GroupSpec> factors) {
  GroupSpec s;
  s.family = Family::Product;
  s.factors = std::move(factors);
  return s;
}

GroupSpec GroupSpec::quotient(GroupSpec base, std::vector<std::vector<double>> central) {
  GroupSpec s;
  s.family = Family::Quotient;
  s.factors.push_back(std::move(base));
  s.central = std::move(central);
  return s;
}

Json GroupSpec::to_json() const {
  switch (family) {
    case Family::Su2: return {{"family", "su2"}};
    case Family::Torus: return {{"family", "torus"}, {"k", k}};
    case Family::Cyclic: return {{"family", "cyclic"}, {"n", n}};
    case Family::Product: {
      Json fs = Json::array();
      for (const auto& f : factors) fs.push_back(f.to_json());
      return {{"family", "product"}, {"factors", fs}};
    }
    case Family::Quotient:
      return {{"family", "quotient"}, {"base", factors.at(0).to_json()}, {"central", central}};
  }
  return {};
}

GroupSpec GroupSpec::from_json(const Json& j) { return spec_from_json(j, ""); }

// ---------------------------------------------------------------- layout

namespace detail {

struct GroupImpl {
  GroupSpec spec;
  std::string key;
  std::vector<Atom> atoms;
  std::size_t n_su2 = 0, n_phase = 0, n_cyclic = 0;
  std::vector<int> orders;
  std::vector<Payload> central;  // identity first
  int dim = 0;

  // component bookkeeping over the cyclic part
  std::size_t cyclic_volume = 1;
  std::vector<int> label_of_code;          // mixed-radix code -> component label
  std::vector<std::vector<int>> label_rep;  // component label -> cyclic tuple

  Payload identity() const {
    Payload p;
    p.su2.assign(n_su2, Quat{});
    p.phase.assign(n_phase, 0.0);
    p.index.assign(n_cyclic, 0);
    return p;
  }

  Payload mul(const Payload& a, const Payload& b) const {
    Payload r;
    r.su2.resize(n_su2);
    r.phase.resize(n_phase);
    r.index.resize(n_cyclic);
    for (std::size_t i = 0; i < n_su2; ++i) r.su2[i] = a.su2[i] * b.su2[i];
    for (std::size_t i = 0; i < n_phase; ++i) r.phase[i] = wrap_angle(a.phase[i] + b.phase[i]);
    for (std::size_t i = 0; i < n_cyclic; ++i) r.index[i] = (a.index[i] + b.index[i]) % orders[i];
    return r;
  }

  Payload inv(const Payload& a) const {
    Payload r;
    r.su2.resize(n_su2);
    r.phase.resize(n_phase);
    r.index.resize(n_cyclic);
    for (std::size_t i = 0; i < n_su2; ++i) r.su2[i] = a.su2[i].conj();
    for (std::size_t i = 0; i < n_phase; ++i) r.phase[i] = wrap_angle(-a.phase[i]);
    for (std::size_t i = 0; i < n_cyclic; ++i) r.index[i] = (orders[i] - a.index[i]) % orders[i];
    return r;
  }

  static double raw_dist(const Payload& a, const Payload& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.su2.size(); ++i) {
      const Quat& p = a.su2[i];
      const Quat& q = b.su2[i];
      // a scalar multiple of an SU(2) matrix has both singular values equal to |p - q|
      d = std::max(d, std::sqrt((p.w - q.w) * (p.w - q.w) + (p.x - q.x) * (p.x - q.x) +
                                (p.y - q.y) * (p.y - q.y) + (p.z - q.z) * (p.z - q.z)));
    }
    for (std::size_t i = 0; i < a.phase.size(); ++i)
      d = std::max(d, 2.0 * std::abs(std::sin(0.5 * (a.phase[i] - b.phase[i]))));
    for (std::size_t i = 0; i < a.index.size(); ++i)
      if (a.index[i] != b.index[i]) d = std::max(d, 1.0);
    return d;
  }

  double dist(const Payload& a, const Payload& b) const {
    if (central.size() == 1) return raw_dist(a, b);
    double d = raw_dist(a, b);
    for (std::size_t k = 1; k < central.size(); ++k) d = std::min(d, raw_dist(a, mul(b, central[k])));
    return d;
  }

  static bool lex_less(const Payload& a, const Payload& b) {
    for (std::size_t i = 0; i < a.phase.size(); ++i)
      if (std::abs(a.phase[i] - b.phase[i]) > kLexTol) return a.phase[i] < b.phase[i];
    for (std::size_t i = 0; i < a.index.size(); ++i)
      if (a.index[i] != b.index[i]) return a.index[i] < b.index[i];
    for (std::size_t i = 0; i < a.su2.size(); ++i) {
      const double u[4] = {a.su2[i].w, a.su2[i].x, a.su2[i].y, a.su2[i].z};
      const double v[4] = {b.su2[i].w, b.su2[i].x, b.su2[i].y, b.su2[i].z};
      for (int c = 0; c < 4; ++c)
        if (std::abs(u[c] - v[c]) > kLexTol) return u[c] < v[c];
    }
    return false;
  }

  Payload canonical(Payload p) const {
    for (auto& a : p.phase) a = wrap_angle(a);
    for (std::size_t i = 0; i < n_cyclic; ++i) p.index[i] = ((p.index[i] % orders[i]) + orders[i]) % orders[i];
    if (central.size() == 1) return p;
    Payload best = p;
    for (std::size_t k = 1; k < central.size(); ++k) {
      Payload c = mul(p, central[k]);
      if (lex_less(c, best)) best = std::move(c);
    }
    return best;
  }

  std::size_t code(const std::vector<int>& idx) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n_cyclic; ++i) c = c * static_cast<std::size_t>(orders[i]) + idx[i];
    return c;
  }

  std::vector<int> decode(std::size_t c) const {
    std::vector<int> idx(n_cyclic);
    for (std::size_t i = n_cyclic; i-- > 0;) {
      idx[i] = static_cast<int>(c % orders[i]);
      c /= orders[i];
    }
    return idx;
  }
};

}  // namespace detail

namespace {

using detail::GroupImpl;
using detail::Payload;

struct Layout {
  std::vector<Atom> atoms;
  std::vector<int> orders;
  std::size_t n_su2 = 0, n_phase = 0, n_cyclic = 0;
  std::vector<Payload> central;
};

// Fills `impl` atom data from `layout` so that the payload helpers can be used on it.
void adopt(GroupImpl& impl, const Layout& layout) {
  impl.atoms = layout.atoms;
  impl.orders = layout.orders;
  impl.n_su2 = layout.n_su2;
  impl.n_phase = layout.n_phase;
  impl.n_cyclic = layout.n_cyclic;
  impl.central = {impl.identity()};
}

void push_unique(std::vector<Payload>& set, const Payload& p) {
  for (const auto& q : set)
    if (GroupImpl::raw_dist(p, q) < kSameTol) return;
  set.push_back(p);
}

Layout flatten(const GroupSpec& spec) {
  Layout out;
  auto add_atom = [&](AtomKind kind, int order) {
    Atom a{kind, order, 0, 0};
    switch (kind) {
      case AtomKind::Su2: a.slot = out.n_su2++; break;
      case AtomKind::Phase: a.slot = out.n_phase++; break;
      case AtomKind::Cyclic:
        a.slot = out.n_cyclic++;
        out.orders.push_back(order);
        break;
    }
    out.atoms.push_back(a);
  };
  switch (spec.family) {
    case GroupSpec::Family::Su2: add_atom(AtomKind::Su2, 0); break;
    case GroupSpec::Family::Torus:
      for (int i = 0; i < spec.k; ++i) add_atom(AtomKind::Phase, 0);
      break;
    case GroupSpec::Family::Cyclic: add_atom(AtomKind::Cyclic, spec.n); break;
    case GroupSpec::Family::Product: {
      std::vector<Layout> parts;
      for (const auto& f : spec.factors) parts.push_back(flatten(f));
      for (const auto& part : parts)
        for (const auto& a : part.atoms) add_atom(a.kind, a.order);
      // N of a product is the product of the factor subgroups
      GroupImpl tmp;
      adopt(tmp, out);
      std::vector<Payload> central = {tmp.identity()};
      std::size_t s_off = 0, p_off = 0, c_off = 0;
      for (const auto& part : parts) {
        std::vector<Payload> next;
        for (const auto& base : central)
          for (const auto& n : part.central) {
            Payload p = base;
            for (std::size_t i = 0; i < part.n_su2; ++i) p.su2[s_off + i] = n.su2[i];
            for (std::size_t i = 0; i < part.n_phase; ++i) p.phase[p_off + i] = n.phase[i];
            for (std::size_t i = 0; i < part.n_cyclic; ++i) p.index[c_off + i] = n.index[i];
            next.push_back(std::move(p));
          }
        central = std::move(next);
        s_off += part.n_su2;
        p_off += part.n_phase;
        c_off += part.n_cyclic;
      }
      out.central = std::move(central);
      return out;
    }
    case GroupSpec::Family::Quotient: {
      Layout base = flatten(spec.factors.at(0));
      GroupImpl tmp;
      adopt(tmp, base);
      tmp.central = base.central;
      std::vector<Payload> given;
      for (std::size_t e = 0; e < spec.central.size(); ++e) {
        const auto& angles = spec.central[e];
        const std::string where = "central[" + std::to_string(e) + "]";
        if (angles.size() != base.atoms.size())
          throw InvalidArgument("field '" + where + "' needs " + std::to_string(base.atoms.size()) +
                                " angles, one per atom");
        Payload p = tmp.identity();
        for (std::size_t i = 0; i < angles.size(); ++i) {
          const Atom& a = base.atoms[i];
          const double ang = wrap_angle(angles[i]);
          switch (a.kind) {
            case AtomKind::Su2: {
              if (std::abs(ang) < kSameTol || std::abs(ang - kTwoPi) < kSameTol) {
                p.su2[a.slot] = Quat{};
              } else if (std::abs(ang - std::numbers::pi) < kSameTol) {
                p.su2[a.slot] = Quat{-1.0, 0.0, 0.0, 0.0};
              } else {
                throw InvalidArgument("field '" + where + "': element is not central (SU(2) entry must be 0 or pi)");
              }
              break;
            }
            case AtomKind::Phase: p.phase[a.slot] = ang; break;
            case AtomKind::Cyclic: {
              const double q = ang * a.order / kTwoPi;
              const long r = std::lround(q);
              if (std::abs(q - r) > 1e-9)
                throw InvalidArgument("field '" + where + "': cyclic entry must be a multiple of 2pi/n");
              p.index[a.slot] = static_cast<int>(r % a.order);
              break;
            }
          }
        }
        given.push_back(tmp.canonical(p));
      }
      // closure modulo the inner subgroup
      auto same_mod_inner = [&](const Payload& a, const Payload& b) { return tmp.dist(a, b) < kSameTol; };
      for (const auto& a : given)
        for (const auto& b : given) {
          const Payload ab = tmp.mul(a, b);
          bool found = false;
          for (const auto& c : given) found = found || same_mod_inner(ab, c);
          if (!found) throw InvalidArgument("field 'central': subset is not closed under multiplication");
        }
      std::vector<Payload> combined = base.central;
      for (const auto& g : given)
        for (const auto& n : base.central) push_unique(combined, tmp.mul(g, n));
      base.central = std::move(combined);
      return base;
    }
  }
  GroupImpl tmp;
  adopt(tmp, out);
  out.central = {tmp.identity()};
  return out;
}

}  // namespace

// ---------------------------------------------------------------- Group

Group::Group(const GroupSpec& spec) {
  auto impl = std::make_shared<GroupImpl>();
  impl->spec = spec;
  impl->key = spec.describe();
  Layout layout = flatten(spec);
  adopt(*impl, layout);
  // identity first, then the rest
  std::vector<Payload> central = {impl->identity()};
  for (const auto& n : layout.central) push_unique(central, n);
  impl->central = std::move(central);

  std::size_t off = 0;
  for (auto& a : impl->atoms) {
    a.algebra_offset = off;
    if (a.kind == AtomKind::Su2) off += 3;
    if (a.kind == AtomKind::Phase) off += 1;
  }
  impl->dim = static_cast<int>(off);

  impl->cyclic_volume = 1;
  for (int n : impl->orders) {
    impl->cyclic_volume *= static_cast<std::size_t>(n);
    if (impl->cyclic_volume > 10'000'000) throw InvalidArgument("cyclic part too large");
  }
  // component = cyclic tuple modulo the cyclic projection of N
  const std::size_t vol = impl->cyclic_volume;
  std::vector<std::size_t> min_code(vol);
  for (std::size_t c = 0; c < vol; ++c) {
    const auto idx = impl->decode(c);
    std::size_t best = c;
    for (const auto& n : impl->central) {
      std::vector<int> shifted(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) shifted[i] = (idx[i] + n.index[i]) % impl->orders[i];
      best = std::min(best, impl->code(shifted));
    }
    min_code[c] = best;
  }
  std::vector<std::size_t> reps;
  for (std::size_t c = 0; c < vol; ++c)
    if (min_code[c] == c) reps.push_back(c);
  impl->label_of_code.assign(vol, 0);
  for (std::size_t c = 0; c < vol; ++c)
    impl->label_of_code[c] =
        static_cast<int>(std::lower_bound(reps.begin(), reps.end(), min_code[c]) - reps.begin());
  for (std::size_t r : reps) impl->label_rep.push_back(impl->decode(r));
  impl_ = std::move(impl);
}

const detail::GroupImpl& Group::impl() const {
  if (!impl_) throw InvalidArgument("operation on an empty group handle");
  return *impl_;
}

const GroupSpec& Group::spec() const { return impl().spec; }
const std::vector<Atom>& Group::atoms() const { return impl().atoms; }
std::size_t Group::su2_count() const { return impl().n_su2; }
std::size_t Group::phase_count() const { return impl().n_phase; }
std::size_t Group::cyclic_count() const { return impl().n_cyclic; }
int Group::dim() const { return impl().dim; }
int Group::component_count() const { return static_cast<int>(impl().label_rep.size()); }

bool Group::is_trivial() const { return dim() == 0 && order() == 1; }

std::size_t Group::order() const {
  const auto& g = impl();
  if (g.dim != 0) throw InvalidArgument("order() requires a finite group");
  return g.label_rep.size();
}

bool Group::operator==(const Group& other) const {
  if (impl_ == other.impl_) return true;
  if (!impl_ || !other.impl_) return false;
  return impl_->key == other.impl_->key;
}

std::vector<GroupElement> Group::central_elements() const {
  std::vector<GroupElement> out;
  for (const auto& n : impl().central) out.push_back(GroupElement(*this, n));
  return out;
}

GroupElement Group::identity() const { return GroupElement(*this, impl().identity()); }

GroupElement Group::haar_sample(SeededRng& rng) const {
  const auto& g = impl();
  Payload p;
  p.su2.resize(g.n_su2);
  p.phase.resize(g.n_phase);
  p.index.resize(g.n_cyclic);
  for (auto& q : p.su2) {
    Quat r;
    double n2;
    do {
      r = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
      n2 = r.w * r.w + r.x * r.x + r.y * r.y + r.z * r.z;
    } while (n2 < 1e-20);
    q = r.normalized();
  }
  for (auto& a : p.phase) a = rng.uniform() * kTwoPi;
  for (std::size_t i = 0; i < g.n_cyclic; ++i) p.index[i] = static_cast<int>(rng.below(g.orders[i]));
  return GroupElement(*this, g.canonical(std::move(p)));
}

GroupElement Group::exp(const LieAlgebraElement& x) const {
  const auto& g = impl();
  if (x.group != *this) throw SpecMismatch("exp: algebra element belongs to another group");
  if (x.coords.size() != static_cast<std::size_t>(g.dim)) throw InvalidArgument("exp: wrong coordinate count");
  Payload p = g.identity();
  for (const auto& a : g.atoms) {
    const double* c = x.coords.data() + a.algebra_offset;
    if (a.kind == AtomKind::Su2) p.su2[a.slot] = quat_exp(c[0], c[1], c[2]);
    if (a.kind == AtomKind::Phase) p.phase[a.slot] = wrap_angle(c[0]);
  }
  return GroupElement(*this, g.canonical(std::move(p)));
}

LieAlgebraElement Group::log(const GroupElement& el) const {
  const auto& g = impl();
  if (el.group() != *this) throw SpecMismatch("log: element belongs to another group");
  // pick a coset representative with trivial cyclic part
  const Payload* chosen = nullptr;
  Payload tmp;
  for (const auto& n : g.central) {
    tmp = g.mul(el.p_, n);
    if (std::all_of(tmp.index.begin(), tmp.index.end(), [](int i) { return i == 0; })) {
      chosen = &tmp;
      break;
    }
  }
  if (!chosen) throw InvalidArgument("log: element is outside the identity component");
  LieAlgebraElement out{*this, std::vector<double>(g.dim, 0.0)};
  for (const auto& a : g.atoms) {
    double* c = out.coords.data() + a.algebra_offset;
    if (a.kind == AtomKind::Su2) {
      const Quat& q = chosen->su2[a.slot];
      const double s = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
      const double ang = std::atan2(s, q.w);
      const double f = s < 1e-300 ? 1.0 : ang / s;
      c[0] = f * q.x;
      c[1] = f * q.y;
      c[2] = f * q.z;
    }
    if (a.kind == AtomKind::Phase) {
      double t = chosen->phase[a.slot];
      if (t > std::numbers::pi) t -= kTwoPi;
      c[0] = t;
    }
  }
  return out;
}

LieAlgebraElement Group::zero_algebra() const { return {*this, std::vector<double>(impl().dim, 0.0)}; }

LieAlgebraElement Group::random_algebra(SeededRng& rng, double scale) const {
  LieAlgebraElement x = zero_algebra();
  for (auto& c : x.coords) c = scale * rng.normal();
  return x;
}

std::vector<GroupElement> Group::elements() const {
  const auto& g = impl();
  if (g.dim != 0) throw InvalidArgument("elements() requires a finite group");
  std::vector<GroupElement> out;
  for (const auto& rep : g.label_rep) {
    Payload p = g.identity();
    p.index = rep;
    out.push_back(GroupElement(*this, g.canonical(std::move(p))));
  }
  return out;
}

GroupElement Group::element(std::vector<Quat> su2, std::vector<double> phase, std::vector<int> index) const {
  const auto& g = impl();
  if (su2.size() != g.n_su2 || phase.size() != g.n_phase || index.size() != g.n_cyclic)
    throw InvalidArgument("element: payload sizes do not match the group layout");
  for (auto& q : su2) {
    if (std::abs(q.norm() - 1.0) > 1e-9) throw InvalidArgument("element: quaternion is not a unit");
    q = q.normalized();
  }
  Payload p{std::move(su2), std::move(phase), std::move(index)};
  return GroupElement(*this, g.canonical(std::move(p)));
}

GroupElement Group::from_matrix(const Eigen::MatrixXcd& m) const {
  const auto& g = impl();
  const Eigen::Index size = static_cast<Eigen::Index>(2 * g.n_su2 + g.n_phase + g.n_cyclic);
  if (m.rows() != size || m.cols() != size) throw InvalidArgument("from_matrix: wrong matrix size");
  Payload p = g.identity();
  Eigen::Index off = 0;
  for (const auto& a : g.atoms) {
    switch (a.kind) {
      case AtomKind::Su2: {
        const Eigen::Matrix2cd b = m.block(off, off, 2, 2);
        const Eigen::Matrix2cd expect{{b(0, 0), b(0, 1)}, {-std::conj(b(0, 1)), std::conj(b(0, 0))}};
        if ((b - expect).norm() > 1e-9) throw InvalidArgument("from_matrix: block is not in SU(2)");
        p.su2[a.slot] = Quat{b(0, 0).real(), b(0, 0).imag(), b(0, 1).real(), b(0, 1).imag()};
        if (std::abs(p.su2[a.slot].norm() - 1.0) > 1e-9) throw InvalidArgument("from_matrix: block is not unitary");
        p.su2[a.slot] = p.su2[a.slot].normalized();
        off += 2;
        break;
      }
      case AtomKind::Phase:
        if (std::abs(std::abs(m(off, off)) - 1.0) > 1e-9) throw InvalidArgument("from_matrix: phase is not unimodular");
        p.phase[a.slot] = wrap_angle(std::arg(m(off, off)));
        off += 1;
        break;
      case AtomKind::Cyclic: {
        const double q = wrap_angle(std::arg(m(off, off))) * a.order / kTwoPi;
        const long r = std::lround(q);
        if (std::abs(q - r) > 1e-6 || std::abs(std::abs(m(off, off)) - 1.0) > 1e-9)
          throw InvalidArgument("from_matrix: entry is not a root of unity of the cyclic order");
        p.index[a.slot] = static_cast<int>(r % a.order);
        off += 1;
        break;
      }
    }
  }
  return GroupElement(*this, g.canonical(std::move(p)));
}

int Group::component_product(int a, int b) const {
  const auto& g = impl();
  const int n = static_cast<int>(g.label_rep.size());
  if (a < 0 || a >= n || b < 0 || b >= n) throw InvalidArgument("component_product: label out of range");
  std::vector<int> sum(g.n_cyclic);
  for (std::size_t i = 0; i < g.n_cyclic; ++i) sum[i] = (g.label_rep[a][i] + g.label_rep[b][i]) % g.orders[i];
  return g.label_of_code[g.code(sum)];
}

// ---------------------------------------------------------------- elements

Eigen::MatrixXcd GroupElement::matrix() const {
  const auto& g = group_.impl();
  const Eigen::Index size = static_cast<Eigen::Index>(2 * g.n_su2 + g.n_phase + g.n_cyclic);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(size, size);
  Eigen::Index off = 0;
  for (const auto& a : g.atoms) {
    switch (a.kind) {
      case AtomKind::Su2: {
        const Quat& q = p_.su2[a.slot];
        m(off, off) = {q.w, q.x};
        m(off, off + 1) = {q.y, q.z};
        m(off + 1, off) = {-q.y, q.z};
        m(off + 1, off + 1) = {q.w, -q.x};
        off += 2;
        break;
      }
      case AtomKind::Phase:
        m(off, off) = std::polar(1.0, p_.phase[a.slot]);
        off += 1;
        break;
      case AtomKind::Cyclic:
        m(off, off) = std::polar(1.0, kTwoPi * p_.index[a.slot] / a.order);
        off += 1;
        break;
    }
  }
  return m;
}

Json GroupElement::to_json() const {
  const Eigen::MatrixXcd m = matrix();
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json rr = Json::array(), ir = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ir.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ir);
  }
  return {{"re", re}, {"im", im}};
}

GroupElement GroupElement::from_json(const Group& group, const Json& j) {
  if (!j.is_object() || !j.contains("re") || !j.contains("im"))
    throw InvalidArgument("group element JSON needs 're' and 'im' arrays");
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  const auto n = static_cast<Eigen::Index>(re.size());
  if (static_cast<Eigen::Index>(im.size()) != n) throw InvalidArgument("group element: 're'/'im' size mismatch");
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(re[r].size()) != n || static_cast<Eigen::Index>(im[r].size()) != n)
      throw InvalidArgument("group element: matrix is not square");
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = {re[r][c].get<double>(), im[r][c].get<double>()};
  }
  return group.from_matrix(m);
}

Eigen::MatrixXcd LieAlgebraElement::matrix() const {
  const auto& g = group.impl();
  const Eigen::Index size = static_cast<Eigen::Index>(2 * g.n_su2 + g.n_phase + g.n_cyclic);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(size, size);
  Eigen::Index off = 0;
  for (const auto& a : g.atoms) {
    const double* c = coords.data() + a.algebra_offset;
    switch (a.kind) {
      case AtomKind::Su2:
        m(off, off) = {0.0, c[0]};
        m(off, off + 1) = {c[1], c[2]};
        m(off + 1, off) = {-c[1], c[2]};
        m(off + 1, off + 1) = {0.0, -c[0]};
        off += 2;
        break;
      case AtomKind::Phase:
        m(off, off) = {0.0, c[0]};
        off += 1;
        break;
      case AtomKind::Cyclic: off += 1; break;
    }
  }
  return m;
}

GroupElement compose(const GroupElement& a, const GroupElement& b) {
  if (a.group() != b.group()) throw SpecMismatch("compose: operands belong to different groups");
  const auto& g = a.group().impl();
  return GroupElement(a.group(), g.canonical(g.mul(a.p_, b.p_)));
}

GroupElement inverse(const GroupElement& a) {
  const auto& g = a.group().impl();
  return GroupElement(a.group(), g.canonical(g.inv(a.p_)));
}

GroupElement conjugate(const GroupElement& g, const GroupElement& h) { return compose(compose(inverse(h), g), h); }

double op_norm_dist(const GroupElement& a, const GroupElement& b) {
  if (a.group() != b.group()) throw SpecMismatch("op_norm_dist: operands belong to different groups");
  const auto& g = a.group().impl();
  return g.dist(a.payload(), b.payload());
}

bool approx_equal(const GroupElement& a, const GroupElement& b, double tol) { return op_norm_dist(a, b) <= tol; }

GroupElement theta(const Quadruple& g) {
  return compose(compose(compose(g[0], g[1]), inverse(g[2])), inverse(g[3]));
}

double k_distance(const Quadruple& g) {
  const Group& grp = g[0].group();
  for (const auto& x : g)
    if (x.group() != grp) throw SpecMismatch("k_distance: tuple entries belong to different groups");
  const auto& impl = grp.impl();
  if (impl.n_phase == 0) throw InvalidArgument("k_distance: group has no U(1) factor (the obstruction needs k >= 1)");
  const GroupElement t = theta(g);
  double best = 1e300;
  for (const auto& n : impl.central) {
    double d = 0.0;
    for (std::size_t i = 0; i < impl.n_phase; ++i)
      d = std::max(d, 2.0 * std::abs(std::sin(0.5 * (t.phase()[i] + n.phase[i]))));
    best = std::min(best, d);
  }
  return best;
}

int component_label(const GroupElement& g) {
  const auto& impl = g.group().impl();
  return impl.label_of_code[impl.code(g.index())];
}

BallEstimate ball_measure_estimate(const Group& group, double eps, std::size_t n, SeededRng& rng) {
  if (n == 0) throw InvalidArgument("ball_measure_estimate: sample count must be positive");
  if (!(eps > 0.0)) throw InvalidArgument("ball_measure_estimate: eps must be positive");
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const std::uint64_t root = rng.next();
  std::vector<std::size_t> hits(chunks, 0);
  const GroupElement e = group.identity();
  parallel_for(chunks, [&](std::size_t c) {
    SeededRng local = SeededRng::stream(root, c);
    const std::size_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    std::size_t h = 0;
    for (std::size_t i = lo; i < hi; ++i)
      if (op_norm_dist(group.haar_sample(local), e) < eps) ++h;
    hits[c] = h;
  });
  BallEstimate out;
  out.samples = n;
  for (std::size_t h : hits) out.hits += h;
  out.value = static_cast<double>(out.hits) / static_cast<double>(n);
  out.std_error = std::sqrt(out.value * (1.0 - out.value) / static_cast<double>(n));
  return out;
}

BallScaling fit_ball_exponent(const Group& group, const std::vector<double>& eps, std::size_t n, SeededRng& rng) {
  BallScaling out;
  out.eps = eps;
  std::vector<double> lx, ly, w;
  for (double e : eps) {
    out.estimates.push_back(ball_measure_estimate(group, e, n, rng));
    const auto& b = out.estimates.back();
    lx.push_back(std::log(e));
    ly.push_back(b.hits > 0 ? std::log(b.value) : 0.0);
    w.push_back(static_cast<double>(b.hits));
  }
  out.exponent = fit_line(lx, ly, w).slope;
  return out;
}

double ball_measure_exact(const Group& group, double eps) {
  const auto elems = group.elements();
  const GroupElement e = group.identity();
  std::size_t hits = 0;
  for (const auto& g : elems)
    if (op_norm_dist(g, e) < eps) ++hits;
  return static_cast<double>(hits) / static_cast<double>(elems.size());
}

}  // namespace holonomy
