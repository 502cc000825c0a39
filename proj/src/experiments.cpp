#include "holonomy/experiments.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "holonomy/finite.hpp"
#include "holonomy/parallel.hpp"
#include "holonomy/proj.hpp"
#include "holonomy/stats.hpp"

namespace holonomy {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double ExperimentReport::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  throw InvalidArgument("report '" + name + "' has no metric '" + key + "'");
}

bool ExperimentReport::has_metric(const std::string& key) const {
  return std::any_of(metrics.begin(), metrics.end(), [&](const auto& m) { return m.first == key; });
}

Json ExperimentReport::to_json() const {
  Json m = Json::object();
  for (const auto& [k, v] : metrics) m[k] = std::isfinite(v) ? Json(v) : Json(format_number(v));
  return {{"name", name}, {"seed", seed}, {"parameters", parameters}, {"metrics", m},
          {"notes", notes}, {"pass", pass}};
}

std::string ExperimentReport::to_csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(csv_header);
  for (const auto& r : csv_rows) line(r);
  return out;
}

std::filesystem::path ExperimentReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const std::string stem = name + "-" + std::to_string(seed);
  const auto json_path = dir / (stem + ".json");
  {
    std::ofstream f(json_path, std::ios::binary);
    if (!f) throw Error("cannot write " + json_path.string());
    f << to_json().dump(2) << '\n';
  }
  std::ofstream f(dir / (stem + ".csv"), std::ios::binary);
  if (!f) throw Error("cannot write CSV next to " + json_path.string());
  f << to_csv();
  return json_path;
}

namespace {

constexpr std::uint64_t kSmoothTag = 1, kHaarTag = 2, kFieldTag = 3, kAuxTag = 4;

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }

ExperimentReport start(const std::string& name, const Json& p, std::uint64_t seed) {
  ExperimentReport r;
  r.name = name;
  r.seed = seed;
  r.parameters = p;
  return r;
}

Group group_param(const Json& p) {
  try {
    return Group(GroupSpec::from_json(p.at("spec")));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("spec", e.what());
  }
}

double real(const Json& p, const std::string& key) { return p.at(key).get<double>(); }

double positive(const Json& p, const std::string& key) {
  const double v = real(p, key);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be a positive number");
  return v;
}

std::size_t count(const Json& p, const std::string& key, std::size_t min = 1) {
  const auto v = p.at(key).get<std::int64_t>();
  if (v < static_cast<std::int64_t>(min)) throw ConfigError(key, "must be at least " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

int integer(const Json& p, const std::string& key, int min) { return static_cast<int>(count(p, key, min)); }

std::vector<double> reals(const Json& p, const std::string& key) {
  std::vector<double> out;
  for (const auto& v : p.at(key)) {
    if (!v.is_number()) throw ConfigError(key, "entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// First U(1) coordinate is compared with closed forms only when no quotient mixes it.
bool plain_abelian(const Group& g) {
  return g.phase_count() == 1 && g.central_elements().size() == 1;
}

// ---------------------------------------------------------------- theta obstruction

ExperimentReport theta_obstruction(const Json& p, std::uint64_t seed) {
  auto r = start("theta-obstruction", p, seed);
  const Group G = group_param(p);
  if (G.phase_count() == 0)
    throw ConfigError("spec",
                      "group has no U(1) factor: theta always lies in the semisimple part, so K' is the whole "
                      "group and k_distance is undefined");
  const int J = integer(p, "J", 1);
  const std::size_t n_smooth = count(p, "n_smooth"), n_haar = count(p, "n_haar");
  const int degree = integer(p, "degree", 0), steps = integer(p, "steps", 1);
  const double amplitude = real(p, "amplitude");
  const double separation = positive(p, "separation");

  const BaezSawin bs = build_baez_sawin(J);
  std::vector<double> smooth(n_smooth), haar(n_haar);
  parallel_for(n_smooth, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kSmoothTag), i);
    const ConnectionField A = sample_random_field(G, degree, amplitude, rng);
    const HolonomyEvaluator H(A, bs.hyph.registry_ptr(), steps);
    Quadruple q;
    for (std::size_t k = 0; k < 4; ++k) q[k] = H.holonomy(bs.hyph.edges()[k]);
    smooth[i] = k_distance(q);
  });
  parallel_for(n_haar, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kHaarTag), i);
    Quadruple q;
    for (auto& g : q) g = G.haar_sample(rng);
    haar[i] = k_distance(q);
  });

  const double smax = *std::max_element(smooth.begin(), smooth.end());
  const double med = median(haar);
  r.metric("smooth_max_kdist", smax);
  r.metric("haar_median_kdist", med);
  r.metric("haar_min_kdist", *std::min_element(haar.begin(), haar.end()));
  r.pass = smax < separation && separation < med / 10.0 && med >= real(p, "haar_median_min");
  if (plain_abelian(G)) {
    // theta's U(1) angle is uniform, and the chord length of a uniform angle has median sqrt(2)
    const double rel = std::abs(med - std::numbers::sqrt2) / std::numbers::sqrt2;
    r.metric("analytic_median", std::numbers::sqrt2);
    r.metric("median_rel_err", rel);
    r.pass = r.pass && rel <= real(p, "median_rel_tol");
  }
  r.csv_header = {"kind", "index", "k_distance"};
  for (std::size_t i = 0; i < n_smooth; ++i) r.csv_rows.push_back({"smooth", num(i), num(smooth[i])});
  for (std::size_t i = 0; i < n_haar; ++i) r.csv_rows.push_back({"haar", num(i), num(haar[i])});
  return r;
}

// ---------------------------------------------------------------- non-immersive diagonal

ExperimentReport nonimmersive(const Json& p, std::uint64_t seed) {
  auto r = start("nonimmersive", p, seed);
  const Group G = group_param(p);
  const std::size_t n_smooth = count(p, "n_smooth"), n_haar = count(p, "n_haar");
  const int degree = integer(p, "degree", 0), steps = integer(p, "steps", 1);
  const double amplitude = real(p, "amplitude"), radius = positive(p, "diag_radius");
  const double rho = positive(p, "rho");
  if (rho >= kChartHalfWidth) throw ConfigError("rho", "circle leaves the chart");

  auto reg = std::make_shared<EdgeRegistry>();
  const PathWord loop = circle_loop(*reg, {0.0, 0.0}, rho);
  const auto [gamma, gamma_sq] = tau_square_pair(*reg, loop.letters()[0].id);
  const Hyph h(reg, {gamma, gamma_sq});
  const HyphReport hr = validate_hyph(h);
  if (!hr.ok) throw GeometryError("gamma / gamma(tau^2) failed hyph validation: " + hr.message);
  r.metric("hyph_valid", 1.0);
  r.csv_header = {"kind", "index", "distance"};
  if (G.is_trivial()) {
    r.notes.push_back("trivial group: the diagonal is all of G x G, vacuous pass");
    r.metric("smooth_max_dist", 0.0);
    r.metric("offdiag_fraction", 0.0);
    r.pass = true;
    return r;
  }

  std::vector<double> smooth(n_smooth), haar(n_haar);
  parallel_for(n_smooth, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kSmoothTag), i);
    const HolonomyEvaluator H(sample_random_field(G, degree, amplitude, rng), reg, steps);
    smooth[i] = op_norm_dist(H.holonomy(gamma), H.holonomy(gamma_sq));
  });
  parallel_for(n_haar, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kHaarTag), i);
    const GroupElement a = G.haar_sample(rng);
    haar[i] = op_norm_dist(a, G.haar_sample(rng));
  });
  const double smax = *std::max_element(smooth.begin(), smooth.end());
  const double sampled = static_cast<double>(std::count_if(haar.begin(), haar.end(), [&](double d) {
                           return d > radius;
                         })) / static_cast<double>(n_haar);
  r.metric("smooth_max_dist", smax);
  r.metric("offdiag_fraction_sampled", sampled);
  double gate = sampled;
  if (G.is_finite()) {
    const auto el = G.elements();
    std::size_t off = 0;
    for (const auto& a : el)
      for (const auto& b : el)
        if (op_norm_dist(a, b) > radius) ++off;
    gate = static_cast<double>(off) / static_cast<double>(el.size() * el.size());
    r.metric("offdiag_fraction_exact", gate);
  }
  r.metric("offdiag_fraction", gate);
  r.pass = smax < real(p, "smooth_max") && gate >= real(p, "offdiag_min");
  for (std::size_t i = 0; i < n_smooth; ++i) r.csv_rows.push_back({"smooth", num(i), num(smooth[i])});
  for (std::size_t i = 0; i < n_haar; ++i) r.csv_rows.push_back({"haar", num(i), num(haar[i])});
  return r;
}

// ---------------------------------------------------------------- disconnected groups

ExperimentReport disconnected(const Json& p, std::uint64_t seed) {
  auto r = start("disconnected", p, seed);
  const Group G = group_param(p);
  if (G.is_connected())
    throw ConfigError("spec", "group is connected: every holonomy lies in the identity component");
  const std::size_t n_smooth = count(p, "n_smooth"), n_haar = count(p, "n_haar");
  const int degree = integer(p, "degree", 0), steps = integer(p, "steps", 1);
  const double amplitude = real(p, "amplitude"), rho = positive(p, "rho");
  if (rho >= kChartHalfWidth / 2) throw ConfigError("rho", "circle leaves the chart");

  auto reg = std::make_shared<EdgeRegistry>();
  const PathWord loop = circle_loop(*reg, {0.0, 0.0}, rho);
  const std::size_t C = static_cast<std::size_t>(G.component_count());
  std::vector<int> smooth(n_smooth), haar(n_haar);
  parallel_for(n_smooth, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kSmoothTag), i);
    const HolonomyEvaluator H(sample_random_field(G, degree, amplitude, rng), reg, steps);
    smooth[i] = component_label(H.holonomy(loop));
  });
  parallel_for(n_haar, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kHaarTag), i);
    haar[i] = component_label(G.haar_sample(rng));
  });
  const std::set<int> smooth_labels(smooth.begin(), smooth.end());
  std::vector<std::size_t> freq(C, 0);
  for (int c : haar) ++freq[static_cast<std::size_t>(c)];
  double dev = 0.0;
  std::size_t observed = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const double f = static_cast<double>(freq[c]) / static_cast<double>(n_haar);
    r.metric("haar_freq_" + std::to_string(c), f);
    dev = std::max(dev, std::abs(f - 1.0 / static_cast<double>(C)));
    observed += freq[c] > 0;
  }
  r.metric("components", static_cast<double>(C));
  r.metric("smooth_distinct_labels", static_cast<double>(smooth_labels.size()));
  r.metric("smooth_max_label", static_cast<double>(*smooth_labels.rbegin()));
  r.metric("components_observed", static_cast<double>(observed));
  r.metric("haar_max_freq_dev", dev);
  r.pass = smooth_labels == std::set<int>{0} && observed == C && dev <= real(p, "freq_tol");
  r.csv_header = {"kind", "index", "component"};
  for (std::size_t i = 0; i < n_smooth; ++i) r.csv_rows.push_back({"smooth", num(i), std::to_string(smooth[i])});
  for (std::size_t i = 0; i < n_haar; ++i) r.csv_rows.push_back({"haar", num(i), std::to_string(haar[i])});
  return r;
}

// ---------------------------------------------------------------- denseness probe

Hyph probe_hyph(const std::string& kind, int J) {
  auto reg = std::make_shared<EdgeRegistry>();
  if (kind == "circle") return Hyph(reg, {circle_loop(*reg, {0.0, 0.0}, 2.0)});
  if (kind == "two-circles")
    return Hyph(reg, {circle_loop(*reg, {-1.5, 0.0}, 1.5, 0.0), circle_loop(*reg, {1.5, 0.0}, 1.5)});
  if (kind == "baez-sawin") return build_baez_sawin(J).hyph;
  throw ConfigError("hyph", "expected 'circle', 'two-circles' or 'baez-sawin', got '" + kind + "'");
}

ExperimentReport denseness_probe(const Json& p, std::uint64_t seed) {
  auto r = start("denseness-probe", p, seed);
  const Group G = group_param(p);
  if (!G.is_connected())
    throw ConfigError("spec", "disconnected groups are separated by component labels; use 'disconnected'");
  const std::string kind = p.at("hyph").get<std::string>();
  const Hyph h = probe_hyph(kind, integer(p, "J", 1));
  const HyphReport hr = validate_hyph(h);
  if (!hr.ok) throw GeometryError("probe hyph failed validation: " + hr.message);
  const std::size_t n_smooth = count(p, "n_smooth"), n_haar = count(p, "n_haar");
  const int degree = integer(p, "degree", 0), steps = integer(p, "steps", 1);
  const double radius = positive(p, "radius");
  const std::vector<double> ladder = reals(p, "amplitudes");
  if (ladder.empty()) throw ConfigError("amplitudes", "needs at least one amplitude");
  if (static_cast<double>(n_smooth) * static_cast<double>(n_haar) > real(p, "budget"))
    throw BudgetExceeded("n_smooth * n_haar exceeds the distance budget");

  r.csv_header = {"index", "first_cover", "k_distance"};
  if (G.is_trivial()) {
    r.notes.push_back("trivial group: every point is covered");
    r.metric("covering", 1.0);
    r.pass = true;
    return r;
  }

  const ShapePtr shape = shape_of(h);
  std::vector<FiniteConnection> smooth(n_smooth);
  parallel_for(n_smooth, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kSmoothTag), i);
    const double a = ladder[i % ladder.size()];
    const HolonomyEvaluator H(sample_random_field(G, degree, a, rng), h.registry_ptr(), steps);
    smooth[i] = project_smooth(H, h);
  });
  // first smooth sample within `radius` of each Haar point, or n_smooth if none
  std::vector<std::size_t> first(n_haar, n_smooth);
  std::vector<FiniteConnection> targets(n_haar);
  parallel_for(n_haar, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kHaarTag), i);
    targets[i] = random_generalized(G, shape, rng);
    for (std::size_t s = 0; s < n_smooth; ++s) {
      bool close = true;
      for (std::size_t e = 0; e < shape->edge_count() && close; ++e)
        close = op_norm_dist(smooth[s].values[e], targets[i].values[e]) < radius;
      if (close) {
        first[i] = s;
        break;
      }
    }
  });
  auto covering_at = [&](std::size_t n) {
    return static_cast<double>(std::count_if(first.begin(), first.end(), [&](std::size_t f) { return f < n; })) /
           static_cast<double>(n_haar);
  };
  const double covering = covering_at(n_smooth);
  for (std::size_t d : {8u, 4u, 2u}) {
    const std::size_t n = std::max<std::size_t>(1, n_smooth / d);
    r.metric("covering_n_" + std::to_string(n), covering_at(n));
  }
  r.metric("covering_n_" + std::to_string(n_smooth), covering);
  r.metric("covering", covering);

  const bool negative = kind == "baez-sawin" && G.phase_count() > 0;
  std::vector<double> kd(n_haar, -1.0);
  if (negative) {
    // Smooth samples lie in K (k_distance 0). If a Haar tuple is within `radius` of one
    // on every edge, each U(1) angle moves by less than 2 asin(radius / 2), so theta's by
    // less than four times that: covered points have k_distance below the chord bound.
    const double angle = std::min(std::numbers::pi, 8.0 * std::asin(std::min(1.0, radius / 2.0)));
    const double bound = 2.0 * std::sin(angle / 2.0);
    double smax = 0.0;
    for (const auto& s : smooth)
      smax = std::max(smax, k_distance({s.values[0], s.values[1], s.values[2], s.values[3]}));
    std::size_t near = 0, violations = 0, far = 0, far_covered = 0;
    double max_covered = 0.0;
    const double probe = real(p, "kdist_probe");
    for (std::size_t i = 0; i < n_haar; ++i) {
      const auto& v = targets[i].values;
      kd[i] = k_distance({v[0], v[1], v[2], v[3]});
      near += kd[i] <= bound + smax;
      const bool covered = first[i] < n_smooth;
      if (covered) {
        max_covered = std::max(max_covered, kd[i]);
        violations += kd[i] > bound + smax;
      }
      if (kd[i] > probe) {
        ++far;
        far_covered += covered;
      }
    }
    const double near_fraction = static_cast<double>(near) / static_cast<double>(n_haar);
    r.metric("smooth_max_kdist", smax);
    r.metric("kdist_bound", bound);
    r.metric("near_k_fraction", near_fraction);
    r.metric("max_covered_kdist", max_covered);
    r.metric("bound_violations", static_cast<double>(violations));
    r.metric("beyond_probe", static_cast<double>(far));
    r.metric("beyond_probe_covered", static_cast<double>(far_covered));
    r.pass = violations == 0 && smax <= real(p, "smooth_kdist_max") && covering <= near_fraction &&
             covering < 1.0 - real(p, "margin");
  } else {
    r.pass = covering >= real(p, "covering_min");
    if (shape->edge_count() > 1)
      r.notes.push_back("covering on a multi-edge hyph grows with n_smooth; see the covering_n_* curve");
  }
  for (std::size_t i = 0; i < n_haar; ++i)
    r.csv_rows.push_back({num(i), first[i] < n_smooth ? num(first[i]) : std::string("-1"), num(kd[i])});
  return r;
}

// ---------------------------------------------------------------- area law

ExperimentReport area_law(const Json& p, std::uint64_t seed) {
  auto r = start("area-law", p, seed);
  const Group G = group_param(p);
  if (G.dim() == 0) throw ConfigError("spec", "finite groups carry no connection forms");
  const std::string field = p.at("field").get<std::string>();
  const int steps = integer(p, "steps", 1);
  const std::vector<double> rhos = reals(p, "rhos");
  const std::vector<double> c = reals(p, "center");
  if (c.size() != 2) throw ConfigError("center", "expected [x, y]");
  const Point center{c[0], c[1]};
  std::set<double> distinct;
  for (double rho : rhos) {
    if (!(rho > 0.0) || std::abs(center.x) + rho >= kChartHalfWidth || std::abs(center.y) + rho >= kChartHalfWidth)
      throw ConfigError("rhos", "radii must be positive and keep the circle inside the chart");
    distinct.insert(rho);
  }
  if (distinct.size() < 2) throw ConfigError("rhos", "need at least two distinct radii for a slope");

  ConnectionField A;
  double F = 0.0;
  if (field == "random") {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kFieldTag), 0);
    A = sample_random_field(G, integer(p, "degree", 0), real(p, "amplitude"), rng);
  } else if (field == "constant-curvature") {
    if (G.phase_count() == 0) throw ConfigError("field", "constant curvature needs a U(1) factor");
    F = real(p, "curvature");
    A = constant_curvature_field(G, F);
  } else {
    throw ConfigError("field", "expected 'random' or 'constant-curvature', got '" + field + "'");
  }

  auto reg = std::make_shared<EdgeRegistry>();
  std::vector<PathWord> loops;
  for (double rho : rhos) loops.push_back(circle_loop(*reg, center, rho));
  const HolonomyEvaluator H(A, reg, steps);
  const GroupElement e = G.identity();
  std::vector<double> dist(rhos.size());
  parallel_for(rhos.size(), [&](std::size_t i) { dist[i] = op_norm_dist(H.holonomy(loops[i]), e); });

  const bool closed_form = field == "constant-curvature" && plain_abelian(G);
  double c_A = 0.0, cf_err = 0.0;
  std::vector<double> lx, ly;
  r.csv_header = {"rho", "distance", "ratio", "closed_form"};
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    const double area = std::numbers::pi * rhos[i] * rhos[i];
    c_A = std::max(c_A, dist[i] / area);
    double cf = std::nan("");
    if (closed_form) {
      cf = 2.0 * std::abs(std::sin(F * area / 2.0));  // |e^{i F area} - 1|
      cf_err = std::max(cf_err, std::abs(dist[i] - cf));
    }
    if (dist[i] > 0.0) {
      lx.push_back(std::log(rhos[i]));
      ly.push_back(std::log(dist[i]));
    }
    r.csv_rows.push_back({num(rhos[i]), num(dist[i]), num(dist[i] / area), closed_form ? num(cf) : std::string()});
  }
  r.metric("c_A", c_A);
  r.pass = true;
  if (std::set<double>(lx.begin(), lx.end()).size() < 2) {
    r.notes.push_back("holonomies are trivial: slope test skipped");
  } else {
    const double slope = fit_line(lx, ly).slope;
    r.metric("slope", slope);
    r.pass = slope >= real(p, "slope_min") && slope <= real(p, "slope_max");
  }
  if (closed_form) {
    r.metric("closed_form_max_err", cf_err);
    r.pass = r.pass && cf_err <= real(p, "closed_form_tol");
  }
  return r;
}

// ---------------------------------------------------------------- measure-zero chain

// Exact Haar measure of the open op-norm ball of radius eps in SU(2) and U(1).
double su2_ball(double eps) {
  if (eps >= 2.0) return 1.0;
  const double T = 2.0 * std::asin(eps / 2.0);
  return (T - std::sin(T) * std::cos(T)) / std::numbers::pi;
}
double u1_ball(double eps) { return eps >= 2.0 ? 1.0 : 2.0 * std::asin(eps / 2.0) / std::numbers::pi; }

ExperimentReport measure_zero(const Json& p, std::uint64_t seed) {
  auto r = start("measure-zero", p, seed);
  const Group G = group_param(p);
  const double rr = positive(p, "r");
  const int k = integer(p, "k", 1);
  if (k > 26) throw ConfigError("k", "circles below radius 2^-26 are not resolved by the chart tolerance");
  const double threshold = positive(p, "threshold");

  // nested circles of radius 2^-i, all through the base point at the origin
  EdgeRegistry reg;
  std::vector<int> ids;
  std::vector<double> area(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) {
    const double rho = std::ldexp(1.0, -i);
    const PathWord w = circle_loop(reg, {-rho, 0.0}, rho, 0.0);
    ids.push_back(w.letters()[0].id);
    area[static_cast<std::size_t>(i - 1)] = enclosed_area(reg, w);
  }
  std::string why;
  if (!is_graph(reg, ids, &why)) throw GeometryError("circles overlap: " + why);

  r.csv_header = {"i", "eps", "area", "estimate", "std_error", "hits", "product", "upper_product", "exact"};
  std::vector<double> eps(area.size());
  for (std::size_t i = 0; i < area.size(); ++i) eps[i] = rr * std::numbers::pi * std::ldexp(1.0, -2 * static_cast<int>(i + 1));
  double area_err = 0.0;
  for (std::size_t i = 0; i < area.size(); ++i)
    area_err = std::max(area_err, std::abs(area[i] - std::numbers::pi * std::ldexp(1.0, -2 * static_cast<int>(i + 1))));
  r.metric("area_max_err", area_err);

  if (G.is_finite()) {
    double prod = 1.0;
    int k_star = 0;
    bool exact = true;
    const double order = static_cast<double>(G.order());
    const bool pow2 = std::has_single_bit(G.order());
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const double m = ball_measure_exact(G, eps[i]);
      prod *= m;
      const double expected = std::pow(order, -static_cast<double>(i + 1));
      exact = exact && (pow2 ? prod == expected : std::abs(prod - expected) <= 1e-14 * expected);
      if (k_star == 0 && prod < threshold) k_star = static_cast<int>(i + 1);
      r.csv_rows.push_back({num(i + 1), num(eps[i]), num(area[i]), num(m), "0", "", num(prod), num(prod), num(expected)});
    }
    r.metric("product", prod);
    r.metric("k_star", k_star);
    r.metric("curve_exact", exact ? 1.0 : 0.0);
    r.pass = exact && k_star > 0;
    return r;
  }

  const std::size_t n = count(p, "samples");
  const bool su2 = G.spec().family == GroupSpec::Family::Su2;
  const bool u1 = G.spec().family == GroupSpec::Family::Torus && G.phase_count() == 1;
  SeededRng rng = SeededRng::stream(mix_seed(seed, kHaarTag), 0);
  double prod = 1.0, upper = 1.0, prod_exact = 1.0, rel_var = 0.0, check_est = 1.0, check_exact = 1.0;
  bool checking = true;
  int k_star = 0;
  std::vector<double> lx, ly, w;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const BallEstimate b = ball_measure_estimate(G, eps[i], n, rng);
    prod *= b.value;
    // three-sigma upper bound; the rule of three when nothing was hit
    upper *= b.hits ? std::min(1.0, b.value + 3.0 * b.std_error) : 3.0 / static_cast<double>(n);
    if (k_star == 0 && upper < threshold) k_star = static_cast<int>(i + 1);
    double ex = std::nan("");
    if (su2 || u1) {
      ex = su2 ? su2_ball(eps[i]) : u1_ball(eps[i]);
      prod_exact *= ex;
      // product comparison only over factors with enough expected hits for the normal approximation
      checking = checking && ex * static_cast<double>(n) >= 100.0;
      if (checking) {
        check_est *= b.value;
        check_exact = prod_exact;
        rel_var += (1.0 - ex) / (ex * static_cast<double>(n));
      }
    }
    if (b.hits) {
      lx.push_back(std::log(eps[i]));
      ly.push_back(std::log(b.value));
      w.push_back(static_cast<double>(b.hits));
    }
    r.csv_rows.push_back({num(i + 1), num(eps[i]), num(area[i]), num(b.value), num(b.std_error), num(b.hits), num(prod),
                          num(upper), su2 || u1 ? num(ex) : std::string()});
  }
  r.metric("product", prod);
  r.metric("upper_product", upper);
  r.metric("k_star", k_star);
  r.pass = k_star > 0;
  if (w.size() >= 2) {
    const double slope = fit_line(lx, ly, w).slope;
    const double dim = static_cast<double>(G.dim());
    r.metric("factor_exponent", slope);
    r.metric("expected_exponent", dim);
    r.pass = r.pass && std::abs(slope - dim) <= real(p, "exponent_rel_tol") * dim;
  } else {
    r.notes.push_back("fewer than two radii were hit: exponent not fitted");
  }
  if (su2 || u1) {
    const double sigma = check_exact * std::sqrt(rel_var);
    r.metric("exact_product", prod_exact);
    r.metric("checked_product_z", sigma > 0 ? (check_est - check_exact) / sigma : 0.0);
    r.pass = r.pass && std::abs(check_est - check_exact) <= real(p, "sigma") * sigma;
  }
  return r;
}

// ---------------------------------------------------------------- embedding equivalence

ExperimentReport embeddings(const Json& p, std::uint64_t seed) {
  auto r = start("embeddings", p, seed);
  const Group G = group_param(p);
  const std::size_t n_triv = count(p, "n_triv"), n_words = count(p, "n_words");
  const std::size_t word_len = count(p, "word_len"), orbit_pairs = count(p, "orbit_pairs", 0);
  const int steps = integer(p, "steps", 1);

  const BaezSawin bs = build_baez_sawin(integer(p, "J", 1));
  const RegistryPtr reg = bs.hyph.registry_ptr();
  SeededRng field_rng = SeededRng::stream(mix_seed(seed, kFieldTag), 0);
  const HolonomyEvaluator H(sample_random_field(G, integer(p, "degree", 0), real(p, "amplitude"), field_rng), reg,
                            steps);
  const Point origin{0.0, 0.0}, mid = bs.gamma.start();
  const std::vector<Point> vertices{origin, mid};
  // moves available at each of the two vertices
  std::vector<PathWord> at_origin, at_mid;
  for (const auto& a : bs.hyph.edges()) {
    at_origin.push_back(a);
    at_origin.push_back(inverse(a));
  }
  for (const auto& g : bs.gamma_i) {
    at_origin.push_back(g);
    at_mid.push_back(inverse(g));
  }
  at_mid.push_back(bs.gamma);
  at_origin.push_back(inverse(bs.gamma));
  const Hyph orbit_hyph(reg, {bs.gamma_i[0], bs.hyph.edges()[0], bs.gamma});
  const ShapePtr orbit_shape = shape_of(orbit_hyph);

  std::vector<double> residual(n_triv), self(n_triv), orbit(n_triv, 0.0);
  parallel_for(n_triv, [&](std::size_t t) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kAuxTag), t);
    const Trivialization x1 = random_trivialization(G, vertices, rng);
    const Trivialization x2 = random_trivialization(G, vertices, rng);
    const FiniteGauge g = equivalence_witness(x1, x2, orbit_shape);
    double worst = 0.0;
    for (std::size_t k = 0; k < n_words; ++k) {
      PathWord w = PathWord::identity(origin);
      for (std::size_t s = 0; s < word_len; ++s) {
        const auto& moves = near(w.end(), origin) ? at_origin : at_mid;
        w = concat(w, moves[rng.below(moves.size())]);
      }
      const GroupElement lhs = embedded_holonomy(H, x2, w);
      const GroupElement rhs = compose(compose(inverse(g.at(w.start())), embedded_holonomy(H, x1, w)), g.at(w.end()));
      worst = std::max(worst, op_norm_dist(lhs, rhs));
    }
    residual[t] = worst;
    const FiniteGauge id = equivalence_witness(x1, x1, orbit_shape);
    double s = 0.0;
    for (const auto& v : id.values) s = std::max(s, op_norm_dist(v, G.identity()));
    self[t] = s;
  });
  const std::size_t pairs = std::min(orbit_pairs, n_triv);
  for (std::size_t t = 0; t < pairs; ++t) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kHaarTag), t);
    const Trivialization x1 = random_trivialization(G, vertices, rng);
    const Trivialization x2 = random_trivialization(G, vertices, rng);
    orbit[t] = orbit_distance(project_embedded(H, x1, orbit_hyph), project_embedded(H, x2, orbit_hyph), {}, rng)
                   .distance;
  }
  const double rmax = *std::max_element(residual.begin(), residual.end());
  const double omax = *std::max_element(orbit.begin(), orbit.end());
  r.metric("max_residual", rmax);
  r.metric("self_witness_max_dist", *std::max_element(self.begin(), self.end()));
  r.metric("orbit_pairs", static_cast<double>(pairs));
  r.metric("max_orbit_distance", omax);
  r.pass = rmax <= real(p, "residual_max") && omax <= real(p, "orbit_max");
  r.csv_header = {"pair", "max_residual", "orbit_distance"};
  for (std::size_t t = 0; t < n_triv; ++t)
    r.csv_rows.push_back({num(t), num(residual[t]), t < pairs ? num(orbit[t]) : std::string()});
  return r;
}

// ---------------------------------------------------------------- gauge denseness

ExperimentReport gauge_denseness(const Json& p, std::uint64_t seed) {
  auto r = start("gauge-denseness", p, seed);
  const Group G = group_param(p);
  const std::size_t V = count(p, "vertices"), n_targets = count(p, "n_targets"), n_smooth = count(p, "n_smooth");
  const int degree = integer(p, "degree", 0);
  const double amplitude = real(p, "amplitude");
  if (G.is_trivial()) {
    r.notes.push_back("trivial group: the only gauge tuple is the identity, vacuous pass");
    r.metric("covering", 1.0);
    r.pass = true;
    return r;
  }
  SeededRng prng = SeededRng::stream(mix_seed(seed, kAuxTag), 0);
  std::vector<Point> points;
  while (points.size() < V) {
    const Point q{prng.uniform(-3.0, 3.0), prng.uniform(-3.0, 3.0)};
    if (std::none_of(points.begin(), points.end(), [&](Point o) { return distance(o, q) < 0.1; }))
      points.push_back(q);
  }

  std::vector<std::vector<GroupElement>> targets(n_targets);
  parallel_for(n_targets, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kHaarTag), i);
    for (std::size_t v = 0; v < V; ++v) targets[i].push_back(G.haar_sample(rng));
  });

  if (G.is_connected()) {
    std::vector<double> residual(n_targets);
    parallel_for(n_targets, [&](std::size_t i) {
      const SmoothGauge phi = interpolate_gauge(G, points, targets[i]);
      double worst = 0.0;
      for (std::size_t v = 0; v < V; ++v) worst = std::max(worst, op_norm_dist(phi.value(points[v]), targets[i][v]));
      residual[i] = worst;
    });
    const double tol = real(p, "residual_max");
    const double rmax = *std::max_element(residual.begin(), residual.end());
    const double covering =
        static_cast<double>(std::count_if(residual.begin(), residual.end(), [&](double d) { return d <= tol; })) /
        static_cast<double>(n_targets);
    r.metric("max_residual", rmax);
    r.metric("covering", covering);
    r.pass = covering >= real(p, "covering_min") && rmax <= tol;
    r.csv_header = {"target", "residual"};
    for (std::size_t i = 0; i < n_targets; ++i) r.csv_rows.push_back({num(i), num(residual[i])});
    return r;
  }

  // Disconnected: a smooth gauge on the (connected) chart stays in one component, and one
  // connected to the identity stays in the identity component.
  std::vector<char> identity_only(n_smooth), constant(n_smooth);
  parallel_for(n_smooth, [&](std::size_t i) {
    SeededRng rng = SeededRng::stream(mix_seed(seed, kSmoothTag), i);
    const SmoothGauge regular = sample_random_gauge(G, degree, amplitude, rng, false);
    const SmoothGauge any = sample_random_gauge(G, degree, amplitude, rng, true);
    bool id = true, same = true;
    const int c0 = component_label(any.value(points[0]));
    for (const Point& q : points) {
      id = id && component_label(regular.value(q)) == 0;
      same = same && component_label(any.value(q)) == c0;
    }
    identity_only[i] = id;
    constant[i] = same;
  });
  std::size_t mixed = 0;
  bool refused = true;
  bool tried = false;
  r.csv_header = {"target", "mixed"};
  for (std::size_t i = 0; i < n_targets; ++i) {
    const int c0 = component_label(targets[i][0]);
    const bool m = std::any_of(targets[i].begin(), targets[i].end(), [&](const GroupElement& g) {
      return component_label(g) != c0;
    });
    mixed += m;
    if (m && !tried) {
      tried = true;
      try {
        interpolate_gauge(G, points, targets[i]);
        refused = false;
      } catch (const HypothesisViolation&) {
      }
    }
    r.csv_rows.push_back({num(i), m ? "1" : "0"});
  }
  const auto frac = [&](const std::vector<char>& v) {
    return static_cast<double>(std::count(v.begin(), v.end(), 1)) / static_cast<double>(v.size());
  };
  const double C = static_cast<double>(G.component_count());
  r.metric("smooth_identity_fraction", frac(identity_only));
  r.metric("smooth_constant_fraction", frac(constant));
  r.metric("haar_mixed_fraction", static_cast<double>(mixed) / static_cast<double>(n_targets));
  r.metric("haar_mixed_expected", 1.0 - std::pow(C, 1.0 - static_cast<double>(V)));
  r.metric("mixed_interpolation_refused", tried && refused ? 1.0 : 0.0);
  r.pass = frac(identity_only) == 1.0 && frac(constant) == 1.0 && (V == 1 || (mixed > 0 && refused));
  return r;
}

// ---------------------------------------------------------------- finite projective systems

ExperimentReport densecrit(const Json& p, std::uint64_t seed) {
  auto r = start("densecrit-fuzz", p, seed);
  const FuzzSummary s = densecrit_fuzz(count(p, "instances", 0), count(p, "acted", 0), seed);
  r.metric("instances", static_cast<double>(s.instances));
  r.metric("acted_instances", static_cast<double>(s.acted_instances));
  r.metric("disagreements", static_cast<double>(s.disagreements));
  r.metric("quotient_disagreements", static_cast<double>(s.quotient_disagreements));
  r.metric("special_case_failures", static_cast<double>(s.special_case_failures));
  r.metric("open_map_failures", static_cast<double>(s.open_map_failures));
  r.metric("dense_instances", static_cast<double>(s.dense_instances));
  r.metric("non_directed_tested", static_cast<double>(s.non_directed_tested));
  r.metric("non_directed_refused", static_cast<double>(s.non_directed_refused));
  r.pass = s.disagreements == 0 && s.quotient_disagreements == 0 && s.special_case_failures == 0 &&
           s.open_map_failures == 0 && s.non_directed_refused == s.non_directed_tested;
  r.csv_header = {"quantity", "count"};
  for (const auto& [k, v] : r.metrics) r.csv_rows.push_back({k, num(static_cast<std::size_t>(v))});
  return r;
}

Json spec_json(const char* text) { return Json::parse(text); }

std::vector<ExperimentInfo> build_registry() {
  const Json su2 = spec_json(R"({"family":"su2"})");
  const Json u1 = spec_json(R"({"family":"torus","k":1})");
  const Json z2 = spec_json(R"({"family":"cyclic","n":2})");
  std::vector<ExperimentInfo> out;
  out.push_back({"theta-obstruction",
                 "k_distance of theta on the four-loop hyph: zero for smooth connections, spread for Haar tuples",
                 {{"spec", u1, "group with at least one U(1) factor"},
                  {"J", 8, "inner arc levels of the hyph"},
                  {"n_smooth", 200, "random smooth connections"},
                  {"n_haar", 10000, "Haar quadruples"},
                  {"degree", 3, "Fourier degree of random fields"},
                  {"amplitude", 1.0, "field amplitude"},
                  {"steps", 256, "integrator steps per edge piece"},
                  {"separation", 1e-6, "smooth max must be below this, and this below the Haar median / 10"},
                  {"haar_median_min", 0.5, "lower bound on the Haar median"},
                  {"median_rel_tol", 0.05, "relative tolerance against sqrt(2) for one plain U(1) factor"}},
                 "n_haar",
                 theta_obstruction});
  out.push_back({"nonimmersive",
                 "holonomies of a loop and its t^2 reparametrisation coincide for smooth connections",
                 {{"spec", su2, "group"},
                  {"n_smooth", 200, "random smooth connections"},
                  {"n_haar", 10000, "Haar pairs"},
                  {"degree", 3, "Fourier degree"},
                  {"amplitude", 1.0, "field amplitude"},
                  {"steps", 2048, "integrator steps; the t^2 copy converges at fourth order like the base"},
                  {"rho", 1.0, "loop radius"},
                  {"diag_radius", 0.1, "pairs farther apart count as off-diagonal"},
                  {"smooth_max", 1e-6, "bound on smooth distances"},
                  {"offdiag_min", 0.5, "required off-diagonal fraction"}},
                 "n_haar",
                 nonimmersive});
  out.push_back({"disconnected",
                 "smooth holonomies of a contractible loop stay in the identity component",
                 {{"spec", z2, "group with several components"},
                  {"n_smooth", 200, "random smooth connections"},
                  {"n_haar", 100000, "Haar samples"},
                  {"degree", 3, "Fourier degree"},
                  {"amplitude", 1.0, "field amplitude"},
                  {"steps", 256, "integrator steps"},
                  {"rho", 1.0, "loop radius"},
                  {"freq_tol", 0.01, "allowed deviation of Haar component frequencies from uniform"}},
                 "n_haar",
                 disconnected});
  out.push_back({"denseness-probe",
                 "covering of Haar hyph tuples by projected smooth connections",
                 {{"spec", su2, "connected group"},
                  {"hyph", "circle", "circle, two-circles or baez-sawin"},
                  {"J", 4, "inner levels for baez-sawin"},
                  {"n_smooth", 10000, "smooth samples"},
                  {"n_haar", 2000, "Haar targets"},
                  {"amplitudes", Json::array({0.5, 1.0, 2.0, 4.0}), "amplitude ladder cycled over samples"},
                  {"degree", 2, "Fourier degree"},
                  {"steps", 128, "integrator steps"},
                  {"radius", 0.25, "covering radius in the max-edge metric"},
                  {"covering_min", 0.95, "required covering in the positive case"},
                  {"margin", 0.2, "covering must stay below 1 - margin in the separated case"},
                  {"smooth_kdist_max", 1e-6, "k_distance bound for smooth samples"},
                  {"kdist_probe", 0.3, "report how many Haar points beyond this k_distance are covered"},
                  {"budget", 1e9, "maximum n_smooth * n_haar"}},
                 "n_smooth",
                 denseness_probe});
  out.push_back({"gauge-denseness",
                 "smooth gauges restricted to finitely many vertices",
                 {{"spec", u1, "group"},
                  {"vertices", 5, "vertex count"},
                  {"n_targets", 100, "Haar vertex tuples"},
                  {"n_smooth", 1000, "random smooth gauges (disconnected case)"},
                  {"degree", 2, "Fourier degree of random gauges"},
                  {"amplitude", 1.0, "gauge amplitude"},
                  {"residual_max", 1e-9, "interpolation residual bound"},
                  {"covering_min", 0.95, "required fraction of interpolated tuples"}},
                 "n_targets",
                 gauge_denseness});
  out.push_back({"area-law",
                 "holonomy of small circles against enclosed area",
                 {{"spec", su2, "group of positive dimension"},
                  {"field", "random", "random or constant-curvature"},
                  {"curvature", 1.0, "F for the constant-curvature field"},
                  {"degree", 2, "Fourier degree"},
                  {"amplitude", 0.5, "field amplitude; the non-abelian rho^3 correction grows with it"},
                  {"rhos", Json::array({0.2, 0.1, 0.05, 0.025}), "circle radii"},
                  {"center", Json::array({0.3, -0.2}), "circle centre"},
                  {"steps", 256, "integrator steps"},
                  {"slope_min", 1.9, "lower slope bound"},
                  {"slope_max", 2.1, "upper slope bound"},
                  {"closed_form_tol", 1e-9, "tolerance against the abelian closed form"}},
                 "",
                 area_law});
  out.push_back({"measure-zero",
                 "product of Haar ball measures over nested circles of shrinking area",
                 {{"spec", su2, "group"},
                  {"r", 1.0, "ball radius per unit area"},
                  {"k", 20, "number of circles"},
                  {"samples", 1000000, "Haar samples per ball"},
                  {"threshold", 1e-6, "the product must fall below this"},
                  {"exponent_rel_tol", 0.1, "relative tolerance of the per-factor exponent against dim G"},
                  {"sigma", 3.0, "Monte Carlo gate against closed forms, in standard errors"}},
                 "samples",
                 measure_zero});
  out.push_back({"embeddings",
                 "embeddings of smooth connections through different trivialisations agree up to gauge",
                 {{"spec", su2, "group"},
                  {"n_triv", 100, "trivialisation pairs"},
                  {"n_words", 100, "random words per pair"},
                  {"word_len", 6, "letters per word"},
                  {"J", 2, "inner levels of the hyph"},
                  {"degree", 2, "Fourier degree"},
                  {"amplitude", 1.0, "field amplitude"},
                  {"steps", 128, "integrator steps"},
                  {"orbit_pairs", 3, "pairs also checked by orbit search"},
                  {"residual_max", 1e-10, "bound on the identity residual"},
                  {"orbit_max", 1e-6, "bound on orbit distances"}},
                 "n_words",
                 embeddings});
  out.push_back({"densecrit-fuzz",
                 "limit-level against level-wise denseness on random finite projective systems",
                 {{"instances", 10000, "directed systems"}, {"acted", 1000, "systems with group actions"}},
                 "instances",
                 densecrit});
  return out;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> reg = build_registry();
  return reg;
}

const ExperimentInfo& find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry())
    if (e.name == name) return e;
  throw InvalidArgument("unknown experiment '" + name + "'");
}

Json resolve_params(const ExperimentInfo& info, const Json& overrides) {
  Json out = Json::object();
  for (const auto& ps : info.params) out[ps.name] = ps.fallback;
  if (overrides.is_null()) return out;
  if (!overrides.is_object()) throw ConfigError("<root>", "parameters must be a JSON object");
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (!out.contains(it.key())) throw ConfigError(it.key(), "unknown parameter for " + info.name);
    const Json& def = out[it.key()];
    const Json& v = it.value();
    bool ok;
    if (def.is_number_float())
      ok = v.is_number();
    else if (def.is_number_integer())
      ok = v.is_number_integer() ||
           (v.is_number_float() && std::isfinite(v.get<double>()) && v.get<double>() == std::floor(v.get<double>()));
    else
      ok = std::string(def.type_name()) == v.type_name();
    if (!ok)
      throw ConfigError(it.key(), std::string("expected ") + def.type_name() + ", got " + v.type_name());
    if (def.is_number_integer() && v.get<double>() < 0) throw ConfigError(it.key(), "must not be negative");
    out[it.key()] = def.is_number_integer() && !v.is_number_integer() ? Json(static_cast<std::int64_t>(v.get<double>())) : v;
  }
  return out;
}

ExperimentReport run_experiment(const std::string& name, const Json& overrides, std::uint64_t seed) {
  const ExperimentInfo& info = find_experiment(name);
  return info.run(resolve_params(info, overrides), seed);
}

}  // namespace holonomy
