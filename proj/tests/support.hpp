#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "holonomy/group.hpp"

namespace testsupport {

// Kolmogorov-Smirnov acceptance constant at the 1% level.
inline constexpr double kKs1 = 1.628;

inline double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

inline double ks_critical(std::size_t n) { return kKs1 / std::sqrt(double(n)); }
inline double ks_critical(std::size_t n, std::size_t m) {
  return kKs1 * std::sqrt(double(n + m) / (double(n) * double(m)));
}

// Largest singular value, computed independently of the library metric.
inline double svd_norm(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

inline std::vector<holonomy::GroupSpec> sample_specs() {
  using holonomy::GroupSpec;
  return {
      GroupSpec::su2(),
      GroupSpec::torus(1),
      GroupSpec::torus(2),
      GroupSpec::cyclic(5),
      GroupSpec::product({GroupSpec::su2(), GroupSpec::torus(1)}),
      GroupSpec::product({GroupSpec::su2(), GroupSpec::cyclic(2)}),
      GroupSpec::quotient(GroupSpec::su2(), {{0.0}, {M_PI}}),
      GroupSpec::quotient(GroupSpec::product({GroupSpec::su2(), GroupSpec::torus(1)}), {{0.0, 0.0}, {M_PI, M_PI}}),
  };
}

}  // namespace testsupport
