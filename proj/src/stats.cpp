#include "holonomy/stats.hpp"

#include <algorithm>
#include <numeric>

#include "holonomy/errors.hpp"

namespace holonomy {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  if (x.size() != y.size() || (!w.empty() && w.size() != x.size()))
    throw InvalidArgument("fit_line: size mismatch");
  double sw = 0, sx = 0, sy = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (wi <= 0) continue;
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
    ++used;
  }
  if (used < 2) throw InvalidArgument("fit_line: need at least two weighted points");
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (wi <= 0) continue;
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) throw InvalidArgument("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.points = used;
  return f;
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of empty sample");
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + m, v.end());
  if (v.size() % 2 == 1) return v[m];
  const double hi = v[m];
  const double lo = *std::max_element(v.begin(), v.begin() + m);
  return 0.5 * (lo + hi);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw InvalidArgument("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace holonomy
