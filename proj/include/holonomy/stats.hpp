#pragma once

#include <cstddef>
#include <vector>

namespace holonomy {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Weighted least-squares line through (x, y); points with zero weight are ignored.
/// Empty `w` means unit weights.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& w = {});

double median(std::vector<double> v);
double mean(const std::vector<double>& v);

}  // namespace holonomy
