#pragma once

#include <vector>

#include "spinloop/errors.hpp"

namespace spinloop {

inline std::vector<double> linspace(double start, double stop, int points) {
  if (points < 2) throw ConfigError("grid: need at least two points");
  std::vector<double> g(static_cast<size_t>(points));
  const double step = (stop - start) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) g[static_cast<size_t>(i)] = start + step * i;
  g.back() = stop;
  return g;
}

}  // namespace spinloop
