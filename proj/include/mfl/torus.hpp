#pragma once

#include <cmath>

namespace mfl {

/// Wrap a coordinate to the unit torus [-1/2, 1/2).
inline double wrap(double x) {
  double w = x - std::floor(x + 0.5);
  // floor(x + 0.5) can land us exactly on +1/2 when x is just below a half-integer
  if (w >= 0.5) w -= 1.0;
  return w;
}

/// Shortest distance between two points on the unit torus (<= 1/2).
inline double torus_distance(double x1, double x2) {
  return std::abs(wrap(x1 - x2));
}

}  // namespace mfl
