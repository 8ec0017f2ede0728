#pragma once

#include <stdexcept>
#include <vector>

namespace mfl {

struct ExponentialFit {
  double rate = 0.0;       // per unit time
  double intercept = 0.0;  // log value at t = 0
  double r2 = 0.0;
};

/// Least squares on log(value) over samples with window_lo <= t <= window_hi.
/// Throws when the window holds fewer than two samples or a non-positive
/// value.
ExponentialFit fit_exponential(const std::vector<double>& t,
                               const std::vector<double>& value,
                               double window_lo, double window_hi);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit fit_linear(const std::vector<double>& x,
                     const std::vector<double>& y);

}  // namespace mfl
