#include "mfl/fitting.hpp"

#include <cmath>

namespace mfl {

LinearFit fit_linear(const std::vector<double>& x,
                     const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_linear: need >= 2 samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinearFit fit;
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("fit_linear: degenerate x");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (size_t i = 0; i < x.size(); ++i) {
    const double pred = fit.slope * x[i] + fit.intercept;
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

ExponentialFit fit_exponential(const std::vector<double>& t,
                               const std::vector<double>& value,
                               double window_lo, double window_hi) {
  if (t.size() != value.size())
    throw std::invalid_argument("fit_exponential: size mismatch");
  std::vector<double> ts, logs;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < window_lo || t[i] > window_hi) continue;
    if (!(value[i] > 0.0))
      throw std::invalid_argument(
          "fit_exponential: non-positive value inside the window");
    ts.push_back(t[i]);
    logs.push_back(std::log(value[i]));
  }
  if (ts.size() < 2)
    throw std::invalid_argument("fit_exponential: window holds < 2 samples");
  const LinearFit lf = fit_linear(ts, logs);
  return {lf.slope, lf.intercept, lf.r2};
}

}  // namespace mfl
