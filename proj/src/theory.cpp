#include "anonsearch/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace anonsearch {

double predicted_log_rho(double alpha, double c, double norm_a, int d, int l,
                         double log_z) {
  if (c <= 0.0 || norm_a <= 0.0 || d <= 0 || l <= 0) {
    throw std::invalid_argument("predicted_log_rho: invalid constants");
  }
  const double dl = static_cast<double>(l);
  const double dd = static_cast<double>(d);
  return (c * dl / (2.0 * dd)) * (c + 2.0 * (1.0 - alpha) * norm_a) - log_z;
}

TheoryFit fit_relationship(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) {
    throw std::invalid_argument("fit_relationship: need at least 3 points");
  }
  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw std::invalid_argument("fit_relationship: non-finite point");
    }
    sx += x;
    sy += y;
  }
  const double mx = sx / n;
  const double my = sy / n;

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("fit_relationship: zero variance in alpha");
  }

  TheoryFit fit;
  fit.sample_count = points.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy == 0.0) {
    // All responses identical: the line is flat and correlation undefined;
    // report r = 0 so callers get a finite record.
    fit.pearson_r = 0.0;
  } else {
    fit.pearson_r = sxy / std::sqrt(sxx * syy);
  }
  fit.r_squared = fit.pearson_r * fit.pearson_r;
  return fit;
}

}  // namespace anonsearch
