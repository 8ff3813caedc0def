#pragma once

#include <cstddef>
#include <span>
#include <utility>

namespace anonsearch {

// Ordinary least-squares line through (alpha, log rho) points.
struct TheoryFit {
  double slope = 0.0;
  double intercept = 0.0;  // absorbs -log Z and the norm terms
  double pearson_r = 0.0;
  double r_squared = 0.0;
  std::size_t sample_count = 0;
};

// Predicted log-reconstructability for anonymity `alpha`, shared related-term
// norm `c`, query norm `norm_a`, embedding dimension `d`, threshold `l` and
// partition-function constant `log_z`:
//   (c*l / 2d) * (c + 2*(1 - alpha)*norm_a) - log_z
double predicted_log_rho(double alpha, double c, double norm_a, int d, int l,
                         double log_z);

// Fits log rho ~ slope*alpha + intercept. Requires at least 3 points, finite
// values, and nonzero variance in alpha; throws std::invalid_argument
// otherwise.
TheoryFit fit_relationship(std::span<const std::pair<double, double>> points);

}  // namespace anonsearch
