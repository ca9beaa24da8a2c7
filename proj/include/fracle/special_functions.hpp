#pragma once

namespace fracle {

/// Gamma function by the Lanczos approximation (g = 7, 9 terms) with reflection for
/// x < 1/2. Relative accuracy is better than 1e-13 on the real line away from poles.
double gamma_function(double x);

/// log|Gamma(x)| for x > 0.
double log_gamma(double x);

}  // namespace fracle
