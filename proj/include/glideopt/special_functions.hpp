#pragma once

#include <cmath>

namespace glideopt {

// Standard normal CDF. erfc keeps full precision in the left tail; the right
// tail saturates to exactly 1.0 once 1-Phi(z) drops below half an ulp of 1.0
// (z ~ 8.3), which the ruin DP relies on for pruning.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

inline double normal_pdf(double z) {
    return 0.3989422804014326779 * std::exp(-0.5 * z * z);
}

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
// Series for x < a+1, Lentz continued fraction otherwise. Relative accuracy
// ~1e-14 over the shapes used here {1, 3/2, 2, 5/2}.
double regularized_lower_gamma(double a, double x);

} // namespace glideopt
