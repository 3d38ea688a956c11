#pragma once

#include <cstdint>

#include "glideopt/ruin.hpp"

namespace glideopt {

// Standardized withdrawal rate ZF(0) = (W_R - m(alpha))/sqrt(v(alpha)) and
// its first two derivatives in alpha.
double zf0(const ReturnParams& params, double alpha, double withdrawal_rate);
double zf0_slope(const ReturnParams& params, double alpha, double withdrawal_rate);
double zf0_curvature(const ReturnParams& params, double alpha, double withdrawal_rate);

// The single critical point of ZF(0) in alpha, closed form. Throws on a
// degenerate denominator.
double critical_alpha_single_period(const ReturnParams& params, double withdrawal_rate);

// Rectangle grid on the z1 axis for the two-period probability difference.
struct GridSpec {
    double z_low = 0.0;
    double z_high = 0.0;
    long k = 0;
    void validate() const; // z_low < 0 < z_high, k >= 1
};

// P_NR(gp_a) - P_NR(gp_b) for two-year glidepaths via the expectation of
// F_b(z1) - F_a(z1) over the grid; exact normal CDF differences weight each
// rectangle. Antisymmetric under swapping the arguments.
double two_period_difference(const ReturnParams& params, const Glidepath& gp_a,
                             const Glidepath& gp_b, double withdrawal_rate, const GridSpec& grid);

enum class CexMethod { Grid, Mc };

struct CounterexampleReport {
    Glidepath gp_c;
    // Monte Carlo route: the three absolute probabilities.
    double p1 = 0.0, p2 = 0.0, pc = 0.0;
    // Both routes: the two differences of interest.
    double diff_c_minus_2 = 0.0; // P(gp_c) - P(gp_2)
    double diff_1_minus_c = 0.0; // P(gp_1) - P(gp_c)
    bool counterexample = false; // gp_c strictly underperforms both endpoints
};

// Form gp_c = lambda*gp_1 + (1-lambda)*gp_2 and check whether the convex
// combination strictly underperforms both endpoints. budget is the MC sample
// size or the grid rectangle count.
CounterexampleReport verify_counterexample(const ReturnParams& params, const Glidepath& gp_1,
                                           const Glidepath& gp_2, double lambda,
                                           double withdrawal_rate, CexMethod method,
                                           long long budget, std::uint64_t seed = 0,
                                           int workers = 0);

} // namespace glideopt
