#pragma once

#include <vector>

#include "glideopt/portfolio.hpp"

namespace glideopt {

// The four densities of the adjusted return at one time point. Standard is
// the plain normal f; Gradient (g) turns the gradient integral into a success
// probability; HessianH1/H2 (h1, h2) do the same for the diagonal Hessian.
enum class DensityKind { Standard, Gradient, HessianH1, HessianH2 };

// Every CDF in this model is leading * (sum of weighted gamma-CDF terms +
// normal_weight * Phi). Terms with half-integer gamma shape flip the sign of
// their gamma CDF to the right of the mean (the indicator alternation);
// integer-shape terms never do.
struct CdfCoefficients {
    struct Term {
        double weight;
        double shape;     // gamma shape, one of {1, 3/2, 2, 5/2}
        bool alternating; // subtract vs add the gamma CDF right of the mean
    };
    double leading = 1.0;
    std::vector<Term> terms;
    double normal_weight = 1.0;
};

// Integral of (x-mu)^n * exp(-((x-mu)/sqrt(2 sigma2))^2) over (-inf, y],
// n in {1,2,3,4}, expressed through the regularized lower gamma CDF.
double truncated_power_integral(int n, double y, double mu, double sigma2);

// Same integrand over the whole line: 0 for odd n, sigma^3*sqrt(2*pi) for
// n=2, 3*sigma^5*sqrt(2*pi) for n=4.
double gaussian_central_moment(int n, double sigma2);

double pdf(DensityKind kind, const MomentBundle& mb, double r);
double cdf(DensityKind kind, const MomentBundle& mb, double r);
CdfCoefficients coefficients(DensityKind kind, const MomentBundle& mb);

// Precomputed CDF evaluator for one (kind, moments) pair; this is the inner
// kernel of the ruin DP. operator() is pure and thread-safe.
class CdfEvaluator {
public:
    CdfEvaluator(DensityKind kind, const MomentBundle& mb);

    double operator()(double x) const;

    // Smallest x at which operator() returns exactly 1.0 (monotone
    // saturation), padded so every x >= saturation_hi() evaluates to 1.0.
    double saturation_hi() const { return sat_hi_; }
    // Largest x at which operator() returns exactly 0.0.
    double saturation_lo() const { return sat_lo_; }

private:
    bool standard_;
    double m_, inv_sd_, inv_2v_;
    CdfCoefficients coef_;
    double sat_hi_, sat_lo_;
};

// Requires alpha > MVA for the special kinds; HessianH1 additionally requires
// theta away from zero. Throws GlidepathError otherwise.
void require_valid_for(DensityKind kind, const MomentBundle& mb);

} // namespace glideopt
