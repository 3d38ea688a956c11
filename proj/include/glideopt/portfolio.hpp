#pragma once

#include <tuple>

namespace glideopt {

// Market model: real stock/bond return moments plus the expense ratio.
// All returns are annual decimals.
struct ReturnParams {
    double mu_s = 0.0;          // mean real stock return
    double sigma2_s = 0.0;      // stock return variance
    double mu_b = 0.0;          // mean real bond return
    double sigma2_b = 0.0;      // bond return variance
    double cov_sb = 0.0;        // stock-bond covariance
    double expense_ratio = 0.0; // E_R in [0,1)

    // Throws GlidepathError on violated invariants (non-positive variances,
    // invalid covariance, E_R outside [0,1), mu_s <= mu_b).
    void validate() const;

    // S&P 500 / 10-year Treasury real returns, 1928-2013.
    static ReturnParams historical(double expense_ratio = 0.0);
    // MoneyGuidePro 2013 assumptions (Pfau/Kitces Scenario A).
    static ReturnParams evensky(double expense_ratio = 0.0);
};

// Moments of the inflation/expense-adjusted compounding return r_hat at a
// fixed equity ratio. Hot path: computed once per (time point, alpha) and
// passed by value.
struct MomentBundle {
    double alpha = 0.0;          // equity ratio the bundle was computed at
    double m = 0.0;              // mean of adjusted return
    double m_prime = 0.0;        // dm/dalpha
    double v = 0.0;              // variance
    double v_prime = 0.0;        // dv/dalpha
    double v_double_prime = 0.0; // d2v/dalpha2 (alpha-independent)
    double mva = 0.0;            // minimum-variance alpha
    double kh1 = 0.0;            // -2*v*v'*m'/theta, the shift inside h1's square
    double theta = 0.0;          // v*v'' - 2*v'^2

    static MomentBundle at(const ReturnParams& params, double alpha);
};

double mean_adjusted(const ReturnParams& params, double alpha);
double variance_adjusted(const ReturnParams& params, double alpha);

// (m', v', v'') closed forms.
std::tuple<double, double, double> moment_derivatives(const ReturnParams& params, double alpha);

// Equity ratio minimizing portfolio variance. Throws on a degenerate
// denominator (perfectly correlated legs).
double min_variance_alpha(const ReturnParams& params);

// Lower edge of the feasible region, MVA + 1e-4. Keeps v' bounded away from
// zero where it appears in denominators.
double feasible_floor(const ReturnParams& params);

// Clamp an equity ratio into [feasible_floor, 1].
double clamp_feasible(const ReturnParams& params, double alpha);

// K_t = v'/(2v) + m'^2/(2v'). Requires alpha > MVA (throws otherwise).
double gradient_constant(const ReturnParams& params, double alpha);

} // namespace glideopt
