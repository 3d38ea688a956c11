#include "glideopt/quasiconcavity.hpp"

#include <cmath>

#include "glideopt/errors.hpp"
#include "glideopt/special_functions.hpp"

namespace glideopt {

double zf0(const ReturnParams& params, double alpha, double withdrawal_rate) {
    return (withdrawal_rate - mean_adjusted(params, alpha)) /
           std::sqrt(variance_adjusted(params, alpha));
}

double zf0_slope(const ReturnParams& params, double alpha, double withdrawal_rate) {
    const double m = mean_adjusted(params, alpha);
    const double v = variance_adjusted(params, alpha);
    const auto [mp, vp, vpp] = moment_derivatives(params, alpha);
    (void)vpp;
    const double sv = std::sqrt(v);
    return (m - withdrawal_rate) * vp / (2.0 * sv * sv * sv) - mp / sv;
}

double zf0_curvature(const ReturnParams& params, double alpha, double withdrawal_rate) {
    const double m = mean_adjusted(params, alpha);
    const double v = variance_adjusted(params, alpha);
    const auto [mp, vp, vpp] = moment_derivatives(params, alpha);
    const double sv = std::sqrt(v);
    return ((m - withdrawal_rate) * (v * vpp - 1.5 * vp * vp) + 2.0 * mp * v * vp) /
           (2.0 * sv * sv * sv * sv * sv);
}

double critical_alpha_single_period(const ReturnParams& params, double withdrawal_rate) {
    params.validate();
    const double scale = 1.0 + params.mu_b - withdrawal_rate / (1.0 - params.expense_ratio);
    const double dmu = params.mu_s - params.mu_b;
    const double cb = params.cov_sb - params.sigma2_b;
    const double num = dmu * params.sigma2_b - scale * cb;
    const double den = scale * (params.sigma2_s + params.sigma2_b - 2.0 * params.cov_sb) - dmu * cb;
    if (den == 0.0)
        throw GlidepathError("critical_alpha_single_period: degenerate denominator");
    return num / den;
}

void GridSpec::validate() const {
    if (!(z_low < 0.0) || !(z_high > 0.0))
        throw GlidepathError("GridSpec: need z_low < 0 < z_high");
    if (k < 1)
        throw GlidepathError("GridSpec: need at least one rectangle");
}

namespace {

struct TwoPeriodCurve {
    double zf0_value;
    double m1, sv1; // first-year moments
    double m2, sv2; // second-year moments
    double wr;

    explicit TwoPeriodCurve(const ReturnParams& params, const Glidepath& gp, double withdrawal_rate)
        : wr(withdrawal_rate) {
        m1 = mean_adjusted(params, gp.ratios[0]);
        sv1 = std::sqrt(variance_adjusted(params, gp.ratios[0]));
        m2 = mean_adjusted(params, gp.ratios[1]);
        sv2 = std::sqrt(variance_adjusted(params, gp.ratios[1]));
        zf0_value = (wr - m1) / sv1;
    }

    // F(z1): 1 when year one already ruins, else the probability that year
    // two ruins, Phi(ZF(1)).
    double operator()(double z1) const {
        if (z1 <= zf0_value)
            return 1.0;
        const double rf1 = wr / (sv1 * z1 + m1 - wr);
        return normal_cdf((rf1 - m2) / sv2);
    }
};

} // namespace

double two_period_difference(const ReturnParams& params, const Glidepath& gp_a,
                             const Glidepath& gp_b, double withdrawal_rate, const GridSpec& grid) {
    params.validate();
    grid.validate();
    if (gp_a.horizon() != 2 || gp_b.horizon() != 2)
        throw GlidepathError("two_period_difference: both glidepaths must have exactly 2 ratios");
    const TwoPeriodCurve fa(params, gp_a, withdrawal_rate);
    const TwoPeriodCurve fb(params, gp_b, withdrawal_rate);
    const double w = (grid.z_high - grid.z_low) / static_cast<double>(grid.k);
    double sum = 0.0, carry = 0.0;
    double left_cdf = normal_cdf(grid.z_low);
    for (long r = 1; r <= grid.k; ++r) {
        const double right_cdf = normal_cdf(grid.z_low + r * w);
        const double pr = right_cdf - left_cdf;
        left_cdf = right_cdf;
        const double mid = grid.z_low + (r - 1) * w + w / 2.0;
        const double term = pr * (fb(mid) - fa(mid));
        const double y = term - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum;
}

CounterexampleReport verify_counterexample(const ReturnParams& params, const Glidepath& gp_1,
                                           const Glidepath& gp_2, double lambda,
                                           double withdrawal_rate, CexMethod method,
                                           long long budget, std::uint64_t seed, int workers) {
    if (gp_1.horizon() != gp_2.horizon())
        throw GlidepathError("verify_counterexample: glidepaths must have equal length");
    if (!(lambda >= 0.0) || !(lambda <= 1.0))
        throw GlidepathError("verify_counterexample: lambda must lie in [0,1]");
    CounterexampleReport report;
    report.gp_c.ratios.resize(gp_1.ratios.size());
    for (std::size_t t = 0; t < gp_1.ratios.size(); ++t)
        report.gp_c.ratios[t] = lambda * gp_1.ratios[t] + (1.0 - lambda) * gp_2.ratios[t];

    if (method == CexMethod::Mc) {
        const auto sel = DensitySelector::standard();
        report.p1 = success_probability_mc(params, gp_1, withdrawal_rate, budget, sel, seed, workers);
        report.p2 = success_probability_mc(params, gp_2, withdrawal_rate, budget, sel, seed + 1, workers);
        report.pc = success_probability_mc(params, report.gp_c, withdrawal_rate, budget, sel, seed + 2,
                                           workers);
        report.diff_c_minus_2 = report.pc - report.p2;
        report.diff_1_minus_c = report.p1 - report.pc;
    } else {
        if (gp_1.horizon() != 2)
            throw GlidepathError("verify_counterexample: the grid method applies to 2-year horizons");
        // Z bounds at the deepest standardized zero-return level m/sqrt(v)
        // across the glidepaths, padded
        double depth = 0.0;
        for (const Glidepath* gp : {&gp_1, &gp_2, static_cast<const Glidepath*>(&report.gp_c)})
            for (double a : gp->ratios)
                depth = std::max(depth, mean_adjusted(params, a) /
                                            std::sqrt(variance_adjusted(params, a)));
        GridSpec grid{-(depth + 0.01), depth + 0.01, budget};
        report.diff_c_minus_2 =
            two_period_difference(params, report.gp_c, gp_2, withdrawal_rate, grid);
        report.diff_1_minus_c =
            two_period_difference(params, gp_1, report.gp_c, withdrawal_rate, grid);
    }
    report.counterexample = report.diff_c_minus_2 < 0.0 && report.diff_1_minus_c > 0.0;
    return report;
}

} // namespace glideopt
