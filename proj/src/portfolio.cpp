#include "glideopt/portfolio.hpp"

#include <cmath>
#include <string>

#include "glideopt/errors.hpp"

namespace glideopt {

void ReturnParams::validate() const {
    if (!(sigma2_s > 0.0) || !(sigma2_b > 0.0))
        throw GlidepathError("ReturnParams: variances must be positive");
    if (cov_sb * cov_sb > sigma2_s * sigma2_b)
        throw GlidepathError("ReturnParams: covariance exceeds Cauchy-Schwarz bound");
    if (!(expense_ratio >= 0.0) || !(expense_ratio < 1.0))
        throw GlidepathError("ReturnParams: expense ratio must lie in [0,1)");
    if (!(mu_s > mu_b))
        throw GlidepathError("ReturnParams: require mu_s > mu_b");
}

ReturnParams ReturnParams::historical(double expense_ratio) {
    return {0.082509, 0.0402696529, 0.021409, 0.0069605649, 0.0007344180, expense_ratio};
}

ReturnParams ReturnParams::evensky(double expense_ratio) {
    return {0.055000, 0.0428490000, 0.017500, 0.0042250000, 0.0040365000, expense_ratio};
}

double mean_adjusted(const ReturnParams& p, double alpha) {
    return (1.0 - p.expense_ratio) * (1.0 + alpha * p.mu_s + (1.0 - alpha) * p.mu_b);
}

double variance_adjusted(const ReturnParams& p, double alpha) {
    const double k = 1.0 - p.expense_ratio;
    return k * k *
           (alpha * alpha * p.sigma2_s + (1.0 - alpha) * (1.0 - alpha) * p.sigma2_b +
            2.0 * alpha * (1.0 - alpha) * p.cov_sb);
}

std::tuple<double, double, double> moment_derivatives(const ReturnParams& p, double alpha) {
    const double k = 1.0 - p.expense_ratio;
    const double m_prime = k * (p.mu_s - p.mu_b);
    const double v_prime =
        2.0 * k * k * (alpha * p.sigma2_s - (1.0 - alpha) * p.sigma2_b + (1.0 - 2.0 * alpha) * p.cov_sb);
    const double v_double_prime = 2.0 * k * k * (p.sigma2_s + p.sigma2_b - 2.0 * p.cov_sb);
    return {m_prime, v_prime, v_double_prime};
}

double min_variance_alpha(const ReturnParams& p) {
    const double den = p.sigma2_s + p.sigma2_b - 2.0 * p.cov_sb;
    if (!(den > 0.0))
        throw GlidepathError("min_variance_alpha: perfectly correlated legs");
    return (p.sigma2_b - p.cov_sb) / den;
}

double feasible_floor(const ReturnParams& p) {
    return min_variance_alpha(p) + 0.0001;
}

double clamp_feasible(const ReturnParams& p, double alpha) {
    const double lo = feasible_floor(p);
    if (alpha < lo) return lo;
    if (alpha > 1.0) return 1.0;
    return alpha;
}

double gradient_constant(const ReturnParams& p, double alpha) {
    const auto [m_prime, v_prime, v_double_prime] = moment_derivatives(p, alpha);
    (void)v_double_prime;
    if (!(v_prime > 0.0))
        throw GlidepathError("gradient_constant: division by non-positive v' at alpha=" +
                             std::to_string(alpha) + " (alpha <= minimum-variance alpha)");
    return v_prime / (2.0 * variance_adjusted(p, alpha)) + m_prime * m_prime / (2.0 * v_prime);
}

MomentBundle MomentBundle::at(const ReturnParams& p, double alpha) {
    MomentBundle mb;
    mb.alpha = alpha;
    mb.m = mean_adjusted(p, alpha);
    mb.v = variance_adjusted(p, alpha);
    std::tie(mb.m_prime, mb.v_prime, mb.v_double_prime) = moment_derivatives(p, alpha);
    mb.mva = min_variance_alpha(p);
    mb.theta = mb.v * mb.v_double_prime - 2.0 * mb.v_prime * mb.v_prime;
    mb.kh1 = -2.0 * mb.v * mb.v_prime * mb.m_prime / mb.theta;
    return mb;
}

} // namespace glideopt
