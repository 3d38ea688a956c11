#include "glideopt/densities.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "glideopt/errors.hpp"
#include "glideopt/special_functions.hpp"

namespace glideopt {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2Pi = 2.50662827463100050242;

// Gamma((n+1)/2) for n = 1..4.
constexpr double kHalfGamma[4] = {1.0, 0.88622692545275801365, 1.0, 1.32934038817913702047};

} // namespace

double truncated_power_integral(int n, double y, double mu, double sigma2) {
    if (n < 1 || n > 4)
        throw GlidepathError("truncated_power_integral: n must be in {1,2,3,4}");
    if (!(sigma2 > 0.0))
        throw GlidepathError("truncated_power_integral: sigma2 must be positive");
    const double sd = std::sqrt(sigma2);
    const double u = (y - mu) * (y - mu) / (2.0 * sigma2);
    const double p = regularized_lower_gamma(0.5 * (n + 1), u);
    // The gamma CDF enters with a flipped sign right of the mean for even n.
    const double s = (y > mu && n % 2 == 0) ? -1.0 : 1.0;
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return sign * std::pow(sd, n + 1) * std::pow(std::sqrt(2.0), n - 1) * kHalfGamma[n - 1] *
           (1.0 - s * p);
}

double gaussian_central_moment(int n, double sigma2) {
    if (n < 1 || n > 4)
        throw GlidepathError("gaussian_central_moment: n must be in {1,2,3,4}");
    if (!(sigma2 > 0.0))
        throw GlidepathError("gaussian_central_moment: sigma2 must be positive");
    if (n % 2 == 1)
        return 0.0;
    const double sd = std::sqrt(sigma2);
    if (n == 2)
        return sd * sd * sd * kSqrt2Pi;
    return 3.0 * sd * sd * sd * sd * sd * kSqrt2Pi;
}

void require_valid_for(DensityKind kind, const MomentBundle& mb) {
    if (kind == DensityKind::Standard)
        return;
    if (!(mb.v_prime > 0.0))
        throw GlidepathError("special density requires alpha above the minimum-variance alpha, got alpha=" +
                             std::to_string(mb.alpha));
    if (kind == DensityKind::HessianH1 &&
        std::fabs(mb.theta) < 1e-12 * mb.v * mb.v_double_prime)
        throw GlidepathError("Hessian diagonal element does not exist for alpha value=" +
                             std::to_string(mb.alpha) + " (theta ~ 0)");
}

double pdf(DensityKind kind, const MomentBundle& mb, double r) {
    require_valid_for(kind, mb);
    const double d = r - mb.m;
    const double f = std::exp(-d * d / (2.0 * mb.v)) / std::sqrt(2.0 * kPi * mb.v);
    switch (kind) {
    case DensityKind::Standard:
        return f;
    case DensityKind::Gradient: {
        const double num = mb.v_prime * d + mb.m_prime * mb.v;
        const double den = mb.m_prime * mb.m_prime * mb.v * mb.v + mb.v * mb.v_prime * mb.v_prime;
        return f * num * num / den;
    }
    case DensityKind::HessianH1: {
        const double num = d + mb.kh1;
        return f * num * num / (mb.v + mb.kh1 * mb.kh1);
    }
    case DensityKind::HessianH2: {
        const double num = mb.v_prime / (2.0 * mb.v) * d * d + mb.m_prime * d - mb.v_prime / 2.0;
        const double den = mb.v_prime * mb.v_prime + 2.0 * mb.v * mb.m_prime * mb.m_prime;
        return f * 2.0 * num * num / den;
    }
    }
    return 0.0;
}

CdfCoefficients coefficients(DensityKind kind, const MomentBundle& mb) {
    require_valid_for(kind, mb);
    const double v = mb.v, vp = mb.v_prime, mp = mb.m_prime;
    CdfCoefficients c;
    switch (kind) {
    case DensityKind::Standard:
        break;
    case DensityKind::Gradient:
        c.leading = 1.0 / (mp * mp * v * v + v * vp * vp);
        c.terms = {{vp * vp * v / 2.0, 1.5, true},
                   {-vp * mp * v * std::sqrt(2.0 * v / kPi), 1.0, false}};
        c.normal_weight = mp * mp * v * v;
        break;
    case DensityKind::HessianH1:
        c.leading = 1.0 / (v + mb.kh1 * mb.kh1);
        c.terms = {{v / 2.0, 1.5, true},
                   {-std::sqrt(2.0 * v / kPi) * mb.kh1, 1.0, false}};
        c.normal_weight = mb.kh1 * mb.kh1;
        break;
    case DensityKind::HessianH2:
        c.leading = 2.0 / (vp * vp + 2.0 * v * mp * mp);
        c.terms = {{3.0 * vp * vp / 8.0, 2.5, true},
                   {-std::sqrt(2.0 * v / kPi) * vp * mp, 2.0, false},
                   {(2.0 * mp * mp * v - vp * vp) / 4.0, 1.5, true},
                   {std::sqrt(v / (2.0 * kPi)) * vp * mp, 1.0, false}};
        c.normal_weight = vp * vp / 4.0;
        break;
    }
    return c;
}

namespace {

double cdf_from_coefficients(const CdfCoefficients& c, double m, double v, double x) {
    const double d = x - m;
    const double phi = normal_cdf(d / std::sqrt(v));
    const bool above = x > m;
    double acc = 0.0;
    bool gammas_saturated = true;
    if (!c.terms.empty()) {
        const double u = d * d / (2.0 * v);
        for (const auto& t : c.terms) {
            const double p = regularized_lower_gamma(t.shape, u);
            const double s = (t.alternating && above) ? -1.0 : 1.0;
            acc += t.weight * (1.0 - s * p);
            if (p != 1.0)
                gammas_saturated = false;
        }
        if (!above)
            gammas_saturated = false;
    }
    if (gammas_saturated && phi == 1.0)
        return 1.0;
    const double val = c.leading * (acc + c.normal_weight * phi);
    // The linear combination can leak a few ulps outside [0,1].
    if (val < 0.0) return 0.0;
    if (val > 1.0) return 1.0;
    return val;
}

} // namespace

double cdf(DensityKind kind, const MomentBundle& mb, double r) {
    return cdf_from_coefficients(coefficients(kind, mb), mb.m, mb.v, r);
}

CdfEvaluator::CdfEvaluator(DensityKind kind, const MomentBundle& mb)
    : standard_(kind == DensityKind::Standard),
      m_(mb.m),
      inv_sd_(1.0 / std::sqrt(mb.v)),
      inv_2v_(1.0 / (2.0 * mb.v)),
      coef_(coefficients(kind, mb)) {
    const double sd = std::sqrt(mb.v);
    // Bracket the x ranges where the CDF saturates to exactly 1.0 / 0.0, then
    // bisect. Saturation lets the DP skip whole runs of transition points.
    double lo = m_, hi = m_;
    for (int k = 1; k <= 64 && (*this)(hi) != 1.0; ++k) hi = m_ + k * 2.0 * sd;
    if ((*this)(hi) == 1.0) {
        for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::fabs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((*this)(mid) == 1.0) hi = mid; else lo = mid;
        }
        sat_hi_ = hi + 4.0 * sd * 1e-9;
        while ((*this)(sat_hi_) != 1.0) sat_hi_ += sd * 1e-6;
    } else {
        sat_hi_ = std::numeric_limits<double>::infinity();
    }
    lo = m_; hi = m_;
    for (int k = 1; k <= 64 && (*this)(lo) != 0.0; ++k) lo = m_ - k * 2.0 * sd;
    if ((*this)(lo) == 0.0) {
        for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::fabs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((*this)(mid) == 0.0) lo = mid; else hi = mid;
        }
        sat_lo_ = lo - 4.0 * sd * 1e-9;
        while ((*this)(sat_lo_) != 0.0) sat_lo_ -= sd * 1e-6;
    } else {
        sat_lo_ = -std::numeric_limits<double>::infinity();
    }
}

double CdfEvaluator::operator()(double x) const {
    if (standard_)
        return normal_cdf((x - m_) * inv_sd_);
    return cdf_from_coefficients(coef_, m_, 1.0 / (2.0 * inv_2v_), x);
}

} // namespace glideopt
