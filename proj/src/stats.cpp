#include "glideopt/stats.hpp"

#include <algorithm>
#include <cmath>

#include "glideopt/errors.hpp"
#include "glideopt/special_functions.hpp"

namespace glideopt {

namespace {

void check(const ProportionSample& s) {
    if (s.n < 1)
        throw GlidepathError("proportion sample needs n >= 1");
    if (!(s.p_hat >= 0.0) || !(s.p_hat <= 1.0))
        throw GlidepathError("proportion sample needs p_hat in [0,1]");
}

} // namespace

EqualityTest equality_test(const ProportionSample& a, const ProportionSample& b) {
    check(a);
    check(b);
    const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
    const double pooled = (na * a.p_hat + nb * b.p_hat) / (na + nb);
    const double var = pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb);
    EqualityTest r;
    if (var <= 0.0) { // both samples all-success or all-failure
        r.t_stat = 0.0;
        r.p_value = (a.p_hat == b.p_hat) ? 1.0 : 0.0;
        return r;
    }
    r.t_stat = (a.p_hat - b.p_hat) / std::sqrt(var);
    r.p_value = 2.0 * std::min(normal_cdf(r.t_stat), 1.0 - normal_cdf(r.t_stat));
    return r;
}

NoninferiorityTest noninferiority_test(const ProportionSample& new_sample,
                                       const ProportionSample& base_sample, double alpha) {
    check(new_sample);
    check(base_sample);
    if (!(alpha > 0.0) || !(alpha <= 1.0))
        throw GlidepathError("noninferiority_test: alpha must lie in (0,1]");
    const double var = new_sample.p_hat * (1.0 - new_sample.p_hat) / new_sample.n +
                       base_sample.p_hat * (1.0 - base_sample.p_hat) / base_sample.n;
    NoninferiorityTest r;
    if (var <= 0.0) {
        r.t_stat = 0.0;
        r.reject = new_sample.p_hat < base_sample.p_hat;
        r.p_value = r.reject ? 0.0 : 1.0;
        return r;
    }
    r.t_stat = (new_sample.p_hat - base_sample.p_hat) / std::sqrt(var);
    r.p_value = normal_cdf(r.t_stat);
    r.reject = r.p_value <= alpha;
    return r;
}

} // namespace glideopt
