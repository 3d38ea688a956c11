#pragma once

namespace glideopt {

// Observed success fraction out of n Bernoulli trials.
struct ProportionSample {
    double p_hat = 0.0;
    long long n = 0;
};

struct EqualityTest {
    double t_stat = 0.0;
    double p_value = 1.0;
};

struct NoninferiorityTest {
    double t_stat = 0.0;
    double p_value = 0.5;
    bool reject = false; // rejecting means the new sample is inferior
};

// Two-sided large-sample test of p_a == p_b with the pooled variance
// estimate. Zero pooled variance degenerates to p_value 1 (equal) or 0.
EqualityTest equality_test(const ProportionSample& a, const ProportionSample& b);

// One-sided test of H0: p_new >= p_base using unpooled variances; reject at
// level alpha means "the new proportion is inferior".
NoninferiorityTest noninferiority_test(const ProportionSample& new_sample,
                                       const ProportionSample& base_sample, double alpha);

} // namespace glideopt
