#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "glideopt/optimizer.hpp"
#include "glideopt/ruin.hpp"

namespace glideopt {

// Distribution of the final withdrawal time: probabilities[t] = P(T_D = t),
// t = 0..S_max. T_D = 0 means death before the first withdrawal.
struct MortalityDistribution {
    std::vector<double> probabilities;

    int s_max() const { return static_cast<int>(probabilities.size()) - 1; }
    void validate() const; // nonnegative, sums to 1 within 1e-9, s_max >= 1
    static MortalityDistribution point_mass(int t, int s_max);
};

// One probability per line, t = 0 first. renormalize rescales a sum that is
// off by more than the tolerance instead of failing.
MortalityDistribution load_lifetable(std::istream& in, bool renormalize = false);
MortalityDistribution load_lifetable_file(const std::string& path, bool renormalize = false);

// p_0 + sum_t p_t * P_NR(prefix of gp, t), each horizon evaluated by an
// independent fixed-horizon DP at the given grid.
double success_probability_random(const ReturnParams& params, const Glidepath& gp,
                                  double withdrawal_rate, const MortalityDistribution& mortality,
                                  const DpGrid& grid, int workers = 0);

// Mortality-weighted gradient/Hessian: the naive per-horizon sums
// g_t = sum_k p_k (g_t | horizon k), zero when t exceeds the horizon.
GradientVector gradient_random(const ReturnParams& params, const Glidepath& gp,
                               double withdrawal_rate, const MortalityDistribution& mortality,
                               const DpGrid& grid, int workers = 0);
HessianMatrix hessian_random(const ReturnParams& params, const Glidepath& gp,
                             double withdrawal_rate, const MortalityDistribution& mortality,
                             const DpGrid& grid, int workers = 0);

// Probability oracle over the mortality-weighted objective, suitable for
// optimize_with: special(sel) weights each horizon's probability with the
// selector restricted to the covered time points, so the generic gradient
// and Hessian formulas reproduce the per-horizon sums.
class RandomHorizonEvaluator final : public ProbabilityOracle {
public:
    RandomHorizonEvaluator(const ReturnParams& params, double withdrawal_rate,
                           MortalityDistribution mortality, const OptimizerConfig& config);
    ~RandomHorizonEvaluator() override;

    double pnr(const Glidepath& gp, SampleScale scale) override;
    double special(const Glidepath& gp, const DensitySelector& selector) override;
    long long sample_size(SampleScale scale) const override;
    bool simulation() const override { return false; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace glideopt
