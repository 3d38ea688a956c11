#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "glideopt/densities.hpp"
#include "glideopt/portfolio.hpp"

namespace glideopt {

// Ordered per-year equity ratios; the optimization variable.
struct Glidepath {
    std::vector<double> ratios;

    Glidepath() = default;
    explicit Glidepath(std::vector<double> r) : ratios(std::move(r)) {}
    static Glidepath constant(double alpha, int horizon);

    int horizon() const { return static_cast<int>(ratios.size()); }
};

// Which time points swap the standard density f for one of the special
// densities. Slot layout, one indicator per special role:
// {g_i, g_j, h1_t, h2_t}, -1 meaning unused.
struct DensitySelector {
    std::array<int, 4> slots{-1, -1, -1, -1};

    static DensitySelector standard() { return {}; }
    static DensitySelector gradient(int t) { return {{t, -1, -1, -1}}; }
    static DensitySelector gradient_pair(int i, int j) { return {{i, j, -1, -1}}; }
    static DensitySelector hessian_h1(int t) { return {{-1, -1, t, -1}}; }
    static DensitySelector hessian_h2(int t) { return {{-1, -1, -1, t}}; }

    DensityKind kind_at(int t) const;
    bool is_standard() const { return slots == std::array<int, 4>{-1, -1, -1, -1}; }
    // Throws on out-of-range indices, both Hessian slots set, or equal pair.
    void validate(int horizon) const;
};

// Discretization of the ruin-factor axis. Bucket b (1-based) represents ruin
// factor b/precision.
struct DpGrid {
    long precision = 10000;  // buckets per ruin-factor unit
    double rf_max = 2.75;    // largest ruin factor represented

    long bucket_count() const { return static_cast<long>(rf_max * precision); }
    void validate(double withdrawal_rate) const;
};

struct RuinState {
    double rf = 0.0;
    bool ruined = false;
};

// One year of the ruin-factor recursion: survive iff the adjusted return
// exceeds the current ruin factor.
RuinState ruin_factor_step(double rf, double adjusted_return);

// Discretized backward-induction estimator. One instance caches the value
// tables and forward measures for a fixed (params, glidepath, W_R, grid), so
// the gradient/Hessian probabilities of one glidepath reuse shared passes.
class DpEngine {
public:
    DpEngine(const ReturnParams& params, Glidepath glidepath, double withdrawal_rate,
             const DpGrid& grid, int workers = 0);
    ~DpEngine();

    DpEngine(const DpEngine&) = delete;
    DpEngine& operator=(const DpEngine&) = delete;

    // Standard success probability 1 - V(0, W_R) by backward induction.
    double pnr();

    // Success probability with the selector's special densities, evaluated by
    // the forward-measure x backward-value contraction on the same grid and
    // transition points as the backward recursion. Pair selectors are
    // cheapest when requested with i fixed and j ascending.
    double probability(const DensitySelector& selector);

    // Plain backward recursion for any selector (no table reuse).
    double probability_backward(const DensitySelector& selector);

    const Glidepath& glidepath() const { return gp_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Glidepath gp_;
};

// One-call convenience wrapper over the backward recursion.
double success_probability_dp(const ReturnParams& params, const Glidepath& glidepath,
                              double withdrawal_rate, const DpGrid& grid,
                              const DensitySelector& selector = DensitySelector::standard(),
                              int workers = 0);

// Rejection-sampling box for a special density: covers >= 1-1e-9 of the mass
// and dominates the peak. Computed by scanning the pdf on a fine grid.
struct RejectionBox {
    double x_low = 0.0;
    double x_high = 0.0;
    double y_high = 0.0;
};

RejectionBox rejection_bounds(DensityKind kind, const MomentBundle& mb);

// Monte Carlo estimator: n simulated retirements, rejection sampling at the
// selector's special time points. Deterministic for a fixed (seed, workers).
double success_probability_mc(const ReturnParams& params, const Glidepath& glidepath,
                              double withdrawal_rate, long long n,
                              const DensitySelector& selector, std::uint64_t seed,
                              int workers = 0);

} // namespace glideopt
