#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "glideopt/errors.hpp"
#include "glideopt/ruin.hpp"

namespace glideopt {

Glidepath Glidepath::constant(double alpha, int horizon) {
    return Glidepath(std::vector<double>(static_cast<std::size_t>(horizon), alpha));
}

DensityKind DensitySelector::kind_at(int t) const {
    if (slots[0] == t || slots[1] == t) return DensityKind::Gradient;
    if (slots[2] == t) return DensityKind::HessianH1;
    if (slots[3] == t) return DensityKind::HessianH2;
    return DensityKind::Standard;
}

void DensitySelector::validate(int horizon) const {
    for (int s : slots)
        if (s >= horizon)
            throw GlidepathError("DensitySelector: time index " + std::to_string(s) +
                                 " is not below the horizon " + std::to_string(horizon));
    if (slots[2] != -1 && slots[3] != -1)
        throw GlidepathError("DensitySelector: only one Hessian special density per probability");
    if (slots[0] != -1 && slots[0] == slots[1])
        throw GlidepathError("DensitySelector: off-diagonal pair must use distinct time points");
}

void DpGrid::validate(double withdrawal_rate) const {
    if (precision < 100)
        throw GlidepathError("DpGrid: precision must be at least 100");
    if (!(rf_max > withdrawal_rate))
        throw GlidepathError("DpGrid: rf_max must exceed the withdrawal rate");
    const long b0 = static_cast<long>(withdrawal_rate * precision + 0.5);
    if (b0 < 1 || b0 > bucket_count())
        throw GlidepathError("DpGrid: withdrawal rate does not round to a representable bucket");
}

RuinState ruin_factor_step(double rf, double adjusted_return) {
    if (rf > 0.0 && adjusted_return > rf)
        return {rf / (adjusted_return - rf), false};
    return {rf, true};
}

namespace {

constexpr int kChunks = 64; // fixed partition count keeps results worker-count independent

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Run fn(chunk) for chunk = 0..nchunks-1 across the worker pool. Chunks are
// dispatched dynamically but outputs must be keyed by chunk index only.
template <typename Fn>
void parallel_chunks(int nchunks, int workers, Fn&& fn) {
    if (workers <= 1 || nchunks <= 1) {
        for (int c = 0; c < nchunks; ++c) fn(c);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto body = [&] {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= nchunks || failed.load()) return;
            try {
                fn(c);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min(workers, nchunks);
    pool.reserve(static_cast<std::size_t>(nthreads - 1));
    for (int i = 1; i < nthreads; ++i) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Last bucket of every run of equal values (run-length compression).
// Collection stops once a ruin probability reaches 1.0 (the saturated top
// region collapses into the final bucket).
std::vector<long> run_ends(const std::vector<double>& v) {
    const long B = static_cast<long>(v.size());
    std::vector<long> u;
    bool cont = true;
    for (long b = 1; b <= B; ++b) {
        if (b == 1 || (b != B && v[b - 1] != v[b] && cont) || b == B)
            u.push_back(b);
        if (cont && v[b - 1] >= 1.0)
            cont = false;
    }
    return u;
}

// Transition machinery for one time step: the step's CDF plus the next
// time point's value table in compressed form.
struct StepKernel {
    const CdfEvaluator* cdf = nullptr;
    double prec = 0.0;
    const std::vector<double>* vp = nullptr;
    long B = 0;
    std::vector<double> c;     // 1 + prec/(uniq_k + 0.5), decreasing
    std::vector<double> vp_at; // vp at the run-end buckets

    StepKernel(const CdfEvaluator& eval, long precision, const std::vector<double>& prev) {
        cdf = &eval;
        prec = static_cast<double>(precision);
        vp = &prev;
        B = static_cast<long>(prev.size());
        const std::vector<long> uniq = run_ends(prev);
        c.resize(uniq.size());
        vp_at.resize(uniq.size());
        for (std::size_t k = 0; k < uniq.size(); ++k) {
            c[k] = 1.0 + prec / (uniq[k] + 0.5);
            vp_at[k] = prev[uniq[k] - 1];
        }
    }

    // Immediate-ruin CDF and the conditional expectation of the next value,
    // summed between the mid-transition points rf*(1+prec/(b+0.5)).
    // Runs of saturated CDF values (exactly 1 left of the support, exactly 0
    // right of it) contribute zero and are skipped without changing the sum.
    void cdf_and_eprob(long b, double& cdfval, double& eprob) const {
        const double rf = static_cast<double>(b) / prec;
        cdfval = (*cdf)(rf);
        if (cdfval >= 1.0) {
            eprob = (*vp)[B - 1];
            return;
        }
        const double sat_hi = cdf->saturation_hi();
        const std::size_t n = c.size();
        std::size_t k0 = 0;
        if (std::isfinite(sat_hi) && rf * c[0] >= sat_hi) {
            // first k with rf*c[k] < sat_hi; c is decreasing
            std::size_t lo = 0, hi = n;
            while (lo + 1 < hi) {
                const std::size_t mid = (lo + hi) / 2;
                if (rf * c[mid] >= sat_hi) lo = mid; else hi = mid;
            }
            k0 = hi;
        }
        double rhs = 1.0, e = 0.0;
        for (std::size_t k = k0; k < n; ++k) {
            const double lhs = (*cdf)(rf * c[k]);
            e += (rhs - lhs) * vp_at[k];
            rhs = lhs;
            if (lhs == 0.0) break; // every remaining CDF is exactly 0
        }
        eprob = (e + (rhs - cdfval) * (*vp)[B - 1]) / (1.0 - cdfval);
    }

    double ruin_value(long b) const {
        double cdfval, eprob;
        cdf_and_eprob(b, cdfval, eprob);
        double pruin = cdfval + eprob - cdfval * eprob;
        if (pruin > 0.5) // preserve precision in the upper tail
            pruin = 1.0 - (1.0 - cdfval) * (1.0 - eprob);
        return pruin;
    }

    double survival_value(long b) const {
        double cdfval, eprob;
        cdf_and_eprob(b, cdfval, eprob);
        return (1.0 - cdfval) * (1.0 - eprob);
    }
};

struct KahanSum {
    double sum = 0.0, carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

} // namespace

struct DpEngine::Impl {
    ReturnParams params;
    double withdrawal_rate;
    DpGrid grid;
    long B;
    long rf0_bucket;
    int horizon;
    int workers;
    double prec;

    std::vector<MomentBundle> moments;          // per time index
    std::vector<double> zeros;                  // terminal value table
    std::vector<double> cdest;                  // 1 + prec/(d + 0.5) for d = 1..B

    // standard backward tables: w[y] = V(y, .) for y = 1..horizon-1
    bool backward_built = false;
    std::vector<std::vector<double>> w;
    std::vector<long> frontier;                 // first bucket with w[y]==1.0
    double pnr_value = std::numeric_limits<double>::quiet_NaN();

    // standard forward measures mu[y], y = 1..horizon-1 (time 0 is the
    // deterministic bucket rf0_bucket); built on demand up to mu_built
    std::vector<std::vector<double>> mu;
    int mu_built = 0;

    // forward branch with density g applied at branch_i, advanced to branch_y
    int branch_i = -1;
    int branch_y = -1;
    std::vector<double> branch_mu;

    std::vector<std::unique_ptr<CdfEvaluator>> std_cdf; // standard evaluator per time index

    const CdfEvaluator& standard_cdf(int t) {
        if (!std_cdf[t])
            std_cdf[t] = std::make_unique<CdfEvaluator>(DensityKind::Standard, moments[t]);
        return *std_cdf[t];
    }

    CdfEvaluator make_cdf(const DensitySelector& sel, int t) const {
        return CdfEvaluator(sel.kind_at(t), moments[t]);
    }

    // ---- backward machinery -------------------------------------------------

    void check_monotone(const std::vector<double>& v, int t) const {
        double prev = 0.0;
        for (long b = 1; b <= B; ++b) {
            if (v[b - 1] < prev - 1e-15 || v[b - 1] > 1.0 + 2e-16)
                throw GlidepathError("DP internal consistency: ruin probabilities non-monotone at time t=" +
                                     std::to_string(t) + ", bucket " + std::to_string(b));
            prev = v[b - 1];
        }
    }

    void check_top_bucket(const std::vector<double>& v, int t) const {
        if (v[B - 1] < 1.0)
            throw GlidepathError("DP: ruin probability at the top bucket is below 1 at time t=" +
                                 std::to_string(t) + "; increase rf_max");
    }

    // Compute V(y, .) for every bucket from the kernel. Buckets are evaluated
    // in canonical order semantics: everything above the first bucket that
    // reaches exactly 1.0 is 1.0 (pruning).
    std::vector<double> step_backward(const StepKernel& K) const {
        std::vector<double> out(static_cast<std::size_t>(B));
        // locate the saturation frontier with a bisection probe
        long F = B + 1;
        if (K.ruin_value(B) >= 1.0) {
            if (K.ruin_value(1) >= 1.0) {
                F = 1;
            } else {
                long lo = 1, hi = B;
                while (lo + 1 < hi) {
                    const long mid = lo + (hi - lo) / 2;
                    if (K.ruin_value(mid) >= 1.0) hi = mid; else lo = mid;
                }
                F = hi;
            }
        }
        const long top = std::min(F, B);
        const long chunk = (top + kChunks - 1) / kChunks;
        const std::size_t workload = static_cast<std::size_t>(top) * K.c.size();
        const int nthreads = workload > 300000 ? workers : 1;
        parallel_chunks(kChunks, nthreads, [&](int ci) {
            const long b0 = 1 + ci * chunk;
            const long b1 = std::min(top, b0 + chunk - 1);
            for (long b = b0; b <= b1; ++b)
                out[b - 1] = K.ruin_value(b);
        });
        for (long b = F + 1; b <= B; ++b)
            out[b - 1] = 1.0;
        // enforce the pruning invariant against any sub-ulp wobble
        for (long b = 1; b <= top; ++b) {
            if (out[b - 1] >= 1.0) {
                for (long bb = b + 1; bb <= B; ++bb) out[bb - 1] = 1.0;
                break;
            }
        }
        return out;
    }

    double final_value(const DensitySelector& sel, const std::vector<double>& v1) {
        const CdfEvaluator cdf0 = make_cdf(sel, 0);
        const StepKernel K(cdf0, grid.precision, v1);
        return K.ruin_value(rf0_bucket);
    }

    // Full backward recursion. Records the standard tables when asked.
    double backward_pass(const DensitySelector& sel, bool record) {
        std::vector<double> prev = zeros;
        if (record) {
            w.assign(static_cast<std::size_t>(horizon), {});
            frontier.assign(static_cast<std::size_t>(horizon), B + 1);
        }
        for (int y = horizon - 1; y >= 1; --y) {
            const DensityKind kind = sel.kind_at(y);
            std::vector<double> cur;
            if (kind == DensityKind::Standard) {
                const StepKernel K(standard_cdf(y), grid.precision, prev);
                cur = step_backward(K);
            } else {
                const CdfEvaluator cdf(kind, moments[y]);
                const StepKernel K(cdf, grid.precision, prev);
                cur = step_backward(K);
            }
            check_monotone(cur, y);
            check_top_bucket(cur, y);
            if (record) {
                frontier[y] = B + 1;
                for (long b = 1; b <= B; ++b)
                    if (cur[b - 1] >= 1.0) { frontier[y] = b; break; }
                w[y] = cur;
            }
            prev = std::move(cur);
        }
        const double v0 = final_value(sel, prev);
        return 1.0 - v0;
    }

    void ensure_backward() {
        if (backward_built) return;
        pnr_value = backward_pass(DensitySelector::standard(), true);
        backward_built = true;
    }

    // ---- forward machinery --------------------------------------------------

    // Spread the measure one step forward through the same transition points
    // the backward recursion integrates over. Mass entering buckets at or
    // above the next frontier is dead (its backward value is exactly 1) and
    // is dropped.
    std::vector<double> step_forward(const CdfEvaluator& cdf, const std::vector<double>& src,
                                     long src_cap, long dst_cap) const {
        std::vector<double> out(static_cast<std::size_t>(B), 0.0);
        if (dst_cap < 1 || src_cap < 1) return out;
        const double sat_hi = cdf.saturation_hi();
        const long chunk = (src_cap + kChunks - 1) / kChunks;
        std::vector<std::vector<double>> partial(kChunks);
        const std::size_t workload = static_cast<std::size_t>(src_cap) * static_cast<std::size_t>(dst_cap);
        const int nthreads = workload > 300000 ? workers : 1;
        parallel_chunks(kChunks, nthreads, [&](int ci) {
            const long b0 = 1 + ci * chunk;
            const long b1 = std::min(src_cap, b0 + chunk - 1);
            if (b0 > b1) return;
            auto& acc = partial[ci];
            for (long b = b0; b <= b1; ++b) {
                const double mass = src[b - 1];
                if (mass == 0.0) continue;
                if (acc.empty()) acc.assign(static_cast<std::size_t>(dst_cap), 0.0);
                const double rf = static_cast<double>(b) / prec;
                long d = 1;
                if (std::isfinite(sat_hi) && rf * cdest[0] >= sat_hi) {
                    long lo = 1, hi = dst_cap + 1;
                    while (lo + 1 < hi) {
                        const long mid = lo + (hi - lo) / 2;
                        if (rf * cdest[mid - 1] >= sat_hi) lo = mid; else hi = mid;
                    }
                    d = hi;
                }
                double rhs = 1.0;
                for (; d <= dst_cap; ++d) {
                    const double lhs = cdf(rf * cdest[d - 1]);
                    acc[d - 1] += mass * (rhs - lhs);
                    rhs = lhs;
                    if (lhs == 0.0) break;
                }
            }
        });
        for (int ci = 0; ci < kChunks; ++ci) {
            if (partial[ci].empty()) continue;
            for (long d = 1; d <= dst_cap; ++d)
                out[d - 1] += partial[ci][d - 1];
        }
        return out;
    }

    // mu at time y (sum over surviving paths of reaching each bucket).
    void ensure_forward(int upto) {
        ensure_backward();
        if (mu.empty()) {
            mu.assign(static_cast<std::size_t>(horizon), {});
            mu_built = 0;
        }
        for (int y = mu_built + 1; y <= upto; ++y) {
            const std::vector<double>& src = (y == 1) ? delta_source() : mu[y - 1];
            const long src_cap = (y == 1) ? rf0_bucket : frontier[y - 1] - 1;
            mu[y] = step_forward(standard_cdf(y - 1), src, src_cap, frontier[y] - 1);
            mu_built = y;
        }
    }

    const std::vector<double>& delta_source() {
        if (delta_.empty()) {
            delta_.assign(static_cast<std::size_t>(B), 0.0);
            delta_[rf0_bucket - 1] = 1.0;
        }
        return delta_;
    }
    std::vector<double> delta_;

    // Sum_b mu(b) * survival(b) with the step-t kernel swapped to `kind`.
    double contract(const CdfEvaluator& cdf, int t, const std::vector<double>& measure, long cap) {
        const std::vector<double>& next = (t == horizon - 1) ? zeros : w[t + 1];
        const StepKernel K(cdf, grid.precision, next);
        const long chunk = (cap + kChunks - 1) / kChunks;
        std::vector<double> partial(kChunks, 0.0);
        const std::size_t workload = static_cast<std::size_t>(cap) * K.c.size();
        const int nthreads = workload > 300000 ? workers : 1;
        parallel_chunks(kChunks, nthreads, [&](int ci) {
            const long b0 = 1 + ci * chunk;
            const long b1 = std::min(cap, b0 + chunk - 1);
            KahanSum s;
            for (long b = b0; b <= b1; ++b) {
                const double mass = measure[b - 1];
                if (mass == 0.0) continue;
                s.add(mass * K.survival_value(b));
            }
            partial[ci] = s.sum;
        });
        KahanSum total;
        for (int ci = 0; ci < kChunks; ++ci) total.add(partial[ci]);
        return total.sum;
    }

    double special_single(DensityKind kind, int t) {
        ensure_backward();
        const CdfEvaluator cdf(kind, moments[t]);
        if (t == 0) {
            const std::vector<double>& next = (horizon == 1) ? zeros : w[1];
            const StepKernel K(cdf, grid.precision, next);
            return K.survival_value(rf0_bucket);
        }
        ensure_forward(t);
        return contract(cdf, t, mu[t], frontier[t] - 1);
    }

    double special_pair(int i, int j) {
        ensure_backward();
        if (j >= horizon || i < 0)
            throw GlidepathError("DpEngine: invalid off-diagonal pair");
        if (branch_i != i || branch_y > j) {
            // start the branch: apply g at time i to the standard measure
            const CdfEvaluator gi(DensityKind::Gradient, moments[i]);
            if (i == 0) {
                branch_mu = step_forward(gi, delta_source(), rf0_bucket, frontier[1] - 1);
            } else {
                ensure_forward(i);
                branch_mu = step_forward(gi, mu[i], frontier[i] - 1, frontier[i + 1] - 1);
            }
            branch_i = i;
            branch_y = i + 1;
        }
        for (; branch_y < j; ++branch_y)
            branch_mu = step_forward(standard_cdf(branch_y), branch_mu, frontier[branch_y] - 1,
                                     frontier[branch_y + 1] - 1);
        const CdfEvaluator gj(DensityKind::Gradient, moments[j]);
        return contract(gj, j, branch_mu, frontier[j] - 1);
    }
};

DpEngine::DpEngine(const ReturnParams& params, Glidepath glidepath, double withdrawal_rate,
                   const DpGrid& grid, int workers)
    : impl_(std::make_unique<Impl>()) {
    params.validate();
    grid.validate(withdrawal_rate);
    if (glidepath.horizon() < 1)
        throw GlidepathError("DpEngine: glidepath must have at least one ratio");
    for (double& a : glidepath.ratios)
        a = clamp_feasible(params, a);
    gp_ = std::move(glidepath);

    impl_->params = params;
    impl_->withdrawal_rate = withdrawal_rate;
    impl_->grid = grid;
    impl_->B = grid.bucket_count();
    impl_->rf0_bucket = static_cast<long>(withdrawal_rate * grid.precision + 0.5);
    impl_->horizon = gp_.horizon();
    impl_->workers = resolve_workers(workers);
    impl_->prec = static_cast<double>(grid.precision);
    impl_->zeros.assign(static_cast<std::size_t>(impl_->B), 0.0);
    impl_->cdest.resize(static_cast<std::size_t>(impl_->B));
    for (long d = 1; d <= impl_->B; ++d)
        impl_->cdest[d - 1] = 1.0 + impl_->prec / (d + 0.5);
    impl_->moments.reserve(gp_.ratios.size());
    for (double a : gp_.ratios)
        impl_->moments.push_back(MomentBundle::at(params, a));
    impl_->std_cdf.resize(gp_.ratios.size());
}

DpEngine::~DpEngine() = default;

double DpEngine::pnr() {
    impl_->ensure_backward();
    return impl_->pnr_value;
}

double DpEngine::probability(const DensitySelector& selector) {
    selector.validate(impl_->horizon);
    if (selector.is_standard())
        return pnr();
    if (selector.slots[0] != -1 && selector.slots[1] != -1) {
        const int i = std::min(selector.slots[0], selector.slots[1]);
        const int j = std::max(selector.slots[0], selector.slots[1]);
        return impl_->special_pair(i, j);
    }
    if (selector.slots[0] != -1)
        return impl_->special_single(DensityKind::Gradient, selector.slots[0]);
    if (selector.slots[2] != -1)
        return impl_->special_single(DensityKind::HessianH1, selector.slots[2]);
    return impl_->special_single(DensityKind::HessianH2, selector.slots[3]);
}

double DpEngine::probability_backward(const DensitySelector& selector) {
    selector.validate(impl_->horizon);
    return impl_->backward_pass(selector, false);
}

double success_probability_dp(const ReturnParams& params, const Glidepath& glidepath,
                              double withdrawal_rate, const DpGrid& grid,
                              const DensitySelector& selector, int workers) {
    DpEngine engine(params, glidepath, withdrawal_rate, grid, workers);
    return engine.probability_backward(selector);
}

} // namespace glideopt
