#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "glideopt/errors.hpp"
#include "glideopt/ruin.hpp"

namespace glideopt {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// xoshiro256++; fully specified so results are identical across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
        have_spare_ = false;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in (0, 1]
    double next_unit() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(next_unit()));
        const double theta = kTwoPi * next_unit();
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

const char* kind_name(DensityKind kind) {
    switch (kind) {
    case DensityKind::Standard: return "f";
    case DensityKind::Gradient: return "g";
    case DensityKind::HessianH1: return "h1";
    case DensityKind::HessianH2: return "h2";
    }
    return "?";
}

} // namespace

RejectionBox rejection_bounds(DensityKind kind, const MomentBundle& mb) {
    if (kind == DensityKind::Standard)
        throw GlidepathError("rejection_bounds: the standard density is sampled directly");
    require_valid_for(kind, mb);
    const int npts = 100000;
    const double sd = std::sqrt(mb.v);
    const double lo = mb.m - 12.0 * sd;
    const double hi = mb.m + 12.0 * sd;
    const double step = (hi - lo) / (npts - 1);
    double peak = 0.0;
    int first = -1, last = -1;
    for (int i = 0; i < npts; ++i) {
        const double p = pdf(kind, mb, lo + i * step);
        if (p > peak) peak = p;
        if (p > 1e-12) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0)
        throw GlidepathError("rejection_bounds: density scan found no support");
    RejectionBox box;
    box.x_low = lo + (first - 3) * step;
    box.x_high = lo + (last + 3) * step;
    box.y_high = 1.05 * peak;
    return box;
}

double success_probability_mc(const ReturnParams& params, const Glidepath& glidepath,
                              double withdrawal_rate, long long n,
                              const DensitySelector& selector, std::uint64_t seed, int workers) {
    params.validate();
    const int horizon = glidepath.horizon();
    if (horizon < 1)
        throw GlidepathError("success_probability_mc: glidepath must have at least one ratio");
    if (n < 1)
        throw GlidepathError("success_probability_mc: sample count must be positive");
    selector.validate(horizon);

    Glidepath gp = glidepath;
    for (double& a : gp.ratios)
        a = clamp_feasible(params, a);

    std::vector<MomentBundle> moments;
    moments.reserve(gp.ratios.size());
    for (double a : gp.ratios)
        moments.push_back(MomentBundle::at(params, a));

    struct SpecialDraw {
        DensityKind kind = DensityKind::Standard;
        RejectionBox box;
    };
    std::vector<SpecialDraw> special(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
        const DensityKind kind = selector.kind_at(t);
        special[t].kind = kind;
        if (kind != DensityKind::Standard)
            special[t].box = rejection_bounds(kind, moments[t]);
    }

    int nworkers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    if (nworkers < 1) nworkers = 1;
    if (static_cast<long long>(nworkers) > n) nworkers = static_cast<int>(n);

    std::vector<long long> ruins(static_cast<std::size_t>(nworkers), 0);
    std::exception_ptr error;

    auto run_worker = [&](int widx) {
        try {
            uint64_t mix = seed ^ (0x9E3779B97F4A7C15ull * static_cast<uint64_t>(widx + 1));
            Rng rng(splitmix64(mix));
            const long long share = n / nworkers + (widx < n % nworkers ? 1 : 0);
            long long ruined = 0;
            for (long long i = 0; i < share; ++i) {
                double rf = withdrawal_rate;
                for (int t = 0; t < horizon; ++t) {
                    double rtrn;
                    if (special[t].kind == DensityKind::Standard) {
                        rtrn = moments[t].m + std::sqrt(moments[t].v) * rng.next_normal();
                    } else {
                        const RejectionBox& box = special[t].box;
                        for (;;) {
                            const double x = box.x_low + (box.x_high - box.x_low) * rng.next_unit();
                            const double y = box.y_high * rng.next_unit();
                            const double p = pdf(special[t].kind, moments[t], x);
                            if (p > box.y_high)
                                throw GlidepathError(std::string("rejection envelope violated for density ") +
                                                     kind_name(special[t].kind) + " at alpha=" +
                                                     std::to_string(gp.ratios[t]));
                            if (y <= p) {
                                rtrn = x;
                                break;
                            }
                        }
                    }
                    if (rf > 0.0 && rtrn > rf) {
                        rf = rf / (rtrn - rf);
                    } else {
                        ruined += 1;
                        break;
                    }
                }
            }
            ruins[widx] = ruined;
        } catch (...) {
            if (!error) error = std::current_exception();
        }
    };

    if (nworkers == 1) {
        run_worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nworkers));
        for (int i = 0; i < nworkers; ++i)
            pool.emplace_back(run_worker, i);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    long long total_ruin = 0;
    for (long long r : ruins) total_ruin += r;
    return 1.0 - static_cast<double>(total_ruin) / static_cast<double>(n);
}

} // namespace glideopt
