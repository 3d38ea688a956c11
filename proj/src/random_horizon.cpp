#include "glideopt/random_horizon.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "glideopt/errors.hpp"

namespace glideopt {

namespace {

struct KahanSum {
    double sum = 0.0, carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

Glidepath prefix(const Glidepath& gp, int k) {
    return Glidepath(std::vector<double>(gp.ratios.begin(), gp.ratios.begin() + k));
}

} // namespace

void MortalityDistribution::validate() const {
    if (s_max() < 1)
        throw GlidepathError("MortalityDistribution: need at least two entries (p_0's index is 0)");
    KahanSum total;
    for (double p : probabilities) {
        if (!(p >= 0.0))
            throw GlidepathError("MortalityDistribution: probabilities must be nonnegative");
        total.add(p);
    }
    if (std::fabs(total.sum - 1.0) > 1e-9)
        throw GlidepathError("MortalityDistribution: probabilities sum to " +
                             std::to_string(total.sum) + ", not 1");
}

MortalityDistribution MortalityDistribution::point_mass(int t, int s_max) {
    if (t < 0 || t > s_max || s_max < 1)
        throw GlidepathError("MortalityDistribution::point_mass: bad indices");
    MortalityDistribution m;
    m.probabilities.assign(static_cast<std::size_t>(s_max) + 1, 0.0);
    m.probabilities[t] = 1.0;
    return m;
}

MortalityDistribution load_lifetable(std::istream& in, bool renormalize) {
    MortalityDistribution m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ls(line);
        double p;
        if (!(ls >> p))
            throw GlidepathError("lifetable: malformed line " + std::to_string(lineno));
        std::string rest;
        if (ls >> rest)
            throw GlidepathError("lifetable: trailing content on line " + std::to_string(lineno));
        if (!(p >= 0.0))
            throw GlidepathError("lifetable: negative probability on line " + std::to_string(lineno));
        m.probabilities.push_back(p);
    }
    if (renormalize) {
        KahanSum total;
        for (double p : m.probabilities) total.add(p);
        if (!(total.sum > 0.0))
            throw GlidepathError("lifetable: cannot renormalize a zero table");
        for (double& p : m.probabilities) p /= total.sum;
    }
    m.validate();
    return m;
}

MortalityDistribution load_lifetable_file(const std::string& path, bool renormalize) {
    std::ifstream in(path);
    if (!in)
        throw GlidepathError("Could not read file: " + path);
    return load_lifetable(in, renormalize);
}

double success_probability_random(const ReturnParams& params, const Glidepath& gp,
                                  double withdrawal_rate, const MortalityDistribution& mortality,
                                  const DpGrid& grid, int workers) {
    mortality.validate();
    if (gp.horizon() != mortality.s_max())
        throw GlidepathError("success_probability_random: glidepath length must equal S_max");
    KahanSum total;
    total.add(mortality.probabilities[0]);
    for (int k = 1; k <= mortality.s_max(); ++k) {
        const double pk = mortality.probabilities[k];
        if (pk == 0.0)
            continue;
        DpEngine engine(params, prefix(gp, k), withdrawal_rate, grid, workers);
        total.add(pk * engine.pnr());
    }
    return total.sum;
}

GradientVector gradient_random(const ReturnParams& params, const Glidepath& gp,
                               double withdrawal_rate, const MortalityDistribution& mortality,
                               const DpGrid& grid, int workers) {
    mortality.validate();
    const int s_max = mortality.s_max();
    if (gp.horizon() != s_max)
        throw GlidepathError("gradient_random: glidepath length must equal S_max");
    std::vector<KahanSum> acc(static_cast<std::size_t>(s_max));
    for (int k = 1; k <= s_max; ++k) {
        const double pk = mortality.probabilities[k];
        if (pk == 0.0)
            continue;
        DpEngine engine(params, prefix(gp, k), withdrawal_rate, grid, workers);
        const double pnr_k = engine.pnr();
        for (int t = 0; t < k; ++t) {
            const double K = gradient_constant(params, gp.ratios[t]);
            const double pg = engine.probability(DensitySelector::gradient(t));
            acc[t].add(pk * K * (pg - pnr_k));
        }
    }
    GradientVector grad;
    grad.elements.resize(static_cast<std::size_t>(s_max));
    for (int t = 0; t < s_max; ++t)
        grad.elements[t] = acc[t].sum;
    const double lo = feasible_floor(params);
    double maxval = 0.0;
    for (int t = 0; t < s_max; ++t) {
        const double a = gp.ratios[t];
        const double proposed = a + grad.elements[t];
        double cand;
        if (proposed > 1.0) cand = 1.0 - a;
        else if (proposed < lo) cand = a - lo;
        else cand = std::fabs(grad.elements[t]);
        maxval = std::max(maxval, cand);
    }
    grad.max_effective = maxval;
    return grad;
}

HessianMatrix hessian_random(const ReturnParams& params, const Glidepath& gp,
                             double withdrawal_rate, const MortalityDistribution& mortality,
                             const DpGrid& grid, int workers) {
    mortality.validate();
    const int s_max = mortality.s_max();
    if (gp.horizon() != s_max)
        throw GlidepathError("hessian_random: glidepath length must equal S_max");
    std::vector<std::vector<KahanSum>> acc(static_cast<std::size_t>(s_max),
                                           std::vector<KahanSum>(static_cast<std::size_t>(s_max)));
    OptimizerConfig cfg; // only the per-horizon algebra below is used
    for (int k = 1; k <= s_max; ++k) {
        const double pk = mortality.probabilities[k];
        if (pk == 0.0)
            continue;
        DpEngine engine(params, prefix(gp, k), withdrawal_rate, grid, workers);
        const double pnr_k = engine.pnr();

        struct EngineOracle final : ProbabilityOracle {
            DpEngine* engine;
            double pnr(const Glidepath&, SampleScale) override { return engine->pnr(); }
            double special(const Glidepath&, const DensitySelector& sel) override {
                return engine->probability(sel);
            }
            long long sample_size(SampleScale) const override { return 0; }
            bool simulation() const override { return false; }
        } oracle;
        oracle.engine = &engine;

        const Glidepath sub = prefix(gp, k);
        const GradientVector grad_k = build_gradient(params, sub, cfg, pnr_k, oracle);
        const HessianMatrix h_k = build_hessian(params, sub, cfg, pnr_k, grad_k, oracle);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                acc[i][j].add(pk * h_k.entries(i, j));
    }
    HessianMatrix H;
    H.entries = Eigen::MatrixXd::Zero(s_max, s_max);
    for (int i = 0; i < s_max; ++i)
        for (int j = 0; j < s_max; ++j)
            H.entries(i, j) = acc[i][j].sum;
    return H;
}

struct RandomHorizonEvaluator::Impl {
    ReturnParams params;
    double withdrawal_rate;
    MortalityDistribution mortality;
    OptimizerConfig config;
    DpGrid grid;

    std::vector<std::unique_ptr<DpEngine>> engines; // per horizon k (index k)
    std::vector<double> engine_key;

    void ensure_engines(const Glidepath& gp) {
        if (!engines.empty() && engine_key == gp.ratios)
            return;
        engines.clear();
        engines.resize(static_cast<std::size_t>(mortality.s_max()) + 1);
        for (int k = 1; k <= mortality.s_max(); ++k) {
            if (mortality.probabilities[k] == 0.0)
                continue;
            engines[k] = std::make_unique<DpEngine>(params, prefix(gp, k), withdrawal_rate, grid,
                                                    config.workers);
        }
        engine_key = gp.ratios;
    }

    // Restrict the selector to indices below k (horizons that never reach a
    // special time point contribute their standard probability).
    static DensitySelector restricted(const DensitySelector& sel, int k) {
        DensitySelector out = sel;
        for (int& s : out.slots)
            if (s >= k) s = -1;
        return out;
    }

    double weighted(const Glidepath& gp, const DensitySelector& sel) {
        ensure_engines(gp);
        KahanSum total;
        total.add(mortality.probabilities[0]);
        for (int k = 1; k <= mortality.s_max(); ++k) {
            const double pk = mortality.probabilities[k];
            if (pk == 0.0)
                continue;
            total.add(pk * engines[k]->probability(restricted(sel, k)));
        }
        return total.sum;
    }
};

RandomHorizonEvaluator::RandomHorizonEvaluator(const ReturnParams& params, double withdrawal_rate,
                                               MortalityDistribution mortality,
                                               const OptimizerConfig& config)
    : impl_(std::make_unique<Impl>()) {
    mortality.validate();
    impl_->params = params;
    impl_->withdrawal_rate = withdrawal_rate;
    impl_->mortality = std::move(mortality);
    impl_->config = config;
    impl_->grid = DpGrid{config.dp_precision, config.dp_rf_max};
}

RandomHorizonEvaluator::~RandomHorizonEvaluator() = default;

double RandomHorizonEvaluator::pnr(const Glidepath& gp, SampleScale) {
    if (gp.horizon() != impl_->mortality.s_max())
        throw GlidepathError("random horizon: glidepath length must equal S_max");
    return impl_->weighted(gp, DensitySelector::standard());
}

double RandomHorizonEvaluator::special(const Glidepath& gp, const DensitySelector& selector) {
    if (gp.horizon() != impl_->mortality.s_max())
        throw GlidepathError("random horizon: glidepath length must equal S_max");
    return impl_->weighted(gp, selector);
}

long long RandomHorizonEvaluator::sample_size(SampleScale) const { return 0; }

} // namespace glideopt
