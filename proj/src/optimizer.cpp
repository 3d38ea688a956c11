#include "glideopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "glideopt/errors.hpp"

namespace glideopt {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t counter) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (counter + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Step-size heuristic: the decade of the largest effective gradient element
// indexes a (5^(1/4))^i ladder.
int ladder_index(double mxgrd) {
    for (int i = 1; i <= 10; ++i)
        if (mxgrd >= 1.0 / (10.0 * std::pow(10.0, i)) && mxgrd < 1.0 / (10.0 * std::pow(10.0, i - 1)))
            return i;
    // outside the tabulated decades: clamp to the nearest ladder rung
    return mxgrd >= 0.1 ? 1 : 10;
}

double ladder_step(int index) {
    return std::pow(std::exp(std::log(5.0) / 4.0), index);
}

double effective_movement(const ReturnParams& params, const std::vector<double>& alphas,
                          const std::vector<double>& g) {
    const double lo = feasible_floor(params);
    double maxval = 0.0;
    for (std::size_t t = 0; t < alphas.size(); ++t) {
        const double proposed = alphas[t] + g[t];
        double cand;
        if (proposed > 1.0)
            cand = 1.0 - alphas[t];
        else if (proposed < lo)
            cand = alphas[t] - lo;
        else
            cand = std::fabs(g[t]);
        maxval = std::max(maxval, cand);
    }
    return maxval;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(15);
    os << x;
    return os.str();
}

} // namespace

struct ProbabilityEvaluator::Impl {
    ReturnParams params;
    double withdrawal_rate;
    OptimizerConfig config;
    DpGrid grid;
    uint64_t call_counter = 0;

    std::unique_ptr<DpEngine> engine;
    std::vector<double> engine_key;

    DpEngine& engine_for(const Glidepath& gp) {
        if (!engine || engine_key != gp.ratios) {
            engine = std::make_unique<DpEngine>(params, gp, withdrawal_rate, grid, config.workers);
            engine_key = gp.ratios;
        }
        return *engine;
    }
};

ProbabilityEvaluator::ProbabilityEvaluator(const ReturnParams& params, double withdrawal_rate,
                                           const OptimizerConfig& config)
    : impl_(std::make_unique<Impl>()) {
    impl_->params = params;
    impl_->withdrawal_rate = withdrawal_rate;
    impl_->config = config;
    impl_->grid = DpGrid{config.dp_precision, config.dp_rf_max};
}

ProbabilityEvaluator::~ProbabilityEvaluator() = default;

bool ProbabilityEvaluator::simulation() const {
    return impl_->config.estimator == Estimator::Simulation;
}

long long ProbabilityEvaluator::sample_size(SampleScale scale) const {
    if (!simulation())
        return 0;
    const long long n = impl_->config.base_sample_n;
    switch (scale) {
    case SampleScale::Pnr: return 4 * n;
    case SampleScale::Climb: return 2 * n;
    case SampleScale::Special: return n;
    }
    return n;
}

double ProbabilityEvaluator::pnr(const Glidepath& gp, SampleScale scale) {
    if (simulation())
        return success_probability_mc(impl_->params, gp, impl_->withdrawal_rate,
                                      sample_size(scale), DensitySelector::standard(),
                                      mix_seed(impl_->config.seed, ++impl_->call_counter),
                                      impl_->config.workers);
    return impl_->engine_for(gp).pnr();
}

double ProbabilityEvaluator::special(const Glidepath& gp, const DensitySelector& selector) {
    if (simulation())
        return success_probability_mc(impl_->params, gp, impl_->withdrawal_rate,
                                      sample_size(SampleScale::Special), selector,
                                      mix_seed(impl_->config.seed, ++impl_->call_counter),
                                      impl_->config.workers);
    return impl_->engine_for(gp).probability(selector);
}

GradientVector build_gradient(const ReturnParams& params, const Glidepath& gp,
                              const OptimizerConfig& config, double p_nr,
                              ProbabilityOracle& eval) {
    const int horizon = gp.horizon();
    GradientVector grad;
    grad.elements.resize(static_cast<std::size_t>(horizon));
    std::vector<double> K(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
        K[t] = gradient_constant(params, gp.ratios[t]);
        const double pg = eval.special(gp, DensitySelector::gradient(t));
        grad.elements[t] = K[t] * (pg - p_nr);
    }
    if (eval.simulation() && config.alpha_zero < 1.0) {
        // adjusted gradient: zero out elements indistinguishable from zero
        const long long n_special = eval.sample_size(SampleScale::Special);
        const long long n_pnr = eval.sample_size(SampleScale::Pnr);
        for (int t = 0; t < horizon; ++t) {
            const double pg = std::clamp(p_nr + grad.elements[t] / K[t], 0.0, 1.0);
            const EqualityTest test = equality_test({pg, n_special}, {p_nr, n_pnr});
            if (test.p_value > config.alpha_zero)
                grad.elements[t] = 0.0;
        }
    }
    grad.max_effective = effective_movement(params, gp.ratios, grad.elements);
    return grad;
}

HessianMatrix build_hessian(const ReturnParams& params, const Glidepath& gp,
                            const OptimizerConfig& config, double p_nr,
                            const GradientVector& gradient, ProbabilityOracle& eval) {
    (void)config;
    const int horizon = gp.horizon();
    if (static_cast<int>(gradient.elements.size()) != horizon)
        throw GlidepathError("build_hessian: gradient length does not match the glidepath");
    HessianMatrix H;
    H.entries.resize(horizon, horizon);
    std::vector<double> K(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t)
        K[t] = gradient_constant(params, gp.ratios[t]);

    for (int t = 0; t < horizon; ++t) {
        const MomentBundle mb = MomentBundle::at(params, gp.ratios[t]);
        if (std::fabs(mb.theta) < 1e-12 * mb.v * mb.v_double_prime)
            throw GlidepathError("Hessian diagonal element does not exist for alpha value=" +
                                 std::to_string(gp.ratios[t]) + " encountered at time point t=" +
                                 std::to_string(t));
        const double v = mb.v, vp = mb.v_prime, mp = mb.m_prime, vpp = mb.v_double_prime;
        const double q1 = mb.theta / (2.0 * v * v) + 2.0 * vp * vp * mp * mp / (v * mb.theta);
        const double q2 = (vp * vp + 2.0 * v * mp * mp) / (2.0 * v * v);
        const double q3 = -((vpp * v - vp * vp + 2.0 * v * mp * mp) / (2.0 * v * v) +
                            2.0 * vp * vp * mp * mp / (v * mb.theta));
        const double ph1 = eval.special(gp, DensitySelector::hessian_h1(t));
        const double ph2 = eval.special(gp, DensitySelector::hessian_h2(t));
        H.entries(t, t) = q1 * ph1 + q2 * ph2 + q3 * p_nr;
    }
    for (int i = 0; i < horizon - 1; ++i) {
        for (int j = i + 1; j < horizon; ++j) {
            const double pgg = eval.special(gp, DensitySelector::gradient_pair(i, j));
            const double hij =
                K[i] * K[j] *
                (pgg - gradient.elements[i] / K[i] - gradient.elements[j] / K[j] - p_nr);
            H.entries(i, j) = hij;
            H.entries(j, i) = hij;
        }
    }
    return H;
}

ClimbResult climb(const ReturnParams& params, Glidepath& gp, const OptimizerConfig& config,
                  const GradientVector& gradient, double best_p, ProbabilityOracle& eval,
                  int max_steps) {
    const int horizon = gp.horizon();
    if (static_cast<int>(gradient.elements.size()) != horizon)
        throw GlidepathError("climb: gradient length does not match the glidepath");
    bool any_direction = false;
    for (double g : gradient.elements)
        if (g != 0.0) any_direction = true;
    if (!any_direction)
        return {best_p, 0};

    const double lo = feasible_floor(params);
    double maxpnr = best_p;
    long long maxn = eval.sample_size(SampleScale::Pnr);
    const long long stepn = eval.sample_size(SampleScale::Climb);
    int iindx = ladder_index(gradient.max_effective);
    double step = ladder_step(iindx);
    int cont = 1, fstimpr = 0, tryup = 0, origindx = 0, accepted = 0;
    std::vector<double> prev = gp.ratios;

    for (int t = 0; cont == 1 || fstimpr == 0; ++t) {
        if (t > 1000000)
            throw GlidepathError("climb: step limit exceeded without a stopping decision");
        if (cont == 0 && fstimpr == 0) {
            // no progress yet at this step size: restore and rework the ladder
            if (origindx == 0) origindx = iindx;
            gp.ratios = prev;
            if (iindx == 0)
                throw GlidepathError(
                    "climb: no progress can be made, the procedure is stuck (step size has been "
                    "reduced to 0); you may be operating along the boundary where the process is "
                    "not well defined, or the estimation/approximation precision level is not "
                    "adequate for your epsilon level");
            if (iindx == 1 && tryup == 5) {
                iindx = 0;
                step = step / 2.0;
            } else if (iindx > 1 && tryup == 5) {
                iindx = (iindx == origindx + 5) ? origindx - 1 : iindx - 1;
                step = ladder_step(iindx);
            } else {
                iindx += 1;
                step = ladder_step(iindx);
                tryup += 1;
            }
            cont = 1;
        }
        prev = gp.ratios;
        for (int y = 0; y < horizon; ++y) {
            double a = prev[y] + step * gradient.elements[y];
            if (a < lo) a = lo;
            else if (a > 1.0) a = 1.0;
            gp.ratios[y] = a;
        }
        const double newpnr = eval.pnr(gp, SampleScale::Climb);
        if (eval.simulation()) {
            const NoninferiorityTest res =
                noninferiority_test({newpnr, stepn}, {maxpnr, maxn}, config.alpha_noninferiority);
            if (!res.reject) {
                fstimpr = 1;
                ++accepted;
            } else {
                cont = 0;
            }
            if (newpnr > maxpnr) {
                maxpnr = newpnr;
                maxn = stepn;
            }
        } else {
            if (newpnr > maxpnr) {
                fstimpr = 1;
                maxpnr = newpnr;
                ++accepted;
            } else {
                cont = 0;
            }
        }
        if (max_steps > 0 && t + 1 == max_steps && cont == 1)
            cont = 2;
    }
    if (cont != 2)
        gp.ratios = prev; // undo the final, failed step
    if (eval.simulation())
        maxpnr = eval.pnr(gp, SampleScale::Pnr); // strip the upward selection bias
    return {maxpnr, accepted};
}

Glidepath newton_step(const ReturnParams& params, const Glidepath& gp,
                      const GradientVector& gradient, const HessianMatrix& hessian) {
    const int horizon = gp.horizon();
    if (hessian.entries.rows() != horizon || hessian.entries.cols() != horizon)
        throw GlidepathError("newton_step: Hessian dimensions do not match the glidepath");
    Eigen::VectorXd ng(horizon);
    for (int t = 0; t < horizon; ++t)
        ng[t] = -gradient.elements[t];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(hessian.entries);
    const auto rdiag = qr.matrixR().diagonal().cwiseAbs();
    const double dmax = rdiag.maxCoeff();
    const double dmin = rdiag.minCoeff();
    if (!qr.isInvertible() || dmin <= 0.0 || dmax / dmin > 1e12)
        throw GlidepathError("newton_step: Hessian is singular or ill-conditioned (condition estimate " +
                             fmt(dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity()) +
                             "); use gradient ascent");
    const Eigen::VectorXd sol = qr.solve(ng);
    Glidepath out = gp;
    for (int t = 0; t < horizon; ++t)
        out.ratios[t] = clamp_feasible(params, gp.ratios[t] + sol[t]);
    return out;
}

OptimizeResult optimize_with(const ReturnParams& params, const Glidepath& initial,
                             const OptimizerConfig& config, ProbabilityOracle& eval,
                             std::ostream* diagnostics) {
    params.validate();
    if (initial.horizon() < 1)
        throw GlidepathError("optimize: glidepath must have at least one ratio");
    if (!(config.epsilon > 0.0))
        throw GlidepathError("optimize: epsilon must be positive");
    if (config.estimator == Estimator::Simulation) {
        if (config.base_sample_n < 1)
            throw GlidepathError("optimize: simulation needs a positive base sample size");
        if (!(config.alpha_noninferiority > 0.0) || !(config.alpha_noninferiority <= 1.0) ||
            !(config.alpha_zero > 0.0) || !(config.alpha_zero <= 1.0))
            throw GlidepathError("optimize: test alpha levels must lie in (0,1]");
    }
    Glidepath gp = initial;
    for (double& a : gp.ratios)
        a = clamp_feasible(params, a);
    const int horizon = gp.horizon();
    const double eps = config.epsilon;
    const double lo = feasible_floor(params);
    auto log = [&](const std::string& line) {
        if (diagnostics) (*diagnostics) << line << '\n';
    };

    OptimizeResult res;
    double probnr = eval.pnr(gp, SampleScale::Pnr);
    log("start probability=" + fmt(probnr));
    GradientVector grad = build_gradient(params, gp, config, probnr, eval);
    if (grad.max_effective > eps) {
        // a short climb first: cheap progress, and it moves Newton off the border
        const ClimbResult cr = climb(params, gp, config, grad, probnr, eval, config.initial_climb_cap);
        probnr = cr.probability;
        log("initial climb: steps=" + std::to_string(cr.steps) + " probability=" + fmt(probnr));
        grad = build_gradient(params, gp, config, probnr, eval);
    } else {
        log("initial glidepath already satisfies the epsilon criterion");
    }

    const int cap = config.max_iterations > 0
                        ? config.max_iterations
                        : (config.method == Method::Newton ? 25 : 200);
    int iter = 0;
    while (grad.max_effective > eps) {
        ++iter;
        if (iter > cap)
            throw GlidepathError("optimize: no convergence after " + std::to_string(cap) +
                                 " iterations; best-so-far probability=" + fmt(probnr) +
                                 ", max effective gradient=" + fmt(grad.max_effective));
        IterationRecord rec;
        rec.iteration = iter;
        if (config.method == Method::Newton) {
            for (int t = 0; t < horizon; ++t) {
                const bool pinned_out = (gp.ratios[t] >= 1.0 && grad.elements[t] > eps) ||
                                        (gp.ratios[t] <= lo && grad.elements[t] < -eps);
                if (pinned_out)
                    throw GlidepathError(
                        "optimize: coordinate t=" + std::to_string(t) +
                        " is pinned at a boundary with an outward-pointing gradient; Newton's "
                        "method does not construct the boundary sub-problem Hessian here - use "
                        "gradient ascent");
            }
            const double start = probnr;
            const HessianMatrix H = build_hessian(params, gp, config, probnr, grad, eval);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.entries, Eigen::EigenvaluesOnly);
            rec.has_eigenvalues = true;
            rec.min_eigenvalue = es.eigenvalues()(0);
            rec.max_eigenvalue = es.eigenvalues()(horizon - 1);
            gp = newton_step(params, gp, grad, H);
            probnr = eval.pnr(gp, SampleScale::Pnr);
            if (probnr < start)
                log("note: probability worsened during the Newton update (approximation error, "
                    "measurement limits, or a boundary region)");
        } else {
            const ClimbResult cr = climb(params, gp, config, grad, probnr, eval, 0);
            probnr = cr.probability;
        }
        grad = build_gradient(params, gp, config, probnr, eval);
        rec.probability = probnr;
        rec.max_effective = grad.max_effective;
        res.iterations.push_back(rec);
        std::ostringstream line;
        line << "iteration " << iter << ": probability=" << fmt(probnr)
             << " max_effective=" << fmt(grad.max_effective);
        if (rec.has_eigenvalues)
            line << " eigen=[" << fmt(rec.min_eigenvalue) << ", " << fmt(rec.max_eigenvalue) << "]";
        log(line.str());
    }

    // classify the stationary point
    const HessianMatrix H = build_hessian(params, gp, config, probnr, grad, eval);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.entries, Eigen::EigenvaluesOnly);
    res.min_eigenvalue = es.eigenvalues()(0);
    res.max_eigenvalue = es.eigenvalues()(horizon - 1);
    res.glidepath = gp;
    res.probability = probnr;
    res.iterations_used = iter;
    log("converged: probability=" + fmt(probnr) + " eigen=[" + fmt(res.min_eigenvalue) + ", " +
        fmt(res.max_eigenvalue) + "]");
    return res;
}

OptimizeResult optimize(const ReturnParams& params, const Glidepath& initial,
                        double withdrawal_rate, const OptimizerConfig& config,
                        std::ostream* diagnostics) {
    ProbabilityEvaluator eval(params, withdrawal_rate, config);
    return optimize_with(params, initial, config, eval, diagnostics);
}

} // namespace glideopt
