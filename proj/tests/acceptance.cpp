// Acceptance suite: checks the published scenario values and the property
// batteries at their stated tolerances, one PASS/FAIL line per criterion.
// The deep reproduction runs (precision 5000, five starts) take hours on a
// small machine; set GLIDEOPT_ACCEPT_FULL=1 to include them. Exits nonzero
// if any executed criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "glideopt/densities.hpp"
#include "glideopt/errors.hpp"
#include "glideopt/io.hpp"
#include "glideopt/optimizer.hpp"
#include "glideopt/quasiconcavity.hpp"
#include "glideopt/random_horizon.hpp"
#include "glideopt/ruin.hpp"
#include "glideopt/special_functions.hpp"
#include "glideopt/stats.hpp"

using namespace glideopt;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("%s  %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.empty() ? "" : " -- ",
                detail.c_str());
    std::fflush(stdout);
    if (!ok)
        ++g_failures;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

// ---- shared fixtures ------------------------------------------------------

const std::vector<double> kRising = [] {
    std::vector<double> v(30);
    for (int t = 0; t < 30; ++t) v[t] = 0.305 + 0.01 * t;
    return v;
}();
const std::vector<double> kDeclining = [] {
    std::vector<double> v(30);
    for (int t = 0; t < 30; ++t) v[t] = 0.595 - 0.01 * t;
    return v;
}();
const std::vector<double> kConstant(30, 0.45);
const std::vector<double> kRandom1 = {
    0.636, 0.214, 0.193, 0.637, 0.626, 0.597, 0.943, 0.877, 0.254, 0.823,
    0.903, 0.294, 0.444, 0.513, 0.529, 0.160, 0.564, 0.293, 0.698, 0.228,
    0.311, 0.776, 0.689, 0.764, 0.596, 0.793, 0.911, 0.624, 0.709, 0.205};
const std::vector<double> kRandom2 = {
    0.813, 0.886, 0.227, 0.684, 0.328, 0.379, 0.484, 0.145, 0.763, 0.284,
    0.690, 0.476, 0.876, 0.649, 0.147, 0.643, 0.521, 0.662, 0.161, 0.864,
    0.867, 0.332, 0.281, 0.224, 0.471, 0.777, 0.922, 0.880, 0.295, 0.860};

const std::vector<std::pair<std::string, std::vector<double>>> kStarts = {
    {"rising", kRising},   {"declining", kDeclining}, {"constant", kConstant},
    {"random1", kRandom1}, {"random2", kRandom2}};

struct ScenarioResult {
    bool ok = false;
    OptimizeResult result;
    std::string error;
};

ScenarioResult run_scenario(const ReturnParams& params, const std::vector<double>& start,
                            double wr, const OptimizerConfig& cfg) {
    ScenarioResult out;
    try {
        out.result = optimize(params, Glidepath(start), wr, cfg);
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

// ---- criterion 1: scenario 1 ---------------------------------------------

void criterion1(bool full) {
    const ReturnParams params = ReturnParams::historical();
    {
        // desk scale: precision 1000, epsilon 1e-6
        OptimizerConfig cfg;
        cfg.method = Method::Newton;
        cfg.estimator = Estimator::Dp;
        cfg.epsilon = 1e-6;
        cfg.dp_precision = 1000;
        cfg.dp_rf_max = 2.75;
        double p_lo = 1.0, p_hi = 0.0, worst_dp = 0.0;
        for (const auto& [name, start] : kStarts) {
            const ScenarioResult r = run_scenario(params, start, 0.04, cfg);
            if (!r.ok) {
                report("criterion 1 desk (" + name + ")", false, r.error);
                continue;
            }
            const double dp = r.result.probability - 0.9196892347;
            const double d1 = r.result.glidepath.ratios[0] - 0.36848;
            const double d30 = r.result.glidepath.ratios[29] - 0.77657;
            p_lo = std::min(p_lo, r.result.probability);
            p_hi = std::max(p_hi, r.result.probability);
            if (std::fabs(dp) > std::fabs(worst_dp))
                worst_dp = dp;
            const bool ok = std::fabs(d1) <= 5e-3 && std::fabs(d30) <= 5e-3;
            report("criterion 1 desk endpoints (" + name + ")", ok,
                   "P*=" + fmt(r.result.probability) + " da1=" + fmt(d1) + " da30=" + fmt(d30) +
                       " iters=" + std::to_string(r.result.iterations_used));
        }
        report("criterion 1 desk starts agree on one optimum", p_hi - p_lo <= 1e-8,
               "spread=" + fmt(p_hi - p_lo));
        // As stated the desk P* must reproduce the precision-5000 value to
        // 1e-4; the precision-1000 grid displaces P_NR by ~2.8e-4 (the same
        // backward recursion reproduces the published value to 2e-12 at
        // precision 5000), so this line fails by construction of the grid.
        report("criterion 1 desk P* within 1e-4 of the precision-5000 value",
               std::fabs(worst_dp) <= 1e-4, "worst dP=" + fmt(worst_dp) + " (grid displacement)");
    }
    if (!full) {
        std::printf("SKIP  criterion 1 full scale (precision 5000, five starts) -- set GLIDEOPT_ACCEPT_FULL=1\n");
        return;
    }
    // direct evaluation of the published optimum on the precision-5000 grid
    {
        const Glidepath fig61({0.3684826900, 0.3782146268, 0.3884336499, 0.3991332015,
                               0.4103025899, 0.4219268946, 0.4339869745, 0.4464596018,
                               0.4593177397, 0.4725309778, 0.4860661326, 0.4998880110,
                               0.5139603274, 0.5282467547, 0.5427120841, 0.5573234631,
                               0.5720516836, 0.5868724955, 0.6017679310, 0.6167276424,
                               0.6317502766, 0.6468449369, 0.6620328225, 0.6773491818,
                               0.6928457918, 0.7085942800, 0.7246907811, 0.7412627184,
                               0.7584790253, 0.7765660632});
        const double p = success_probability_dp(params, fig61, 0.04, DpGrid{5000, 2.75});
        report("criterion 1 full published glidepath evaluates to the published P*",
               std::fabs(p - 0.9196892347) <= 1e-6, "P=" + fmt(p));
    }
    OptimizerConfig cfg;
    cfg.method = Method::Newton;
    cfg.estimator = Estimator::Dp;
    cfg.epsilon = 1e-11; // the convergence level the published runs used
    cfg.dp_precision = 5000;
    cfg.dp_rf_max = 2.75;
    for (const auto& [name, start] : kStarts) {
        const ScenarioResult r = run_scenario(params, start, 0.04, cfg);
        if (!r.ok) {
            report("criterion 1 full (" + name + ")", false, r.error);
            continue;
        }
        const double dp = r.result.probability - 0.9196892347;
        const double d1 = r.result.glidepath.ratios[0] - 0.36848;
        const double d30 = r.result.glidepath.ratios[29] - 0.77657;
        const bool ok = std::fabs(dp) <= 1e-6 && std::fabs(d1) <= 5e-4 && std::fabs(d30) <= 5e-4 &&
                        r.result.iterations_used <= 6 && r.result.max_eigenvalue < 0.0;
        report("criterion 1 full (" + name + ")", ok,
               "P*=" + fmt(r.result.probability) + " dP=" + fmt(dp) + " da1=" + fmt(d1) +
                   " da30=" + fmt(d30) + " iters=" + std::to_string(r.result.iterations_used) +
                   " maxeig=" + fmt(r.result.max_eigenvalue));
    }
}

// ---- criterion 2: scenario 4 ----------------------------------------------

void criterion2(bool full) {
    const ReturnParams params = ReturnParams::evensky(0.01);
    OptimizerConfig cfg;
    cfg.method = Method::Newton;
    cfg.estimator = Estimator::Dp;
    cfg.epsilon = full ? 1e-11 : 1e-6;
    cfg.dp_precision = full ? 5000 : 1000;
    cfg.dp_rf_max = 2.75;
    const double tol = full ? 1e-4 : 1e-3;
    const ScenarioResult r = run_scenario(params, kConstant, 0.04, cfg);
    const std::string label = std::string("criterion 2 ") + (full ? "full" : "desk");
    if (!r.ok) {
        report(label, false, r.error);
        return;
    }
    int peak = 0;
    for (int t = 1; t < 30; ++t)
        if (r.result.glidepath.ratios[t] > r.result.glidepath.ratios[peak])
            peak = t;
    const double dp = r.result.probability - 0.5998654133;
    const bool ok = std::fabs(dp) <= tol && std::abs(peak + 1 - 9) <= 1;
    report(label, ok,
           "P*=" + fmt(r.result.probability) + " dP=" + fmt(dp) + " peak_year=" +
               std::to_string(peak + 1));
}

// ---- criterion 3: scenario 8 boundary behavior -----------------------------

// Published boundary solution: ten years at 100% equities, then the decline.
// (The figure block in the source prints a duplicated 1.0 line; the boundary
// sub-problem stated alongside it pins t = 1..10, and this 30-entry reading
// evaluates highest and is the ascent fixed point.)
const std::vector<double> kScenario8 = [] {
    std::vector<double> v(10, 1.0);
    const double decline[] = {0.9911850486, 0.9373566848, 0.8906630236, 0.8493134032,
                              0.8121883772, 0.7785260350, 0.7477740007, 0.7195131648,
                              0.6934139924, 0.6692102999, 0.6466825215, 0.6256465423,
                              0.6059459405, 0.5874464078, 0.5700316138, 0.5536000608,
                              0.5380626395, 0.5233406936, 0.5093644632, 0.4960727971};
    v.insert(v.end(), std::begin(decline), std::end(decline));
    return v;
}();

void criterion3(bool full) {
    const ReturnParams params = ReturnParams::evensky(0.01);
    OptimizerConfig cfg;
    cfg.method = Method::GradientAscent;
    cfg.estimator = Estimator::Dp;
    cfg.epsilon = 5e-6;
    cfg.dp_precision = 2000;
    cfg.dp_rf_max = 2.75;
    cfg.max_iterations = 300;

    // the published boundary solution is an ascent fixed point
    const ScenarioResult warm = run_scenario(params, kScenario8, 0.05, cfg);
    int pinned = -1;
    double last = 0.0;
    if (!warm.ok) {
        report("criterion 3 ascent holds the published boundary solution", false, warm.error);
    } else {
        pinned = 0;
        while (pinned < 30 && warm.result.glidepath.ratios[pinned] == 1.0)
            ++pinned;
        last = warm.result.glidepath.ratios[29];
        const bool ok = pinned == 10 && std::fabs(last - 0.4961) <= 5e-3 &&
                        warm.result.max_eigenvalue < 0.0;
        report("criterion 3 ascent holds the published boundary solution", ok,
               "pinned=" + std::to_string(pinned) + " last=" + fmt(last) +
                   " P*=" + fmt(warm.result.probability));
    }

    if (full) {
        // from-scratch reproduction: constant 45% start, tight epsilon
        OptimizerConfig cold = cfg;
        cold.epsilon = 2e-6;
        const ScenarioResult r = run_scenario(params, kConstant, 0.05, cold);
        if (!r.ok) {
            report("criterion 3 ascent from scratch", false, r.error);
        } else {
            int cold_pinned = 0;
            while (cold_pinned < 30 && r.result.glidepath.ratios[cold_pinned] == 1.0)
                ++cold_pinned;
            pinned = cold_pinned;
            last = r.result.glidepath.ratios[29];
            const double dlast = last - 0.4961;
            const bool ok = cold_pinned == 10 && std::fabs(dlast) <= 5e-3;
            report("criterion 3 ascent from scratch", ok,
                   "pinned=" + std::to_string(cold_pinned) + " last=" + fmt(last) +
                       " dlast=" + fmt(dlast) + " P*=" + fmt(r.result.probability) +
                       " iters=" + std::to_string(r.result.iterations_used));
        }
    } else {
        std::printf("SKIP  criterion 3 ascent from scratch -- set GLIDEOPT_ACCEPT_FULL=1\n");
    }

    // As stated the first eleven ratios must pin at 1.0; the source's own
    // boundary sub-problem fixes t = 1..10 at 1.0 (its figure prints a
    // duplicated 1.0 line), and the converged count is ten.
    report("criterion 3 first eleven ratios pinned (as stated)", pinned >= 11,
           "pinned=" + std::to_string(pinned));

    OptimizerConfig newton = cfg;
    newton.method = Method::Newton;
    bool refused = false;
    std::string msg;
    try {
        (void)optimize(params, Glidepath(kConstant), 0.05, newton);
    } catch (const GlidepathError& e) {
        msg = e.what();
        refused = msg.find("gradient ascent") != std::string::npos &&
                  msg.find("boundary") != std::string::npos;
    }
    report("criterion 3 newton refusal", refused, msg.substr(0, 100));
}

// ---- criterion 4: two-year counterexample ----------------------------------

void criterion4() {
    const ReturnParams params = ReturnParams::historical();
    const Glidepath gp1({0.439547, 0.137059});
    const Glidepath gp2({0.140591, 0.999999});
    const double lambda = 0.688882, wr = 0.586352;
    const long long n = 10000000;

    const CounterexampleReport mc =
        verify_counterexample(params, gp1, gp2, lambda, wr, CexMethod::Mc, n, 20260808, 0);
    auto within = [&](double est, double ref) {
        const double se = std::sqrt(ref * (1.0 - ref) / static_cast<double>(n));
        return std::fabs(est - ref) <= 4.0 * se;
    };
    const bool mc_ok = mc.counterexample && mc.pc < std::min(mc.p1, mc.p2) &&
                       within(mc.p1, 0.158522) && within(mc.p2, 0.190762) &&
                       within(mc.pc, 0.148574);
    report("criterion 4 monte carlo", mc_ok,
           "p1=" + fmt(mc.p1) + " p2=" + fmt(mc.p2) + " pc=" + fmt(mc.pc));

    const GridSpec grid{-13.1730, 13.1730, 263460};
    Glidepath gp_c({lambda * gp1.ratios[0] + (1.0 - lambda) * gp2.ratios[0],
                    lambda * gp1.ratios[1] + (1.0 - lambda) * gp2.ratios[1]});
    const double dc2 = two_period_difference(params, gp_c, gp2, wr, grid);
    const double d1c = two_period_difference(params, gp1, gp_c, wr, grid);
    const bool grid_ok = std::fabs(dc2 - (-0.042246)) <= 2e-4 && std::fabs(d1c - 0.010014) <= 2e-4;
    report("criterion 4 grid", grid_ok, "Pc-P2=" + fmt(dc2) + " P1-Pc=" + fmt(d1c));
}

// ---- criterion 5: random horizon -------------------------------------------

void criterion5() {
    const ReturnParams params = ReturnParams::historical();

    // a synthetic 48-entry mortality table: the weighted probability equals
    // the per-horizon sum and is bracketed by the per-horizon extremes
    {
        MortalityDistribution m;
        m.probabilities.resize(48);
        double total = 0.0;
        for (int t = 0; t < 48; ++t) {
            m.probabilities[t] = 1.0 + 0.5 * std::sin(0.37 * t);
            total += m.probabilities[t];
        }
        for (double& p : m.probabilities)
            p /= total;
        double residue = 1.0;
        for (int t = 0; t < 47; ++t)
            residue -= m.probabilities[t];
        m.probabilities[47] = residue;

        std::vector<double> ratios(47);
        for (int t = 0; t < 47; ++t)
            ratios[t] = 0.35 + 0.3 * t / 46.0;
        const Glidepath gp(ratios);
        const DpGrid grid{500, 2.75};
        const double weighted = success_probability_random(params, gp, 0.04, m, grid, 0);
        double manual = m.probabilities[0];
        double lo = 1.0, hi = 0.0;
        for (int k = 1; k <= 47; ++k) {
            const Glidepath pre(std::vector<double>(ratios.begin(), ratios.begin() + k));
            const double pk = success_probability_dp(params, pre, 0.04, grid);
            manual += m.probabilities[k] * pk;
            lo = std::min(lo, pk);
            hi = std::max(hi, pk);
        }
        const bool ok = std::fabs(weighted - manual) <= 1e-12 && weighted >= lo * (1.0 - 1e-12) &&
                        weighted <= 1.0;
        report("criterion 5 synthetic 48-entry table", ok,
               "weighted=" + fmt(weighted) + " manual=" + fmt(manual));
    }

    // gradient of the mortality-weighted objective vs finite differences
    {
        MortalityDistribution m;
        m.probabilities = {0.05, 0.1, 0.2, 0.25, 0.25, 0.15};
        const Glidepath gp({0.42, 0.55, 0.6, 0.48, 0.66});
        const DpGrid grid{1500, 2.75};
        const double wr = 0.22;
        const GradientVector g = gradient_random(params, gp, wr, m, grid, 0);
        bool ok = true;
        double worst = 0.0;
        for (int t = 0; t < 5; ++t) {
            Glidepath up = gp, dn = gp;
            up.ratios[t] += 1e-4;
            dn.ratios[t] -= 1e-4;
            const double fd = (success_probability_random(params, up, wr, m, grid, 0) -
                               success_probability_random(params, dn, wr, m, grid, 0)) /
                              2e-4;
            worst = std::max(worst, std::fabs(g.elements[t] - fd));
            ok = ok && std::fabs(g.elements[t] - fd) <= 1e-4;
        }
        report("criterion 5 gradient vs finite differences", ok, "worst=" + fmt(worst));
    }

    // point-mass mortality recovers the fixed-horizon optimizer output
    {
        OptimizerConfig cfg;
        cfg.method = Method::Newton;
        cfg.estimator = Estimator::Dp;
        cfg.epsilon = 1e-8;
        cfg.dp_precision = 1000;
        cfg.dp_rf_max = 2.75;
        const OptimizeResult fixed = optimize(params, Glidepath::constant(0.45, 4), 0.25, cfg);
        const MortalityDistribution m = MortalityDistribution::point_mass(4, 4);
        const DpGrid grid{1000, 2.75};
        const double p_random =
            success_probability_random(params, fixed.glidepath, 0.25, m, grid, 0);
        const GradientVector g_random =
            gradient_random(params, fixed.glidepath, 0.25, m, grid, 0);
        const bool ok = p_random == fixed.probability && g_random.max_effective <= cfg.epsilon;
        report("criterion 5 point mass recovers fixed horizon", ok,
               "P=" + fmt(p_random) + " vs " + fmt(fixed.probability) +
                   " maxgrad=" + fmt(g_random.max_effective));
    }
}

// ---- criterion 6: property batteries ---------------------------------------

void criterion6() {
    const ReturnParams params = ReturnParams::historical();

    { // density normalization to 1e-6 and CDF<->PDF consistency to 1e-6
        bool norm_ok = true, cons_ok = true;
        for (DensityKind kind : {DensityKind::Standard, DensityKind::Gradient,
                                 DensityKind::HessianH1, DensityKind::HessianH2}) {
            for (double alpha : {0.2, 0.45, 0.8}) {
                const MomentBundle mb = MomentBundle::at(params, alpha);
                const double sd = std::sqrt(mb.v);
                // composite Simpson on a fine fixed grid
                const int n = 40000;
                const double a = mb.m - 12.0 * sd, b = mb.m + 12.0 * sd;
                const double h = (b - a) / n;
                double mass = pdf(kind, mb, a) + pdf(kind, mb, b);
                for (int i = 1; i < n; ++i)
                    mass += pdf(kind, mb, a + i * h) * (i % 2 ? 4.0 : 2.0);
                mass *= h / 3.0;
                norm_ok = norm_ok && std::fabs(mass - 1.0) <= 1e-6;
                for (int i = 1; i <= 20; ++i) {
                    const double r = mb.m + (i - 10.5) * sd / 2.0;
                    const double fd = (cdf(kind, mb, r + 1e-6) - cdf(kind, mb, r - 1e-6)) / 2e-6;
                    cons_ok = cons_ok && std::fabs(fd - pdf(kind, mb, r)) <= 1e-6;
                }
            }
        }
        report("criterion 6 density normalization (1e-6)", norm_ok);
        report("criterion 6 cdf/pdf consistency (1e-6)", cons_ok);
    }

    { // gradient / diagonal-Hessian derivative identities in alpha
        bool grad_ok = true, hess_ok = true;
        for (double alpha : {0.3, 0.55, 0.9}) {
            const MomentBundle mb = MomentBundle::at(params, alpha);
            const double K = gradient_constant(params, alpha);
            for (int i = 0; i < 12; ++i) {
                const double r = mb.m + (i - 6) * std::sqrt(mb.v) / 1.5;
                auto f_of_alpha = [&](double a) {
                    return pdf(DensityKind::Standard, MomentBundle::at(params, a), r);
                };
                const double fd1 = (f_of_alpha(alpha + 1e-6) - f_of_alpha(alpha - 1e-6)) / 2e-6;
                const double lhs1 = K * (pdf(DensityKind::Gradient, mb, r) -
                                         pdf(DensityKind::Standard, mb, r));
                grad_ok = grad_ok && std::fabs(lhs1 - fd1) <= 1e-6 * std::max(1.0, std::fabs(fd1));

                const double v = mb.v, vp = mb.v_prime, mp = mb.m_prime, vpp = mb.v_double_prime;
                const double q1 = mb.theta / (2.0 * v * v) + 2.0 * vp * vp * mp * mp / (v * mb.theta);
                const double q2 = (vp * vp + 2.0 * v * mp * mp) / (2.0 * v * v);
                const double q3 = -((vpp * v - vp * vp + 2.0 * v * mp * mp) / (2.0 * v * v) +
                                    2.0 * vp * vp * mp * mp / (v * mb.theta));
                const double h = 3e-5;
                const double fd2 =
                    (f_of_alpha(alpha + h) - 2.0 * f_of_alpha(alpha) + f_of_alpha(alpha - h)) /
                    (h * h);
                const double lhs2 = q1 * pdf(DensityKind::HessianH1, mb, r) +
                                    q2 * pdf(DensityKind::HessianH2, mb, r) +
                                    q3 * pdf(DensityKind::Standard, mb, r);
                hess_ok = hess_ok && std::fabs(lhs2 - fd2) <= 1e-5 * std::max(1.0, std::fabs(fd2));
            }
        }
        report("criterion 6 gradient-density identity (1e-6)", grad_ok);
        report("criterion 6 diagonal-Hessian identity (1e-5)", hess_ok);
    }

    { // DP gradient/Hessian vs finite differences of the DP objective
        const DpGrid grid{2000, 2.75};
        OptimizerConfig cfg;
        cfg.estimator = Estimator::Dp;
        cfg.dp_precision = grid.precision;
        cfg.dp_rf_max = grid.rf_max;
        const Glidepath gp({0.5, 0.62, 0.44});
        const double wr = 0.2;
        ProbabilityEvaluator eval(params, wr, cfg);
        const double pnr = eval.pnr(gp, SampleScale::Pnr);
        const GradientVector g = build_gradient(params, gp, cfg, pnr, eval);
        bool ok = true;
        for (int t = 0; t < 3; ++t) {
            Glidepath up = gp, dn = gp;
            up.ratios[t] += 1e-4;
            dn.ratios[t] -= 1e-4;
            const double fd = (success_probability_dp(params, up, wr, grid) -
                               success_probability_dp(params, dn, wr, grid)) /
                              2e-4;
            ok = ok && std::fabs(g.elements[t] - fd) <= 1e-5;
        }
        report("criterion 6 gradient vs DP finite differences (1e-5)", ok);

        const HessianMatrix H = build_hessian(params, gp, cfg, pnr, g, eval);
        auto obj = [&](double a0, double a1) {
            Glidepath moved = gp;
            moved.ratios[0] = a0;
            moved.ratios[1] = a1;
            return success_probability_dp(params, moved, wr, grid);
        };
        const double h = 1e-3;
        const double fd01 = (obj(gp.ratios[0] + h, gp.ratios[1] + h) -
                             obj(gp.ratios[0] + h, gp.ratios[1] - h) -
                             obj(gp.ratios[0] - h, gp.ratios[1] + h) +
                             obj(gp.ratios[0] - h, gp.ratios[1] - h)) /
                            (4.0 * h * h);
        const double fd00 =
            (obj(gp.ratios[0] + h, gp.ratios[1]) - 2.0 * obj(gp.ratios[0], gp.ratios[1]) +
             obj(gp.ratios[0] - h, gp.ratios[1])) /
            (h * h);
        const bool hess_fd_ok = std::fabs(H.entries(0, 1) - fd01) <= 1e-4 &&
                                std::fabs(H.entries(0, 0) - fd00) <= 1e-4;
        report("criterion 6 Hessian vs DP finite differences (1e-4)", hess_fd_ok);
    }

    { // DP vs MC agreement and the single-period closed form
        const DpGrid grid{2000, 2.75};
        bool ok = true;
        uint64_t seed = 777;
        for (const auto& inst : std::vector<std::pair<std::vector<double>, double>>{
                 {{0.45, 0.6, 0.7, 0.5}, 0.18},
                 {{0.3, 0.9}, 0.45},
                 {{0.55, 0.55, 0.55, 0.55, 0.55, 0.55}, 0.12}}) {
            const Glidepath gp(inst.first);
            const double p_dp = success_probability_dp(params, gp, inst.second, grid);
            const double p_mc = success_probability_mc(params, gp, inst.second, 1000000,
                                                       DensitySelector::standard(), seed++, 0);
            const double tol =
                3.0 * std::sqrt(std::max(p_dp * (1.0 - p_dp), 1e-12) / 1e6) + 2.0 / grid.precision;
            ok = ok && std::fabs(p_dp - p_mc) <= tol;
        }
        report("criterion 6 DP vs MC agreement (3 sigma + grid slack)", ok);

        const double wr = 0.5;
        const double p1 = success_probability_dp(params, Glidepath({0.45}), wr, grid);
        const double rf0 = std::floor(wr * grid.precision + 0.5) / grid.precision;
        const double m = mean_adjusted(params, 0.45);
        const double sd = std::sqrt(variance_adjusted(params, 0.45));
        const bool closed_ok = std::fabs(p1 - (1.0 - normal_cdf((rf0 - m) / sd))) <= 2.0 / grid.precision;
        report("criterion 6 single-period closed form", closed_ok, "P=" + fmt(p1));
    }

    { // success-set convexity and the permutation witness
        uint64_t state = 424242;
        auto next_uniform = [&]() {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            return static_cast<double>(state >> 11) * 0x1.0p-53;
        };
        const double wr = 0.12;
        auto survives = [&](const std::vector<double>& r) {
            double rf = wr;
            for (double x : r) {
                if (!(x > rf))
                    return false;
                rf = rf / (x - rf);
            }
            return true;
        };
        bool convex_ok = true;
        int pairs = 0;
        while (pairs < 1000) {
            std::vector<double> a(6), b(6);
            for (double& x : a) x = 0.2 + 1.6 * next_uniform();
            for (double& x : b) x = 0.2 + 1.6 * next_uniform();
            if (!survives(a) || !survives(b))
                continue;
            ++pairs;
            for (double lam = 0.1; lam < 0.95; lam += 0.1) {
                std::vector<double> c(6);
                for (int t = 0; t < 6; ++t)
                    c[t] = lam * a[t] + (1.0 - lam) * b[t];
                convex_ok = convex_ok && survives(c);
            }
        }
        report("criterion 6 success-set convexity (1000 pairs)", convex_ok);

        bool witness = false;
        for (int trial = 0; trial < 200000 && !witness; ++trial) {
            std::vector<double> r = {0.2 + 1.7 * next_uniform(), 0.2 + 1.7 * next_uniform(),
                                     0.2 + 1.7 * next_uniform()};
            if (!survives(r))
                continue;
            std::vector<double> perm = r;
            std::sort(perm.begin(), perm.end());
            do {
                if (!survives(perm)) {
                    witness = true;
                    break;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
        report("criterion 6 permutation (SOR) witness", witness);
    }

    { // two-proportion test calibration under the null
        uint64_t state = 20260808;
        auto next_uniform = [&]() {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            return static_cast<double>(state >> 11) * 0x1.0p-53;
        };
        const int reps = 2000;
        const long long n = 100000;
        int rejections = 0;
        for (int rep = 0; rep < reps; ++rep) {
            long long c1 = 0, c2 = 0;
            for (long long i = 0; i < n; ++i) {
                c1 += next_uniform() < 0.3;
                c2 += next_uniform() < 0.3;
            }
            if (equality_test({static_cast<double>(c1) / n, n}, {static_cast<double>(c2) / n, n})
                    .p_value <= 0.05)
                ++rejections;
        }
        const double rate = static_cast<double>(rejections) / reps;
        report("criterion 6 equality-test calibration (0.05 +/- 0.02)",
               rate >= 0.03 && rate <= 0.07, "rate=" + fmt(rate));
    }
}

// ---- criterion 7: byte-identical simulation outputs ------------------------

void criterion7() {
    namespace fs = std::filesystem;
    const ReturnParams params = ReturnParams::historical();
    OptimizerConfig cfg;
    cfg.method = Method::GradientAscent;
    cfg.estimator = Estimator::Simulation;
    cfg.epsilon = 2e-3;
    cfg.base_sample_n = 100000;
    cfg.alpha_noninferiority = 0.5;
    cfg.alpha_zero = 1.0;
    cfg.seed = 99;
    cfg.workers = 2;
    cfg.max_iterations = 40;

    const fs::path dir = fs::temp_directory_path() / "glideopt_acceptance_det";
    fs::create_directories(dir);
    std::string contents[2];
    for (int run = 0; run < 2; ++run) {
        const OptimizeResult r = optimize(params, Glidepath({0.4, 0.55, 0.7}), 0.4, cfg);
        const fs::path file = dir / ("output" + std::to_string(run) + ".txt");
        write_output_file(file.string(), r.probability, r.glidepath);
        std::ifstream in(file, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        contents[run] = buf.str();
    }
    fs::remove_all(dir);
    report("criterion 7 determinism (seed, workers fixed)",
           !contents[0].empty() && contents[0] == contents[1]);
}

} // namespace

template <typename Fn>
void guarded(const char* label, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(std::string(label) + " (unexpected error)", false, e.what());
    }
}

int main() {
    const bool full = []() {
        const char* v = std::getenv("GLIDEOPT_ACCEPT_FULL");
        return v && std::string(v) == "1";
    }();
    std::printf("glideopt acceptance suite (%s scale)\n", full ? "full" : "desk");
    guarded("criterion 4", [] { criterion4(); });
    guarded("criterion 6", [] { criterion6(); });
    guarded("criterion 7", [] { criterion7(); });
    guarded("criterion 5", [] { criterion5(); });
    guarded("criterion 3", [&] { criterion3(full); });
    guarded("criterion 2", [] { criterion2(false); });
    if (full)
        guarded("criterion 2", [] { criterion2(true); });
    else
        std::printf("SKIP  criterion 2 full scale (precision 5000) -- set GLIDEOPT_ACCEPT_FULL=1\n");
    guarded("criterion 1", [&] { criterion1(full); });
    std::printf("%s: %d failing criterion line(s)\n", g_failures == 0 ? "ALL PASS" : "FAILURES",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
