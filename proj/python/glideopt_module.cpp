#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "glideopt/densities.hpp"
#include "glideopt/errors.hpp"
#include "glideopt/io.hpp"
#include "glideopt/optimizer.hpp"
#include "glideopt/quasiconcavity.hpp"
#include "glideopt/random_horizon.hpp"
#include "glideopt/ruin.hpp"
#include "glideopt/stats.hpp"

namespace py = pybind11;
using namespace glideopt;

namespace {

DensitySelector selector_from(const std::vector<int>& slots) {
    DensitySelector sel;
    for (std::size_t i = 0; i < slots.size() && i < 4; ++i)
        sel.slots[i] = slots[i];
    return sel;
}

OptimizerConfig config_from_kwargs(const std::string& method, const std::string& estimator,
                                   double epsilon, long long base_sample_n, double alpha1,
                                   double alpha2, long dp_precision, double dp_rf_max,
                                   std::uint64_t seed, int workers, int max_iterations) {
    OptimizerConfig cfg;
    if (method == "nr")
        cfg.method = Method::Newton;
    else if (method == "ga")
        cfg.method = Method::GradientAscent;
    else
        throw GlidepathError("method must be 'nr' or 'ga'");
    if (estimator == "dp")
        cfg.estimator = Estimator::Dp;
    else if (estimator == "sim")
        cfg.estimator = Estimator::Simulation;
    else
        throw GlidepathError("estimator must be 'dp' or 'sim'");
    cfg.epsilon = epsilon;
    cfg.base_sample_n = base_sample_n;
    cfg.alpha_noninferiority = alpha1;
    cfg.alpha_zero = alpha2;
    cfg.dp_precision = dp_precision;
    cfg.dp_rf_max = dp_rf_max;
    cfg.seed = seed;
    cfg.workers = workers;
    cfg.max_iterations = max_iterations;
    return cfg;
}

} // namespace

PYBIND11_MODULE(_glideopt, m) {
    m.doc() = "Static retirement glidepath optimization on the ruin-probability objective";

    py::register_exception<GlidepathError>(m, "GlidepathError");

    py::class_<ReturnParams>(m, "ReturnParams")
        .def(py::init([](double mu_s, double sigma2_s, double mu_b, double sigma2_b, double cov_sb,
                         double expense_ratio) {
                 ReturnParams p{mu_s, sigma2_s, mu_b, sigma2_b, cov_sb, expense_ratio};
                 p.validate();
                 return p;
             }),
             py::arg("mu_s"), py::arg("sigma2_s"), py::arg("mu_b"), py::arg("sigma2_b"),
             py::arg("cov_sb"), py::arg("expense_ratio") = 0.0)
        .def_static("historical", &ReturnParams::historical, py::arg("expense_ratio") = 0.0)
        .def_static("evensky", &ReturnParams::evensky, py::arg("expense_ratio") = 0.0)
        .def_readonly("mu_s", &ReturnParams::mu_s)
        .def_readonly("sigma2_s", &ReturnParams::sigma2_s)
        .def_readonly("mu_b", &ReturnParams::mu_b)
        .def_readonly("sigma2_b", &ReturnParams::sigma2_b)
        .def_readonly("cov_sb", &ReturnParams::cov_sb)
        .def_readonly("expense_ratio", &ReturnParams::expense_ratio);

    m.def("mean_adjusted", &mean_adjusted, py::arg("params"), py::arg("alpha"));
    m.def("variance_adjusted", &variance_adjusted, py::arg("params"), py::arg("alpha"));
    m.def("min_variance_alpha", &min_variance_alpha, py::arg("params"));
    m.def("feasible_floor", &feasible_floor, py::arg("params"));
    m.def("gradient_constant", &gradient_constant, py::arg("params"), py::arg("alpha"));

    py::enum_<DensityKind>(m, "DensityKind")
        .value("Standard", DensityKind::Standard)
        .value("Gradient", DensityKind::Gradient)
        .value("HessianH1", DensityKind::HessianH1)
        .value("HessianH2", DensityKind::HessianH2);

    m.def(
        "pdf",
        [](DensityKind kind, const ReturnParams& p, double alpha, double r) {
            return pdf(kind, MomentBundle::at(p, alpha), r);
        },
        py::arg("kind"), py::arg("params"), py::arg("alpha"), py::arg("r"));
    m.def(
        "cdf",
        [](DensityKind kind, const ReturnParams& p, double alpha, double r) {
            return cdf(kind, MomentBundle::at(p, alpha), r);
        },
        py::arg("kind"), py::arg("params"), py::arg("alpha"), py::arg("r"));

    m.def(
        "success_probability_dp",
        [](const ReturnParams& p, const std::vector<double>& ratios, double withdrawal_rate,
           long precision, double rf_max, const std::vector<int>& selector, int workers) {
            return success_probability_dp(p, Glidepath(ratios), withdrawal_rate,
                                          DpGrid{precision, rf_max}, selector_from(selector),
                                          workers);
        },
        py::arg("params"), py::arg("glidepath"), py::arg("withdrawal_rate"),
        py::arg("precision") = 10000, py::arg("rf_max") = 2.75,
        py::arg("selector") = std::vector<int>{}, py::arg("workers") = 0);

    m.def(
        "success_probability_mc",
        [](const ReturnParams& p, const std::vector<double>& ratios, double withdrawal_rate,
           long long n, std::uint64_t seed, const std::vector<int>& selector, int workers) {
            return success_probability_mc(p, Glidepath(ratios), withdrawal_rate, n,
                                          selector_from(selector), seed, workers);
        },
        py::arg("params"), py::arg("glidepath"), py::arg("withdrawal_rate"), py::arg("n"),
        py::arg("seed") = 0, py::arg("selector") = std::vector<int>{}, py::arg("workers") = 0);

    m.def(
        "success_probability_random",
        [](const ReturnParams& p, const std::vector<double>& ratios, double withdrawal_rate,
           const std::vector<double>& mortality, long precision, double rf_max, int workers) {
            MortalityDistribution m2;
            m2.probabilities = mortality;
            return success_probability_random(p, Glidepath(ratios), withdrawal_rate, m2,
                                              DpGrid{precision, rf_max}, workers);
        },
        py::arg("params"), py::arg("glidepath"), py::arg("withdrawal_rate"), py::arg("mortality"),
        py::arg("precision") = 10000, py::arg("rf_max") = 2.75, py::arg("workers") = 0);

    m.def(
        "equality_test",
        [](double p_a, long long n_a, double p_b, long long n_b) {
            const EqualityTest t = equality_test({p_a, n_a}, {p_b, n_b});
            return py::make_tuple(t.t_stat, t.p_value);
        },
        py::arg("p_a"), py::arg("n_a"), py::arg("p_b"), py::arg("n_b"));
    m.def(
        "noninferiority_test",
        [](double p_new, long long n_new, double p_base, long long n_base, double alpha) {
            const NoninferiorityTest t = noninferiority_test({p_new, n_new}, {p_base, n_base}, alpha);
            return py::make_tuple(t.t_stat, t.p_value, t.reject);
        },
        py::arg("p_new"), py::arg("n_new"), py::arg("p_base"), py::arg("n_base"), py::arg("alpha"));

    m.def(
        "two_period_difference",
        [](const ReturnParams& p, const std::vector<double>& a, const std::vector<double>& b,
           double withdrawal_rate, double z_low, double z_high, long k) {
            return two_period_difference(p, Glidepath(a), Glidepath(b), withdrawal_rate,
                                         GridSpec{z_low, z_high, k});
        },
        py::arg("params"), py::arg("gp_a"), py::arg("gp_b"), py::arg("withdrawal_rate"),
        py::arg("z_low"), py::arg("z_high"), py::arg("k"));

    m.def(
        "verify_counterexample",
        [](const ReturnParams& p, const std::vector<double>& gp1, const std::vector<double>& gp2,
           double lam, double withdrawal_rate, const std::string& method, long long budget,
           std::uint64_t seed, int workers) {
            const CexMethod mth = method == "mc" ? CexMethod::Mc : CexMethod::Grid;
            const CounterexampleReport r = verify_counterexample(
                p, Glidepath(gp1), Glidepath(gp2), lam, withdrawal_rate, mth, budget, seed, workers);
            py::dict d;
            d["gp_c"] = r.gp_c.ratios;
            d["p1"] = r.p1;
            d["p2"] = r.p2;
            d["pc"] = r.pc;
            d["diff_c_minus_2"] = r.diff_c_minus_2;
            d["diff_1_minus_c"] = r.diff_1_minus_c;
            d["counterexample"] = r.counterexample;
            return d;
        },
        py::arg("params"), py::arg("gp_1"), py::arg("gp_2"), py::arg("lambda_"),
        py::arg("withdrawal_rate"), py::arg("method") = "grid", py::arg("budget") = 100000,
        py::arg("seed") = 0, py::arg("workers") = 0);

    m.def(
        "optimize",
        [](const ReturnParams& p, const std::vector<double>& initial, double withdrawal_rate,
           const std::string& method, const std::string& estimator, double epsilon,
           long long base_sample_n, double alpha1, double alpha2, long dp_precision,
           double dp_rf_max, std::uint64_t seed, int workers, int max_iterations) {
            const OptimizerConfig cfg =
                config_from_kwargs(method, estimator, epsilon, base_sample_n, alpha1, alpha2,
                                   dp_precision, dp_rf_max, seed, workers, max_iterations);
            const OptimizeResult r = optimize(p, Glidepath(initial), withdrawal_rate, cfg);
            py::dict d;
            d["glidepath"] = r.glidepath.ratios;
            d["probability"] = r.probability;
            d["iterations"] = r.iterations_used;
            d["min_eigenvalue"] = r.min_eigenvalue;
            d["max_eigenvalue"] = r.max_eigenvalue;
            return d;
        },
        py::arg("params"), py::arg("initial"), py::arg("withdrawal_rate"), py::arg("method") = "nr",
        py::arg("estimator") = "dp", py::arg("epsilon") = 1e-9, py::arg("base_sample_n") = 10000000,
        py::arg("alpha1") = 0.5, py::arg("alpha2") = 1.0, py::arg("dp_precision") = 1000,
        py::arg("dp_rf_max") = 2.75, py::arg("seed") = 0, py::arg("workers") = 0,
        py::arg("max_iterations") = 0);

    m.def(
        "format_output",
        [](double probability, const std::vector<double>& ratios) {
            return format_output(probability, Glidepath(ratios));
        },
        py::arg("probability"), py::arg("glidepath"));
}
