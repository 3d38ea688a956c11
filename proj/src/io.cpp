#include "glideopt/io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "glideopt/errors.hpp"

namespace glideopt {

ControlFile ControlFile::parse(std::istream& in) {
    ControlFile c;
    if (!(in >> c.params.mu_s >> c.params.sigma2_s >> c.params.mu_b >> c.params.sigma2_b >>
          c.params.cov_sb >> c.params.expense_ratio))
        throw GlidepathError("control file: could not read the six return parameters");
    if (!(in >> c.horizon >> c.withdrawal_rate >> c.epsilon))
        throw GlidepathError("control file: could not read T_D, W_R, epsilon");
    std::string method, estimator;
    if (!(in >> method >> estimator))
        throw GlidepathError("control file: could not read the method and estimator");
    if (method == "nr")
        c.method = Method::Newton;
    else if (method == "ga")
        c.method = Method::GradientAscent;
    else
        throw GlidepathError("control file: unknown optimization method '" + method +
                             "' (expected nr or ga)");
    if (estimator == "sim") {
        c.estimator = Estimator::Simulation;
        if (!(in >> c.sim_n >> c.sim_alpha1 >> c.sim_alpha2))
            throw GlidepathError("control file: sim estimator needs N, alpha1, alpha2");
    } else if (estimator == "dp") {
        c.estimator = Estimator::Dp;
        if (!(in >> c.dp_precision >> c.dp_rf_max))
            throw GlidepathError("control file: dp estimator needs precision and rf_max");
    } else {
        throw GlidepathError("control file: unknown estimator '" + estimator +
                             "' (expected dp or sim)");
    }
    if (c.horizon < 1)
        throw GlidepathError("control file: T_D must be at least 1");
    c.params.validate();
    return c;
}

ControlFile ControlFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw GlidepathError("Could not read file: " + path);
    return parse(in);
}

void ControlFile::write(std::ostream& out) const {
    out << std::setprecision(10) << params.mu_s << ' ' << params.sigma2_s << ' ' << params.mu_b
        << ' ' << params.sigma2_b << ' ' << params.cov_sb << ' ' << params.expense_ratio << '\n';
    out << horizon << ' ' << withdrawal_rate << ' ' << epsilon << '\n';
    out << (method == Method::Newton ? "nr" : "ga") << ' ';
    if (estimator == Estimator::Simulation)
        out << "sim " << sim_n << ' ' << sim_alpha1 << ' ' << sim_alpha2 << '\n';
    else
        out << "dp " << dp_precision << ' ' << dp_rf_max << '\n';
}

OptimizerConfig ControlFile::optimizer_config() const {
    OptimizerConfig cfg;
    cfg.method = method;
    cfg.estimator = estimator;
    cfg.epsilon = epsilon;
    cfg.base_sample_n = sim_n;
    cfg.alpha_noninferiority = sim_alpha1;
    cfg.alpha_zero = sim_alpha2;
    cfg.dp_precision = dp_precision;
    cfg.dp_rf_max = dp_rf_max;
    return cfg;
}

Glidepath read_glidepath_file(const std::string& path, int expected) {
    std::ifstream in(path);
    if (!in)
        throw GlidepathError("Could not read file: " + path);
    Glidepath gp;
    double a;
    while (static_cast<int>(gp.ratios.size()) < expected && in >> a)
        gp.ratios.push_back(a);
    if (static_cast<int>(gp.ratios.size()) < expected)
        throw GlidepathError("File: " + path + " needs " + std::to_string(expected) +
                             " initial asset allocations, but has fewer.");
    return gp;
}

std::string format_output(double probability, const Glidepath& gp, const std::string& label) {
    std::ostringstream out;
    out.setf(std::ios_base::fixed, std::ios_base::floatfield);
    out << '\n';
    if (probability >= -0.000001 && probability <= 1.000001) {
        out.precision(12);
        out << "--> Success probability for this Glide-Path = " << probability << '\n';
    }
    out.precision(10);
    const int n = gp.horizon();
    const int maxcols = 5;
    const int nrows = (n % maxcols == 0) ? n / maxcols : n / maxcols + 1;
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < maxcols; ++c) {
            const int idx = r + nrows * c;
            if (idx < n) {
                out << label << '[' << std::setfill('0') << std::setw(2) << idx << "]="
                    << std::showpos << gp.ratios[idx] << std::noshowpos << ' ';
            }
        }
        out << '\n';
    }
    return out.str();
}

void write_output_file(const std::string& path, double probability, const Glidepath& gp) {
    std::ofstream out(path);
    if (!out)
        throw GlidepathError("Could not write file: " + path);
    out << format_output(probability, gp);
}

void write_csv(const std::string& path, const Glidepath& gp,
               const std::vector<IterationRecord>& iterations) {
    std::ofstream out(path);
    if (!out)
        throw GlidepathError("Could not write file: " + path);
    out << "t,alpha\n";
    out.precision(12);
    for (int t = 0; t < gp.horizon(); ++t)
        out << (t + 1) << ',' << gp.ratios[t] << '\n';
    if (!iterations.empty()) {
        out << "\niteration,probability,max_effective,min_eigenvalue,max_eigenvalue\n";
        for (const auto& it : iterations) {
            out << it.iteration << ',' << it.probability << ',' << it.max_effective << ',';
            if (it.has_eigenvalues)
                out << it.min_eigenvalue << ',' << it.max_eigenvalue;
            else
                out << ',';
            out << '\n';
        }
    }
}

void write_scenario_preset(int scenario, const std::string& directory) {
    if (scenario < 1 || scenario > 8)
        throw GlidepathError("scenario preset: expected a scenario in 1..8");
    const bool historical = scenario == 1 || scenario == 2 || scenario == 5 || scenario == 6;
    const bool expensed = scenario % 2 == 0;
    const double wr = scenario <= 4 ? 0.04 : 0.05;
    ControlFile c;
    c.params = historical ? ReturnParams::historical(expensed ? 0.01 : 0.0)
                          : ReturnParams::evensky(expensed ? 0.01 : 0.0);
    c.horizon = 30;
    c.withdrawal_rate = wr;
    // Scenario 8's optimum sits on the boundary, which Newton refuses;
    // it gets gradient ascent, the others Newton.
    if (scenario == 8) {
        c.method = Method::GradientAscent;
        c.epsilon = 1e-4;
        c.dp_precision = 2000;
    } else {
        c.method = Method::Newton;
        c.epsilon = 1e-11;
        c.dp_precision = 5000;
    }
    c.estimator = Estimator::Dp;
    c.dp_rf_max = 2.75;

    namespace fs = std::filesystem;
    fs::create_directories(directory);
    std::ofstream control(fs::path(directory) / "control.txt");
    if (!control)
        throw GlidepathError("Could not write control.txt under " + directory);
    c.write(control);
    std::ofstream gp(fs::path(directory) / "gp.txt");
    if (!gp)
        throw GlidepathError("Could not write gp.txt under " + directory);
    gp.precision(3);
    gp.setf(std::ios_base::fixed, std::ios_base::floatfield);
    for (int t = 0; t < c.horizon; ++t)
        gp << 0.45 << '\n';
}

} // namespace glideopt
