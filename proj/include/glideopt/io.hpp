#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "glideopt/optimizer.hpp"
#include "glideopt/ruin.hpp"

namespace glideopt {

// control.txt: line 1 the six return parameters, line 2 "T_D W_R epsilon",
// line 3 the method ("nr"|"ga"), estimator ("dp"|"sim") and its settings
// (N alpha1 alpha2 for sim; precision rf_max for dp).
struct ControlFile {
    ReturnParams params;
    int horizon = 0;
    double withdrawal_rate = 0.0;
    double epsilon = 0.0;
    Method method = Method::Newton;
    Estimator estimator = Estimator::Dp;
    long long sim_n = 10000000;
    double sim_alpha1 = 0.5;
    double sim_alpha2 = 1.0;
    long dp_precision = 10000;
    double dp_rf_max = 2.75;

    static ControlFile parse(std::istream& in);
    static ControlFile load(const std::string& path);
    void write(std::ostream& out) const;

    OptimizerConfig optimizer_config() const;
};

// gp.txt: one ratio per line, exactly `expected` lines.
Glidepath read_glidepath_file(const std::string& path, int expected);

// Output block layout: a leading blank line, the probability line with
// 12 fractional digits, then the ratios in 5 column-major columns with
// 10 digits and an explicit sign.
std::string format_output(double probability, const Glidepath& gp, const std::string& label = "GP");
void write_output_file(const std::string& path, double probability, const Glidepath& gp);

// (t, alpha_t) rows plus per-iteration diagnostics when present.
void write_csv(const std::string& path, const Glidepath& gp,
               const std::vector<IterationRecord>& iterations);

// Table 1 presets: write control.txt and gp.txt (constant 0.45 start) for
// scenarios 1..8 into the directory.
void write_scenario_preset(int scenario, const std::string& directory);

} // namespace glideopt
