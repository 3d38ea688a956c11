#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "glideopt/errors.hpp"
#include "glideopt/io.hpp"
#include "glideopt/optimizer.hpp"
#include "glideopt/random_horizon.hpp"

namespace fs = std::filesystem;
using namespace glideopt;

namespace {

int run_directory(const std::string& dir, int workers, std::uint64_t seed,
                  const std::string& csv_path, const std::string& lifetable_path,
                  bool renormalize) {
    const fs::path root(dir);
    ControlFile control = ControlFile::load((root / "control.txt").string());
    Glidepath initial = read_glidepath_file((root / "gp.txt").string(), control.horizon);

    OptimizerConfig cfg = control.optimizer_config();
    cfg.seed = seed;
    cfg.workers = workers;
    if (cfg.estimator == Estimator::Dp && cfg.workers > 0)
        cfg.workers *= 4; // DP partitions oversubscribe fourfold for load balance

    std::cerr << "optimization: " << (cfg.method == Method::Newton ? "Newton's method" : "gradient ascent")
              << ", estimator: " << (cfg.estimator == Estimator::Dp ? "dynamic program" : "simulation")
              << ", horizon " << control.horizon << ", W_R " << control.withdrawal_rate << "\n";

    OptimizeResult result;
    if (!lifetable_path.empty()) {
        MortalityDistribution mortality = load_lifetable_file(lifetable_path, renormalize);
        if (mortality.s_max() != control.horizon)
            throw GlidepathError("lifetable implies S_max=" + std::to_string(mortality.s_max()) +
                                 " but the control file sets T_D=" + std::to_string(control.horizon));
        if (cfg.estimator != Estimator::Dp)
            throw GlidepathError("the random-horizon objective uses the dp estimator");
        RandomHorizonEvaluator eval(control.params, control.withdrawal_rate, mortality, cfg);
        result = optimize_with(control.params, initial, cfg, eval, &std::cerr);
    } else {
        result = optimize(control.params, initial, control.withdrawal_rate, cfg, &std::cerr);
    }

    write_output_file((root / "output.txt").string(), result.probability, result.glidepath);
    std::cout << format_output(result.probability, result.glidepath);
    std::cout << "Min Hessian eigenvalue at solution: " << result.min_eigenvalue << "\n";
    std::cout << "Max Hessian eigenvalue at solution: " << result.max_eigenvalue << "\n";
    if (!csv_path.empty())
        write_csv(csv_path, result.glidepath, result.iterations);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Static retirement glidepath optimizer (ruin-probability objective)"};
    app.require_subcommand(1);

    std::string dir, csv_path, lifetable_path;
    int workers = 0;
    std::uint64_t seed = 0;
    bool renormalize = false;

    auto* run = app.add_subcommand("run", "Optimize the glidepath described by control.txt/gp.txt");
    run->add_option("directory", dir, "Directory holding control.txt and gp.txt")->required();
    run->add_option("--workers", workers, "Worker threads (default: hardware concurrency)");
    run->add_option("--seed", seed, "Master seed for the simulation estimator");
    run->add_option("--export-csv", csv_path, "Write the glidepath and per-iteration diagnostics as CSV");
    run->add_option("--random-horizon", lifetable_path,
                    "Lifetable file (one probability per line); optimizes the mortality-weighted objective");
    run->add_flag("--renormalize-lifetable", renormalize, "Rescale lifetable probabilities to sum to 1");

    int scenario_id = 0;
    std::string scenario_dir;
    auto* scenario = app.add_subcommand("scenario", "Write a preset control.txt/gp.txt (Table 1 scenarios)");
    scenario->add_option("id", scenario_id, "Scenario number 1..8")->required();
    scenario->add_option("directory", scenario_dir, "Target directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return run_directory(dir, workers, seed, csv_path, lifetable_path, renormalize);
        write_scenario_preset(scenario_id, scenario_dir);
        std::cout << "wrote control.txt and gp.txt under " << scenario_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "ERROR: " << e.what() << "\n";
        return 1;
    }
}
