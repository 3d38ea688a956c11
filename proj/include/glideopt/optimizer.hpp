#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "glideopt/ruin.hpp"
#include "glideopt/stats.hpp"

namespace glideopt {

enum class Method { Newton, GradientAscent };
enum class Estimator { Dp, Simulation };

// Sample-size bucket in simulation mode: P_NR probabilities use 4x the base
// sample, climbing comparisons 2x, special-density probabilities 1x.
enum class SampleScale { Pnr, Climb, Special };

struct OptimizerConfig {
    Method method = Method::Newton;
    Estimator estimator = Estimator::Dp;
    double epsilon = 1e-11;              // convergence threshold on max_effective
    long long base_sample_n = 10000000;  // simulation base N
    double alpha_noninferiority = 0.5;   // climbing stop test (sim)
    double alpha_zero = 1.0;             // gradient zero test (sim); 1.0 turns it off
    long dp_precision = 10000;
    double dp_rf_max = 2.75;
    std::uint64_t seed = 0;
    int workers = 0;                     // 0 = hardware concurrency
    int max_iterations = 0;              // 0 = 25 for Newton, 200 for ascent
    int initial_climb_cap = 50;
};

struct GradientVector {
    std::vector<double> elements;
    // Largest movement realizable inside [MVA+1e-4, 1]; the convergence
    // statistic (raw elements keep pointing outward at a pinned bound).
    double max_effective = 0.0;
};

struct HessianMatrix {
    Eigen::MatrixXd entries;
};

struct IterationRecord {
    int iteration = 0;
    double probability = 0.0;
    double max_effective = 0.0;
    bool has_eigenvalues = false;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
};

struct OptimizeResult {
    Glidepath glidepath;
    double probability = 0.0;
    std::vector<IterationRecord> iterations;
    double min_eigenvalue = 0.0; // at the solution
    double max_eigenvalue = 0.0;
    int iterations_used = 0;
};

struct ClimbResult {
    double probability = 0.0;
    int steps = 0;
};

// Success-probability oracle the optimizer climbs on. The fixed-horizon
// implementation below wraps the DP/MC estimators; the random-horizon module
// supplies a mortality-weighted one.
class ProbabilityOracle {
public:
    virtual ~ProbabilityOracle() = default;
    virtual double pnr(const Glidepath& gp, SampleScale scale) = 0;
    virtual double special(const Glidepath& gp, const DensitySelector& selector) = 0;
    virtual long long sample_size(SampleScale scale) const = 0; // 0 in dp mode
    virtual bool simulation() const = 0;
};

// DP flavor caches one DpEngine per glidepath so a gradient/Hessian build
// reuses the forward/backward tables; simulation flavor derives a fresh
// deterministic seed per call from (config.seed, call counter).
class ProbabilityEvaluator final : public ProbabilityOracle {
public:
    ProbabilityEvaluator(const ReturnParams& params, double withdrawal_rate,
                         const OptimizerConfig& config);
    ~ProbabilityEvaluator() override;

    double pnr(const Glidepath& gp, SampleScale scale) override;
    double special(const Glidepath& gp, const DensitySelector& selector) override;
    long long sample_size(SampleScale scale) const override;
    bool simulation() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// g_t = K_t (P_{g,t} - p_nr); in simulation mode elements failing the
// two-sided zero test at alpha_zero are zeroed (the adjusted gradient).
GradientVector build_gradient(const ReturnParams& params, const Glidepath& gp,
                              const OptimizerConfig& config, double p_nr,
                              ProbabilityOracle& eval);

// Off-diagonal from the pair-density probability and the existing gradient;
// diagonal from the h1/h2 probabilities. Symmetric by construction.
HessianMatrix build_hessian(const ReturnParams& params, const Glidepath& gp,
                            const OptimizerConfig& config, double p_nr,
                            const GradientVector& gradient, ProbabilityOracle& eval);

// Step along the gradient with the ladder step size until progress
// stops (probability drop for dp; non-inferiority rejection for sim).
// Updates gp in place; max_steps 0 means unlimited.
ClimbResult climb(const ReturnParams& params, Glidepath& gp, const OptimizerConfig& config,
                  const GradientVector& gradient, double best_p, ProbabilityOracle& eval,
                  int max_steps = 0);

// Solve H d = -g (rank-revealing QR) and clamp the update into the box.
Glidepath newton_step(const ReturnParams& params, const Glidepath& gp,
                      const GradientVector& gradient, const HessianMatrix& hessian);

OptimizeResult optimize(const ReturnParams& params, const Glidepath& initial,
                        double withdrawal_rate, const OptimizerConfig& config,
                        std::ostream* diagnostics = nullptr);

// Same loop over a caller-supplied oracle.
OptimizeResult optimize_with(const ReturnParams& params, const Glidepath& initial,
                             const OptimizerConfig& config, ProbabilityOracle& eval,
                             std::ostream* diagnostics = nullptr);

} // namespace glideopt
