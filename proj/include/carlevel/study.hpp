#pragma once

#include "carlevel/compare.hpp"
#include "carlevel/diagnostics.hpp"
#include "carlevel/mcmc.hpp"
#include "carlevel/models.hpp"
#include "carlevel/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace carlevel {

struct FitOptions {
    McmcConfig mcmc;
    double r_hat_threshold = 1.02;
    /// Re-runs with doubled iterations (burn-in included) while R-hat fails.
    int max_retries = 2;
    /// Threads for the chains of one fit (0: one per chain).
    int chain_jobs = 0;
};

struct FitResult {
    McmcConfig final_config;
    std::vector<ChainOutput> chains;
    /// Over the monitored parameters: coefficients and sigma_e_sq.
    DiagnosticsReport diagnostics;
    bool converged = false;
    int attempts = 0;
    std::vector<std::string> warnings;
};

/// Names of the parameters the convergence gate monitors.
std::vector<std::string> monitored_parameters(const GibbsSampler& sampler);

/// Runs the chains, applies the R-hat gate and retries. Throws
/// NumericalError if any chain fails.
FitResult fit_model(const ModelSpec& spec, const LongDataset& data, const SpatialGraph& graph,
                    const FitOptions& options);

/// Posterior summaries of every coefficient (pooled over chains), DIC and
/// the maximum log-likelihood over stored draws.
ReplicateFit summarize_fit(const FitResult& fit, const LongDataset& data, const std::string& scenario,
                           int replicate, const std::string& model);

/// Largest |Z' psi| over the stored draws of an RCAR fit.
double max_restriction_violation(const FitResult& fit, const RestrictionMatrix& restriction);

std::vector<ModelFamily> default_models(StudyKind kind);

struct StudyConfig {
    StudyKind kind = StudyKind::CrossSectional;
    std::vector<int> scenarios{3, 5, 8};
    int replicates = 20;
    std::uint64_t seed = 11;
    int rows = 10;
    int cols = 10;
    SimulationConfig simulation;
    std::vector<ModelFamily> models;  // empty: default_models(kind)
    bool full_grid = false;
    /// Per-family sampler settings; families not listed use
    /// default_mcmc_config with `chains` chains.
    std::map<ModelFamily, McmcConfig> mcmc;
    int chains = 2;
    double r_hat_threshold = 1.02;
    int max_retries = 2;
    /// Concurrent (scenario, replicate, model) tasks.
    int jobs = 1;
};

struct StudyResult {
    std::vector<ReplicateFit> fits;
    ComparisonReport report;
    std::map<std::string, std::map<std::string, double>> truth;
    /// Largest |Z' psi| over all RCAR fits (NaN without RCAR fits).
    double max_rcar_violation = 0.0;
    std::vector<std::string> warnings;
};

/// Seeds: the design stream of a scenario is fixed across its replicates,
/// the effect stream varies per replicate, and each model fit gets its own
/// sampler seed. Output is independent of `jobs`.
StudyResult run_study(const StudyConfig& config);

/// Writes the comparison CSVs, fits.csv, warnings.txt and SVG bar charts.
std::vector<std::filesystem::path> write_study_outputs(const StudyResult& result, const std::filesystem::path& dir);

std::uint64_t scenario_design_seed(std::uint64_t seed, StudyKind kind, int scenario);
std::uint64_t replicate_effect_seed(std::uint64_t design_seed, int replicate);
std::uint64_t fit_seed(std::uint64_t effect_seed, ModelFamily family);

}  // namespace carlevel
