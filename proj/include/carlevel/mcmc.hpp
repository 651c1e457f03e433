#pragma once

#include "carlevel/dataset.hpp"
#include "carlevel/graph.hpp"
#include "carlevel/models.hpp"
#include "carlevel/textio.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace carlevel {

struct McmcConfig {
    /// Raw sweeps including burn-in (counted before thinning).
    int iterations = 25000;
    int burn_in = 15000;
    int thin = 10;
    int num_chains = 2;
    std::uint64_t seed = 1;
    bool overdispersed_init = true;
    /// Lower bound on floor((iterations - burn_in) / thin).
    int min_stored_draws = 100;
    bool store_area_effects = true;
    bool store_individual_effects = false;

    [[nodiscard]] int stored_draws() const { return (iterations - burn_in) / thin; }
    void validate() const;
};

/// Family defaults: burn-in 5000 (CL2), 15000 (CAR, RCAR), 8000 (CL3, CONV),
/// 25000 (CAR ANOVA), each followed by 10000 retained sweeps.
McmcConfig default_mcmc_config(ModelFamily family);

struct ChainOutput {
    int chain = 0;
    std::vector<std::string> parameter_names;
    /// Leading columns are the scalar parameters; latent effects follow.
    int num_scalars = 0;
    Eigen::MatrixXd draws;  // stored draw x parameter
    std::vector<double> deviance;
    std::vector<double> log_likelihood;
    /// Deviance at the posterior mean of the linear predictor and sigma_e^2.
    double deviance_at_mean = 0.0;
    /// Running means over stored draws, for pooling across chains.
    Eigen::VectorXd mean_linear_predictor;
    double mean_sigma_e_sq = 0.0;
    double wall_time_seconds = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
    /// Non-empty when the chain failed; draws are then empty.
    std::string error;

    [[nodiscard]] bool ok() const { return error.empty(); }
    [[nodiscard]] int column(const std::string& name) const;
    [[nodiscard]] Eigen::VectorXd values(const std::string& name) const;
};

/// One chain on RNG stream `stream_id` of `config.seed`. Throws
/// NumericalError naming the sweep on numerical breakdown.
ChainOutput run_chain(const ModelSpec& spec, const LongDataset& data, const SpatialGraph& graph,
                      const McmcConfig& config, int stream_id);

/// Runs config.num_chains chains on up to `jobs` threads (0: one per chain).
/// A failing chain is returned with `error` set; the others are unaffected.
std::vector<ChainOutput> run_chains(const ModelSpec& spec, const LongDataset& data, const SpatialGraph& graph,
                                    const McmcConfig& config, int jobs = 0);

/// Deviance at the posterior mean pooled over successful chains (equal
/// weights, as every chain stores the same number of draws).
double pooled_deviance_at_mean(const std::vector<ChainOutput>& chains, const Eigen::VectorXd& y);

/// CSV: parameter columns then deviance and log_likelihood.
std::string chain_csv_string(const ChainOutput& chain);
void write_chain(const ChainOutput& chain, const std::filesystem::path& csv, const McmcConfig& config,
                 const ModelSpec& spec);
/// Reads a chain CSV and, if present, its `.meta` sidecar.
ChainOutput read_chain(const std::filesystem::path& csv);
std::filesystem::path chain_meta_path(const std::filesystem::path& csv);

}  // namespace carlevel
