#pragma once

#include "carlevel/dataset.hpp"
#include "carlevel/graph.hpp"
#include "carlevel/rng.hpp"
#include "carlevel/textio.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace carlevel {

enum class StudyKind { CrossSectional, Longitudinal };

std::string to_string(StudyKind kind);
/// Accepts cross-sectional / longitudinal.
StudyKind study_kind_from_string(const std::string& s);

/// Effect-strength parameters of one simulation scenario. For the
/// cross-sectional kind only tau_S_sq (= tau^2) and rho_S (= rho) are used.
struct Scenario {
    StudyKind kind = StudyKind::CrossSectional;
    int id = 0;
    double tau_S_sq = 1.0;
    double rho_S = 0.5;
    double tau_T_sq = 1.0;
    double rho_T = 0.5;
    std::string label;
};

/// The nine tabulated scenarios per kind, or, with `full_grid` for the
/// longitudinal kind, every combination of the low/medium/high levels
/// (81 scenarios, ids 1..81 in lexicographic order of tau_S, rho_S, tau_T, rho_T).
std::vector<Scenario> scenario_grid(StudyKind kind, bool full_grid = false);
/// Throws ValidationError("unknown scenario ...") for ids outside the grid.
Scenario find_scenario(StudyKind kind, int id, bool full_grid = false);

/// Rook-adjacency grid, area index = row * cols + col.
SpatialGraph lattice_geography(int rows, int cols);

/// N x K array psi_tj = phi_t[j] + delta[t] with phi_t iid Leroux fields on
/// the spatial graph and delta one Leroux field on the temporal path graph.
Eigen::MatrixXd simulate_spatiotemporal_effect(const SpatialGraph& graph, int periods, double tau_S_sq, double rho_S,
                                               double tau_T_sq, double rho_T, RngStream& rng);

struct SimulationConfig {
    int n_per_area = 5;
    int periods = 5;
    double sigma_e = 1.0;
    /// Entries of the individual intercept/slope covariance matrix.
    double sigma_r0 = 0.5;
    double sigma_r01 = 0.0;
    double sigma_r1 = 0.1;
    /// Empty means the kind's default truth.
    std::vector<double> beta_true;
};

/// Intercept 1.0, individual-level -1.50, area-level 0.14.
std::vector<double> default_beta_cross_sectional();
/// Intercept 1.0, individual time-varying -1.72, individual time-invariant
/// 0.5, area time-varying 0.39, time -0.1.
std::vector<double> default_beta_longitudinal();
std::vector<std::string> coefficient_names(StudyKind kind);

struct SimulatedData {
    LongDataset data;
    std::vector<double> beta_true;
    /// Simulated area effect: 1 x K (cross-sectional) or N x K.
    Eigen::MatrixXd effect;
};

/// `design_rng` drives covariates, individual effects and observation
/// errors; `effect_rng` drives only the spatial (or spatio-temporal) effect.
/// Replicates that share a design stream therefore differ only through psi.
SimulatedData simulate_cross_sectional(const SpatialGraph& graph, const Scenario& scenario,
                                       const SimulationConfig& config, RngStream& design_rng, RngStream& effect_rng);
SimulatedData simulate_longitudinal(const SpatialGraph& graph, const Scenario& scenario,
                                    const SimulationConfig& config, RngStream& design_rng, RngStream& effect_rng);

/// Sidecar contents: truth, scenario, geometry, seeds and covariate levels.
KeyValueFile dataset_metadata(const SimulatedData& sim, const Scenario& scenario, const SimulationConfig& config,
                              int rows, int cols, std::uint64_t design_seed, std::uint64_t effect_seed);
/// Applies `covariate.<name>.level` / `.time_varying` entries, if present.
void apply_covariate_metadata(LongDataset& data, const KeyValueFile& meta);
/// `beta_true.<coefficient>` entries keyed by coefficient name.
std::map<std::string, double> truth_from_metadata(const KeyValueFile& meta);

}  // namespace carlevel
