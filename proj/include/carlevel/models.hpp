#pragma once

#include "carlevel/dataset.hpp"
#include "carlevel/graph.hpp"
#include "carlevel/rng.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace carlevel {

enum class ModelFamily { CL2, CAR, RCAR, CL3, CarAnova, Conv };

std::string to_string(ModelFamily family);
/// Accepts the CLI spellings: cl2, car, rcar, cl3, car-anova, conv.
ModelFamily family_from_string(const std::string& name);
[[nodiscard]] bool is_longitudinal(ModelFamily family);

struct PriorConfig {
    /// Inverse-gamma shape and scale for every variance component.
    double a = 1.0;
    double b = 0.01;
    /// Prior sd of each regression coefficient (variance 1000).
    double beta_prior_sd = 31.62;
    double rho_lo = 0.0;
    double rho_hi = kMaxRho;
    /// Inverse-Wishart prior on the individual intercept/slope covariance.
    double wishart_df = 3.0;
    double wishart_scale = 0.01;

    void validate() const;
};

struct ModelSpec {
    ModelFamily family = ModelFamily::CAR;
    /// g(t) for the 1-based period t.
    std::function<double(int)> time_trend = [](int t) { return static_cast<double>(t); };
    PriorConfig priors;
    /// Space-time interaction terms of the CAR ANOVA model.
    bool include_interaction = true;
};

struct CrossSectionalEffects {
    Eigen::VectorXd psi;
    double tau_sq = 1.0;
    double rho = 0.5;  // pinned to 0 for CL2
};

struct GrowthEffects {
    Eigen::VectorXd u0;
    Eigen::VectorXd u1;
    double sigma_u0_sq = 1.0;
    double sigma_u1_sq = 1.0;
};

struct CarAnovaEffects {
    Eigen::VectorXd phi;    // K
    Eigen::VectorXd delta;  // N
    Eigen::MatrixXd omega;  // N x K, empty without interaction
    double tau_S_sq = 1.0;
    double tau_T_sq = 1.0;
    double sigma_omega_sq = 1.0;
    double rho_S = 0.5;
    double rho_T = 0.5;
};

struct ConvolutionEffects {
    Eigen::MatrixXd phi;    // N x K
    Eigen::MatrixXd omega;  // N x K
    Eigen::VectorXd tau_sq;
    Eigen::VectorXd sigma_omega_sq;
};

struct IndividualEffects {
    Eigen::VectorXd r0;
    Eigen::VectorXd r1;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
};

using AreaEffects = std::variant<CrossSectionalEffects, GrowthEffects, CarAnovaEffects, ConvolutionEffects>;

struct ModelState {
    ModelFamily family = ModelFamily::CAR;
    Eigen::VectorXd beta;
    double sigma_e_sq = 1.0;
    AreaEffects area;
    std::optional<IndividualEffects> individual;
};

/// Regression design: intercept, dataset covariates, then g(t) for the
/// longitudinal families.
struct Design {
    Eigen::MatrixXd x;
    std::vector<std::string> names;
    std::optional<int> time_column;
};

Design build_design(const LongDataset& data, const ModelSpec& spec);

/// Area-level design Z (constant column plus area-level covariates) and the
/// projection onto its orthogonal complement.
class RestrictionMatrix {
public:
    /// `design_columns[c]` is the regression coefficient that absorbs the
    /// component along Z column c.
    RestrictionMatrix(Eigen::MatrixXd z, std::vector<int> design_columns);

    /// Z from the constant plus every area-level, time-invariant covariate.
    static RestrictionMatrix from_dataset(const LongDataset& data, const Design& design);

    [[nodiscard]] const Eigen::MatrixXd& z() const { return z_; }
    [[nodiscard]] const std::vector<int>& design_columns() const { return design_columns_; }
    /// (Z'Z)^-1 Z' psi
    [[nodiscard]] Eigen::VectorXd coefficients(const Eigen::VectorXd& psi) const;
    [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& psi) const;
    /// I - Z (Z'Z)^-1 Z'
    [[nodiscard]] Eigen::MatrixXd projector() const;

private:
    Eigen::MatrixXd z_;
    std::vector<int> design_columns_;
    Eigen::LDLT<Eigen::MatrixXd> gram_;
};

Eigen::VectorXd restrict_projection(const Eigen::VectorXd& psi, const RestrictionMatrix& restriction);

struct BlockConditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct InverseGammaConditional {
    std::string parameter;
    double shape;
    double scale;
};

struct InverseWishartConditional {
    double df;
    Eigen::Matrix2d scale;
};

/// One scalar latent site for single-site Gibbs updates (0-based indices).
struct AreaSite {
    enum class Kind { Psi, Phi, Delta, Omega, ConvPhi, ConvOmega };
    Kind kind;
    int t = 0;
    int j = 0;
};

enum class RhoParameter { Spatial, Temporal };

/// Likelihood-preserving directions along which the sweep draws an exact
/// Gibbs move (intercept/trend versus the matching random-effect level).
enum class ShiftMove { InterceptVsArea, TrendVsArea };

/// Per-chain Gibbs/slice sampler for one model family. Holds references to
/// the dataset and graph, which must outlive it, plus a residual workspace,
/// so one instance serves exactly one chain.
class GibbsSampler {
public:
    GibbsSampler(ModelSpec spec, const LongDataset& data, const SpatialGraph& graph);

    [[nodiscard]] const ModelSpec& spec() const { return spec_; }
    [[nodiscard]] const Design& design() const { return design_; }
    [[nodiscard]] const std::optional<RestrictionMatrix>& restriction() const { return restriction_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }

    /// Least-squares beta, zero effects, unit variances, autocorrelations at
    /// 0.5. With `overdispersed`, beta is jittered by up to two prior sds.
    [[nodiscard]] ModelState init_state(RngStream& rng, bool overdispersed = false) const;

    void update_fixed_effects(ModelState& state, RngStream& rng);
    void update_area_effects(ModelState& state, RngStream& rng);
    void update_individual_effects(ModelState& state, RngStream& rng);
    void update_variances(ModelState& state, RngStream& rng);
    void update_autocorrelation(ModelState& state, RngStream& rng);
    /// Restriction projection, sum-to-zero transfers and shift moves.
    void apply_centering(ModelState& state, RngStream& rng);
    void sweep(ModelState& state, RngStream& rng);

    [[nodiscard]] Eigen::VectorXd linear_predictor(const ModelState& state) const;
    [[nodiscard]] double log_likelihood(const ModelState& state) const;
    [[nodiscard]] double deviance(const ModelState& state) const { return -2.0 * log_likelihood(state); }
    /// Log-likelihood of y given a fitted linear predictor and variance.
    [[nodiscard]] double log_likelihood(const Eigen::VectorXd& mean, double sigma_e_sq) const;

    // Full conditionals, exposed so they can be checked against the joint.
    [[nodiscard]] BlockConditional fixed_effects_conditional(const ModelState& state) const;
    [[nodiscard]] GaussianConditional area_site_conditional(const ModelState& state, AreaSite site) const;
    [[nodiscard]] BlockConditional growth_conditional(const ModelState& state, int j) const;
    [[nodiscard]] BlockConditional individual_conditional(const ModelState& state, int i) const;
    [[nodiscard]] std::vector<InverseGammaConditional> variance_conditionals(const ModelState& state) const;
    [[nodiscard]] InverseWishartConditional individual_covariance_conditional(const ModelState& state) const;
    /// Log full conditional (up to a constant) of an autocorrelation.
    [[nodiscard]] double autocorrelation_log_target(const ModelState& state, RhoParameter which, double rho) const;
    /// Conditional of c for the move state + c * direction, or nullopt when
    /// the family has no such move.
    [[nodiscard]] std::optional<GaussianConditional> shift_conditional(const ModelState& state, ShiftMove move) const;
    /// Applies state + c * direction for a shift move.
    void apply_shift(ModelState& state, ShiftMove move, double c) const;

    // Parameter layout for chain storage.
    [[nodiscard]] std::vector<std::string> scalar_names() const;
    void scalar_values(const ModelState& state, std::vector<double>& out) const;
    [[nodiscard]] std::vector<std::string> area_effect_names() const;
    void area_effect_values(const ModelState& state, std::vector<double>& out) const;
    [[nodiscard]] std::vector<std::string> individual_effect_names() const;
    void individual_effect_values(const ModelState& state, std::vector<double>& out) const;

    /// Throws NumericalError naming the first non-finite or non-positive
    /// quantity, if any.
    void check_state(const ModelState& state) const;

private:
    struct Index {
        std::vector<int> offsets;
        std::vector<int> members;
        [[nodiscard]] int begin(int g) const { return offsets[static_cast<std::size_t>(g)]; }
        [[nodiscard]] int end(int g) const { return offsets[static_cast<std::size_t>(g) + 1]; }
    };
    static Index make_index(const std::vector<int>& group, int num_groups);

    void refresh_residual(const ModelState& state, Eigen::VectorXd& resid) const;
    [[nodiscard]] Eigen::VectorXd residual(const ModelState& state) const;
    [[nodiscard]] double area_contribution(const ModelState& state, int o) const;

    [[nodiscard]] BlockConditional fixed_effects_conditional(const ModelState& state,
                                                             const Eigen::VectorXd& resid) const;
    [[nodiscard]] GaussianConditional site_conditional(const ModelState& state, AreaSite site,
                                                       const Eigen::VectorXd& resid) const;
    [[nodiscard]] BlockConditional growth_conditional(const ModelState& state, int j,
                                                      const Eigen::VectorXd& resid) const;
    [[nodiscard]] BlockConditional individual_conditional(const ModelState& state, int i,
                                                          const Eigen::VectorXd& resid) const;
    [[nodiscard]] double site_value(const ModelState& state, AreaSite site) const;
    void set_site_value(ModelState& state, AreaSite site, double value, Eigen::VectorXd& resid) const;
    [[nodiscard]] const Index& site_index(AreaSite::Kind kind) const;
    [[nodiscard]] int site_group(AreaSite site) const;
    [[nodiscard]] double beta_prior_precision() const;

    ModelSpec spec_;
    const LongDataset* data_;
    const SpatialGraph* graph_;
    SpatialGraph temporal_graph_;
    Design design_;
    Eigen::MatrixXd xtx_;
    Eigen::VectorXd g_;  // g(t) per observation
    Index by_area_;
    Index by_period_;
    Index by_cell_;
    Index by_individual_;
    std::vector<int> individual_area_;
    std::optional<LerouxLogDet> spatial_logdet_;
    std::optional<LerouxLogDet> temporal_logdet_;
    std::optional<RestrictionMatrix> restriction_;
    std::vector<bool> isolated_;
    int icar_rank_ = 0;
    std::vector<std::string> warnings_;
    Eigen::VectorXd resid_;
};

}  // namespace carlevel
