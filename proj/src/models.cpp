#include "carlevel/models.hpp"

#include "carlevel/errors.hpp"
#include "carlevel/sampling.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace carlevel {

namespace {

CrossSectionalEffects& cs(ModelState& s) { return std::get<CrossSectionalEffects>(s.area); }
const CrossSectionalEffects& cs(const ModelState& s) { return std::get<CrossSectionalEffects>(s.area); }
GrowthEffects& growth(ModelState& s) { return std::get<GrowthEffects>(s.area); }
const GrowthEffects& growth(const ModelState& s) { return std::get<GrowthEffects>(s.area); }
CarAnovaEffects& anova(ModelState& s) { return std::get<CarAnovaEffects>(s.area); }
const CarAnovaEffects& anova(const ModelState& s) { return std::get<CarAnovaEffects>(s.area); }
ConvolutionEffects& conv(ModelState& s) { return std::get<ConvolutionEffects>(s.area); }
const ConvolutionEffects& conv(const ModelState& s) { return std::get<ConvolutionEffects>(s.area); }

// v' (rho R + (1 - rho) I) v
double leroux_quadratic(const SpatialGraph& graph, const Eigen::VectorXd& v, double rho) {
    return rho * graph.laplacian_quadratic(v) + (1.0 - rho) * v.squaredNorm();
}

Eigen::VectorXd draw_block(RngStream& rng, const BlockConditional& c) {
    Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("conditional covariance is not positive definite");
    }
    return c.mean + llt.matrixL() * sample_standard_normal(rng, c.mean.size());
}

BlockConditional from_canonical(const Eigen::MatrixXd& precision, const Eigen::VectorXd& b) {
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("conditional precision is not positive definite");
    }
    const auto n = precision.rows();
    BlockConditional out;
    out.covariance = llt.solve(Eigen::MatrixXd::Identity(n, n));
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    out.mean = llt.solve(b);
    return out;
}

std::string idx(int i) { return std::to_string(i + 1); }

}  // namespace

std::string to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::CL2: return "cl2";
        case ModelFamily::CAR: return "car";
        case ModelFamily::RCAR: return "rcar";
        case ModelFamily::CL3: return "cl3";
        case ModelFamily::CarAnova: return "car-anova";
        case ModelFamily::Conv: return "conv";
    }
    return "unknown";
}

ModelFamily family_from_string(const std::string& name) {
    for (auto f : {ModelFamily::CL2, ModelFamily::CAR, ModelFamily::RCAR, ModelFamily::CL3, ModelFamily::CarAnova,
                   ModelFamily::Conv}) {
        if (to_string(f) == name) {
            return f;
        }
    }
    if (name == "car_anova" || name == "caranova") {
        return ModelFamily::CarAnova;
    }
    throw ValidationError("unknown model '" + name + "' (expected cl2, car, rcar, cl3, car-anova or conv)");
}

bool is_longitudinal(ModelFamily family) {
    return family == ModelFamily::CL3 || family == ModelFamily::CarAnova || family == ModelFamily::Conv;
}

void PriorConfig::validate() const {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ValidationError("inverse-gamma prior parameters a and b must be positive");
    }
    if (!(beta_prior_sd > 0.0)) {
        throw ValidationError("beta_prior_sd must be positive");
    }
    if (!(rho_lo >= 0.0) || !(rho_lo < rho_hi) || !(rho_hi <= kMaxRho)) {
        throw ValidationError("rho bounds must satisfy 0 <= lo < hi <= 1 - 1e-8");
    }
    if (!(wishart_df > 1.0) || !(wishart_scale > 0.0)) {
        throw ValidationError("inverse-Wishart prior needs df > 1 and a positive scale");
    }
}

Design build_design(const LongDataset& data, const ModelSpec& spec) {
    const auto n = data.size();
    const int q = data.num_covariates();
    const bool longitudinal = is_longitudinal(spec.family);
    Design d;
    d.x.resize(n, 1 + q + (longitudinal ? 1 : 0));
    d.x.col(0).setOnes();
    d.names.emplace_back("intercept");
    for (int c = 0; c < q; ++c) {
        d.x.col(1 + c) = data.covariates.col(c);
        d.names.push_back(data.covariate_info[static_cast<std::size_t>(c)].name);
    }
    if (longitudinal) {
        for (Eigen::Index o = 0; o < n; ++o) {
            d.x(o, 1 + q) = spec.time_trend(data.period[static_cast<std::size_t>(o)] + 1);
        }
        d.names.emplace_back("time");
        d.time_column = 1 + q;
    }
    return d;
}

RestrictionMatrix::RestrictionMatrix(Eigen::MatrixXd z, std::vector<int> design_columns)
    : z_(std::move(z)), design_columns_(std::move(design_columns)) {
    if (static_cast<std::size_t>(z_.cols()) != design_columns_.size()) {
        throw ValidationError("restriction matrix needs one design column per Z column");
    }
    if (z_.cols() == 0 || z_.cols() >= z_.rows()) {
        throw ValidationError("restriction matrix needs 1 <= q < K columns");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z_);
    if (qr.rank() < z_.cols()) {
        throw ValidationError("area-level design Z is rank-deficient");
    }
    gram_.compute(z_.transpose() * z_);
}

RestrictionMatrix RestrictionMatrix::from_dataset(const LongDataset& data, const Design& design) {
    const int k = data.num_areas;
    std::vector<int> cols{0};
    for (int c = 0; c < data.num_covariates(); ++c) {
        const auto& info = data.covariate_info[static_cast<std::size_t>(c)];
        if (info.level == CovariateLevel::Area && !info.time_varying) {
            cols.push_back(1 + c);
        }
    }
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(cols.size()));
    z.col(0).setOnes();
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    for (Eigen::Index o = 0; o < data.size(); ++o) {
        const int j = data.area[static_cast<std::size_t>(o)];
        for (std::size_t c = 1; c < cols.size(); ++c) {
            const double v = design.x(o, cols[c]);
            if (!seen[static_cast<std::size_t>(j)]) {
                z(j, static_cast<Eigen::Index>(c)) = v;
            } else if (std::abs(z(j, static_cast<Eigen::Index>(c)) - v) > 1e-12 * (1.0 + std::abs(v))) {
                throw ValidationError("area-level covariate '" + design.names[static_cast<std::size_t>(cols[c])] +
                                      "' varies within area " + idx(j));
            }
        }
        seen[static_cast<std::size_t>(j)] = true;
    }
    if (cols.size() > 1) {
        for (int j = 0; j < k; ++j) {
            if (!seen[static_cast<std::size_t>(j)]) {
                throw ValidationError("area-level covariates are undefined for area " + idx(j) +
                                      ", which has no observations");
            }
        }
    }
    return {std::move(z), std::move(cols)};
}

Eigen::VectorXd RestrictionMatrix::coefficients(const Eigen::VectorXd& psi) const {
    if (psi.size() != z_.rows()) {
        throw ValidationError("psi has the wrong length for the restriction matrix");
    }
    return gram_.solve(z_.transpose() * psi);
}

Eigen::VectorXd RestrictionMatrix::project(const Eigen::VectorXd& psi) const {
    Eigen::VectorXd out = psi - z_ * coefficients(psi);
    // A second pass removes the rounding left by the first.
    out -= z_ * coefficients(out);
    return out;
}

Eigen::MatrixXd RestrictionMatrix::projector() const {
    const auto k = z_.rows();
    return Eigen::MatrixXd::Identity(k, k) - z_ * gram_.solve(z_.transpose());
}

Eigen::VectorXd restrict_projection(const Eigen::VectorXd& psi, const RestrictionMatrix& restriction) {
    return restriction.project(psi);
}

GibbsSampler::Index GibbsSampler::make_index(const std::vector<int>& group, int num_groups) {
    Index index;
    index.offsets.assign(static_cast<std::size_t>(num_groups) + 1, 0);
    for (int g : group) {
        ++index.offsets[static_cast<std::size_t>(g) + 1];
    }
    for (std::size_t g = 0; g < static_cast<std::size_t>(num_groups); ++g) {
        index.offsets[g + 1] += index.offsets[g];
    }
    index.members.resize(group.size());
    std::vector<int> cursor(index.offsets.begin(), index.offsets.end() - 1);
    for (std::size_t o = 0; o < group.size(); ++o) {
        index.members[static_cast<std::size_t>(cursor[static_cast<std::size_t>(group[o])]++)] = static_cast<int>(o);
    }
    return index;
}

GibbsSampler::GibbsSampler(ModelSpec spec, const LongDataset& data, const SpatialGraph& graph)
    : spec_(std::move(spec)), data_(&data), graph_(&graph) {
    spec_.priors.validate();
    data.validate();
    if (data.num_areas != graph.num_areas()) {
        throw ValidationError("dataset has " + std::to_string(data.num_areas) + " areas but the graph has " +
                              std::to_string(graph.num_areas()));
    }
    const bool longitudinal = is_longitudinal(spec_.family);
    if (!longitudinal && data.num_periods != 1) {
        throw ValidationError("model " + to_string(spec_.family) + " requires single-period data");
    }
    if (longitudinal && data.num_periods < 2) {
        throw ValidationError("model " + to_string(spec_.family) + " requires at least two periods");
    }
    if (data.size() == 0) {
        throw ValidationError("dataset has no observations");
    }
    const int k = data.num_areas;
    const int n_periods = data.num_periods;
    temporal_graph_ = SpatialGraph::path(n_periods);
    design_ = build_design(data, spec_);
    xtx_ = design_.x.transpose() * design_.x;
    g_.resize(data.size());
    for (Eigen::Index o = 0; o < data.size(); ++o) {
        g_[o] = spec_.time_trend(data.period[static_cast<std::size_t>(o)] + 1);
        if (!std::isfinite(g_[o])) {
            throw ValidationError("time trend g(t) is not finite");
        }
    }
    by_area_ = make_index(data.area, k);
    by_period_ = make_index(data.period, n_periods);
    std::vector<int> cell(data.area.size());
    for (std::size_t o = 0; o < cell.size(); ++o) {
        cell[o] = data.period[o] * k + data.area[o];
    }
    by_cell_ = make_index(cell, n_periods * k);
    if (longitudinal) {
        by_individual_ = make_index(data.individual, data.num_individuals());
        individual_area_ = data.individual_areas();
    }
    switch (spec_.family) {
        case ModelFamily::CAR:
            spatial_logdet_.emplace(graph);
            break;
        case ModelFamily::RCAR:
            spatial_logdet_.emplace(graph);
            restriction_ = RestrictionMatrix::from_dataset(data, design_);
            break;
        case ModelFamily::CarAnova:
            spatial_logdet_.emplace(graph);
            temporal_logdet_.emplace(temporal_graph_);
            break;
        case ModelFamily::Conv: {
            isolated_.assign(static_cast<std::size_t>(k), false);
            const auto labels = graph.component_labels();
            std::vector<int> sizes(static_cast<std::size_t>(graph.num_components()), 0);
            for (int l : labels) {
                ++sizes[static_cast<std::size_t>(l)];
            }
            int non_singleton = 0;
            for (int s : sizes) {
                non_singleton += s > 1 ? 1 : 0;
            }
            icar_rank_ = k - non_singleton;
            for (int j = 0; j < k; ++j) {
                if (graph.neighbor_count(j) == 0) {
                    isolated_[static_cast<std::size_t>(j)] = true;
                    warnings_.push_back("area " + idx(j) +
                                        " is isolated; its intrinsic CAR conditional is replaced by N(0, tau_sq_t)");
                }
            }
            break;
        }
        default:
            break;
    }
    resid_.resize(data.size());
}

double GibbsSampler::beta_prior_precision() const {
    return 1.0 / (spec_.priors.beta_prior_sd * spec_.priors.beta_prior_sd);
}

ModelState GibbsSampler::init_state(RngStream& rng, bool overdispersed) const {
    const LongDataset& data = *data_;
    const int k = data.num_areas;
    const int n_periods = data.num_periods;
    ModelState s;
    s.family = spec_.family;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design_.x);
    if (qr.rank() < design_.x.cols()) {
        throw ValidationError("rank-deficient design matrix");
    }
    s.beta = qr.solve(data.y);
    if (overdispersed) {
        for (Eigen::Index c = 0; c < s.beta.size(); ++c) {
            s.beta[c] += sample_uniform(rng, -2.0, 2.0) * spec_.priors.beta_prior_sd;
        }
    }
    s.sigma_e_sq = 1.0;
    switch (spec_.family) {
        case ModelFamily::CL2:
        case ModelFamily::CAR:
        case ModelFamily::RCAR: {
            CrossSectionalEffects e;
            e.psi = Eigen::VectorXd::Zero(k);
            e.rho = spec_.family == ModelFamily::CL2 ? 0.0 : 0.5;
            s.area = e;
            break;
        }
        case ModelFamily::CL3: {
            GrowthEffects e;
            e.u0 = Eigen::VectorXd::Zero(k);
            e.u1 = Eigen::VectorXd::Zero(k);
            s.area = e;
            break;
        }
        case ModelFamily::CarAnova: {
            CarAnovaEffects e;
            e.phi = Eigen::VectorXd::Zero(k);
            e.delta = Eigen::VectorXd::Zero(n_periods);
            if (spec_.include_interaction) {
                e.omega = Eigen::MatrixXd::Zero(n_periods, k);
            }
            s.area = e;
            break;
        }
        case ModelFamily::Conv: {
            ConvolutionEffects e;
            e.phi = Eigen::MatrixXd::Zero(n_periods, k);
            e.omega = Eigen::MatrixXd::Zero(n_periods, k);
            e.tau_sq = Eigen::VectorXd::Ones(n_periods);
            e.sigma_omega_sq = Eigen::VectorXd::Ones(n_periods);
            s.area = e;
            break;
        }
    }
    if (is_longitudinal(spec_.family)) {
        IndividualEffects ind;
        ind.r0 = Eigen::VectorXd::Zero(data.num_individuals());
        ind.r1 = Eigen::VectorXd::Zero(data.num_individuals());
        ind.cov = Eigen::Matrix2d::Identity();
        s.individual = ind;
    }
    return s;
}

double GibbsSampler::area_contribution(const ModelState& state, int o) const {
    const int j = data_->area[static_cast<std::size_t>(o)];
    const int t = data_->period[static_cast<std::size_t>(o)];
    switch (spec_.family) {
        case ModelFamily::CL2:
        case ModelFamily::CAR:
        case ModelFamily::RCAR:
            return cs(state).psi[j];
        case ModelFamily::CL3: {
            const auto& e = growth(state);
            return e.u0[j] + g_[o] * e.u1[j];
        }
        case ModelFamily::CarAnova: {
            const auto& e = anova(state);
            double v = e.phi[j] + e.delta[t];
            if (spec_.include_interaction) {
                v += e.omega(t, j);
            }
            return v;
        }
        case ModelFamily::Conv: {
            const auto& e = conv(state);
            return e.phi(t, j) + e.omega(t, j);
        }
    }
    return 0.0;
}

Eigen::VectorXd GibbsSampler::linear_predictor(const ModelState& state) const {
    Eigen::VectorXd eta = design_.x * state.beta;
    const auto n = data_->size();
    for (Eigen::Index o = 0; o < n; ++o) {
        eta[o] += area_contribution(state, static_cast<int>(o));
    }
    if (state.individual) {
        const auto& ind = *state.individual;
        for (Eigen::Index o = 0; o < n; ++o) {
            const int i = data_->individual[static_cast<std::size_t>(o)];
            eta[o] += ind.r0[i] + g_[o] * ind.r1[i];
        }
    }
    return eta;
}

void GibbsSampler::refresh_residual(const ModelState& state, Eigen::VectorXd& resid) const {
    resid = data_->y - linear_predictor(state);
}

Eigen::VectorXd GibbsSampler::residual(const ModelState& state) const {
    Eigen::VectorXd r;
    refresh_residual(state, r);
    return r;
}

double GibbsSampler::log_likelihood(const Eigen::VectorXd& mean, double sigma_e_sq) const {
    const double n = static_cast<double>(data_->size());
    const double ssr = (data_->y - mean).squaredNorm();
    return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma_e_sq) - 0.5 * ssr / sigma_e_sq;
}

double GibbsSampler::log_likelihood(const ModelState& state) const {
    return log_likelihood(linear_predictor(state), state.sigma_e_sq);
}

// ---- fixed effects ----

BlockConditional GibbsSampler::fixed_effects_conditional(const ModelState& state, const Eigen::VectorXd& resid) const {
    const Eigen::VectorXd partial = resid + design_.x * state.beta;
    Eigen::MatrixXd precision = xtx_ / state.sigma_e_sq;
    precision.diagonal().array() += beta_prior_precision();
    const Eigen::VectorXd b = design_.x.transpose() * partial / state.sigma_e_sq;
    return from_canonical(precision, b);
}

BlockConditional GibbsSampler::fixed_effects_conditional(const ModelState& state) const {
    return fixed_effects_conditional(state, residual(state));
}

void GibbsSampler::update_fixed_effects(ModelState& state, RngStream& rng) {
    refresh_residual(state, resid_);
    const Eigen::VectorXd partial = resid_ + design_.x * state.beta;
    Eigen::MatrixXd precision = xtx_ / state.sigma_e_sq;
    precision.diagonal().array() += beta_prior_precision();
    const Eigen::VectorXd b = design_.x.transpose() * partial / state.sigma_e_sq;
    state.beta = sample_canonical_dense(rng, precision, b);
    resid_ = partial - design_.x * state.beta;
}

// ---- area effects ----

const GibbsSampler::Index& GibbsSampler::site_index(AreaSite::Kind kind) const {
    switch (kind) {
        case AreaSite::Kind::Psi:
        case AreaSite::Kind::Phi:
            return by_area_;
        case AreaSite::Kind::Delta:
            return by_period_;
        default:
            return by_cell_;
    }
}

int GibbsSampler::site_group(AreaSite site) const {
    switch (site.kind) {
        case AreaSite::Kind::Psi:
        case AreaSite::Kind::Phi:
            return site.j;
        case AreaSite::Kind::Delta:
            return site.t;
        default:
            return site.t * data_->num_areas + site.j;
    }
}

double GibbsSampler::site_value(const ModelState& state, AreaSite site) const {
    switch (site.kind) {
        case AreaSite::Kind::Psi: return cs(state).psi[site.j];
        case AreaSite::Kind::Phi: return anova(state).phi[site.j];
        case AreaSite::Kind::Delta: return anova(state).delta[site.t];
        case AreaSite::Kind::Omega: return anova(state).omega(site.t, site.j);
        case AreaSite::Kind::ConvPhi: return conv(state).phi(site.t, site.j);
        case AreaSite::Kind::ConvOmega: return conv(state).omega(site.t, site.j);
    }
    return 0.0;
}

void GibbsSampler::set_site_value(ModelState& state, AreaSite site, double value, Eigen::VectorXd& resid) const {
    double* slot = nullptr;
    switch (site.kind) {
        case AreaSite::Kind::Psi: slot = &cs(state).psi[site.j]; break;
        case AreaSite::Kind::Phi: slot = &anova(state).phi[site.j]; break;
        case AreaSite::Kind::Delta: slot = &anova(state).delta[site.t]; break;
        case AreaSite::Kind::Omega: slot = &anova(state).omega(site.t, site.j); break;
        case AreaSite::Kind::ConvPhi: slot = &conv(state).phi(site.t, site.j); break;
        case AreaSite::Kind::ConvOmega: slot = &conv(state).omega(site.t, site.j); break;
    }
    const double change = value - *slot;
    *slot = value;
    const Index& index = site_index(site.kind);
    const int g = site_group(site);
    for (int m = index.begin(g); m < index.end(g); ++m) {
        resid[index.members[static_cast<std::size_t>(m)]] -= change;
    }
}

GaussianConditional GibbsSampler::site_conditional(const ModelState& state, AreaSite site,
                                                   const Eigen::VectorXd& resid) const {
    double prior_mean = 0.0;
    double prior_var = 1.0;
    switch (site.kind) {
        case AreaSite::Kind::Psi: {
            const auto& e = cs(state);
            const auto c = leroux_conditional(*graph_, e.psi, site.j, e.rho, e.tau_sq);
            prior_mean = c.mean;
            prior_var = c.variance;
            break;
        }
        case AreaSite::Kind::Phi: {
            const auto& e = anova(state);
            const auto c = leroux_conditional(*graph_, e.phi, site.j, e.rho_S, e.tau_S_sq);
            prior_mean = c.mean;
            prior_var = c.variance;
            break;
        }
        case AreaSite::Kind::Delta: {
            const auto& e = anova(state);
            const auto c = leroux_conditional(temporal_graph_, e.delta, site.t, e.rho_T, e.tau_T_sq);
            prior_mean = c.mean;
            prior_var = c.variance;
            break;
        }
        case AreaSite::Kind::Omega:
            prior_var = anova(state).sigma_omega_sq;
            break;
        case AreaSite::Kind::ConvPhi: {
            const auto& e = conv(state);
            const double tau_sq = e.tau_sq[site.t];
            if (isolated_[static_cast<std::size_t>(site.j)]) {
                prior_var = tau_sq;
            } else {
                const auto& nb = graph_->neighbors(site.j);
                double sum = 0.0;
                for (int kk : nb) {
                    sum += e.phi(site.t, kk);
                }
                prior_mean = sum / static_cast<double>(nb.size());
                prior_var = tau_sq / static_cast<double>(nb.size());
            }
            break;
        }
        case AreaSite::Kind::ConvOmega:
            prior_var = conv(state).sigma_omega_sq[site.t];
            break;
    }
    const double current = site_value(state, site);
    const Index& index = site_index(site.kind);
    const int g = site_group(site);
    double sum = 0.0;
    for (int m = index.begin(g); m < index.end(g); ++m) {
        sum += resid[index.members[static_cast<std::size_t>(m)]] + current;
    }
    const double count = static_cast<double>(index.end(g) - index.begin(g));
    const double precision = 1.0 / prior_var + count / state.sigma_e_sq;
    return {(prior_mean / prior_var + sum / state.sigma_e_sq) / precision, 1.0 / precision};
}

GaussianConditional GibbsSampler::area_site_conditional(const ModelState& state, AreaSite site) const {
    return site_conditional(state, site, residual(state));
}

BlockConditional GibbsSampler::growth_conditional(const ModelState& state, int j, const Eigen::VectorXd& resid) const {
    const auto& e = growth(state);
    Eigen::Matrix2d precision = Eigen::Matrix2d::Zero();
    precision(0, 0) = 1.0 / e.sigma_u0_sq;
    precision(1, 1) = 1.0 / e.sigma_u1_sq;
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    const double inv = 1.0 / state.sigma_e_sq;
    for (int m = by_area_.begin(j); m < by_area_.end(j); ++m) {
        const int o = by_area_.members[static_cast<std::size_t>(m)];
        const double g = g_[o];
        const double partial = resid[o] + e.u0[j] + g * e.u1[j];
        precision(0, 0) += inv;
        precision(0, 1) += g * inv;
        precision(1, 1) += g * g * inv;
        b[0] += partial * inv;
        b[1] += g * partial * inv;
    }
    precision(1, 0) = precision(0, 1);
    return from_canonical(precision, b);
}

BlockConditional GibbsSampler::growth_conditional(const ModelState& state, int j) const {
    return growth_conditional(state, j, residual(state));
}

void GibbsSampler::update_area_effects(ModelState& state, RngStream& rng) {
    refresh_residual(state, resid_);
    const int k = data_->num_areas;
    const int n_periods = data_->num_periods;
    auto update_site = [&](AreaSite site) {
        const auto c = site_conditional(state, site, resid_);
        set_site_value(state, site, sample_normal(rng, c.mean, std::sqrt(c.variance)), resid_);
    };
    switch (spec_.family) {
        case ModelFamily::CL2:
        case ModelFamily::CAR:
        case ModelFamily::RCAR:
            for (int j = 0; j < k; ++j) {
                update_site({AreaSite::Kind::Psi, 0, j});
            }
            break;
        case ModelFamily::CL3: {
            auto& e = growth(state);
            for (int j = 0; j < k; ++j) {
                const auto c = growth_conditional(state, j, resid_);
                const Eigen::VectorXd draw = draw_block(rng, c);
                const double d0 = draw[0] - e.u0[j];
                const double d1 = draw[1] - e.u1[j];
                e.u0[j] = draw[0];
                e.u1[j] = draw[1];
                for (int m = by_area_.begin(j); m < by_area_.end(j); ++m) {
                    const int o = by_area_.members[static_cast<std::size_t>(m)];
                    resid_[o] -= d0 + g_[o] * d1;
                }
            }
            break;
        }
        case ModelFamily::CarAnova:
            for (int j = 0; j < k; ++j) {
                update_site({AreaSite::Kind::Phi, 0, j});
            }
            for (int t = 0; t < n_periods; ++t) {
                update_site({AreaSite::Kind::Delta, t, 0});
            }
            if (spec_.include_interaction) {
                for (int t = 0; t < n_periods; ++t) {
                    for (int j = 0; j < k; ++j) {
                        update_site({AreaSite::Kind::Omega, t, j});
                    }
                }
            }
            break;
        case ModelFamily::Conv:
            for (int t = 0; t < n_periods; ++t) {
                for (int j = 0; j < k; ++j) {
                    update_site({AreaSite::Kind::ConvPhi, t, j});
                }
                for (int j = 0; j < k; ++j) {
                    update_site({AreaSite::Kind::ConvOmega, t, j});
                }
            }
            break;
    }
}

// ---- individual effects ----

BlockConditional GibbsSampler::individual_conditional(const ModelState& state, int i,
                                                      const Eigen::VectorXd& resid) const {
    if (!state.individual) {
        throw ValidationError("model has no individual effects");
    }
    const auto& ind = *state.individual;
    Eigen::Matrix2d precision = ind.cov.inverse();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    const double inv = 1.0 / state.sigma_e_sq;
    for (int m = by_individual_.begin(i); m < by_individual_.end(i); ++m) {
        const int o = by_individual_.members[static_cast<std::size_t>(m)];
        const double g = g_[o];
        const double partial = resid[o] + ind.r0[i] + g * ind.r1[i];
        precision(0, 0) += inv;
        precision(0, 1) += g * inv;
        precision(1, 0) += g * inv;
        precision(1, 1) += g * g * inv;
        b[0] += partial * inv;
        b[1] += g * partial * inv;
    }
    return from_canonical(precision, b);
}

BlockConditional GibbsSampler::individual_conditional(const ModelState& state, int i) const {
    return individual_conditional(state, i, residual(state));
}

void GibbsSampler::update_individual_effects(ModelState& state, RngStream& rng) {
    if (!state.individual) {
        return;
    }
    refresh_residual(state, resid_);
    auto& ind = *state.individual;
    const Eigen::Matrix2d prior_precision = ind.cov.inverse();
    const double inv = 1.0 / state.sigma_e_sq;
    boost::random::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < data_->num_individuals(); ++i) {
        Eigen::Matrix2d precision = prior_precision;
        Eigen::Vector2d b = Eigen::Vector2d::Zero();
        for (int m = by_individual_.begin(i); m < by_individual_.end(i); ++m) {
            const int o = by_individual_.members[static_cast<std::size_t>(m)];
            const double g = g_[o];
            const double partial = (resid_[o] + ind.r0[i] + g * ind.r1[i]) * inv;
            precision(0, 0) += inv;
            precision(0, 1) += g * inv;
            precision(1, 1) += g * g * inv;
            b[0] += partial;
            b[1] += g * partial;
        }
        precision(1, 0) = precision(0, 1);
        const Eigen::LLT<Eigen::Matrix2d> factor(precision.inverse());
        if (factor.info() != Eigen::Success) {
            throw NumericalError("conditional precision is not positive definite");
        }
        Eigen::Vector2d noise;
        noise[0] = z(rng);
        noise[1] = z(rng);
        const Eigen::Vector2d draw = precision.llt().solve(b) + factor.matrixL() * noise;
        const double d0 = draw[0] - ind.r0[i];
        const double d1 = draw[1] - ind.r1[i];
        ind.r0[i] = draw[0];
        ind.r1[i] = draw[1];
        for (int m = by_individual_.begin(i); m < by_individual_.end(i); ++m) {
            const int o = by_individual_.members[static_cast<std::size_t>(m)];
            resid_[o] -= d0 + g_[o] * d1;
        }
    }
}

// ---- variances ----

std::vector<InverseGammaConditional> GibbsSampler::variance_conditionals(const ModelState& state) const {
    const double a = spec_.priors.a;
    const double b = spec_.priors.b;
    const double k = data_->num_areas;
    const int n_periods = data_->num_periods;
    std::vector<InverseGammaConditional> out;
    const double ssr = residual(state).squaredNorm();
    out.push_back({"sigma_e_sq", a + 0.5 * static_cast<double>(data_->size()), b + 0.5 * ssr});
    switch (spec_.family) {
        case ModelFamily::CL2:
        case ModelFamily::CAR:
        case ModelFamily::RCAR: {
            const auto& e = cs(state);
            out.push_back({"tau_sq", a + 0.5 * k, b + 0.5 * leroux_quadratic(*graph_, e.psi, e.rho)});
            break;
        }
        case ModelFamily::CL3: {
            const auto& e = growth(state);
            out.push_back({"sigma_u0_sq", a + 0.5 * k, b + 0.5 * e.u0.squaredNorm()});
            out.push_back({"sigma_u1_sq", a + 0.5 * k, b + 0.5 * e.u1.squaredNorm()});
            break;
        }
        case ModelFamily::CarAnova: {
            const auto& e = anova(state);
            out.push_back({"tau_S_sq", a + 0.5 * k, b + 0.5 * leroux_quadratic(*graph_, e.phi, e.rho_S)});
            out.push_back({"tau_T_sq", a + 0.5 * n_periods,
                           b + 0.5 * leroux_quadratic(temporal_graph_, e.delta, e.rho_T)});
            if (spec_.include_interaction) {
                out.push_back({"sigma_omega_sq", a + 0.5 * k * n_periods, b + 0.5 * e.omega.squaredNorm()});
            }
            break;
        }
        case ModelFamily::Conv: {
            const auto& e = conv(state);
            for (int t = 0; t < n_periods; ++t) {
                const Eigen::VectorXd phi_t = e.phi.row(t).transpose();
                double quad = graph_->laplacian_quadratic(phi_t);
                for (int j = 0; j < data_->num_areas; ++j) {
                    if (isolated_[static_cast<std::size_t>(j)]) {
                        quad += phi_t[j] * phi_t[j];
                    }
                }
                out.push_back({"tau_sq_t" + idx(t), a + 0.5 * icar_rank_, b + 0.5 * quad});
            }
            for (int t = 0; t < n_periods; ++t) {
                out.push_back({"sigma_omega_sq_t" + idx(t), a + 0.5 * k, b + 0.5 * e.omega.row(t).squaredNorm()});
            }
            break;
        }
    }
    return out;
}

InverseWishartConditional GibbsSampler::individual_covariance_conditional(const ModelState& state) const {
    if (!state.individual) {
        throw ValidationError("model has no individual effects");
    }
    const auto& ind = *state.individual;
    Eigen::Matrix2d scale = spec_.priors.wishart_scale * Eigen::Matrix2d::Identity();
    for (Eigen::Index i = 0; i < ind.r0.size(); ++i) {
        const Eigen::Vector2d r(ind.r0[i], ind.r1[i]);
        scale += r * r.transpose();
    }
    return {spec_.priors.wishart_df + static_cast<double>(ind.r0.size()), scale};
}

void GibbsSampler::update_variances(ModelState& state, RngStream& rng) {
    const auto conditionals = variance_conditionals(state);
    std::vector<double> draws;
    draws.reserve(conditionals.size());
    for (const auto& c : conditionals) {
        draws.push_back(sample_inverse_gamma(rng, c.shape, c.scale));
    }
    state.sigma_e_sq = draws[0];
    switch (spec_.family) {
        case ModelFamily::CL2:
        case ModelFamily::CAR:
        case ModelFamily::RCAR:
            cs(state).tau_sq = draws[1];
            break;
        case ModelFamily::CL3:
            growth(state).sigma_u0_sq = draws[1];
            growth(state).sigma_u1_sq = draws[2];
            break;
        case ModelFamily::CarAnova:
            anova(state).tau_S_sq = draws[1];
            anova(state).tau_T_sq = draws[2];
            if (spec_.include_interaction) {
                anova(state).sigma_omega_sq = draws[3];
            }
            break;
        case ModelFamily::Conv: {
            auto& e = conv(state);
            const int n_periods = data_->num_periods;
            for (int t = 0; t < n_periods; ++t) {
                e.tau_sq[t] = draws[static_cast<std::size_t>(1 + t)];
                e.sigma_omega_sq[t] = draws[static_cast<std::size_t>(1 + n_periods + t)];
            }
            break;
        }
    }
    if (state.individual) {
        const auto c = individual_covariance_conditional(state);
        state.individual->cov = sample_inverse_wishart(rng, c.df, c.scale);
    }
}

// ---- autocorrelation ----

double GibbsSampler::autocorrelation_log_target(const ModelState& state, RhoParameter which, double rho) const {
    if (!(rho > spec_.priors.rho_lo && rho < spec_.priors.rho_hi)) {
        return -std::numeric_limits<double>::infinity();
    }
    if (spec_.family == ModelFamily::CAR || spec_.family == ModelFamily::RCAR) {
        if (which != RhoParameter::Spatial) {
            throw ValidationError("cross-sectional models have no temporal autocorrelation");
        }
        const auto& e = cs(state);
        return 0.5 * (*spatial_logdet_)(rho) - leroux_quadratic(*graph_, e.psi, rho) / (2.0 * e.tau_sq);
    }
    if (spec_.family == ModelFamily::CarAnova) {
        const auto& e = anova(state);
        if (which == RhoParameter::Spatial) {
            return 0.5 * (*spatial_logdet_)(rho) - leroux_quadratic(*graph_, e.phi, rho) / (2.0 * e.tau_S_sq);
        }
        return 0.5 * (*temporal_logdet_)(rho) - leroux_quadratic(temporal_graph_, e.delta, rho) / (2.0 * e.tau_T_sq);
    }
    throw ValidationError("model " + to_string(spec_.family) + " has no autocorrelation parameter");
}

void GibbsSampler::update_autocorrelation(ModelState& state, RngStream& rng) {
    const double lo = spec_.priors.rho_lo;
    const double hi = spec_.priors.rho_hi;
    // The target is linear in rho apart from the log-determinant, so the two
    // quadratic forms are computed once per update.
    auto update = [&](const SpatialGraph& graph, const LerouxLogDet& logdet, const Eigen::VectorXd& v, double tau_sq,
                      double& rho) {
        const double lap = graph.laplacian_quadratic(v);
        const double sq = v.squaredNorm();
        auto target = [&](double r) { return 0.5 * logdet(r) - (r * lap + (1.0 - r) * sq) / (2.0 * tau_sq); };
        rho = slice_sample(rng, target, rho, lo, hi);
    };
    switch (spec_.family) {
        case ModelFamily::CAR:
        case ModelFamily::RCAR: {
            auto& e = cs(state);
            update(*graph_, *spatial_logdet_, e.psi, e.tau_sq, e.rho);
            break;
        }
        case ModelFamily::CarAnova: {
            auto& e = anova(state);
            update(*graph_, *spatial_logdet_, e.phi, e.tau_S_sq, e.rho_S);
            update(temporal_graph_, *temporal_logdet_, e.delta, e.tau_T_sq, e.rho_T);
            break;
        }
        default:
            break;
    }
}

// ---- centering and shift moves ----

std::optional<GaussianConditional> GibbsSampler::shift_conditional(const ModelState& state, ShiftMove move) const {
    const double pb = beta_prior_precision();
    double precision = 0.0;
    double linear = 0.0;
    const double k = data_->num_areas;
    const int n_periods = data_->num_periods;
    auto trend_mean = [&] {
        double m = 0.0;
        for (int t = 1; t <= n_periods; ++t) {
            m += spec_.time_trend(t);
        }
        return m / n_periods;
    };
    switch (spec_.family) {
        case ModelFamily::CL2:
        case ModelFamily::CAR: {
            if (move != ShiftMove::InterceptVsArea) {
                return std::nullopt;
            }
            const auto& e = cs(state);
            precision = pb + (1.0 - e.rho) * k / e.tau_sq;
            linear = -state.beta[0] * pb + (1.0 - e.rho) * e.psi.sum() / e.tau_sq;
            break;
        }
        case ModelFamily::RCAR:
            return std::nullopt;
        case ModelFamily::CL3: {
            const auto& e = growth(state);
            if (move == ShiftMove::InterceptVsArea) {
                precision = pb + k / e.sigma_u0_sq;
                linear = -state.beta[0] * pb + e.u0.sum() / e.sigma_u0_sq;
            } else {
                const int tc = *design_.time_column;
                precision = pb + k / e.sigma_u1_sq;
                linear = -state.beta[tc] * pb + e.u1.sum() / e.sigma_u1_sq;
            }
            break;
        }
        case ModelFamily::CarAnova: {
            if (move != ShiftMove::TrendVsArea) {
                return std::nullopt;
            }
            const auto& e = anova(state);
            const int tc = *design_.time_column;
            const double gbar = trend_mean();
            Eigen::VectorXd v(n_periods);
            for (int t = 0; t < n_periods; ++t) {
                v[t] = spec_.time_trend(t + 1) - gbar;
            }
            const auto q = build_leroux_precision(temporal_graph_, e.rho_T, 1.0).entries;
            const Eigen::VectorXd qv = q * v;
            precision = pb + gbar * gbar * pb + v.dot(qv) / e.tau_T_sq;
            linear = -state.beta[tc] * pb + gbar * state.beta[0] * pb + qv.dot(e.delta) / e.tau_T_sq;
            break;
        }
        case ModelFamily::Conv: {
            const auto& e = conv(state);
            if (move == ShiftMove::InterceptVsArea) {
                precision = pb;
                linear = -state.beta[0] * pb;
                for (int t = 0; t < n_periods; ++t) {
                    precision += k / e.sigma_omega_sq[t];
                    linear += e.omega.row(t).sum() / e.sigma_omega_sq[t];
                }
            } else {
                const int tc = *design_.time_column;
                const double gbar = trend_mean();
                precision = pb + gbar * gbar * pb;
                linear = -state.beta[tc] * pb + gbar * state.beta[0] * pb;
                for (int t = 0; t < n_periods; ++t) {
                    const double v = spec_.time_trend(t + 1) - gbar;
                    precision += k * v * v / e.sigma_omega_sq[t];
                    linear += v * e.omega.row(t).sum() / e.sigma_omega_sq[t];
                }
            }
            break;
        }
    }
    return GaussianConditional{linear / precision, 1.0 / precision};
}

void GibbsSampler::apply_shift(ModelState& state, ShiftMove move, double c) const {
    const int n_periods = data_->num_periods;
    auto trend_deviation = [&](int t) {
        double m = 0.0;
        for (int s = 1; s <= n_periods; ++s) {
            m += spec_.time_trend(s);
        }
        m /= n_periods;
        return std::pair{spec_.time_trend(t + 1) - m, m};
    };
    switch (spec_.family) {
        case ModelFamily::CL2:
        case ModelFamily::CAR:
            state.beta[0] += c;
            cs(state).psi.array() -= c;
            break;
        case ModelFamily::CL3:
            if (move == ShiftMove::InterceptVsArea) {
                state.beta[0] += c;
                growth(state).u0.array() -= c;
            } else {
                state.beta[*design_.time_column] += c;
                growth(state).u1.array() -= c;
            }
            break;
        case ModelFamily::CarAnova: {
            auto& e = anova(state);
            state.beta[*design_.time_column] += c;
            state.beta[0] -= c * trend_deviation(0).second;
            for (int t = 0; t < n_periods; ++t) {
                e.delta[t] -= c * trend_deviation(t).first;
            }
            break;
        }
        case ModelFamily::Conv: {
            auto& e = conv(state);
            if (move == ShiftMove::InterceptVsArea) {
                state.beta[0] += c;
                e.omega.array() -= c;
            } else {
                state.beta[*design_.time_column] += c;
                state.beta[0] -= c * trend_deviation(0).second;
                for (int t = 0; t < n_periods; ++t) {
                    e.omega.row(t).array() -= c * trend_deviation(t).first;
                }
            }
            break;
        }
        default:
            break;
    }
}

void GibbsSampler::apply_centering(ModelState& state, RngStream& rng) {
    const int n_periods = data_->num_periods;
    switch (spec_.family) {
        case ModelFamily::RCAR: {
            auto& e = cs(state);
            const Eigen::VectorXd c = restriction_->coefficients(e.psi);
            e.psi = restriction_->project(e.psi);
            for (std::size_t q = 0; q < restriction_->design_columns().size(); ++q) {
                state.beta[restriction_->design_columns()[q]] += c[static_cast<Eigen::Index>(q)];
            }
            break;
        }
        case ModelFamily::CarAnova: {
            auto& e = anova(state);
            if (spec_.include_interaction) {
                for (int t = 0; t < n_periods; ++t) {
                    const double m = e.omega.row(t).mean();
                    e.omega.row(t).array() -= m;
                    e.delta[t] += m;
                }
            }
            const double md = e.delta.mean();
            e.delta.array() -= md;
            const double mp = e.phi.mean();
            e.phi.array() -= mp;
            state.beta[0] += md + mp;
            break;
        }
        case ModelFamily::Conv: {
            auto& e = conv(state);
            Eigen::VectorXd means(n_periods);
            for (int t = 0; t < n_periods; ++t) {
                means[t] = e.phi.row(t).mean();
                e.phi.row(t).array() -= means[t];
            }
            const double overall = means.mean();
            state.beta[0] += overall;
            for (int t = 0; t < n_periods; ++t) {
                e.omega.row(t).array() += means[t] - overall;
            }
            break;
        }
        default:
            break;
    }
    for (auto move : {ShiftMove::InterceptVsArea, ShiftMove::TrendVsArea}) {
        if (const auto c = shift_conditional(state, move)) {
            apply_shift(state, move, sample_normal(rng, c->mean, std::sqrt(c->variance)));
        }
    }
}

void GibbsSampler::sweep(ModelState& state, RngStream& rng) {
    update_fixed_effects(state, rng);
    update_area_effects(state, rng);
    update_individual_effects(state, rng);
    update_variances(state, rng);
    update_autocorrelation(state, rng);
    apply_centering(state, rng);
}

// ---- storage layout ----

std::vector<std::string> GibbsSampler::scalar_names() const {
    std::vector<std::string> names;
    for (const auto& n : design_.names) {
        names.push_back("beta_" + n);
    }
    names.emplace_back("sigma_e_sq");
    switch (spec_.family) {
        case ModelFamily::CL2:
            names.emplace_back("tau_sq");
            break;
        case ModelFamily::CAR:
        case ModelFamily::RCAR:
            names.emplace_back("tau_sq");
            names.emplace_back("rho");
            break;
        case ModelFamily::CL3:
            names.emplace_back("sigma_u0_sq");
            names.emplace_back("sigma_u1_sq");
            break;
        case ModelFamily::CarAnova:
            names.emplace_back("tau_S_sq");
            names.emplace_back("tau_T_sq");
            names.emplace_back("rho_S");
            names.emplace_back("rho_T");
            if (spec_.include_interaction) {
                names.emplace_back("sigma_omega_sq");
            }
            break;
        case ModelFamily::Conv:
            for (int t = 0; t < data_->num_periods; ++t) {
                names.push_back("tau_sq_t" + idx(t));
            }
            for (int t = 0; t < data_->num_periods; ++t) {
                names.push_back("sigma_omega_sq_t" + idx(t));
            }
            break;
    }
    if (is_longitudinal(spec_.family)) {
        names.emplace_back("sigma_r0");
        names.emplace_back("sigma_r01");
        names.emplace_back("sigma_r1");
    }
    return names;
}

void GibbsSampler::scalar_values(const ModelState& state, std::vector<double>& out) const {
    for (Eigen::Index c = 0; c < state.beta.size(); ++c) {
        out.push_back(state.beta[c]);
    }
    out.push_back(state.sigma_e_sq);
    switch (spec_.family) {
        case ModelFamily::CL2:
            out.push_back(cs(state).tau_sq);
            break;
        case ModelFamily::CAR:
        case ModelFamily::RCAR:
            out.push_back(cs(state).tau_sq);
            out.push_back(cs(state).rho);
            break;
        case ModelFamily::CL3:
            out.push_back(growth(state).sigma_u0_sq);
            out.push_back(growth(state).sigma_u1_sq);
            break;
        case ModelFamily::CarAnova: {
            const auto& e = anova(state);
            out.push_back(e.tau_S_sq);
            out.push_back(e.tau_T_sq);
            out.push_back(e.rho_S);
            out.push_back(e.rho_T);
            if (spec_.include_interaction) {
                out.push_back(e.sigma_omega_sq);
            }
            break;
        }
        case ModelFamily::Conv: {
            const auto& e = conv(state);
            for (Eigen::Index t = 0; t < e.tau_sq.size(); ++t) {
                out.push_back(e.tau_sq[t]);
            }
            for (Eigen::Index t = 0; t < e.sigma_omega_sq.size(); ++t) {
                out.push_back(e.sigma_omega_sq[t]);
            }
            break;
        }
    }
    if (state.individual) {
        out.push_back(state.individual->cov(0, 0));
        out.push_back(state.individual->cov(0, 1));
        out.push_back(state.individual->cov(1, 1));
    }
}

std::vector<std::string> GibbsSampler::area_effect_names() const {
    std::vector<std::string> names;
    const int k = data_->num_areas;
    const int n_periods = data_->num_periods;
    auto grid = [&](const std::string& prefix) {
        for (int t = 0; t < n_periods; ++t) {
            for (int j = 0; j < k; ++j) {
                names.push_back(prefix + "_" + idx(t) + "_" + idx(j));
            }
        }
    };
    switch (spec_.family) {
        case ModelFamily::CL2:
        case ModelFamily::CAR:
        case ModelFamily::RCAR:
            for (int j = 0; j < k; ++j) {
                names.push_back("psi_" + idx(j));
            }
            break;
        case ModelFamily::CL3:
            for (int j = 0; j < k; ++j) {
                names.push_back("u0_" + idx(j));
            }
            for (int j = 0; j < k; ++j) {
                names.push_back("u1_" + idx(j));
            }
            break;
        case ModelFamily::CarAnova:
            for (int j = 0; j < k; ++j) {
                names.push_back("phi_" + idx(j));
            }
            for (int t = 0; t < n_periods; ++t) {
                names.push_back("delta_" + idx(t));
            }
            if (spec_.include_interaction) {
                grid("omega");
            }
            break;
        case ModelFamily::Conv:
            grid("phi");
            grid("omega");
            break;
    }
    return names;
}

void GibbsSampler::area_effect_values(const ModelState& state, std::vector<double>& out) const {
    auto grid = [&](const Eigen::MatrixXd& m) {
        for (Eigen::Index t = 0; t < m.rows(); ++t) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                out.push_back(m(t, j));
            }
        }
    };
    auto vec = [&](const Eigen::VectorXd& v) { out.insert(out.end(), v.data(), v.data() + v.size()); };
    switch (spec_.family) {
        case ModelFamily::CL2:
        case ModelFamily::CAR:
        case ModelFamily::RCAR:
            vec(cs(state).psi);
            break;
        case ModelFamily::CL3:
            vec(growth(state).u0);
            vec(growth(state).u1);
            break;
        case ModelFamily::CarAnova:
            vec(anova(state).phi);
            vec(anova(state).delta);
            if (spec_.include_interaction) {
                grid(anova(state).omega);
            }
            break;
        case ModelFamily::Conv:
            grid(conv(state).phi);
            grid(conv(state).omega);
            break;
    }
}

std::vector<std::string> GibbsSampler::individual_effect_names() const {
    std::vector<std::string> names;
    if (!is_longitudinal(spec_.family)) {
        return names;
    }
    for (long long id : data_->individual_ids) {
        names.push_back("r0_" + std::to_string(id));
    }
    for (long long id : data_->individual_ids) {
        names.push_back("r1_" + std::to_string(id));
    }
    return names;
}

void GibbsSampler::individual_effect_values(const ModelState& state, std::vector<double>& out) const {
    if (!state.individual) {
        return;
    }
    const auto& ind = *state.individual;
    out.insert(out.end(), ind.r0.data(), ind.r0.data() + ind.r0.size());
    out.insert(out.end(), ind.r1.data(), ind.r1.data() + ind.r1.size());
}

void GibbsSampler::check_state(const ModelState& state) const {
    auto positive = [](double v, const std::string& name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw NumericalError(name + " is not a finite positive value");
        }
    };
    if (!state.beta.allFinite()) {
        throw NumericalError("beta is not finite");
    }
    positive(state.sigma_e_sq, "sigma_e_sq");
    std::vector<double> values;
    scalar_values(state, values);
    const auto names = scalar_names();
    for (std::size_t c = 0; c < values.size(); ++c) {
        if (!std::isfinite(values[c])) {
            throw NumericalError(names[c] + " is not finite");
        }
    }
    values.clear();
    area_effect_values(state, values);
    individual_effect_values(state, values);
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericalError("a latent effect is not finite");
        }
    }
}

}  // namespace carlevel
