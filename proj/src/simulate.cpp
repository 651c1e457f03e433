#include "carlevel/simulate.hpp"

#include "carlevel/errors.hpp"
#include "carlevel/sampling.hpp"

#include <array>
#include <cmath>

namespace carlevel {

std::string to_string(StudyKind kind) {
    return kind == StudyKind::CrossSectional ? "cross-sectional" : "longitudinal";
}

StudyKind study_kind_from_string(const std::string& s) {
    if (s == "cross-sectional" || s == "cross_sectional" || s == "cs") {
        return StudyKind::CrossSectional;
    }
    if (s == "longitudinal" || s == "long") {
        return StudyKind::Longitudinal;
    }
    throw ValidationError("unknown study kind '" + s + "' (expected cross-sectional or longitudinal)");
}

std::vector<Scenario> scenario_grid(StudyKind kind, bool full_grid) {
    std::vector<Scenario> out;
    if (kind == StudyKind::CrossSectional) {
        struct Row {
            double tau_sq, rho;
            const char* label;
        };
        const std::array<Row, 9> rows{{
            {1, 0.95, "moderate spatial effect, mainly spatial autocorrelation"},
            {1, 0.09, "moderate spatial effect, mainly spatial heterogeneity"},
            {1, 0.6, "moderate spatial effect, medium spatial heterogeneity and medium spatial autocorrelation"},
            {10, 0.09, "strong spatial effect, mainly spatial spatial heterogeneity"},
            {10, 0.95, "strong spatial effect, mainly spatial autocorrelation"},
            {10, 0.6, "strong spatial effect, medium spatial heterogeneity and medium spatial autocorrelation"},
            {0.01, 0.95, "weak spatial effect, mainly spatial autocorrelation"},
            {0.01, 0.09, "weak spatial effect, mainly spatial heterogeneity"},
            {0.01, 0.6, "weak spatial effect, medium spatial heterogeneity and medium spatial autocorrelation"},
        }};
        int id = 1;
        for (const auto& r : rows) {
            Scenario s;
            s.kind = kind;
            s.id = id++;
            s.tau_S_sq = r.tau_sq;
            s.rho_S = r.rho;
            s.tau_T_sq = 0.0;
            s.rho_T = 0.0;
            s.label = r.label;
            out.push_back(s);
        }
        return out;
    }
    if (full_grid) {
        const std::array<double, 3> taus{0.009, 0.8, 3.0};
        const std::array<double, 3> rhos{0.09, 0.5, 0.9};
        int id = 1;
        for (double ts : taus) {
            for (double rs : rhos) {
                for (double tt : taus) {
                    for (double rt : rhos) {
                        out.push_back({kind, id++, ts, rs, tt, rt, "full grid"});
                    }
                }
            }
        }
        return out;
    }
    struct Row {
        double tau_S_sq, rho_S, tau_T_sq, rho_T;
        const char* label;
    };
    const std::array<Row, 9> rows{{
        {0.09, 0.5, 0.8, 0.5,
         "weak spatial effect, medium spatial heterogeneity and autocorrelation, medium temporal effect"},
        {0.009, 0.9, 3, 0.9, "weak spatial effect, mainly spatial autocorrelation, strong temporal effect"},
        {0.8, 0.5, 3, 0.09,
         "medium spatial effect, medium spatial heterogeneity and medium spatial autocorrelation, strong temporal "
         "effect"},
        {0.8, 0.5, 0.8, 0.5, "medium spatial effect, medium spatial heterogeneity, medium temporal effect"},
        {0.8, 0.9, 0.8, 0.9, "moderate spatial effect, mainly spatial autocorrelation, medium temporal effect"},
        {3, 0.5, 3, 0.09, "strong spatial effect, medium spatial autocorrelation, strong temporal effect"},
        {3, 0.09, 3, 0.9, "strong spatial effect, mainly spatial autocorrelation, strong temporal effect"},
        {3, 0.5, 0.8, 0.5, "strong spatial effect, medium spatial autocorrelation, medium temporal effect"},
        {3, 0.9, 3, 0.9, "strong spatial effect, mainly spatial medium spatial autocorrelation, strong temporal effect"},
    }};
    int id = 1;
    for (const auto& r : rows) {
        out.push_back({kind, id++, r.tau_S_sq, r.rho_S, r.tau_T_sq, r.rho_T, r.label});
    }
    return out;
}

Scenario find_scenario(StudyKind kind, int id, bool full_grid) {
    for (const auto& s : scenario_grid(kind, full_grid)) {
        if (s.id == id) {
            return s;
        }
    }
    throw ValidationError("unknown scenario " + std::to_string(id) + " for kind " + to_string(kind));
}

SpatialGraph lattice_geography(int rows, int cols) {
    if (rows < 1 || cols < 1) {
        throw ValidationError("lattice needs at least one row and one column");
    }
    std::vector<std::pair<int, int>> edges;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int j = r * cols + c;
            if (c + 1 < cols) {
                edges.emplace_back(j, j + 1);
            }
            if (r + 1 < rows) {
                edges.emplace_back(j, j + cols);
            }
        }
    }
    return SpatialGraph::from_edges(rows * cols, edges);
}

namespace {

void check_effect_parameters(double tau_sq, double rho) {
    if (!(tau_sq > 0.0) || !std::isfinite(tau_sq)) {
        throw ValidationError("effect variance must be positive");
    }
    if (!(rho >= 0.0) || rho > kMaxRho) {
        throw ValidationError("autocorrelation must lie in [0, 1 - 1e-8]");
    }
}

}  // namespace

Eigen::MatrixXd simulate_spatiotemporal_effect(const SpatialGraph& graph, int periods, double tau_S_sq, double rho_S,
                                               double tau_T_sq, double rho_T, RngStream& rng) {
    if (periods < 1) {
        throw ValidationError("need at least one period");
    }
    check_effect_parameters(tau_S_sq, rho_S);
    check_effect_parameters(tau_T_sq, rho_T);
    LerouxGmrfCache spatial(graph);
    const SpatialGraph path = SpatialGraph::path(periods);
    LerouxGmrfCache temporal(path);
    Eigen::MatrixXd psi(periods, graph.num_areas());
    for (int t = 0; t < periods; ++t) {
        psi.row(t) = spatial.draw(rng, rho_S, tau_S_sq).transpose();
    }
    const Eigen::VectorXd delta = temporal.draw(rng, rho_T, tau_T_sq);
    for (int t = 0; t < periods; ++t) {
        psi.row(t).array() += delta[t];
    }
    return psi;
}

std::vector<double> default_beta_cross_sectional() { return {1.0, -1.50, 0.14}; }

std::vector<double> default_beta_longitudinal() { return {1.0, -1.72, 0.5, 0.39, -0.1}; }

std::vector<std::string> coefficient_names(StudyKind kind) {
    if (kind == StudyKind::CrossSectional) {
        return {"intercept", "x1", "x2"};
    }
    return {"intercept", "x1", "x2", "x3", "time"};
}

namespace {

void check_config(const SimulationConfig& config, std::size_t expected_beta) {
    if (config.n_per_area < 1) {
        throw ValidationError("n_per_area must be positive");
    }
    if (!(config.sigma_e >= 0.0)) {
        throw ValidationError("sigma_e must be nonnegative");
    }
    if (!config.beta_true.empty() && config.beta_true.size() != expected_beta) {
        throw ValidationError("beta_true needs " + std::to_string(expected_beta) + " values");
    }
}

}  // namespace

SimulatedData simulate_cross_sectional(const SpatialGraph& graph, const Scenario& scenario,
                                       const SimulationConfig& config, RngStream& design_rng, RngStream& effect_rng) {
    check_config(config, 3);
    check_effect_parameters(scenario.tau_S_sq, scenario.rho_S);
    const int k = graph.num_areas();
    const int n_per = config.n_per_area;
    SimulatedData sim;
    sim.beta_true = config.beta_true.empty() ? default_beta_cross_sectional() : config.beta_true;
    LongDataset& d = sim.data;
    d.num_areas = k;
    d.num_periods = 1;
    d.covariate_info = {{"x1", CovariateLevel::Individual, false}, {"x2", CovariateLevel::Area, false}};
    const int n = k * n_per;
    d.y.resize(n);
    d.covariates.resize(n, 2);

    Eigen::VectorXd area_x(k);
    for (int j = 0; j < k; ++j) {
        area_x[j] = sample_normal(design_rng, 0.0, 1.0);
    }
    Eigen::VectorXd noise(n);
    for (int o = 0; o < n; ++o) {
        d.covariates(o, 0) = sample_normal(design_rng, 0.0, 1.0);
        noise[o] = config.sigma_e > 0.0 ? sample_normal(design_rng, 0.0, config.sigma_e) : 0.0;
    }

    LerouxGmrfCache cache(graph);
    const Eigen::VectorXd psi = cache.draw(effect_rng, scenario.rho_S, scenario.tau_S_sq);
    sim.effect = psi.transpose();

    const auto& b = sim.beta_true;
    for (int j = 0; j < k; ++j) {
        for (int m = 0; m < n_per; ++m) {
            const int o = j * n_per + m;
            d.period.push_back(0);
            d.area.push_back(j);
            d.individual.push_back(o);
            d.individual_ids.push_back(o + 1);
            d.covariates(o, 1) = area_x[j];
            d.y[o] = b[0] + b[1] * d.covariates(o, 0) + b[2] * area_x[j] + psi[j] + noise[o];
        }
    }
    d.validate();
    return sim;
}

SimulatedData simulate_longitudinal(const SpatialGraph& graph, const Scenario& scenario,
                                    const SimulationConfig& config, RngStream& design_rng, RngStream& effect_rng) {
    check_config(config, 5);
    if (config.periods < 2) {
        throw ValidationError("longitudinal simulation needs at least two periods");
    }
    const int k = graph.num_areas();
    const int n_per = config.n_per_area;
    const int periods = config.periods;
    SimulatedData sim;
    sim.beta_true = config.beta_true.empty() ? default_beta_longitudinal() : config.beta_true;
    LongDataset& d = sim.data;
    d.num_areas = k;
    d.num_periods = periods;
    d.covariate_info = {{"x1", CovariateLevel::Individual, true},
                        {"x2", CovariateLevel::Individual, false},
                        {"x3", CovariateLevel::Area, true}};
    const int num_ind = k * n_per;
    const int n = num_ind * periods;
    d.y.resize(n);
    d.covariates.resize(n, 3);

    Eigen::MatrixXd area_x(periods, k);
    for (int t = 0; t < periods; ++t) {
        for (int j = 0; j < k; ++j) {
            area_x(t, j) = sample_normal(design_rng, 0.0, 1.0);
        }
    }
    Eigen::Matrix2d cov;
    cov << config.sigma_r0, config.sigma_r01, config.sigma_r01, config.sigma_r1;
    Eigen::LLT<Eigen::Matrix2d> llt(cov);
    const bool has_individual = cov.norm() > 0.0;
    if (has_individual && llt.info() != Eigen::Success) {
        throw ValidationError("individual-effect covariance is not positive definite");
    }
    Eigen::MatrixXd x1(num_ind, periods);
    Eigen::VectorXd x2(num_ind);
    Eigen::MatrixXd r(num_ind, 2);
    Eigen::MatrixXd noise(num_ind, periods);
    for (int i = 0; i < num_ind; ++i) {
        for (int t = 0; t < periods; ++t) {
            x1(i, t) = sample_normal(design_rng, 0.0, 1.0);
        }
        x2[i] = sample_normal(design_rng, 0.0, 1.0);
        Eigen::Vector2d z(sample_normal(design_rng, 0.0, 1.0), sample_normal(design_rng, 0.0, 1.0));
        r.row(i) = has_individual ? Eigen::RowVector2d((llt.matrixL() * z).transpose()) : Eigen::RowVector2d::Zero();
        for (int t = 0; t < periods; ++t) {
            noise(i, t) = config.sigma_e > 0.0 ? sample_normal(design_rng, 0.0, config.sigma_e) : 0.0;
        }
    }

    sim.effect = simulate_spatiotemporal_effect(graph, periods, scenario.tau_S_sq, scenario.rho_S, scenario.tau_T_sq,
                                                scenario.rho_T, effect_rng);

    const auto& b = sim.beta_true;
    for (int i = 0; i < num_ind; ++i) {
        d.individual_ids.push_back(i + 1);
    }
    int o = 0;
    for (int t = 0; t < periods; ++t) {
        const double g = t + 1;
        for (int i = 0; i < num_ind; ++i) {
            const int j = i / n_per;
            d.period.push_back(t);
            d.individual.push_back(i);
            d.area.push_back(j);
            d.covariates(o, 0) = x1(i, t);
            d.covariates(o, 1) = x2[i];
            d.covariates(o, 2) = area_x(t, j);
            d.y[o] = b[0] + b[1] * x1(i, t) + b[2] * x2[i] + b[3] * area_x(t, j) + b[4] * g + sim.effect(t, j) +
                     r(i, 0) + g * r(i, 1) + noise(i, t);
            ++o;
        }
    }
    d.validate();
    return sim;
}

KeyValueFile dataset_metadata(const SimulatedData& sim, const Scenario& scenario, const SimulationConfig& config,
                              int rows, int cols, std::uint64_t design_seed, std::uint64_t effect_seed) {
    KeyValueFile kv;
    kv.set("kind", to_string(scenario.kind));
    kv.set("scenario", scenario.id);
    kv.set("scenario_label", scenario.label);
    if (scenario.kind == StudyKind::CrossSectional) {
        kv.set("tau_sq", scenario.tau_S_sq);
        kv.set("rho", scenario.rho_S);
    } else {
        kv.set("tau_S_sq", scenario.tau_S_sq);
        kv.set("rho_S", scenario.rho_S);
        kv.set("tau_T_sq", scenario.tau_T_sq);
        kv.set("rho_T", scenario.rho_T);
        kv.set("sigma_r0", config.sigma_r0);
        kv.set("sigma_r01", config.sigma_r01);
        kv.set("sigma_r1", config.sigma_r1);
    }
    kv.set("rows", rows);
    kv.set("cols", cols);
    kv.set("num_areas", sim.data.num_areas);
    kv.set("periods", sim.data.num_periods);
    kv.set("n_per_area", config.n_per_area);
    kv.set("sigma_e", config.sigma_e);
    kv.set("design_seed", static_cast<unsigned long long>(design_seed));
    kv.set("effect_seed", static_cast<unsigned long long>(effect_seed));
    std::vector<std::string> names{"intercept"};
    for (const auto& c : sim.data.covariate_info) {
        names.push_back(c.name);
        kv.set("covariate." + c.name + ".level", to_string(c.level));
        kv.set("covariate." + c.name + ".time_varying", c.time_varying);
    }
    if (scenario.kind == StudyKind::Longitudinal) {
        names.emplace_back("time");
    }
    for (std::size_t c = 0; c < names.size(); ++c) {
        kv.set("beta_true." + names[c], sim.beta_true[c]);
    }
    return kv;
}

void apply_covariate_metadata(LongDataset& data, const KeyValueFile& meta) {
    for (auto& c : data.covariate_info) {
        if (auto level = meta.find("covariate." + c.name + ".level")) {
            c.level = covariate_level_from_string(*level);
        }
        if (auto tv = meta.find("covariate." + c.name + ".time_varying")) {
            c.time_varying = *tv == "true";
        }
    }
}

std::map<std::string, double> truth_from_metadata(const KeyValueFile& meta) {
    std::map<std::string, double> out;
    const std::string prefix = "beta_true.";
    for (const auto& [key, value] : meta.items()) {
        if (key.rfind(prefix, 0) == 0) {
            out[key.substr(prefix.size())] = parse_double(value, key);
        }
    }
    return out;
}

}  // namespace carlevel
