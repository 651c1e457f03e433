#include "carlevel/study.hpp"

#include "carlevel/errors.hpp"
#include "carlevel/plot.hpp"
#include "carlevel/textio.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace carlevel {

std::vector<std::string> monitored_parameters(const GibbsSampler& sampler) {
    std::vector<std::string> names;
    for (const auto& n : sampler.design().names) {
        names.push_back("beta_" + n);
    }
    names.emplace_back("sigma_e_sq");
    return names;
}

FitResult fit_model(const ModelSpec& spec, const LongDataset& data, const SpatialGraph& graph,
                    const FitOptions& options) {
    const GibbsSampler probe(spec, data, graph);
    const auto monitored = monitored_parameters(probe);
    FitResult result;
    result.warnings = probe.warnings();
    McmcConfig config = options.mcmc;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        result.attempts = attempt + 1;
        result.final_config = config;
        result.chains = run_chains(spec, data, graph, config, options.chain_jobs);
        for (const auto& c : result.chains) {
            if (!c.ok()) {
                throw NumericalError(c.error);
            }
        }
        if (config.num_chains < 2) {
            result.diagnostics = diagnose(result.chains, monitored, options.r_hat_threshold);
            result.converged = true;
            result.warnings.emplace_back("single chain: R-hat gate not applied");
            return result;
        }
        result.diagnostics = diagnose(result.chains, monitored, options.r_hat_threshold);
        result.converged = result.diagnostics.all_converged;
        if (result.converged) {
            return result;
        }
        if (attempt < options.max_retries) {
            result.warnings.push_back("R-hat above " + format_double(options.r_hat_threshold) + " after " +
                                      std::to_string(config.iterations) + " iterations; doubling");
            config.iterations *= 2;
            config.burn_in *= 2;
        }
    }
    result.warnings.emplace_back("not converged after retries");
    return result;
}

ReplicateFit summarize_fit(const FitResult& fit, const LongDataset& data, const std::string& scenario,
                           int replicate, const std::string& model) {
    ReplicateFit out;
    out.scenario = scenario;
    out.replicate = replicate;
    out.model = model;
    out.converged = fit.converged;
    out.max_r_hat = 0.0;
    for (const auto& p : fit.diagnostics.parameters) {
        out.max_r_hat = std::max(out.max_r_hat, std::isnan(p.r_hat) ? 0.0 : p.r_hat);
    }
    const auto& first = fit.chains.front();
    for (int c = 0; c < first.num_scalars; ++c) {
        const auto& name = first.parameter_names[static_cast<std::size_t>(c)];
        if (name.rfind("beta_", 0) != 0) {
            continue;
        }
        std::vector<double> pooled;
        for (const auto& chain : fit.chains) {
            const auto v = chain.values(name);
            pooled.insert(pooled.end(), v.data(), v.data() + v.size());
        }
        out.coefficients[name.substr(5)] = summarize_posterior(pooled);
    }
    std::vector<double> deviance;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& chain : fit.chains) {
        deviance.insert(deviance.end(), chain.deviance.begin(), chain.deviance.end());
        for (double ll : chain.log_likelihood) {
            best = std::max(best, ll);
        }
    }
    out.dic = dic(deviance, pooled_deviance_at_mean(fit.chains, data.y));
    out.max_posterior_loglik = best;
    return out;
}

double max_restriction_violation(const FitResult& fit, const RestrictionMatrix& restriction) {
    double worst = 0.0;
    const auto k = restriction.z().rows();
    for (const auto& chain : fit.chains) {
        const int first = chain.column("psi_1");
        for (Eigen::Index r = 0; r < chain.draws.rows(); ++r) {
            const Eigen::VectorXd psi = chain.draws.row(r).segment(first, k).transpose();
            worst = std::max(worst, (restriction.z().transpose() * psi).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

std::vector<ModelFamily> default_models(StudyKind kind) {
    if (kind == StudyKind::CrossSectional) {
        return {ModelFamily::CL2, ModelFamily::CAR, ModelFamily::RCAR};
    }
    return {ModelFamily::CL3, ModelFamily::CarAnova, ModelFamily::Conv};
}

std::uint64_t scenario_design_seed(std::uint64_t seed, StudyKind kind, int scenario) {
    return mix_seed(seed, (kind == StudyKind::CrossSectional ? 1000u : 2000u) + static_cast<std::uint64_t>(scenario));
}

std::uint64_t replicate_effect_seed(std::uint64_t design_seed, int replicate) {
    return mix_seed(design_seed, 1u + static_cast<std::uint64_t>(replicate));
}

std::uint64_t fit_seed(std::uint64_t effect_seed, ModelFamily family) {
    return mix_seed(effect_seed, 100u + static_cast<std::uint64_t>(family));
}

namespace {

struct Task {
    std::size_t dataset;
    ModelFamily family;
    ReplicateFit fit;
    double violation = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> warnings;
    std::string error;
};

struct Replicate {
    Scenario scenario;
    int replicate;
    std::uint64_t effect_seed;
    SimulatedData sim;
};

}  // namespace

StudyResult run_study(const StudyConfig& config) {
    if (config.replicates < 1) {
        throw ValidationError("need at least one replicate");
    }
    if (config.scenarios.empty()) {
        throw ValidationError("no scenarios selected");
    }
    const auto models = config.models.empty() ? default_models(config.kind) : config.models;
    for (auto m : models) {
        if (is_longitudinal(m) != (config.kind == StudyKind::Longitudinal)) {
            throw ValidationError("model " + to_string(m) + " does not apply to " + to_string(config.kind) + " data");
        }
    }
    const SpatialGraph graph = lattice_geography(config.rows, config.cols);
    StudyResult result;
    if (config.replicates < 2) {
        result.warnings.emplace_back("a single replicate gives bias only; RMSE variance term is undefined");
    }

    std::vector<Replicate> datasets;
    for (int id : config.scenarios) {
        const Scenario scenario = find_scenario(config.kind, id, config.full_grid);
        const auto design_seed = scenario_design_seed(config.seed, config.kind, id);
        for (int r = 1; r <= config.replicates; ++r) {
            const auto effect_seed = replicate_effect_seed(design_seed, r);
            RngStream design_rng(design_seed);
            RngStream effect_rng(effect_seed);
            Replicate rep{scenario, r, effect_seed, {}};
            rep.sim = config.kind == StudyKind::CrossSectional
                          ? simulate_cross_sectional(graph, scenario, config.simulation, design_rng, effect_rng)
                          : simulate_longitudinal(graph, scenario, config.simulation, design_rng, effect_rng);
            datasets.push_back(std::move(rep));
        }
        const auto names = coefficient_names(config.kind);
        auto& truth = result.truth[std::to_string(id)];
        const auto& beta = datasets.back().sim.beta_true;
        for (std::size_t c = 0; c < names.size(); ++c) {
            truth[names[c]] = beta[c];
        }
    }

    std::vector<Task> tasks;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (auto m : models) {
            tasks.push_back({d, m, {}, std::numeric_limits<double>::quiet_NaN(), {}, {}});
        }
    }
    auto run_task = [&](Task& task) {
        const auto& rep = datasets[task.dataset];
        try {
            ModelSpec spec;
            spec.family = task.family;
            FitOptions options;
            const auto it = config.mcmc.find(task.family);
            options.mcmc = it != config.mcmc.end() ? it->second : default_mcmc_config(task.family);
            if (it == config.mcmc.end()) {
                options.mcmc.num_chains = config.chains;
            }
            options.mcmc.seed = fit_seed(rep.effect_seed, task.family);
            options.mcmc.store_area_effects = task.family == ModelFamily::RCAR;
            options.mcmc.store_individual_effects = false;
            options.r_hat_threshold = config.r_hat_threshold;
            options.max_retries = config.max_retries;
            options.chain_jobs = 1;
            const FitResult fit = fit_model(spec, rep.sim.data, graph, options);
            task.fit = summarize_fit(fit, rep.sim.data, std::to_string(rep.scenario.id), rep.replicate,
                                     to_string(task.family));
            if (task.family == ModelFamily::RCAR) {
                const GibbsSampler sampler(spec, rep.sim.data, graph);
                task.violation = max_restriction_violation(fit, *sampler.restriction());
            }
            for (const auto& w : fit.warnings) {
                task.warnings.push_back(w);
            }
        } catch (const std::exception& e) {
            task.error = e.what();
        }
    };
    const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(tasks.size())));
    if (workers == 1) {
        for (auto& t : tasks) {
            run_task(t);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        for (int w = 0; w < workers; ++w) {
            threads.emplace_back([&] {
                for (std::size_t i = next++; i < tasks.size(); i = next++) {
                    run_task(tasks[i]);
                }
            });
        }
        for (auto& t : threads) {
            t.join();
        }
    }

    bool any_rcar = false;
    for (const auto& t : tasks) {
        const auto& rep = datasets[t.dataset];
        const std::string where = "scenario " + std::to_string(rep.scenario.id) + ", replicate " +
                                  std::to_string(rep.replicate) + ", model " + to_string(t.family) + ": ";
        if (!t.error.empty()) {
            result.warnings.push_back(where + "fit failed: " + t.error);
            continue;
        }
        for (const auto& w : t.warnings) {
            result.warnings.push_back(where + w);
        }
        if (!std::isnan(t.violation)) {
            result.max_rcar_violation = std::max(result.max_rcar_violation, t.violation);
            any_rcar = true;
        }
        result.fits.push_back(t.fit);
    }
    if (!any_rcar) {
        result.max_rcar_violation = std::numeric_limits<double>::quiet_NaN();
    }
    result.report = build_report(result.fits, result.truth);
    for (const auto& w : result.report.warnings) {
        result.warnings.push_back(w);
    }
    return result;
}

std::vector<std::filesystem::path> write_study_outputs(const StudyResult& result, const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& contents) {
        const auto path = dir / name;
        write_file_atomic(path, contents);
        written.push_back(path);
    };
    put("rmse_by_scenario.csv", result.report.rmse_csv());
    put("bias_by_scenario.csv", result.report.bias_csv());
    put("coverage_by_scenario.csv", result.report.coverage_csv());
    put("dic_by_scenario.csv", result.report.dic_csv());
    put("fits.csv", fits_csv(result.fits));
    std::string warnings;
    for (const auto& w : result.warnings) {
        warnings += w + "\n";
    }
    put("warnings.txt", warnings);

    std::vector<std::string> scenarios;
    std::vector<std::string> models;
    std::vector<std::string> coefficients;
    for (const auto& c : result.report.coefficients) {
        if (std::find(scenarios.begin(), scenarios.end(), c.scenario) == scenarios.end()) {
            scenarios.push_back(c.scenario);
        }
        if (std::find(models.begin(), models.end(), c.model) == models.end()) {
            models.push_back(c.model);
        }
        if (std::find(coefficients.begin(), coefficients.end(), c.coefficient) == coefficients.end()) {
            coefficients.push_back(c.coefficient);
        }
    }
    if (scenarios.empty()) {
        return written;
    }
    std::vector<std::string> groups;
    for (const auto& s : scenarios) {
        groups.push_back("scenario " + s);
    }
    for (const auto& coef : coefficients) {
        std::vector<BarSeries> series;
        for (const auto& m : models) {
            BarSeries b;
            b.name = m;
            for (const auto& s : scenarios) {
                double v = std::numeric_limits<double>::quiet_NaN();
                for (const auto& c : result.report.coefficients) {
                    if (c.scenario == s && c.model == m && c.coefficient == coef) {
                        v = c.rmse;
                    }
                }
                b.values.push_back(v);
            }
            series.push_back(b);
        }
        put("rmse_" + coef + ".svg", grouped_bar_svg("RMSE of " + coef, "RMSE", groups, series));
    }
    std::vector<BarSeries> dic_series;
    for (const auto& m : models) {
        BarSeries b;
        b.name = m;
        for (const auto& s : scenarios) {
            std::vector<double> values;
            for (const auto& f : result.fits) {
                if (f.scenario == s && f.model == m) {
                    values.push_back(f.dic.dic);
                }
            }
            if (values.empty()) {
                b.values.push_back(std::numeric_limits<double>::quiet_NaN());
                b.lower.push_back(std::numeric_limits<double>::quiet_NaN());
                b.upper.push_back(std::numeric_limits<double>::quiet_NaN());
            } else {
                b.values.push_back(quantile(values, 0.5));
                b.lower.push_back(quantile(values, 0.25));
                b.upper.push_back(quantile(values, 0.75));
            }
        }
        dic_series.push_back(b);
    }
    put("dic.svg", grouped_bar_svg("DIC (median, interquartile range)", "DIC", groups, dic_series));
    return written;
}

}  // namespace carlevel
