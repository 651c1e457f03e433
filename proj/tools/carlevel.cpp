#include "carlevel/compare.hpp"
#include "carlevel/diagnostics.hpp"
#include "carlevel/errors.hpp"
#include "carlevel/mcmc.hpp"
#include "carlevel/models.hpp"
#include "carlevel/simulate.hpp"
#include "carlevel/study.hpp"
#include "carlevel/textio.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace carlevel;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitNotConverged = 4;

#ifndef CARLEVEL_VERSION
#define CARLEVEL_VERSION "unknown"
#endif

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
    std::uint64_t v = 0;
    const auto t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw ValidationError("invalid " + what + ": '" + text + "'");
    }
    return v;
}

// Explicit flag, then CARLEVEL_SEED, then the command default.
std::pair<std::uint64_t, std::string> resolve_seed(const std::string& flag, std::uint64_t fallback) {
    if (!flag.empty()) {
        return {parse_seed(flag, "seed"), "flag"};
    }
    if (const char* env = std::getenv("CARLEVEL_SEED"); env != nullptr && *env != '\0') {
        return {parse_seed(env, "CARLEVEL_SEED"), "environment"};
    }
    return {fallback, "default"};
}

template <typename T>
std::string list_text(const std::vector<T>& values) {
    std::vector<std::string> parts;
    for (const auto& v : values) {
        if constexpr (std::is_same_v<T, std::string>) {
            parts.push_back(v);
        } else {
            parts.push_back(std::to_string(v));
        }
    }
    return join(parts, ",");
}

// Resolved flags first (readable back through --config), run details under
// the "run." prefix.
class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

    KeyValueFile& flags() { return flags_; }
    void input(const fs::path& p) { inputs_.push_back(p.string()); }
    void output(const fs::path& p) { outputs_.push_back(p.string()); }
    void outputs(const std::vector<fs::path>& ps) {
        for (const auto& p : ps) {
            output(p);
        }
    }
    void note(std::string key, std::string value) { notes_.set(std::move(key), std::move(value)); }

    void write(const fs::path& path, std::uint64_t seed, const std::string& seed_source) const {
        KeyValueFile out;
        out.set("run.command", command_);
        out.set("run.tool_version", CARLEVEL_VERSION);
        out.set("run.seed", static_cast<unsigned long long>(seed));
        out.set("run.seed_source", seed_source);
        for (std::size_t i = 0; i < inputs_.size(); ++i) {
            out.set("run.input." + std::to_string(i + 1), inputs_[i]);
        }
        for (std::size_t i = 0; i < outputs_.size(); ++i) {
            out.set("run.output." + std::to_string(i + 1), outputs_[i]);
        }
        for (const auto& [k, v] : notes_.items()) {
            out.set("run." + k, v);
        }
        out.set("run.wall_time", std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
        for (const auto& [k, v] : flags_.items()) {
            out.set(k, v);
        }
        out.write(path);
    }

private:
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    KeyValueFile flags_;
    KeyValueFile notes_;
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw ValidationError("cannot create output directory " + dir.string());
    }
}

// ---- simulate ----

struct SimulateArgs {
    std::string kind = "cross-sectional";
    int scenario = 3;
    int replicate = 1;
    bool full_grid = false;
    int rows = 10;
    int cols = 10;
    int n_per_area = 5;
    int periods = 0;  // 0: 1 (cross-sectional) or 5 (longitudinal)
    std::string seed;
    std::string out = "simulated";
};

int cmd_simulate(const SimulateArgs& a) {
    Manifest manifest("simulate");
    const auto [seed, seed_source] = resolve_seed(a.seed, 1);
    const StudyKind kind = study_kind_from_string(a.kind);
    const Scenario scenario = find_scenario(kind, a.scenario, a.full_grid);
    if (a.replicate < 1) {
        throw ValidationError("replicate must be at least 1");
    }
    SimulationConfig config;
    config.n_per_area = a.n_per_area;
    config.periods = a.periods > 0 ? a.periods : (kind == StudyKind::CrossSectional ? 1 : 5);
    if (kind == StudyKind::CrossSectional && config.periods != 1) {
        throw ValidationError("cross-sectional data have exactly one period");
    }
    const SpatialGraph graph = lattice_geography(a.rows, a.cols);
    const auto design_seed = scenario_design_seed(seed, kind, scenario.id);
    const auto effect_seed = replicate_effect_seed(design_seed, a.replicate);
    RngStream design_rng(design_seed);
    RngStream effect_rng(effect_seed);
    const SimulatedData sim = kind == StudyKind::CrossSectional
                                  ? simulate_cross_sectional(graph, scenario, config, design_rng, effect_rng)
                                  : simulate_longitudinal(graph, scenario, config, design_rng, effect_rng);

    const fs::path dir(a.out);
    ensure_dir(dir);
    const auto data_path = dir / "data.csv";
    const auto adjacency_path = dir / "adjacency.csv";
    write_dataset_csv(sim.data, data_path);
    KeyValueFile meta = dataset_metadata(sim, scenario, config, a.rows, a.cols, design_seed, effect_seed);
    meta.set("replicate", a.replicate);
    meta.write(dataset_sidecar_path(data_path));
    write_adjacency_matrix(graph, adjacency_path);
    manifest.output(data_path);
    manifest.output(dataset_sidecar_path(data_path));
    manifest.output(adjacency_path);

    auto& f = manifest.flags();
    f.set("kind", to_string(kind));
    f.set("scenario", a.scenario);
    f.set("replicate", a.replicate);
    f.set("full-grid", a.full_grid);
    f.set("rows", a.rows);
    f.set("cols", a.cols);
    f.set("n-per-area", a.n_per_area);
    f.set("periods", config.periods);
    f.set("seed", static_cast<unsigned long long>(seed));
    f.set("out", a.out);
    manifest.note("scenario_label", scenario.label);
    manifest.note("tau_S_sq", format_double(scenario.tau_S_sq));
    manifest.note("rho_S", format_double(scenario.rho_S));
    if (kind == StudyKind::Longitudinal) {
        manifest.note("tau_T_sq", format_double(scenario.tau_T_sq));
        manifest.note("rho_T", format_double(scenario.rho_T));
    }
    manifest.write(dir / "manifest.txt", seed, seed_source);
    std::cout << "wrote " << data_path.string() << " (" << sim.data.size() << " rows, scenario " << scenario.id
              << ": tau_S_sq=" << format_double(scenario.tau_S_sq) << ", rho_S=" << format_double(scenario.rho_S)
              << ")\n";
    return kExitOk;
}

// ---- fit ----

struct FitArgs {
    std::string model;
    std::string data;
    std::string adjacency;
    int iters = 0;   // 0: family default
    int burnin = -1;  // -1: family default
    int thin = 10;
    int chains = 2;
    int jobs = 0;
    int retries = 2;
    double rhat_threshold = 1.02;
    std::vector<std::string> area_covariates;
    std::string seed;
    std::string out = "fit";
};

struct SummaryRow {
    std::string parameter;
    PosteriorSummary summary;
    double r_hat = std::nan("");
    double ess = 0.0;
};

SummaryRow summarize_parameter(const std::string& name, const std::vector<Eigen::VectorXd>& per_chain) {
    SummaryRow row;
    row.parameter = name;
    std::vector<double> pooled;
    for (const auto& v : per_chain) {
        pooled.insert(pooled.end(), v.data(), v.data() + v.size());
        try {
            row.ess += effective_sample_size(v);
        } catch (const std::exception&) {
            row.ess = std::nan("");
        }
    }
    row.ess = std::min(row.ess, static_cast<double>(pooled.size()));
    row.summary = summarize_posterior(pooled);
    if (per_chain.size() >= 2) {
        try {
            row.r_hat = gelman_rubin(per_chain);
        } catch (const std::exception&) {
            row.r_hat = std::nan("");
        }
    }
    return row;
}

std::string summary_csv(const FitResult& fit) {
    const auto& first = fit.chains.front();
    std::vector<SummaryRow> rows;
    for (int c = 0; c < first.num_scalars; ++c) {
        const auto& name = first.parameter_names[static_cast<std::size_t>(c)];
        std::vector<Eigen::VectorXd> per_chain;
        for (const auto& chain : fit.chains) {
            per_chain.push_back(chain.values(name));
        }
        rows.push_back(summarize_parameter(name, per_chain));
        if (name == "sigma_e_sq") {
            for (auto& v : per_chain) {
                v = v.cwiseSqrt();
            }
            rows.push_back(summarize_parameter("sigma_e", per_chain));
        }
    }
    std::string out = "parameter,median,q2_5,q97_5,r_hat,ess\n";
    for (const auto& r : rows) {
        out += r.parameter + "," + format_double(r.summary.median) + "," + format_double(r.summary.q2_5) + "," +
               format_double(r.summary.q97_5) + "," + format_double(r.r_hat) + "," + format_double(r.ess) + "\n";
    }
    return out;
}

int cmd_fit(const FitArgs& a) {
    Manifest manifest("fit");
    const auto [seed, seed_source] = resolve_seed(a.seed, 1);
    ModelSpec spec;
    spec.family = family_from_string(a.model);

    const fs::path data_path(a.data);
    const SpatialGraph graph = read_adjacency(a.adjacency);
    LongDataset data = read_dataset_csv(data_path, graph.num_areas());
    KeyValueFile data_meta;
    const auto sidecar = dataset_sidecar_path(data_path);
    if (fs::exists(sidecar)) {
        data_meta = KeyValueFile::read(sidecar);
        apply_covariate_metadata(data, data_meta);
        manifest.input(sidecar);
    }
    for (const auto& name : a.area_covariates) {
        auto it = std::find_if(data.covariate_info.begin(), data.covariate_info.end(),
                               [&](const CovariateInfo& c) { return c.name == name; });
        if (it == data.covariate_info.end()) {
            throw ValidationError("unknown covariate '" + name + "' in --area-covariates");
        }
        it->level = CovariateLevel::Area;
    }
    manifest.input(data_path);
    manifest.input(a.adjacency);

    FitOptions options;
    options.mcmc = default_mcmc_config(spec.family);
    if (a.burnin >= 0) {
        options.mcmc.burn_in = a.burnin;
    }
    if (a.iters > 0) {
        options.mcmc.iterations = a.iters;
    } else if (a.burnin >= 0) {
        options.mcmc.iterations = a.burnin + 10000;
    }
    options.mcmc.thin = a.thin;
    options.mcmc.num_chains = a.chains;
    options.mcmc.seed = seed;
    options.mcmc.store_area_effects = true;
    options.mcmc.validate();
    options.max_retries = a.retries;
    options.r_hat_threshold = a.rhat_threshold;
    options.chain_jobs = a.jobs;

    const fs::path dir(a.out);
    ensure_dir(dir);
    const FitResult fit = fit_model(spec, data, graph, options);

    for (const auto& chain : fit.chains) {
        const auto path = dir / ("chain_" + std::to_string(chain.chain + 1) + ".csv");
        write_chain(chain, path, fit.final_config, spec);
        manifest.output(path);
        manifest.output(chain_meta_path(path));
    }
    write_file_atomic(dir / "summary.csv", summary_csv(fit));
    manifest.output(dir / "summary.csv");
    const DiagnosticsReport all = diagnose(fit.chains, {}, options.r_hat_threshold);
    write_file_atomic(dir / "diagnostics.csv", all.to_csv());
    write_file_atomic(dir / "diagnostics.txt", all.to_text());
    manifest.output(dir / "diagnostics.csv");
    manifest.output(dir / "diagnostics.txt");

    const std::string scenario = data_meta.find("scenario").value_or("data");
    const int replicate = data_meta.find("replicate") ? parse_int(*data_meta.find("replicate"), "replicate") : 1;
    const ReplicateFit summary = summarize_fit(fit, data, scenario, replicate, to_string(spec.family));
    KeyValueFile meta;
    meta.set("model", to_string(spec.family));
    meta.set("data", a.data);
    meta.set("adjacency", a.adjacency);
    meta.set("scenario", scenario);
    meta.set("replicate", replicate);
    meta.set("iterations", fit.final_config.iterations);
    meta.set("burn_in", fit.final_config.burn_in);
    meta.set("thin", fit.final_config.thin);
    meta.set("chains", fit.final_config.num_chains);
    meta.set("seed", static_cast<unsigned long long>(seed));
    meta.set("attempts", fit.attempts);
    meta.set("converged", fit.converged);
    meta.set("max_r_hat", summary.max_r_hat);
    meta.set("dic", summary.dic.dic);
    meta.set("p_d", summary.dic.p_d);
    meta.set("mean_deviance", summary.dic.mean_deviance);
    meta.set("max_posterior_loglik", summary.max_posterior_loglik);
    for (const auto& [k, v] : data_meta.items()) {
        if (k.rfind("beta_true.", 0) == 0) {
            meta.set(k, v);
        }
    }
    meta.write(dir / "fit.meta");
    manifest.output(dir / "fit.meta");
    std::string warnings;
    for (const auto& w : fit.warnings) {
        warnings += w + "\n";
    }
    write_file_atomic(dir / "warnings.txt", warnings);
    manifest.output(dir / "warnings.txt");

    auto& f = manifest.flags();
    f.set("model", to_string(spec.family));
    f.set("data", a.data);
    f.set("adjacency", a.adjacency);
    f.set("iters", options.mcmc.iterations);
    f.set("burnin", options.mcmc.burn_in);
    f.set("thin", a.thin);
    f.set("chains", a.chains);
    f.set("jobs", a.jobs);
    f.set("retries", a.retries);
    f.set("rhat-threshold", a.rhat_threshold);
    if (!a.area_covariates.empty()) {
        f.set("area-covariates", list_text(a.area_covariates));
    }
    f.set("seed", static_cast<unsigned long long>(seed));
    f.set("out", a.out);
    manifest.note("converged", fit.converged ? "true" : "false");
    manifest.note("attempts", std::to_string(fit.attempts));
    manifest.write(dir / "manifest.txt", seed, seed_source);

    for (const auto& w : fit.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cout << fit.diagnostics.to_text();
    if (!fit.converged) {
        std::cerr << "error: chains did not converge (max R-hat " << format_double(summary.max_r_hat) << ")\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

// ---- diagnose ----

struct DiagnoseArgs {
    std::vector<std::string> chains;
    std::vector<std::string> parameters;
    double rhat_threshold = 1.02;
    std::string out = "diagnostics";
};

int cmd_diagnose(const DiagnoseArgs& a) {
    Manifest manifest("diagnose");
    if (a.chains.empty()) {
        throw ValidationError("no chain files given");
    }
    std::vector<ChainOutput> chains;
    for (const auto& p : a.chains) {
        chains.push_back(read_chain(p));
        manifest.input(p);
    }
    const DiagnosticsReport report = diagnose(chains, a.parameters, a.rhat_threshold);
    const fs::path dir(a.out);
    ensure_dir(dir);
    write_file_atomic(dir / "diagnostics.csv", report.to_csv());
    write_file_atomic(dir / "diagnostics.txt", report.to_text());
    manifest.output(dir / "diagnostics.csv");
    manifest.output(dir / "diagnostics.txt");
    auto& f = manifest.flags();
    f.set("chains", list_text(a.chains));
    if (!a.parameters.empty()) {
        f.set("parameters", list_text(a.parameters));
    }
    f.set("rhat-threshold", a.rhat_threshold);
    f.set("out", a.out);
    manifest.note("all_converged", report.all_converged ? "true" : "false");
    manifest.write(dir / "manifest.txt", 0, "none");
    std::cout << report.to_text();
    return kExitOk;
}

// ---- compare ----

struct CompareArgs {
    std::vector<std::string> fits;
    std::string out = "comparison";
};

int cmd_compare(const CompareArgs& a) {
    Manifest manifest("compare");
    if (a.fits.empty()) {
        throw ValidationError("no fit directories given");
    }
    StudyResult result;
    for (const auto& d : a.fits) {
        const fs::path dir(d);
        const auto meta_path = dir / "fit.meta";
        if (!fs::exists(meta_path)) {
            throw ValidationError(d + ": missing fit.meta");
        }
        const KeyValueFile meta = KeyValueFile::read(meta_path);
        const auto truth = truth_from_metadata(meta);
        if (truth.empty()) {
            throw ValidationError(d + ": missing truth metadata (beta_true.* keys); simulate the data with a sidecar");
        }
        ReplicateFit fit;
        fit.scenario = meta.get("scenario");
        fit.replicate = meta.get_int("replicate");
        fit.model = meta.get("model");
        fit.converged = meta.get("converged") == "true";
        fit.max_r_hat = meta.get_double("max_r_hat");
        fit.dic.dic = meta.get_double("dic");
        fit.dic.p_d = meta.get_double("p_d");
        fit.dic.mean_deviance = meta.get_double("mean_deviance");
        fit.max_posterior_loglik = meta.get_double("max_posterior_loglik");
        const CsvTable summary = CsvTable::read(dir / "summary.csv");
        const auto pc = summary.column("parameter");
        for (const auto& row : summary.rows) {
            if (row[pc].rfind("beta_", 0) != 0) {
                continue;
            }
            PosteriorSummary s;
            s.median = parse_double(row[summary.column("median")], "median");
            s.q2_5 = parse_double(row[summary.column("q2_5")], "q2_5");
            s.q97_5 = parse_double(row[summary.column("q97_5")], "q97_5");
            fit.coefficients[row[pc].substr(5)] = s;
        }
        auto& t = result.truth[fit.scenario];
        for (const auto& [k, v] : truth) {
            auto [it, inserted] = t.emplace(k, v);
            if (!inserted && it->second != v) {
                throw ValidationError(d + ": truth for '" + k + "' disagrees with another fit of scenario " +
                                      fit.scenario);
            }
        }
        result.fits.push_back(std::move(fit));
        manifest.input(meta_path);
        manifest.input(dir / "summary.csv");
    }
    result.report = build_report(result.fits, result.truth);
    result.warnings = result.report.warnings;
    const fs::path dir(a.out);
    ensure_dir(dir);
    manifest.outputs(write_study_outputs(result, dir));
    auto& f = manifest.flags();
    f.set("fits", list_text(a.fits));
    f.set("out", a.out);
    manifest.write(dir / "manifest.txt", 0, "none");
    for (const auto& w : result.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cout << result.report.rmse_csv();
    return kExitOk;
}

// ---- study ----

struct StudyArgs {
    std::string kind = "cross-sectional";
    std::vector<int> scenarios{3, 5, 8};
    int replicates = 20;
    bool full_grid = false;
    std::vector<std::string> models;
    int rows = 10;
    int cols = 10;
    int n_per_area = 5;
    int periods = 5;
    int chains = 2;
    int iters = 0;
    int burnin = -1;
    int thin = 10;
    int retries = 2;
    double rhat_threshold = 1.02;
    int jobs = 1;
    std::string seed;
    std::string out = "study";
};

int cmd_study(const StudyArgs& a) {
    Manifest manifest("study");
    const auto [seed, seed_source] = resolve_seed(a.seed, 11);
    StudyConfig config;
    config.kind = study_kind_from_string(a.kind);
    config.scenarios = a.scenarios;
    config.replicates = a.replicates;
    config.seed = seed;
    config.rows = a.rows;
    config.cols = a.cols;
    config.full_grid = a.full_grid;
    config.simulation.n_per_area = a.n_per_area;
    config.simulation.periods = config.kind == StudyKind::CrossSectional ? 1 : a.periods;
    for (const auto& m : a.models) {
        config.models.push_back(family_from_string(m));
    }
    config.chains = a.chains;
    config.r_hat_threshold = a.rhat_threshold;
    config.max_retries = a.retries;
    config.jobs = a.jobs;
    const auto models = config.models.empty() ? default_models(config.kind) : config.models;
    for (auto m : models) {
        McmcConfig c = default_mcmc_config(m);
        if (a.burnin >= 0) {
            c.burn_in = a.burnin;
            c.iterations = a.burnin + 10000;
        }
        if (a.iters > 0) {
            c.iterations = a.iters;
        }
        c.thin = a.thin;
        c.num_chains = a.chains;
        c.validate();
        config.mcmc[m] = c;
    }
    const StudyResult result = run_study(config);
    const fs::path dir(a.out);
    ensure_dir(dir);
    manifest.outputs(write_study_outputs(result, dir));
    if (!std::isnan(result.max_rcar_violation)) {
        manifest.note("max_rcar_violation", format_double(result.max_rcar_violation));
    }
    auto& f = manifest.flags();
    f.set("kind", to_string(config.kind));
    f.set("scenarios", list_text(a.scenarios));
    f.set("replicates", a.replicates);
    f.set("full-grid", a.full_grid);
    std::vector<std::string> model_names;
    for (auto m : models) {
        model_names.push_back(to_string(m));
    }
    f.set("models", list_text(model_names));
    f.set("rows", a.rows);
    f.set("cols", a.cols);
    f.set("n-per-area", a.n_per_area);
    f.set("periods", a.periods);
    f.set("chains", a.chains);
    if (a.iters > 0) {
        f.set("iters", a.iters);
    }
    if (a.burnin >= 0) {
        f.set("burnin", a.burnin);
    }
    f.set("thin", a.thin);
    f.set("retries", a.retries);
    f.set("rhat-threshold", a.rhat_threshold);
    f.set("jobs", a.jobs);
    f.set("seed", static_cast<unsigned long long>(seed));
    f.set("out", a.out);
    manifest.write(dir / "manifest.txt", seed, seed_source);
    for (const auto& w : result.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cout << result.report.rmse_csv() << result.report.dic_csv();
    return kExitOk;
}

// Expands `--config FILE` into flags that were not given on the command line.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
    if (args.size() < 2) {
        return args;
    }
    std::string config_path;
    std::size_t erase_from = 0;
    std::size_t erase_count = 0;
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            erase_from = i;
            erase_count = 2;
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            erase_from = i;
            erase_count = 1;
            break;
        }
    }
    if (config_path.empty()) {
        return args;
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(erase_from),
               args.begin() + static_cast<std::ptrdiff_t>(erase_from + erase_count));
    const std::string command = args[1];
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands([](const CLI::App*) { return true; })) {
        if (s->get_name() == command) {
            sub = s;
        }
    }
    if (sub == nullptr) {
        throw ValidationError("--config needs a subcommand before it");
    }
    const KeyValueFile config = KeyValueFile::read(config_path);
    if (auto c = config.find("run.command"); c && *c != command) {
        throw ValidationError("config file was written by '" + *c + "', not '" + command + "'");
    }
    auto given = [&](const std::string& key) {
        for (std::size_t i = 2; i < args.size(); ++i) {
            if (args[i] == "--" + key || args[i].rfind("--" + key + "=", 0) == 0) {
                return true;
            }
        }
        return false;
    };
    std::vector<std::string> extra;
    for (const auto& [key, value] : config.items()) {
        if (key.rfind("run.", 0) == 0 || given(key)) {
            continue;
        }
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr) {
            throw ValidationError("unknown key '" + key + "' in " + config_path);
        }
        if (opt->get_type_size() == 0) {
            if (value == "true") {
                extra.push_back("--" + key);
            } else if (value != "false") {
                throw ValidationError("flag '" + key + "' in " + config_path + " must be true or false");
            }
        } else {
            extra.push_back("--" + key + "=" + value);
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multilevel CAR models for areal data: simulate, fit, diagnose, compare", "carlevel"};
    app.set_version_flag("--version", CARLEVEL_VERSION);
    app.require_subcommand(1);
    const std::string config_help = "key = value file mirroring these flags (e.g. a manifest.txt)";

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Simulate one dataset on a lattice");
    s->add_option("--kind", sim.kind, "cross-sectional or longitudinal")->capture_default_str();
    s->add_option("--scenario", sim.scenario, "Scenario id")->capture_default_str();
    s->add_option("--replicate", sim.replicate, "Replicate number (selects the effect stream)")->capture_default_str();
    s->add_flag("--full-grid", sim.full_grid, "Use the 81-scenario longitudinal grid");
    s->add_option("--rows", sim.rows)->capture_default_str();
    s->add_option("--cols", sim.cols)->capture_default_str();
    s->add_option("--n-per-area", sim.n_per_area)->capture_default_str();
    s->add_option("--periods", sim.periods, "Periods (default 1 or 5 by kind)");
    s->add_option("--seed", sim.seed, "Seed (fallback: CARLEVEL_SEED, then 1)");
    s->add_option("--out", sim.out, "Output directory")->capture_default_str();
    s->add_option("--config", config_help);

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit a model with several MCMC chains");
    f->add_option("--model", fit.model, "cl2, car, rcar, cl3, car-anova or conv")->required();
    f->add_option("--data", fit.data, "Dataset CSV (t,i,j,y,covariates...)")->required();
    f->add_option("--adjacency", fit.adjacency, "Adjacency matrix or edge-list file")->required();
    f->add_option("--iters", fit.iters, "Sweeps including burn-in (default: model-specific)");
    f->add_option("--burnin", fit.burnin, "Burn-in sweeps (default: model-specific)");
    f->add_option("--thin", fit.thin)->capture_default_str();
    f->add_option("--chains", fit.chains)->capture_default_str();
    f->add_option("--jobs", fit.jobs, "Chain threads (0: one per chain)")->capture_default_str();
    f->add_option("--retries", fit.retries, "Doubling retries while R-hat fails")->capture_default_str();
    f->add_option("--rhat-threshold", fit.rhat_threshold)->capture_default_str();
    f->add_option("--area-covariates", fit.area_covariates, "Covariates measured at area level")->delimiter(',');
    f->add_option("--seed", fit.seed, "Seed (fallback: CARLEVEL_SEED, then 1)");
    f->add_option("--out", fit.out, "Output directory")->capture_default_str();
    f->add_option("--config", config_help);

    DiagnoseArgs diag;
    auto* d = app.add_subcommand("diagnose", "Convergence diagnostics for chain CSV files");
    d->add_option("--chains", diag.chains, "Chain CSV files")->required()->delimiter(',');
    d->add_option("--parameters", diag.parameters, "Parameters (default: all scalars)")->delimiter(',');
    d->add_option("--rhat-threshold", diag.rhat_threshold)->capture_default_str();
    d->add_option("--out", diag.out, "Output directory")->capture_default_str();
    d->add_option("--config", config_help);

    CompareArgs cmp;
    auto* c = app.add_subcommand("compare", "Bias, RMSE, coverage and DIC across fit directories");
    c->add_option("--fits", cmp.fits, "Directories written by fit")->required()->delimiter(',');
    c->add_option("--out", cmp.out, "Output directory")->capture_default_str();
    c->add_option("--config", config_help);

    StudyArgs st;
    auto* y = app.add_subcommand("study", "Simulate replicates, fit every model and compare");
    y->add_option("--kind", st.kind)->capture_default_str();
    y->add_option("--scenarios", st.scenarios, "Scenario ids")->delimiter(',');
    y->add_option("--replicates", st.replicates)->capture_default_str();
    y->add_flag("--full-grid", st.full_grid, "Use the 81-scenario longitudinal grid");
    y->add_option("--models", st.models, "Models (default: the three of the kind)")->delimiter(',');
    y->add_option("--rows", st.rows)->capture_default_str();
    y->add_option("--cols", st.cols)->capture_default_str();
    y->add_option("--n-per-area", st.n_per_area)->capture_default_str();
    y->add_option("--periods", st.periods, "Periods for longitudinal data")->capture_default_str();
    y->add_option("--chains", st.chains)->capture_default_str();
    y->add_option("--iters", st.iters, "Sweeps including burn-in (default: model-specific)");
    y->add_option("--burnin", st.burnin, "Burn-in sweeps (default: model-specific)");
    y->add_option("--thin", st.thin)->capture_default_str();
    y->add_option("--retries", st.retries)->capture_default_str();
    y->add_option("--rhat-threshold", st.rhat_threshold)->capture_default_str();
    y->add_option("--jobs", st.jobs, "Concurrent fits")->capture_default_str();
    y->add_option("--seed", st.seed, "Seed (fallback: CARLEVEL_SEED, then 11)");
    y->add_option("--out", st.out, "Output directory")->capture_default_str();
    y->add_option("--config", config_help);

    try {
        std::vector<std::string> args(argv, argv + argc);
        args = expand_config(app, std::move(args));
        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
        app.parse(std::move(reversed));
        if (s->parsed()) {
            return cmd_simulate(sim);
        }
        if (f->parsed()) {
            return cmd_fit(fit);
        }
        if (d->parsed()) {
            return cmd_diagnose(diag);
        }
        if (c->parsed()) {
            return cmd_compare(cmp);
        }
        return cmd_study(st);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}
