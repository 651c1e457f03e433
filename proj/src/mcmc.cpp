#include "carlevel/mcmc.hpp"

#include "carlevel/errors.hpp"
#include "carlevel/rng.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <thread>

namespace carlevel {

void McmcConfig::validate() const {
    if (iterations < 1) {
        throw ValidationError("iterations must be positive");
    }
    if (burn_in < 0 || burn_in >= iterations) {
        throw ValidationError("burn-in must satisfy 0 <= burn_in < iterations");
    }
    if (thin < 1) {
        throw ValidationError("thin must be positive");
    }
    if (num_chains < 1) {
        throw ValidationError("need at least one chain");
    }
    if (stored_draws() < min_stored_draws) {
        throw ValidationError("configuration stores " + std::to_string(stored_draws()) + " draws; at least " +
                              std::to_string(min_stored_draws) + " are required");
    }
}

McmcConfig default_mcmc_config(ModelFamily family) {
    McmcConfig c;
    switch (family) {
        case ModelFamily::CL2: c.burn_in = 5000; break;
        case ModelFamily::CAR:
        case ModelFamily::RCAR: c.burn_in = 15000; break;
        case ModelFamily::CL3:
        case ModelFamily::Conv: c.burn_in = 8000; break;
        case ModelFamily::CarAnova: c.burn_in = 25000; break;
    }
    c.iterations = c.burn_in + 10000;
    return c;
}

int ChainOutput::column(const std::string& name) const {
    for (std::size_t c = 0; c < parameter_names.size(); ++c) {
        if (parameter_names[c] == name) {
            return static_cast<int>(c);
        }
    }
    throw ValidationError("chain has no parameter '" + name + "'");
}

Eigen::VectorXd ChainOutput::values(const std::string& name) const { return draws.col(column(name)); }

ChainOutput run_chain(const ModelSpec& spec, const LongDataset& data, const SpatialGraph& graph,
                      const McmcConfig& config, int stream_id) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    GibbsSampler sampler(spec, data, graph);
    RngStream rng(config.seed, static_cast<std::uint64_t>(stream_id));

    ChainOutput out;
    out.chain = stream_id;
    out.seed = config.seed;
    out.warnings = sampler.warnings();
    out.parameter_names = sampler.scalar_names();
    out.num_scalars = static_cast<int>(out.parameter_names.size());
    if (config.store_area_effects) {
        const auto names = sampler.area_effect_names();
        out.parameter_names.insert(out.parameter_names.end(), names.begin(), names.end());
    }
    if (config.store_individual_effects) {
        const auto names = sampler.individual_effect_names();
        out.parameter_names.insert(out.parameter_names.end(), names.begin(), names.end());
    }
    const int stored = config.stored_draws();
    out.draws.resize(stored, static_cast<Eigen::Index>(out.parameter_names.size()));
    out.deviance.reserve(static_cast<std::size_t>(stored));
    out.log_likelihood.reserve(static_cast<std::size_t>(stored));

    ModelState state = sampler.init_state(rng, config.overdispersed_init && stream_id > 0);
    Eigen::VectorXd mean_eta = Eigen::VectorXd::Zero(data.size());
    double mean_sigma = 0.0;
    std::vector<double> row;
    int r = 0;
    for (int s = 1; s <= config.iterations; ++s) {
        try {
            sampler.sweep(state, rng);
            sampler.check_state(state);
        } catch (const NumericalError& e) {
            throw NumericalError("chain " + std::to_string(stream_id) + ", sweep " + std::to_string(s) + ": " +
                                 e.what());
        }
        if (s <= config.burn_in || (s - config.burn_in) % config.thin != 0) {
            continue;
        }
        row.clear();
        sampler.scalar_values(state, row);
        if (config.store_area_effects) {
            sampler.area_effect_values(state, row);
        }
        if (config.store_individual_effects) {
            sampler.individual_effect_values(state, row);
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            out.draws(r, static_cast<Eigen::Index>(c)) = row[c];
        }
        const Eigen::VectorXd eta = sampler.linear_predictor(state);
        const double ll = sampler.log_likelihood(eta, state.sigma_e_sq);
        out.log_likelihood.push_back(ll);
        out.deviance.push_back(-2.0 * ll);
        ++r;
        mean_eta += (eta - mean_eta) / r;
        mean_sigma += (state.sigma_e_sq - mean_sigma) / r;
    }
    out.deviance_at_mean = -2.0 * sampler.log_likelihood(mean_eta, mean_sigma);
    out.mean_linear_predictor = std::move(mean_eta);
    out.mean_sigma_e_sq = mean_sigma;
    out.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::vector<ChainOutput> run_chains(const ModelSpec& spec, const LongDataset& data, const SpatialGraph& graph,
                                    const McmcConfig& config, int jobs) {
    config.validate();
    const int n = config.num_chains;
    std::vector<ChainOutput> out(static_cast<std::size_t>(n));
    auto run_one = [&](int c) {
        try {
            out[static_cast<std::size_t>(c)] = run_chain(spec, data, graph, config, c);
        } catch (const std::exception& e) {
            ChainOutput failed;
            failed.chain = c;
            failed.seed = config.seed;
            failed.error = e.what();
            out[static_cast<std::size_t>(c)] = std::move(failed);
        }
    };
    const int workers = std::min(n, jobs > 0 ? jobs : n);
    if (workers <= 1) {
        for (int c = 0; c < n; ++c) {
            run_one(c);
        }
        return out;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (int c = next++; c < n; c = next++) {
                run_one(c);
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    return out;
}

double pooled_deviance_at_mean(const std::vector<ChainOutput>& chains, const Eigen::VectorXd& y) {
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(y.size());
    double sigma = 0.0;
    int used = 0;
    for (const auto& c : chains) {
        if (!c.ok() || c.mean_linear_predictor.size() != y.size()) {
            continue;
        }
        eta += c.mean_linear_predictor;
        sigma += c.mean_sigma_e_sq;
        ++used;
    }
    if (used == 0) {
        throw ValidationError("no chain carries posterior-mean fitted values");
    }
    eta /= used;
    sigma /= used;
    const double n = static_cast<double>(y.size());
    return n * std::log(2.0 * std::numbers::pi * sigma) + (y - eta).squaredNorm() / sigma;
}

std::filesystem::path chain_meta_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".meta");
    return p;
}

std::string chain_csv_string(const ChainOutput& chain) {
    std::string out = join(chain.parameter_names, ",");
    out += chain.parameter_names.empty() ? "deviance,log_likelihood\n" : ",deviance,log_likelihood\n";
    for (Eigen::Index r = 0; r < chain.draws.rows(); ++r) {
        for (Eigen::Index c = 0; c < chain.draws.cols(); ++c) {
            out += format_double(chain.draws(r, c));
            out += ',';
        }
        out += format_double(chain.deviance[static_cast<std::size_t>(r)]);
        out += ',';
        out += format_double(chain.log_likelihood[static_cast<std::size_t>(r)]);
        out += '\n';
    }
    return out;
}

void write_chain(const ChainOutput& chain, const std::filesystem::path& csv, const McmcConfig& config,
                 const ModelSpec& spec) {
    write_file_atomic(csv, chain_csv_string(chain));
    KeyValueFile meta;
    meta.set("model", to_string(spec.family));
    meta.set("chain", chain.chain);
    meta.set("seed", static_cast<unsigned long long>(chain.seed));
    meta.set("stream_id", chain.chain);
    meta.set("iterations", config.iterations);
    meta.set("burn_in", config.burn_in);
    meta.set("thin", config.thin);
    meta.set("overdispersed_init", config.overdispersed_init);
    meta.set("stored_draws", static_cast<int>(chain.draws.rows()));
    meta.set("num_scalars", chain.num_scalars);
    meta.set("deviance_at_mean", chain.deviance_at_mean);
    meta.set("rng", "xoshiro256++ seeded by splitmix64; stream k = k jumps of 2^128");
    meta.set("wall_time", chain.wall_time_seconds);
    meta.write(chain_meta_path(csv));
}

ChainOutput read_chain(const std::filesystem::path& csv) {
    const CsvTable table = CsvTable::read(csv);
    if (table.header.size() < 2 || table.header[table.header.size() - 2] != "deviance" ||
        table.header.back() != "log_likelihood") {
        throw ValidationError(csv.string() + ": chain CSV must end with deviance,log_likelihood columns");
    }
    ChainOutput out;
    const std::size_t p = table.header.size() - 2;
    out.parameter_names.assign(table.header.begin(), table.header.begin() + static_cast<std::ptrdiff_t>(p));
    out.num_scalars = static_cast<int>(p);
    out.draws.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        for (std::size_t c = 0; c < p; ++c) {
            out.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_double(row[c], table.header[c]);
        }
        out.deviance.push_back(parse_double(row[p], "deviance"));
        out.log_likelihood.push_back(parse_double(row[p + 1], "log_likelihood"));
    }
    const auto meta_path = chain_meta_path(csv);
    if (std::filesystem::exists(meta_path)) {
        const auto meta = KeyValueFile::read(meta_path);
        if (auto v = meta.find("num_scalars")) {
            out.num_scalars = parse_int(*v, "num_scalars");
        }
        if (auto v = meta.find("deviance_at_mean")) {
            out.deviance_at_mean = parse_double(*v, "deviance_at_mean");
        }
        if (auto v = meta.find("chain")) {
            out.chain = parse_int(*v, "chain");
        }
        if (auto v = meta.find("wall_time")) {
            out.wall_time_seconds = parse_double(*v, "wall_time");
        }
    }
    return out;
}

}  // namespace carlevel
