#include "carlevel/diagnostics.hpp"
#include "carlevel/errors.hpp"
#include "carlevel/mcmc.hpp"
#include "carlevel/models.hpp"
#include "carlevel/simulate.hpp"

#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <set>
#include <thread>

using namespace carlevel;

namespace {

struct Problem {
    SpatialGraph graph;
    LongDataset data;
};

Problem cross_sectional(int rows, int cols, std::uint64_t seed) {
    Problem p{lattice_geography(rows, cols), {}};
    RngStream design(seed);
    RngStream effect(seed + 1);
    const auto sc = find_scenario(StudyKind::CrossSectional, 3);
    p.data = simulate_cross_sectional(p.graph, sc, SimulationConfig{}, design, effect).data;
    return p;
}

McmcConfig small_config() {
    McmcConfig c;
    c.iterations = 200;
    c.burn_in = 100;
    c.thin = 10;
    c.min_stored_draws = 1;
    c.seed = 42;
    return c;
}

bool same(const ChainOutput& a, const ChainOutput& b) {
    return a.parameter_names == b.parameter_names && a.draws.rows() == b.draws.rows() &&
           a.draws.cols() == b.draws.cols() && (a.draws.array() == b.draws.array()).all() &&
           a.deviance == b.deviance && a.log_likelihood == b.log_likelihood;
}

}  // namespace

TEST_CASE("configuration checks") {
    McmcConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.thin == 10);
    CHECK(c.num_chains == 2);
    c.burn_in = c.iterations;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = McmcConfig{};
    c.iterations = 1000;
    c.burn_in = 500;
    CHECK_THROWS_WITH(c.validate(), doctest::Contains("at least 100"));
    c.thin = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK(default_mcmc_config(ModelFamily::CL2).burn_in == 5000);
    CHECK(default_mcmc_config(ModelFamily::CarAnova).burn_in == 25000);
    CHECK(default_mcmc_config(ModelFamily::Conv).iterations == 18000);
}

TEST_CASE("stored draw bookkeeping") {
    const auto p = cross_sectional(3, 3, 5);
    ModelSpec spec;
    spec.family = ModelFamily::CAR;
    const auto out = run_chain(spec, p.data, p.graph, small_config(), 0);
    CHECK(out.draws.rows() == 10);
    CHECK(out.deviance.size() == 10);
    CHECK(out.log_likelihood.size() == 10);
    const std::set<std::string> unique(out.parameter_names.begin(), out.parameter_names.end());
    CHECK(unique.size() == out.parameter_names.size());
    CHECK(static_cast<Eigen::Index>(out.parameter_names.size()) == out.draws.cols());
    CHECK(out.column("rho") >= 0);
    CHECK(out.column("psi_1") >= out.num_scalars);

    auto odd = small_config();
    odd.iterations = 207;
    odd.burn_in = 100;
    odd.thin = 7;
    CHECK(run_chain(spec, p.data, p.graph, odd, 0).draws.rows() == (207 - 100) / 7);
}

TEST_CASE("chains are deterministic and independent of scheduling") {
    const auto p = cross_sectional(3, 3, 6);
    ModelSpec spec;
    spec.family = ModelFamily::CAR;
    const auto cfg = small_config();
    CHECK(same(run_chain(spec, p.data, p.graph, cfg, 0), run_chain(spec, p.data, p.graph, cfg, 0)));

    auto one = cfg;
    one.num_chains = 1;
    const auto alone = run_chains(spec, p.data, p.graph, one);
    const auto together = run_chains(spec, p.data, p.graph, cfg, 2);
    const auto serial = run_chains(spec, p.data, p.graph, cfg, 1);
    REQUIRE(alone.size() == 1);
    REQUIRE(together.size() == 2);
    CHECK(same(alone[0], together[0]));
    CHECK(same(together[0], serial[0]));
    CHECK(same(together[1], serial[1]));
    CHECK(together[0].chain == 0);
    CHECK(together[1].chain == 1);
    CHECK_FALSE(same(together[0], together[1]));
}

TEST_CASE("overdispersed initial values differ between chains") {
    const auto p = cross_sectional(3, 3, 7);
    ModelSpec spec;
    spec.family = ModelFamily::CL2;
    GibbsSampler sampler(spec, p.data, p.graph);
    RngStream a(1);
    RngStream b(1);
    const auto plain = sampler.init_state(a, false);
    const auto wide = sampler.init_state(b, true);
    CHECK((plain.beta - wide.beta).cwiseAbs().minCoeff() > 0.0);
    RngStream c(2);
    CHECK((sampler.init_state(c, true).beta - wide.beta).cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("chain files round-trip") {
    const auto p = cross_sectional(3, 3, 8);
    ModelSpec spec;
    spec.family = ModelFamily::RCAR;
    const auto cfg = small_config();
    const auto out = run_chain(spec, p.data, p.graph, cfg, 1);
    const auto dir = std::filesystem::temp_directory_path() / "carlevel_mcmc_tests";
    std::filesystem::create_directories(dir);
    const auto csv = dir / "chain.csv";
    write_chain(out, csv, cfg, spec);
    CHECK(std::filesystem::exists(chain_meta_path(csv)));
    const auto back = read_chain(csv);
    CHECK(back.parameter_names == out.parameter_names);
    CHECK(back.num_scalars == out.num_scalars);
    CHECK((back.draws - out.draws).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.deviance == out.deviance);
    CHECK(chain_csv_string(back) == chain_csv_string(out));
}

TEST_CASE("cl2 converges on a 50-area problem") {
    const auto p = cross_sectional(5, 10, 9);
    ModelSpec spec;
    spec.family = ModelFamily::CL2;
    McmcConfig cfg;
    cfg.iterations = 20000;
    cfg.burn_in = 5000;
    cfg.seed = 3;
    const auto chains = run_chains(spec, p.data, p.graph, cfg);
    for (const std::string name : {"beta_intercept", "beta_x1", "beta_x2"}) {
        INFO(name);
        CHECK(gelman_rubin({chains[0].values(name), chains[1].values(name)}) < 1.02);
    }
}

TEST_CASE("four parallel chains cost about one chain of wall time") {
    if (std::thread::hardware_concurrency() < 4) {
        MESSAGE("skipped: fewer than 4 hardware threads");
        return;
    }
    const auto p = cross_sectional(10, 10, 10);
    ModelSpec spec;
    spec.family = ModelFamily::CAR;
    McmcConfig cfg;
    cfg.iterations = 6000;
    cfg.burn_in = 1000;
    auto timed = [&](int chains) {
        auto c = cfg;
        c.num_chains = chains;
        const auto t0 = std::chrono::steady_clock::now();
        run_chains(spec, p.data, p.graph, c);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    const double single = timed(1);
    CHECK(timed(4) < 1.5 * single);
}
