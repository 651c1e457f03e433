#include "dense_oracle.hpp"

#include "carlevel/errors.hpp"
#include "carlevel/models.hpp"

#include <doctest.h>

using namespace carlevel;

namespace {

const ModelFamily kAll[] = {ModelFamily::CL2, ModelFamily::CAR,      ModelFamily::RCAR,
                            ModelFamily::CL3, ModelFamily::CarAnova, ModelFamily::Conv};

void check_family(ModelFamily family, bool isolated = false, bool interaction = true) {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const auto r = oracle::check_conditionals(family, seed * 7919 + static_cast<std::uint64_t>(family), isolated,
                                                  interaction);
        INFO(to_string(family), " seed ", seed, " worst: ", r.worst);
        CHECK(r.checks > 0);
        CHECK(r.max_error < 1e-8);
    }
}

struct Fixture {
    RngStream rng{5};
    oracle::Problem problem;
    ModelSpec spec;

    explicit Fixture(ModelFamily family) : problem(oracle::random_problem(rng, family)) { spec.family = family; }
};

}  // namespace

TEST_CASE("family names round-trip") {
    for (auto f : kAll) {
        CHECK(family_from_string(to_string(f)) == f);
    }
    CHECK(to_string(ModelFamily::CarAnova) == "car-anova");
    CHECK_THROWS_AS(family_from_string("bym"), ValidationError);
    CHECK_FALSE(is_longitudinal(ModelFamily::RCAR));
    CHECK(is_longitudinal(ModelFamily::Conv));
}

TEST_CASE("full conditionals match the dense joint posterior") {
    SUBCASE("cl2") { check_family(ModelFamily::CL2); }
    SUBCASE("car") { check_family(ModelFamily::CAR); }
    SUBCASE("rcar") { check_family(ModelFamily::RCAR); }
    SUBCASE("cl3") { check_family(ModelFamily::CL3); }
    SUBCASE("car-anova") { check_family(ModelFamily::CarAnova); }
    SUBCASE("car-anova without interaction") { check_family(ModelFamily::CarAnova, false, false); }
    SUBCASE("conv") { check_family(ModelFamily::Conv); }
    SUBCASE("conv with an isolated area") { check_family(ModelFamily::Conv, true); }
    SUBCASE("car with an isolated area") { check_family(ModelFamily::CAR, true); }
}

TEST_CASE("oracle quadratic fit recovers a known Gaussian") {
    Eigen::Matrix2d prec;
    prec << 2.0, 0.5, 0.5, 1.0;
    const Eigen::Vector2d mu(0.3, -1.2);
    auto f = [&](const Eigen::VectorXd& x) { return -0.5 * (x - mu).dot(prec * (x - mu)) + 4.0; };
    const auto fit = oracle::quadratic_fit(f, Eigen::Vector2d(1.0, 1.0));
    CHECK((fit.mean - mu).norm() < 1e-12);
    CHECK((fit.covariance - prec.inverse()).norm() < 1e-12);
    const auto [a, b] = oracle::inverse_gamma_fit([](double v) { return -(3.5 + 1.0) * std::log(v) - 0.7 / v + 2.0; });
    CHECK(a == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(b == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("centering keeps the likelihood and enforces the constraints") {
    for (auto family : kAll) {
        Fixture fx(family);
        GibbsSampler sampler(fx.spec, fx.problem.data, fx.problem.graph);
        RngStream rng(17);
        ModelState state = sampler.init_state(rng);
        oracle::randomize(state, rng);
        const double before = sampler.log_likelihood(state);
        sampler.apply_centering(state, rng);
        INFO(to_string(family));
        CHECK(sampler.log_likelihood(state) == doctest::Approx(before).epsilon(1e-10));
        if (family == ModelFamily::RCAR) {
            const auto& psi = std::get<CrossSectionalEffects>(state.area).psi;
            CHECK((sampler.restriction()->z().transpose() * psi).cwiseAbs().maxCoeff() < 1e-10);
        }
        if (family == ModelFamily::CarAnova) {
            const auto& e = std::get<CarAnovaEffects>(state.area);
            CHECK(std::abs(e.phi.sum()) < 1e-10);
            CHECK(std::abs(e.delta.sum()) < 1e-10);
            CHECK(e.omega.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
        }
        if (family == ModelFamily::Conv) {
            const auto& e = std::get<ConvolutionEffects>(state.area);
            CHECK(e.phi.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("a sweep leaves a finite state") {
    for (auto family : kAll) {
        Fixture fx(family);
        GibbsSampler sampler(fx.spec, fx.problem.data, fx.problem.graph);
        RngStream rng(3);
        ModelState state = sampler.init_state(rng, true);
        for (int s = 0; s < 50; ++s) {
            sampler.sweep(state, rng);
        }
        CHECK_NOTHROW(sampler.check_state(state));
        std::vector<double> row;
        sampler.scalar_values(state, row);
        CHECK(row.size() == sampler.scalar_names().size());
        row.clear();
        sampler.area_effect_values(state, row);
        CHECK(row.size() == sampler.area_effect_names().size());
        row.clear();
        sampler.individual_effect_values(state, row);
        CHECK(row.size() == sampler.individual_effect_names().size());
    }
}

TEST_CASE("individual effect draws follow their conditional") {
    Fixture fx(ModelFamily::CL3);
    GibbsSampler sampler(fx.spec, fx.problem.data, fx.problem.graph);
    RngStream rng(23);
    ModelState state = sampler.init_state(rng);
    oracle::randomize(state, rng);
    const auto c = sampler.individual_conditional(state, 0);
    const int n = 40000;
    Eigen::MatrixXd draws(n, 2);
    for (int s = 0; s < n; ++s) {
        ModelState copy = state;
        sampler.update_individual_effects(copy, rng);
        draws(s, 0) = copy.individual->r0[0];
        draws(s, 1) = copy.individual->r1[0];
    }
    const Eigen::RowVector2d mean = draws.colwise().mean();
    const Eigen::MatrixXd centred = draws.rowwise() - mean;
    const Eigen::Matrix2d cov = centred.transpose() * centred / (n - 1.0);
    for (int a = 0; a < 2; ++a) {
        const double se = std::sqrt(c.covariance(a, a) / n);
        CHECK(std::abs(mean[a] - c.mean[a]) < 4.0 * se);
        for (int b = 0; b < 2; ++b) {
            const double scale = std::sqrt(c.covariance(a, a) * c.covariance(b, b));
            CHECK(std::abs(cov(a, b) - c.covariance(a, b)) < 0.03 * scale);
        }
    }
}

TEST_CASE("scalar names follow the family layout") {
    Fixture cs(ModelFamily::CAR);
    GibbsSampler car(cs.spec, cs.problem.data, cs.problem.graph);
    CHECK(car.scalar_names() ==
          std::vector<std::string>{"beta_intercept", "beta_x1", "beta_x2", "sigma_e_sq", "tau_sq", "rho"});
    Fixture lg(ModelFamily::CL3);
    GibbsSampler cl3(lg.spec, lg.problem.data, lg.problem.graph);
    const auto names = cl3.scalar_names();
    CHECK(names[3] == "beta_time");
    CHECK(names.back() == "sigma_r1");
    CHECK(cl3.area_effect_names().front() == "u0_1");
    CHECK(cl3.individual_effect_names().front() == "r0_1");
}

TEST_CASE("model and data must agree") {
    Fixture cs(ModelFamily::CAR);
    ModelSpec cl3;
    cl3.family = ModelFamily::CL3;
    CHECK_THROWS_WITH_AS(GibbsSampler(cl3, cs.problem.data, cs.problem.graph),
                         doctest::Contains("requires at least two periods"), ValidationError);
    Fixture lg(ModelFamily::Conv);
    ModelSpec car;
    car.family = ModelFamily::CAR;
    CHECK_THROWS_AS(GibbsSampler(car, lg.problem.data, lg.problem.graph), ValidationError);
    const SpatialGraph other = SpatialGraph::path(cs.problem.K + 1);
    CHECK_THROWS_AS(GibbsSampler(car, cs.problem.data, other), ValidationError);
}

TEST_CASE("conv warns about isolated areas") {
    RngStream rng(9);
    const auto p = oracle::random_problem(rng, ModelFamily::Conv, true);
    ModelSpec spec;
    spec.family = ModelFamily::Conv;
    GibbsSampler sampler(spec, p.data, p.graph);
    REQUIRE_FALSE(sampler.warnings().empty());
    CHECK(sampler.warnings().front().find("isolated") != std::string::npos);
}

TEST_CASE("restriction projection is idempotent and orthogonal") {
    RngStream rng(21);
    Eigen::MatrixXd z(6, 2);
    z.col(0).setOnes();
    for (int j = 0; j < 6; ++j) {
        z(j, 1) = sample_normal(rng, 0.0, 1.0);
    }
    const RestrictionMatrix r(z, {0, 2});
    Eigen::VectorXd psi = sample_standard_normal(rng, 6);
    const Eigen::VectorXd p1 = r.project(psi);
    CHECK((z.transpose() * p1).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.project(p1) - p1).norm() < 1e-12);
    CHECK((psi - p1 - z * r.coefficients(psi)).norm() < 1e-12);
    const Eigen::MatrixXd proj = r.projector();
    CHECK((proj * proj - proj).norm() < 1e-12);
    CHECK((proj - proj.transpose()).norm() < 1e-12);
}

TEST_CASE("rank-deficient designs are rejected at initialisation") {
    Fixture fx(ModelFamily::CAR);
    auto data = fx.problem.data;
    data.covariates.col(1) = data.covariates.col(0);
    GibbsSampler sampler(fx.spec, data, fx.problem.graph);
    RngStream rng(1);
    CHECK_THROWS_WITH(sampler.init_state(rng), doctest::Contains("rank-deficient"));
}
