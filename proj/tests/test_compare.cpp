#include "carlevel/compare.hpp"
#include "carlevel/errors.hpp"
#include "carlevel/rng.hpp"
#include "carlevel/sampling.hpp"
#include "carlevel/textio.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace carlevel;

TEST_CASE("bias and rmse") {
    const auto exact = bias_rmse({0.5, 0.5, 0.5}, 0.5);
    CHECK(exact.bias == 0.0);
    CHECK(exact.rmse == 0.0);

    const auto sym = bias_rmse({1.0, 3.0}, 2.0);
    CHECK(sym.bias == doctest::Approx(0.0));
    CHECK(sym.rmse == doctest::Approx(std::sqrt(2.0)));

    const auto r = bias_rmse({2.0, 4.0, 6.0}, 3.0);
    CHECK(r.bias == doctest::Approx(1.0));
    CHECK(r.variance == doctest::Approx(4.0));
    CHECK(r.rmse == doctest::Approx(std::sqrt(5.0)));
    CHECK_FALSE(r.bias_only);

    const auto one = bias_rmse({2.5}, 2.0);
    CHECK(one.bias_only);
    CHECK(one.bias == doctest::Approx(0.5));
    CHECK(one.rmse == doctest::Approx(0.5));
}

TEST_CASE("rmse squared is bias squared plus sample variance") {
    RngStream rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> est(2 + rep % 20);
        for (auto& e : est) {
            e = sample_normal(rng, 0.3, 2.0);
        }
        const double truth = sample_normal(rng, 0.0, 1.0);
        const auto r = bias_rmse(est, truth);
        CHECK(r.rmse * r.rmse == doctest::Approx(r.bias * r.bias + r.variance).epsilon(1e-12));
    }
}

TEST_CASE("dic") {
    const auto flat = dic({10.0, 10.0, 10.0}, 10.0);
    CHECK(flat.dic == doctest::Approx(10.0));
    CHECK(flat.p_d == doctest::Approx(0.0));

    const auto d = dic({8.0, 12.0}, 9.0);
    CHECK(d.mean_deviance == doctest::Approx(10.0));
    CHECK(d.p_d == doctest::Approx(1.0));
    CHECK(d.dic == doctest::Approx(11.0));

    DicResult negative;
    CHECK_NOTHROW(negative = dic({-120.0, -110.0}, -118.0));
    CHECK(negative.dic == doctest::Approx(-112.0));

    std::vector<double> draws{3.0, 9.0, 1.0, 7.0, 4.0};
    const auto a = dic(draws, 2.0);
    std::reverse(draws.begin(), draws.end());
    const auto b = dic(draws, 2.0);
    CHECK(a.dic == b.dic);
}

TEST_CASE("coverage") {
    CHECK(coverage({{0, 2}, {1, 3}}, 1.5) == 1.0);
    CHECK(coverage({{0, 1}, {2, 3}}, 1.5) == 0.0);
    CHECK(coverage({{0, 2}, {1, 3}, {1.5, 1.5}, {2, 4}}, 1.5) == doctest::Approx(0.75));
    CHECK_THROWS_AS(coverage({{2, 1}}, 1.5), ValidationError);

    RngStream rng(2);
    std::vector<std::pair<double, double>> iv(50);
    for (auto& [lo, hi] : iv) {
        lo = sample_normal(rng, 0.0, 1.0);
        hi = lo + sample_uniform(rng, 0.0, 1.0);
    }
    const double before = coverage(iv, 0.2);
    for (auto& [lo, hi] : iv) {
        lo -= 0.3;
        hi += 0.3;
    }
    CHECK(coverage(iv, 0.2) >= before);
}

TEST_CASE("posterior summaries") {
    std::vector<double> draws(100);
    for (int i = 0; i < 100; ++i) {
        draws[static_cast<std::size_t>(i)] = i + 1.0;
    }
    const auto s = summarize_posterior(draws);
    CHECK(s.median == doctest::Approx(50.5));
    CHECK(s.q2_5 == doctest::Approx(3.475));
    CHECK(s.q97_5 == doctest::Approx(97.525));

    const auto c = summarize_posterior(std::vector<double>(60, 1.25));
    CHECK(c.median == 1.25);
    CHECK(c.q2_5 == 1.25);
    CHECK(c.q97_5 == 1.25);

    RngStream rng(3);
    std::vector<double> sym(20000);
    for (auto& v : sym) {
        v = sample_normal(rng, 0.0, 1.0);
    }
    CHECK(std::abs(summarize_posterior(sym).median) < 0.05);
    CHECK(quantile({1.0, 2.0}, 0.5) == doctest::Approx(1.5));
}

TEST_CASE("comparison report tables") {
    std::vector<ReplicateFit> fits;
    const std::vector<std::string> models{"cl2", "car", "rcar"};
    for (int rep = 1; rep <= 4; ++rep) {
        for (std::size_t m = 0; m < models.size(); ++m) {
            ReplicateFit f;
            f.scenario = "3";
            f.replicate = rep;
            f.model = models[m];
            const double est = 0.14 + 0.01 * static_cast<double>(m) * (rep % 2 == 0 ? 1.0 : -1.0);
            f.coefficients["beta_x2"] = {est, est - 0.2, est + 0.2};
            f.coefficients["beta_x1"] = {-1.5, -1.6, -1.4};
            f.dic = dic({100.0 + static_cast<double>(m) + rep, 102.0}, 99.0);
            fits.push_back(f);
        }
    }
    const auto report = build_report(fits, {{"3", {{"beta_x1", -1.5}, {"beta_x2", 0.14}}}});
    CHECK(report.coefficients.size() == 6);
    CHECK(report.models.size() == 3);
    CHECK(report.find("3", "car", "beta_x2").replicates == 4);
    CHECK(report.find("3", "cl2", "beta_x2").rmse == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(report.find("3", "rcar", "beta_x2").rmse > report.find("3", "car", "beta_x2").rmse);
    CHECK(report.find("3", "car", "beta_x1").coverage_95 == 1.0);
    CHECK_THROWS(report.find("3", "conv", "beta_x1"));

    const auto rmse = CsvTable::parse(report.rmse_csv());
    CHECK(rmse.header ==
          std::vector<std::string>{"scenario", "coefficient", "truth", "replicates", "cl2", "car", "rcar"});
    CHECK(rmse.rows.size() == 2);
    const auto cov = CsvTable::parse(report.coverage_csv());
    CHECK(cov.header.size() == 7);
    const auto d = CsvTable::parse(report.dic_csv());
    CHECK(d.header == std::vector<std::string>{"scenario", "model", "replicates", "dic", "p_d", "mean_deviance",
                                               "max_posterior_loglik", "not_converged"});
    CHECK(d.rows.size() == 3);
    CHECK(CsvTable::parse(fits_csv(fits)).rows.size() == 4 * 3 * 2);

    const auto single = build_report({fits.front()}, {{"3", {{"beta_x2", 0.14}}}});
    CHECK(single.coefficients.front().bias_only);
    CHECK_FALSE(single.warnings.empty());
}
