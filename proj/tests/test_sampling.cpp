#include "carlevel/errors.hpp"
#include "carlevel/graph.hpp"
#include "carlevel/rng.hpp"
#include "carlevel/sampling.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace carlevel;

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments moments(const std::vector<double>& x) {
    Moments m;
    m.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    for (double v : x) {
        m.var += (v - m.mean) * (v - m.mean);
    }
    m.var /= static_cast<double>(x.size() - 1);
    return m;
}

// Kolmogorov-Smirnov distance of a sample from U(lo, hi).
double ks_uniform(std::vector<double> x, double lo, double hi) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = (x[i] - lo) / (hi - lo);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

Eigen::MatrixXd empirical_covariance(const std::vector<Eigen::VectorXd>& draws) {
    const Eigen::Index k = draws.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
    for (const auto& d : draws) {
        mean += d;
    }
    mean /= static_cast<double>(draws.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
    for (const auto& d : draws) {
        cov += (d - mean) * (d - mean).transpose();
    }
    return cov / static_cast<double>(draws.size() - 1);
}

std::vector<double> slice_chain(RngStream& rng, const std::function<double(double)>& f, double start, double lo,
                                double hi, int n) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    double x = start;
    for (int i = 0; i < n; ++i) {
        x = slice_sample(rng, f, x, lo, hi);
        out.push_back(x);
    }
    return out;
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
    RngStream a(42, 0);
    RngStream b(42, 0);
    RngStream c(42, 1);
    RngStream d(43, 0);
    std::set<std::uint64_t> seen;
    bool differs_c = false;
    bool differs_d = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a();
        CHECK(x == b());
        differs_c = differs_c || x != c();
        differs_d = differs_d || x != d();
        seen.insert(x);
    }
    CHECK(differs_c);
    CHECK(differs_d);
    CHECK(seen.size() == 1000);

    RngStream e(42, 0);
    e.jump();
    RngStream f(42, 1);
    for (int i = 0; i < 10; ++i) {
        CHECK(e() == f());
    }
    CHECK(mix_seed(1, 2) != mix_seed(1, 3));
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
}

TEST_CASE("independent streams are uncorrelated") {
    RngStream a(7, 0);
    RngStream b(7, 1);
    const int n = 100000;
    double sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxy += (a.uniform01() - 0.5) * (b.uniform01() - 0.5);
    }
    // Correlation of two independent uniforms: sd 1/sqrt(n).
    CHECK(std::abs(sxy / n * 12.0) < 4.0 / std::sqrt(n));
}

TEST_CASE("normal and uniform moments") {
    RngStream rng(1);
    std::vector<double> z(1000000);
    for (auto& v : z) {
        v = sample_normal(rng, 0.0, 1.0);
    }
    const auto mz = moments(z);
    CHECK(std::abs(mz.mean) < 0.005);
    CHECK(std::abs(mz.var - 1.0) < 0.005);
    std::vector<double> u(1000000);
    for (auto& v : u) {
        v = sample_uniform(rng, 0.0, 1.0);
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
    CHECK(std::abs(moments(u).var - 1.0 / 12.0) < 0.002);

    CHECK(std::abs(sample_normal(rng, 3.0, 1e-12) - 3.0) < 1e-10);
    CHECK_THROWS_AS(sample_normal(rng, 0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(sample_normal(rng, 0.0, -1.0), ValidationError);
    CHECK_THROWS_AS(sample_uniform(rng, 1.0, 1.0), ValidationError);
}

TEST_CASE("inverse gamma draws") {
    RngStream rng(2);
    std::vector<double> x(1000000);
    for (auto& v : x) {
        v = sample_inverse_gamma(rng, 3.0, 2.0);
    }
    CHECK(moments(x).mean == doctest::Approx(1.0).epsilon(0.02));

    // Reciprocals follow Gamma(shape 3, rate 2): mean 1.5, variance 0.75.
    std::vector<double> inv(x.size());
    std::transform(x.begin(), x.end(), inv.begin(), [](double v) { return 1.0 / v; });
    const auto mi = moments(inv);
    CHECK(mi.mean == doctest::Approx(1.5).epsilon(0.01));
    CHECK(mi.var == doctest::Approx(0.75).epsilon(0.02));

    for (int i = 0; i < 100000; ++i) {
        REQUIRE(sample_inverse_gamma(rng, 1.0, 0.01) > 0.0);
    }
    CHECK_THROWS_AS(sample_inverse_gamma(rng, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(sample_inverse_gamma(rng, 1.0, -1.0), ValidationError);
}

TEST_CASE("gamma draws use the rate parameterisation") {
    RngStream rng(8);
    std::vector<double> x(400000);
    for (auto& v : x) {
        v = sample_gamma(rng, 2.5, 4.0);
    }
    const auto m = moments(x);
    CHECK(m.mean == doctest::Approx(2.5 / 4.0).epsilon(0.01));
    CHECK(m.var == doctest::Approx(2.5 / 16.0).epsilon(0.02));
}

TEST_CASE("inverse wishart mean") {
    RngStream rng(9);
    Eigen::Matrix2d scale;
    scale << 2.0, 0.5, 0.5, 1.0;
    Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const Eigen::MatrixXd w = sample_inverse_wishart(rng, 7.0, scale);
        REQUIRE((w - w.transpose()).norm() < 1e-12);
        sum += w;
    }
    const Eigen::Matrix2d mean = sum / n;
    const Eigen::Matrix2d want = scale / (7.0 - 2.0 - 1.0);
    CHECK((mean - want).norm() / want.norm() < 0.02);
}

TEST_CASE("gmrf draws") {
    RngStream rng(3);
    SUBCASE("identity precision gives standard normals") {
        PrecisionMatrix q;
        q.entries.resize(4, 4);
        q.entries.setIdentity();
        std::vector<Eigen::VectorXd> draws;
        for (int i = 0; i < 100000; ++i) {
            draws.push_back(sample_gmrf(rng, q, Eigen::VectorXd::Zero(4)));
        }
        const Eigen::MatrixXd cov = empirical_covariance(draws);
        for (int j = 0; j < 4; ++j) {
            CHECK(cov(j, j) == doctest::Approx(1.0).epsilon(0.02));
        }
    }
    SUBCASE("scalar canonical form") {
        PrecisionMatrix q;
        q.entries.resize(1, 1);
        q.entries.insert(0, 0) = 4.0;
        std::vector<double> x;
        for (int i = 0; i < 200000; ++i) {
            x.push_back(sample_gmrf(rng, q, Eigen::VectorXd::Constant(1, 8.0))[0]);
        }
        const auto m = moments(x);
        CHECK(m.mean == doctest::Approx(2.0).epsilon(0.005));
        CHECK(m.var == doctest::Approx(0.25).epsilon(0.02));
    }
    SUBCASE("K=5 path-graph leroux field matches the dense inverse") {
        const auto g = SpatialGraph::path(5);
        const auto q = build_leroux_precision(g, 0.8, 1.5);
        std::vector<Eigen::VectorXd> draws;
        for (int i = 0; i < 100000; ++i) {
            draws.push_back(sample_gmrf(rng, q, Eigen::VectorXd::Zero(5)));
        }
        const Eigen::MatrixXd want = Eigen::MatrixXd(q.entries).inverse();
        CHECK((empirical_covariance(draws) - want).norm() / want.norm() < 0.05);
    }
    SUBCASE("non-positive-definite precision is an explicit error") {
        PrecisionMatrix q;
        q.entries.resize(2, 2);
        q.entries.insert(0, 0) = 1.0;
        q.entries.insert(1, 1) = -1.0;
        CHECK_THROWS_AS(sample_gmrf(rng, q, Eigen::VectorXd::Zero(2)), NumericalError);
    }
}

TEST_CASE("gmrf marginal variances on random graphs") {
    RngStream rng(10);
    for (int rep = 0; rep < 6; ++rep) {
        const int k = 3 + rep;
        std::vector<std::pair<int, int>> edges;
        for (int a = 0; a < k; ++a) {
            for (int b = a + 1; b < k; ++b) {
                if (rng.uniform01() < 0.4) {
                    edges.emplace_back(a, b);
                }
            }
        }
        const auto g = SpatialGraph::from_edges(k, edges);
        const auto q = build_leroux_precision(g, 0.6, 1.0);
        std::vector<Eigen::VectorXd> draws;
        for (int i = 0; i < 40000; ++i) {
            draws.push_back(sample_gmrf(rng, q, Eigen::VectorXd::Zero(k)));
        }
        const Eigen::VectorXd want = Eigen::MatrixXd(q.entries).inverse().diagonal();
        const Eigen::VectorXd got = empirical_covariance(draws).diagonal();
        for (int j = 0; j < k; ++j) {
            CHECK(got[j] == doctest::Approx(want[j]).epsilon(0.04));
        }
    }
}

TEST_CASE("cholesky factor reproduces the permuted precision") {
    const auto g = SpatialGraph::from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}});
    const CholeskyFactor f(build_leroux_precision(g, 0.7, 2.0));
    const Eigen::MatrixXd a = f.reconstructed();
    const Eigen::MatrixXd b = f.permuted_input();
    CHECK((a - b).norm() / b.norm() < 1e-8);
    const Eigen::MatrixXd q = Eigen::MatrixXd(build_leroux_precision(g, 0.7, 2.0).entries);
    CHECK(f.log_determinant() == doctest::Approx(std::log(q.determinant())).epsilon(1e-10));
    const Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(6, -1.0, 2.0);
    CHECK((q * f.solve(rhs) - rhs).norm() < 1e-10);
}

TEST_CASE("leroux cache refactorises only when rho changes") {
    const auto g = SpatialGraph::path(6);
    LerouxGmrfCache cache(g);
    RngStream rng(4);
    (void)cache.draw(rng, 0.5, 1.0);
    (void)cache.draw(rng, 0.5, 3.0);
    (void)cache.draw(rng, 0.5, 0.1);
    CHECK(cache.factorisations() == 1);
    (void)cache.draw(rng, 0.6, 1.0);
    CHECK(cache.factorisations() == 2);

    RngStream r1(11);
    RngStream r2(11);
    LerouxGmrfCache other(g);
    const auto q = build_leroux_precision(g, 0.3, 2.0);
    std::vector<Eigen::VectorXd> draws;
    for (int i = 0; i < 60000; ++i) {
        draws.push_back(other.draw(r1, 0.3, 2.0));
    }
    const Eigen::MatrixXd want = Eigen::MatrixXd(q.entries).inverse();
    CHECK((empirical_covariance(draws) - want).norm() / want.norm() < 0.05);
    (void)r2;
}

TEST_CASE("slice sampler on a constant density is uniform") {
    RngStream rng(5);
    const auto x = slice_chain(rng, [](double) { return 0.0; }, 0.5, 0.0, 1.0, 100000);
    // 1% critical value of the one-sample KS statistic.
    CHECK(ks_uniform(x, 0.0, 1.0) < 1.628 / std::sqrt(100000.0));
    for (double v : x) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("slice sampler stays in a sharp peak") {
    RngStream rng(6);
    auto f = [](double x) { return -0.5 * std::pow((x - 0.5) / 1e-4, 2.0); };
    const auto x = slice_chain(rng, f, 0.5, 0.0, 1.0, 2000);
    for (double v : x) {
        REQUIRE(std::abs(v - 0.5) < 1e-3);
    }
}

TEST_CASE("slice sampler moments on analytic targets") {
    RngStream rng(7);
    SUBCASE("truncated normal against a rejection sampler") {
        auto f = [](double x) { return -0.5 * std::pow((x - 0.3) / 0.2, 2.0); };
        const auto m = moments(slice_chain(rng, f, 0.5, 0.0, 1.0, 200000));
        std::vector<double> rej;
        while (rej.size() < 200000) {
            const double v = sample_normal(rng, 0.3, 0.2);
            if (v > 0.0 && v < 1.0) {
                rej.push_back(v);
            }
        }
        const auto r = moments(rej);
        CHECK(m.mean == doctest::Approx(r.mean).epsilon(0.02));
        CHECK(m.var == doctest::Approx(r.var).epsilon(0.02));
    }
    SUBCASE("beta(2, 5)") {
        auto f = [](double x) { return std::log(x) + 4.0 * std::log(1.0 - x); };
        const auto m = moments(slice_chain(rng, f, 0.5, 0.0, 1.0, 200000));
        CHECK(m.mean == doctest::Approx(2.0 / 7.0).epsilon(0.02));
        CHECK(m.var == doctest::Approx(10.0 / (49.0 * 8.0)).epsilon(0.03));
    }
    SUBCASE("sqrt(1 - rho): a one-area leroux log-determinant") {
        auto f = [](double x) { return 0.5 * std::log(1.0 - x); };
        const auto m = moments(slice_chain(rng, f, 0.5, 0.0, kMaxRho, 200000));
        // Beta(1, 1.5): mean 0.4, variance 1.5 / (6.25 * 3.5).
        CHECK(m.mean == doctest::Approx(0.4).epsilon(0.02));
        CHECK(m.var == doctest::Approx(1.5 / (6.25 * 3.5)).epsilon(0.03));
    }
}

TEST_CASE("slice sampler input errors") {
    RngStream rng(8);
    CHECK_THROWS_AS(slice_sample(rng, [](double) { return std::nan(""); }, 0.5, 0.0, 1.0), NumericalError);
    CHECK_THROWS_AS(slice_sample(rng, [](double) { return 0.0; }, 1.5, 0.0, 1.0), ValidationError);
}

TEST_CASE("samplers are deterministic given the stream") {
    RngStream a(99, 3);
    RngStream b(99, 3);
    for (int i = 0; i < 100; ++i) {
        CHECK(sample_normal(a, 1.0, 2.0) == sample_normal(b, 1.0, 2.0));
        CHECK(sample_inverse_gamma(a, 2.0, 1.0) == sample_inverse_gamma(b, 2.0, 1.0));
        CHECK(slice_sample(a, [](double x) { return -x * x; }, 0.3, 0.0, 1.0) ==
              slice_sample(b, [](double x) { return -x * x; }, 0.3, 0.0, 1.0));
    }
}
