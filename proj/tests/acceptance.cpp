#include "dense_oracle.hpp"

#include "carlevel/diagnostics.hpp"
#include "carlevel/graph.hpp"
#include "carlevel/sampling.hpp"
#include "carlevel/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

using namespace carlevel;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& name, const std::string& detail, double seconds,
            double limit_seconds) {
    const bool in_time = limit_seconds <= 0.0 || seconds < limit_seconds;
    const bool ok = pass && in_time;
    failures += ok ? 0 : 1;
    std::printf("%s criterion %d: %s; %s; runtime %.1f s", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(),
                seconds);
    if (limit_seconds > 0.0) {
        std::printf(" (limit %.0f s%s)", limit_seconds, in_time ? "" : ", exceeded");
    }
    std::printf("\n");
    std::fflush(stdout);
}

class Timer {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

StudyConfig desk_study(StudyKind kind, std::vector<int> scenarios, std::vector<ModelFamily> models) {
    StudyConfig c;
    c.kind = kind;
    c.scenarios = std::move(scenarios);
    c.models = std::move(models);
    c.replicates = 20;
    c.seed = 11;
    c.rows = 10;
    c.cols = 10;
    c.simulation.n_per_area = 5;
    c.simulation.periods = 5;
    c.jobs = jobs();
    return c;
}

int not_converged(const StudyResult& r) {
    int n = 0;
    for (const auto& f : r.fits) {
        n += f.converged ? 0 : 1;
    }
    return n;
}

void criterion_oracle() {
    Timer t;
    const ModelFamily families[] = {ModelFamily::CL2, ModelFamily::CAR,      ModelFamily::RCAR,
                                    ModelFamily::CL3, ModelFamily::CarAnova, ModelFamily::Conv};
    double worst = 0.0;
    std::string where;
    long checks = 0;
    for (auto f : families) {
        for (std::uint64_t seed = 1; seed <= 25; ++seed) {
            for (bool isolated : {false, true}) {
                const auto r = oracle::check_conditionals(f, seed * 104729 + static_cast<std::uint64_t>(f), isolated);
                checks += r.checks;
                if (r.max_error > worst) {
                    worst = r.max_error;
                    where = to_string(f) + ": " + r.worst;
                }
            }
        }
    }
    const auto no_interaction = oracle::check_conditionals(ModelFamily::CarAnova, 99, false, false);
    checks += no_interaction.checks;
    worst = std::max(worst, no_interaction.max_error);
    report(1, worst < 1e-8, "full conditionals match the dense joint posterior",
           "max error " + fmt(worst, 3) + " over " + std::to_string(checks) + " checks (worst " + where +
               "), tolerance 1e-8",
           t.seconds(), 60.0);
}

void criterion_gmrf() {
    Timer t;
    const SpatialGraph g = SpatialGraph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {1, 3}});
    const double rho = 0.8;
    const double tau_sq = 2.0;
    const Eigen::MatrixXd want = Eigen::MatrixXd(build_leroux_precision(g, rho, tau_sq).entries).inverse();
    LerouxGmrfCache cache(g);
    RngStream rng(2024);
    const int draws = 100000;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(5, 5);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
    for (int d = 0; d < draws; ++d) {
        const Eigen::VectorXd x = cache.draw(rng, rho, tau_sq);
        sum += x * x.transpose();
        mean += x;
    }
    mean /= draws;
    const Eigen::MatrixXd cov = (sum - draws * mean * mean.transpose()) / (draws - 1.0);
    const double rel = (cov - want).norm() / want.norm();
    report(2, rel < 0.05, "Leroux GMRF draws match tau^2 Q^-1",
           "relative Frobenius error " + fmt(rel, 3) + " (K=5, 1e5 draws), tolerance 0.05", t.seconds(), 30.0);
}

void criterion_recovery() {
    Timer t;
    const auto r = run_study(desk_study(StudyKind::CrossSectional, {3}, {ModelFamily::CAR}));
    int cover_x1 = 0;
    int cover_x2 = 0;
    int total = 0;
    for (const auto& f : r.fits) {
        const auto& x1 = f.coefficients.at("x1");
        const auto& x2 = f.coefficients.at("x2");
        cover_x1 += (x1.q2_5 <= -1.50 && -1.50 <= x1.q97_5) ? 1 : 0;
        cover_x2 += (x2.q2_5 <= 0.14 && 0.14 <= x2.q97_5) ? 1 : 0;
        ++total;
    }
    report(3, total == 20 && cover_x1 >= 18 && cover_x2 >= 16, "CAR 95% intervals cover the truth (scenario 3)",
           "x1 " + std::to_string(cover_x1) + "/" + std::to_string(total) + " (need 18), x2 " +
               std::to_string(cover_x2) + "/" + std::to_string(total) + " (need 16), not converged " +
               std::to_string(not_converged(r)),
           t.seconds(), 600.0);
}

void criteria_rmse_cross_sectional() {
    Timer t;
    const auto r = run_study(desk_study(StudyKind::CrossSectional, {5}, {}));
    const double seconds = t.seconds();
    const double rcar = r.report.find("5", "rcar", "x2").rmse;
    const double car = r.report.find("5", "car", "x2").rmse;
    const double cl2 = r.report.find("5", "cl2", "x2").rmse;
    const auto med = [&](const std::string& m) { return fmt(r.report.find("5", m, "x2").posterior_median); };
    // Context only: bias with the mean posterior variance in place of the between-replicate variance.
    const auto posterior_rmse = [&](const std::string& m) {
        double var = 0.0;
        int n = 0;
        for (const auto& f : r.fits) {
            if (f.model == m) {
                const auto& s = f.coefficients.at("x2");
                const double sd = (s.q97_5 - s.q2_5) / (2.0 * 1.959963984540054);
                var += sd * sd;
                ++n;
            }
        }
        const double bias = r.report.find("5", m, "x2").bias;
        return fmt(std::sqrt(bias * bias + var / n));
    };
    report(4, rcar <= car && car <= cl2, "area-level RMSE ordering RCAR <= CAR <= CL2 (scenario 5)",
           "RMSE rcar " + fmt(rcar) + ", car " + fmt(car) + ", cl2 " + fmt(cl2) + "; median estimates rcar " +
               med("rcar") + ", car " + med("car") + ", cl2 " + med("cl2") + " (truth 0.14); not converged " +
               std::to_string(not_converged(r)) + "; with posterior variance instead (not judged) rcar " +
               posterior_rmse("rcar") + ", car " + posterior_rmse("car") + ", cl2 " + posterior_rmse("cl2"),
           seconds, 900.0);
    report(9, r.max_rcar_violation < 1e-8, "RCAR effects orthogonal to the area design",
           "max |Z'psi| over stored draws " + fmt(r.max_rcar_violation, 3) + ", tolerance 1e-8", seconds, 0.0);
}

void criterion_weak_effect() {
    Timer t;
    const auto r = run_study(desk_study(StudyKind::CrossSectional, {8}, {}));
    std::map<int, std::map<std::string, std::vector<double>>> medians;
    for (const auto& f : r.fits) {
        for (const auto& [name, s] : f.coefficients) {
            medians[f.replicate][name].push_back(s.median);
        }
    }
    double worst = 0.0;
    std::string where;
    bool complete = true;
    for (const auto& [rep, coefs] : medians) {
        for (const auto& [name, v] : coefs) {
            complete = complete && v.size() == 3;
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            if (*hi - *lo > worst) {
                worst = *hi - *lo;
                where = name + " in replicate " + std::to_string(rep);
            }
        }
    }
    report(7, complete && medians.size() == 20 && worst <= 0.05,
           "weak spatial effect: models agree (scenario 8)",
           "largest spread of posterior medians across cl2/car/rcar " + fmt(worst, 3) + " (" + where +
               "), tolerance 0.05",
           t.seconds(), 600.0);
}

void criteria_longitudinal() {
    Timer t;
    const auto r = run_study(desk_study(StudyKind::Longitudinal, {8}, {}));
    const double seconds = t.seconds();
    const double conv = r.report.find("8", "conv", "x3").rmse;
    const double cl3 = r.report.find("8", "cl3", "x3").rmse;
    const double anova = r.report.find("8", "car-anova", "x3").rmse;
    const std::string nc = "; not converged " + std::to_string(not_converged(r)) + " of " +
                           std::to_string(r.fits.size());
    report(5, conv <= cl3, "area-level RMSE CONV <= CL3 (longitudinal scenario 8)",
           "RMSE conv " + fmt(conv) + ", cl3 " + fmt(cl3) + " (car-anova " + fmt(anova) + ")" + nc, seconds, 1800.0);
    const double d_conv = r.report.find("8", "conv").dic;
    const double d_anova = r.report.find("8", "car-anova").dic;
    const double d_cl3 = r.report.find("8", "cl3").dic;
    report(6, d_conv <= d_anova && d_anova <= d_cl3, "median DIC CONV <= CAR ANOVA <= CL3 (longitudinal scenario 8)",
           "DIC conv " + fmt(d_conv, 6) + ", car-anova " + fmt(d_anova, 6) + ", cl3 " + fmt(d_cl3, 6), seconds, 0.0);
}

Eigen::VectorXd iid(RngStream& rng, Eigen::Index n) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x[i] = sample_normal(rng, 0.0, 1.0);
    }
    return x;
}

void criterion_diagnostics() {
    Timer t;
    RngStream rng(8);
    int geweke_flags = 0;
    int hw_pass = 0;
    for (int c = 0; c < 200; ++c) {
        const Eigen::VectorXd x = iid(rng, 5000);
        geweke_flags += std::abs(geweke(x)) > 1.96 ? 1 : 0;
        hw_pass += heidelberger_welch(x).stationarity_pass ? 1 : 0;
    }
    const double rate = geweke_flags / 200.0;
    // Context only: the rate on many more chains separates miscalibration from sampling noise.
    RngStream wide(80);
    int wide_flags = 0;
    for (int c = 0; c < 4000; ++c) {
        wide_flags += std::abs(geweke(iid(wide, 5000))) > 1.96 ? 1 : 0;
    }
    const double r_hat = gelman_rubin({iid(rng, 5000), iid(rng, 5000), iid(rng, 5000), iid(rng, 5000)});
    const Eigen::Index n = 20000;
    Eigen::VectorXd ar(n);
    ar[0] = sample_normal(rng, 0.0, 1.0 / std::sqrt(1.0 - 0.81));
    for (Eigen::Index i = 1; i < n; ++i) {
        ar[i] = 0.9 * ar[i - 1] + sample_normal(rng, 0.0, 1.0);
    }
    const double ess = effective_sample_size(ar);
    const double ess_want = static_cast<double>(n) * 0.1 / 1.9;
    const bool pass = std::abs(rate - 0.05) <= 0.02 && hw_pass >= 180 && r_hat < 1.02 &&
                      std::abs(ess - ess_want) <= 0.2 * ess_want;
    report(8, pass, "diagnostics calibration",
           "Geweke flag rate " + fmt(rate, 3) + " (0.05 +/- 0.02; " + fmt(wide_flags / 4000.0, 3) +
               " on 4000 further chains, not judged), HW stationarity " + std::to_string(hw_pass) +
               "/200 (need 180), R-hat of 4 iid chains " + fmt(r_hat, 5) + " (< 1.02), AR(1) ESS " + fmt(ess, 5) +
               " vs " + fmt(ess_want, 5) + " (within 20%)",
           t.seconds(), 120.0);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void criterion_determinism() {
    Timer t;
    const auto base = fs::temp_directory_path() / "carlevel_acceptance";
    fs::remove_all(base);
    auto run_pipeline = [&](const std::string& name, int workers) {
        std::vector<fs::path> files;
        auto cs = desk_study(StudyKind::CrossSectional, {3, 5, 8}, {});
        cs.replicates = 2;
        cs.jobs = workers;
        for (const auto& f : write_study_outputs(run_study(cs), base / name / "cs")) {
            files.push_back(f);
        }
        auto lg = desk_study(StudyKind::Longitudinal, {8}, {});
        lg.replicates = 1;
        lg.jobs = workers;
        McmcConfig quick;
        quick.iterations = 4000;
        quick.burn_in = 2000;
        for (auto m : default_models(StudyKind::Longitudinal)) {
            lg.mcmc[m] = quick;
        }
        lg.max_retries = 0;
        for (const auto& f : write_study_outputs(run_study(lg), base / name / "long")) {
            files.push_back(f);
        }
        return files;
    };
    const auto a = run_pipeline("a", 1);
    const auto b = run_pipeline("b", std::max(2, jobs()));
    int identical = 0;
    std::string differs;
    for (const auto& f : a) {
        const auto other = base / "b" / fs::relative(f, base / "a");
        if (fs::exists(other) && slurp(f) == slurp(other)) {
            ++identical;
        } else if (differs.empty()) {
            differs = fs::relative(f, base / "a").string();
        }
    }
    report(10, !a.empty() && identical == static_cast<int>(a.size()) && a.size() == b.size(),
           "study pipeline outputs are byte-identical for identical seeds",
           std::to_string(identical) + "/" + std::to_string(a.size()) + " files identical across 1 and " +
               std::to_string(std::max(2, jobs())) + " workers" + (differs.empty() ? "" : ", first difference " + differs),
           t.seconds(), 0.0);
}

}  // namespace

int main() {
    std::printf("hardware threads: %u\n", std::thread::hardware_concurrency());
    criterion_oracle();
    criterion_gmrf();
    criterion_diagnostics();
    criterion_determinism();
    criterion_recovery();
    criteria_rmse_cross_sectional();
    criterion_weak_effect();
    criteria_longitudinal();
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
