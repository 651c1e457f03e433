#include "carlevel/diagnostics.hpp"

#include "carlevel/errors.hpp"
#include "carlevel/textio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace carlevel {

namespace {

double variance(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const double m = x.mean();
    return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

void require_variation(const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() < 2 || !(x.maxCoeff() > x.minCoeff())) {
        throw DegenerateChainError();
    }
}

}  // namespace

double spectrum0_ar(const Eigen::Ref<const Eigen::VectorXd>& x, int max_order) {
    const auto n = x.size();
    require_variation(x);
    const double m = x.mean();
    const Eigen::VectorXd c = x.array() - m;
    const int p_max = static_cast<int>(std::min<Eigen::Index>(max_order, n - 1));
    std::vector<double> acov(static_cast<std::size_t>(p_max) + 1);
    for (int k = 0; k <= p_max; ++k) {
        acov[static_cast<std::size_t>(k)] = c.head(n - k).dot(c.tail(n - k)) / static_cast<double>(n);
    }
    // Levinson-Durbin recursion, keeping the AIC-best order.
    std::vector<double> phi;
    double sigma2 = acov[0];
    double best_aic = static_cast<double>(n) * std::log(sigma2);
    double best_spec = sigma2 * static_cast<double>(n) / static_cast<double>(n - 1);
    for (int k = 1; k <= p_max; ++k) {
        double num = acov[static_cast<std::size_t>(k)];
        for (int j = 1; j < k; ++j) {
            num -= phi[static_cast<std::size_t>(j - 1)] * acov[static_cast<std::size_t>(k - j)];
        }
        const double reflection = num / sigma2;
        std::vector<double> next(static_cast<std::size_t>(k));
        for (int j = 1; j < k; ++j) {
            next[static_cast<std::size_t>(j - 1)] =
                phi[static_cast<std::size_t>(j - 1)] - reflection * phi[static_cast<std::size_t>(k - j - 1)];
        }
        next[static_cast<std::size_t>(k - 1)] = reflection;
        phi = std::move(next);
        sigma2 *= 1.0 - reflection * reflection;
        if (!(sigma2 > 0.0)) {
            break;
        }
        const double aic = static_cast<double>(n) * std::log(sigma2) + 2.0 * k;
        if (aic < best_aic) {
            best_aic = aic;
            double sum = 0.0;
            for (double v : phi) {
                sum += v;
            }
            const double scaled = sigma2 * static_cast<double>(n) / static_cast<double>(n - k - 1);
            best_spec = scaled / ((1.0 - sum) * (1.0 - sum));
        }
    }
    return best_spec;
}

double geweke(const Eigen::Ref<const Eigen::VectorXd>& chain, double frac_a, double frac_b) {
    const auto n = chain.size();
    if (n < 100) {
        throw ValidationError("Geweke diagnostic needs at least 100 draws");
    }
    if (!(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0)) {
        throw ValidationError("Geweke window fractions must be positive and must not overlap");
    }
    require_variation(chain);
    const auto na = static_cast<Eigen::Index>(std::floor(frac_a * static_cast<double>(n)));
    const auto nb = static_cast<Eigen::Index>(std::floor(frac_b * static_cast<double>(n)));
    const auto a = chain.head(na);
    const auto b = chain.tail(nb);
    const double mean_a = a.mean();
    const double mean_b = b.mean();
    if (mean_a == mean_b) {
        return 0.0;
    }
    const double var_a = spectrum0_ar(a) / static_cast<double>(na);
    const double var_b = spectrum0_ar(b) / static_cast<double>(nb);
    return (mean_a - mean_b) / std::sqrt(var_a + var_b);
}

double gelman_rubin(const std::vector<Eigen::VectorXd>& chains) {
    if (chains.size() < 2) {
        throw ValidationError("R-hat needs at least two chains");
    }
    const auto n = chains.front().size();
    for (const auto& c : chains) {
        if (c.size() != n) {
            throw ValidationError("R-hat needs chains of equal length");
        }
    }
    if (n < 10) {
        throw ValidationError("R-hat needs at least 10 draws per chain");
    }
    const double m = static_cast<double>(chains.size());
    const double nn = static_cast<double>(n);
    double w = 0.0;
    double grand = 0.0;
    for (const auto& c : chains) {
        w += variance(c);
        grand += c.mean();
    }
    w /= m;
    grand /= m;
    double b_over_n = 0.0;
    for (const auto& c : chains) {
        b_over_n += (c.mean() - grand) * (c.mean() - grand);
    }
    b_over_n /= m - 1.0;
    if (!(w > 0.0)) {
        throw DegenerateChainError();
    }
    return std::sqrt(((nn - 1.0) / nn) * w + b_over_n) / std::sqrt(w);
}

double cramer_von_mises_cdf(double q) {
    if (!(q > 0.0)) {
        return 0.0;
    }
    // The truncated series turns down past its maximum; the true tail beyond 2 is below 1e-5.
    if (q >= 2.0) {
        return 1.0;
    }
    const double log_eps = std::log(1e-5);
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double z = std::tgamma(k + 0.5) * std::sqrt(4.0 * k + 1.0) /
                         (std::tgamma(k + 1.0) * std::pow(std::numbers::pi, 1.5) * std::sqrt(q));
        const double u = (4.0 * k + 1.0) * (4.0 * k + 1.0) / (16.0 * q);
        if (u <= -log_eps) {
            total += z * std::exp(-u) * std::cyl_bessel_k(0.25, u);
        }
    }
    return total;
}

HeidelbergerWelchResult heidelberger_welch(const Eigen::Ref<const Eigen::VectorXd>& chain, double alpha,
                                           double halfwidth_ratio) {
    const auto n1 = chain.size();
    if (n1 < 200) {
        throw ValidationError("Heidelberger-Welch diagnostic needs at least 200 draws");
    }
    require_variation(chain);
    const double s0 = spectrum0_ar(chain.tail(n1 - n1 / 2));
    HeidelbergerWelchResult out;
    const Eigen::Index step = n1 / 10;
    Eigen::Index start = 0;
    for (Eigen::Index discard = 0; discard < n1 / 2; discard += step) {
        const auto y = chain.tail(n1 - discard);
        const auto n = y.size();
        const double ybar = y.mean();
        double cumulative = 0.0;
        double sum_sq = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            cumulative += y[i];
            const double bridge = cumulative - ybar * static_cast<double>(i + 1);
            sum_sq += bridge * bridge / (static_cast<double>(n) * s0);
        }
        out.cvm_statistic = sum_sq / static_cast<double>(n);
        start = discard;
        if (cramer_von_mises_cdf(out.cvm_statistic) < 1.0 - alpha) {
            out.stationarity_pass = true;
            break;
        }
    }
    out.discard_fraction = static_cast<double>(start) / static_cast<double>(n1);
    const auto kept = chain.tail(n1 - start);
    out.mean = kept.mean();
    out.halfwidth = 1.959963984540054 * std::sqrt(spectrum0_ar(kept) / static_cast<double>(kept.size()));
    out.halfwidth_pass = out.stationarity_pass && std::abs(out.halfwidth) < halfwidth_ratio * std::abs(out.mean);
    return out;
}

double effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& chain) {
    const auto n = chain.size();
    if (n < 100) {
        throw ValidationError("effective sample size needs at least 100 draws");
    }
    require_variation(chain);
    const Eigen::VectorXd c = chain.array() - chain.mean();
    const double c0 = c.squaredNorm() / static_cast<double>(n);
    auto rho = [&](Eigen::Index k) {
        return c.head(n - k).dot(c.tail(n - k)) / static_cast<double>(n) / c0;
    };
    // tau = -1 + 2 * sum of positive pair sums (rho_2m + rho_2m+1).
    double pair_sum = 0.0;
    for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
        const double gamma = (m == 0 ? 1.0 : rho(2 * m)) + rho(2 * m + 1);
        if (!(gamma > 0.0)) {
            break;
        }
        pair_sum += gamma;
    }
    const double nn = static_cast<double>(n);
    const double tau = std::max(-1.0 + 2.0 * pair_sum, 1.0 / std::log10(nn));
    return nn / tau;
}

DiagnosticsReport diagnose(const std::vector<ChainOutput>& chains, std::vector<std::string> names, double threshold) {
    std::vector<const ChainOutput*> good;
    for (const auto& c : chains) {
        if (c.ok() && c.draws.rows() > 0) {
            good.push_back(&c);
        }
    }
    if (good.empty()) {
        throw ValidationError("no successful chains to diagnose");
    }
    if (names.empty()) {
        names.assign(good.front()->parameter_names.begin(),
                     good.front()->parameter_names.begin() + good.front()->num_scalars);
    }
    DiagnosticsReport report;
    report.threshold = threshold;
    report.all_converged = good.size() >= 2;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& name : names) {
        ParameterDiagnostics d;
        d.parameter = name;
        std::vector<Eigen::VectorXd> series;
        for (const auto* c : good) {
            series.push_back(c->values(name));
        }
        const auto length = series.front().size();
        try {
            d.geweke_z = length >= 100 ? 0.0 : nan;
            d.hw_stationarity_pass = length >= 200;
            d.hw_halfwidth_pass = length >= 200;
            d.ess = length >= 100 ? 0.0 : nan;
            double total = 0.0;
            for (const auto& s : series) {
                if (length >= 100) {
                    const double z = geweke(s);
                    if (std::abs(z) >= std::abs(d.geweke_z)) {
                        d.geweke_z = z;
                    }
                    d.ess += effective_sample_size(s);
                }
                if (length >= 200) {
                    const auto hw = heidelberger_welch(s);
                    d.hw_stationarity_pass = d.hw_stationarity_pass && hw.stationarity_pass;
                    d.hw_halfwidth_pass = d.hw_halfwidth_pass && hw.halfwidth_pass;
                }
                total += static_cast<double>(s.size());
            }
            d.ess = std::min(d.ess, total);
            d.r_hat = series.size() >= 2 && length >= 10 ? gelman_rubin(series) : nan;
        } catch (const DegenerateChainError&) {
            d.geweke_z = nan;
            d.r_hat = nan;
            d.ess = nan;
            d.hw_stationarity_pass = false;
            d.hw_halfwidth_pass = false;
        }
        if (!(d.r_hat < threshold)) {
            report.all_converged = false;
        }
        report.parameters.push_back(d);
    }
    return report;
}

std::string DiagnosticsReport::to_csv() const {
    std::string out = "parameter,geweke_z,r_hat,hw_stationarity_pass,hw_halfwidth_pass,ess\n";
    for (const auto& p : parameters) {
        out += p.parameter + "," + format_double(p.geweke_z) + "," + format_double(p.r_hat) + "," +
               (p.hw_stationarity_pass ? "true" : "false") + "," + (p.hw_halfwidth_pass ? "true" : "false") + "," +
               format_double(p.ess) + "\n";
    }
    return out;
}

std::string DiagnosticsReport::to_text() const {
    std::string out;
    out += "all_converged=" + std::string(all_converged ? "true" : "false") + "\n";
    out += "r_hat_threshold=" + format_double(threshold) + "\n";
    int flagged = 0;
    for (const auto& p : parameters) {
        if (!(p.r_hat < threshold)) {
            out += "not converged: " + p.parameter + " r_hat=" + format_double(p.r_hat) + "\n";
            ++flagged;
        }
        if (std::abs(p.geweke_z) > 1.96) {
            out += "geweke |z| > 1.96: " + p.parameter + " z=" + format_double(p.geweke_z) + "\n";
        }
        if (!p.hw_stationarity_pass) {
            out += "heidelberger-welch stationarity failed: " + p.parameter + "\n";
        }
    }
    out += "parameters=" + std::to_string(parameters.size()) + " flagged=" + std::to_string(flagged) + "\n";
    return out;
}

}  // namespace carlevel
