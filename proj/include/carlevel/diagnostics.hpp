#pragma once

#include "carlevel/mcmc.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace carlevel {

/// Raised for chains with zero variance, on which the diagnostics are undefined.
class DegenerateChainError : public std::domain_error {
public:
    DegenerateChainError() : std::domain_error("degenerate chain") {}
};

/// Spectral density at frequency zero from an autoregressive fit
/// (Yule-Walker, order <= max_order chosen by AIC).
double spectrum0_ar(const Eigen::Ref<const Eigen::VectorXd>& x, int max_order = 20);

double geweke(const Eigen::Ref<const Eigen::VectorXd>& chain, double frac_a = 0.1, double frac_b = 0.5);

double gelman_rubin(const std::vector<Eigen::VectorXd>& chains);

struct HeidelbergerWelchResult {
    bool stationarity_pass = false;
    bool halfwidth_pass = false;
    double discard_fraction = 0.0;
    double cvm_statistic = 0.0;
    double mean = 0.0;
    double halfwidth = 0.0;
};

/// Cramer-von Mises distribution function.
double cramer_von_mises_cdf(double q);

HeidelbergerWelchResult heidelberger_welch(const Eigen::Ref<const Eigen::VectorXd>& chain, double alpha = 0.05,
                                           double halfwidth_ratio = 0.1);

/// Geyer initial-positive-sequence estimate; may exceed n for
/// anticorrelated chains, but is capped at n log10(n).
double effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& chain);

struct ParameterDiagnostics {
    std::string parameter;
    double geweke_z = 0.0;  // largest |z| over chains, with sign
    double r_hat = 0.0;
    bool hw_stationarity_pass = false;  // every chain passes
    bool hw_halfwidth_pass = false;
    double ess = 0.0;  // summed over chains, capped at the stored draw count
};

struct DiagnosticsReport {
    std::vector<ParameterDiagnostics> parameters;
    double threshold = 1.02;
    bool all_converged = false;

    [[nodiscard]] std::string to_csv() const;
    [[nodiscard]] std::string to_text() const;
};

/// Diagnostics for `names` (default: the scalar parameters) across chains.
/// Chains that failed are skipped; R-hat needs at least two. Statistics
/// the chain length does not support are NaN (Heidelberger-Welch: false).
DiagnosticsReport diagnose(const std::vector<ChainOutput>& chains, std::vector<std::string> names = {},
                           double threshold = 1.02);

}  // namespace carlevel
