#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace carlevel {

struct BiasRmse {
    double bias = 0.0;
    double rmse = 0.0;
    double variance = 0.0;
    /// Fewer than two replicates: variance undefined, rmse reported as bias.
    bool bias_only = false;
};

/// bias = |mean - truth|, rmse = sqrt(bias^2 + sample variance).
BiasRmse bias_rmse(const std::vector<double>& estimates, double truth);

struct DicResult {
    double dic = 0.0;
    double p_d = 0.0;
    double mean_deviance = 0.0;
};

DicResult dic(const std::vector<double>& deviance_draws, double deviance_at_posterior_mean);

/// Fraction of intervals [lo, hi] containing truth.
double coverage(const std::vector<std::pair<double, double>>& intervals, double truth);

/// Linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> values, double p);

struct PosteriorSummary {
    double median = 0.0;
    double q2_5 = 0.0;
    double q97_5 = 0.0;
};

PosteriorSummary summarize_posterior(const std::vector<double>& draws);

/// One fitted model on one replicate dataset.
struct ReplicateFit {
    std::string scenario;
    int replicate = 0;
    std::string model;
    std::map<std::string, PosteriorSummary> coefficients;  // keyed by coefficient name
    DicResult dic;
    double max_posterior_loglik = 0.0;
    bool converged = true;
    double max_r_hat = 0.0;
};

struct CoefficientMetrics {
    std::string scenario;
    std::string model;
    std::string coefficient;
    double truth = 0.0;
    int replicates = 0;
    double bias = 0.0;
    double rmse = 0.0;
    double coverage_95 = 0.0;
    /// Medians over replicates of the per-replicate summaries.
    double posterior_median = 0.0;
    double ci_2_5 = 0.0;
    double ci_97_5 = 0.0;
    bool bias_only = false;
};

struct ModelMetrics {
    std::string scenario;
    std::string model;
    int replicates = 0;
    /// Medians over replicates.
    double dic = 0.0;
    double p_d = 0.0;
    double mean_deviance = 0.0;
    double max_posterior_loglik = 0.0;
    int not_converged = 0;
};

struct ComparisonReport {
    std::vector<CoefficientMetrics> coefficients;
    std::vector<ModelMetrics> models;
    std::vector<std::string> warnings;

    [[nodiscard]] const CoefficientMetrics& find(const std::string& scenario, const std::string& model,
                                                 const std::string& coefficient) const;
    [[nodiscard]] const ModelMetrics& find(const std::string& scenario, const std::string& model) const;

    // Wide tables: scenario,coefficient,truth,replicates,<one column per model>.
    [[nodiscard]] std::string rmse_csv() const;
    [[nodiscard]] std::string bias_csv() const;
    [[nodiscard]] std::string coverage_csv() const;
    // Long table: scenario,model,replicates,dic,p_d,mean_deviance,max_posterior_loglik,not_converged.
    [[nodiscard]] std::string dic_csv() const;
};

/// Aggregates fits by (scenario, model, coefficient). The estimate of a
/// coefficient on one replicate is its posterior median. `truth[scenario]`
/// maps coefficient names to true values; coefficients without a truth are
/// skipped. Scenario and model order follow first appearance in `fits`.
ComparisonReport build_report(const std::vector<ReplicateFit>& fits,
                              const std::map<std::string, std::map<std::string, double>>& truth);

/// Per-replicate detail: one row per (scenario, replicate, model, coefficient).
std::string fits_csv(const std::vector<ReplicateFit>& fits);

}  // namespace carlevel
