#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace carlevel {

enum class CovariateLevel { Individual, Area };

struct CovariateInfo {
    std::string name;
    CovariateLevel level = CovariateLevel::Individual;
    bool time_varying = false;
};

/// Long-format observations (one row per period x individual) over K areas
/// and N periods. Indices are 0-based in memory and 1-based on disk.
struct LongDataset {
    std::vector<int> period;
    std::vector<int> individual;
    std::vector<int> area;
    Eigen::VectorXd y;
    Eigen::MatrixXd covariates;  // rows = observations
    std::vector<CovariateInfo> covariate_info;
    /// On-disk identifier of each dense individual index.
    std::vector<long long> individual_ids;
    int num_areas = 0;
    int num_periods = 0;

    [[nodiscard]] Eigen::Index size() const { return y.size(); }
    [[nodiscard]] int num_individuals() const { return static_cast<int>(individual_ids.size()); }
    [[nodiscard]] int num_covariates() const { return static_cast<int>(covariate_info.size()); }
    /// Distinct individuals per area (n_j).
    [[nodiscard]] std::vector<int> area_counts() const;
    /// Area of each individual; requires that individuals are nested in areas.
    [[nodiscard]] std::vector<int> individual_areas() const;

    /// Throws ValidationError on a repeated (t, i), an out-of-range index,
    /// an individual spanning two areas, or shape mismatches.
    void validate() const;
};

/// CSV with header `t,i,j,y,<covariate names...>`, 1-based t/i/j.
/// `num_areas` overrides the area count inferred from the largest j.
LongDataset read_dataset_csv(const std::filesystem::path& path, int num_areas = 0);
void write_dataset_csv(const LongDataset& data, const std::filesystem::path& path);
std::string dataset_csv_string(const LongDataset& data);

/// Sidecar path used for dataset metadata: `<csv>.meta`.
std::filesystem::path dataset_sidecar_path(const std::filesystem::path& csv);

std::string to_string(CovariateLevel level);
CovariateLevel covariate_level_from_string(const std::string& s);

}  // namespace carlevel
