#include "carlevel/dataset.hpp"

#include "carlevel/errors.hpp"
#include "carlevel/textio.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace carlevel {

std::vector<int> LongDataset::area_counts() const {
    std::vector<int> counts(static_cast<std::size_t>(num_areas), 0);
    const auto areas = individual_areas();
    for (int j : areas) {
        ++counts[static_cast<std::size_t>(j)];
    }
    return counts;
}

std::vector<int> LongDataset::individual_areas() const {
    std::vector<int> out(static_cast<std::size_t>(num_individuals()), -1);
    for (Eigen::Index o = 0; o < size(); ++o) {
        auto& slot = out[static_cast<std::size_t>(individual[static_cast<std::size_t>(o)])];
        const int j = area[static_cast<std::size_t>(o)];
        if (slot >= 0 && slot != j) {
            throw ValidationError("individual " + std::to_string(individual_ids[static_cast<std::size_t>(
                                                      individual[static_cast<std::size_t>(o)])]) +
                                  " appears in more than one area");
        }
        slot = j;
    }
    return out;
}

void LongDataset::validate() const {
    const auto n = static_cast<std::size_t>(size());
    if (period.size() != n || individual.size() != n || area.size() != n ||
        static_cast<std::size_t>(covariates.rows()) != n) {
        throw ValidationError("dataset columns have inconsistent lengths");
    }
    if (covariates.cols() != num_covariates()) {
        throw ValidationError("covariate metadata does not match covariate columns");
    }
    if (num_areas < 1 || num_periods < 1) {
        throw ValidationError("dataset needs at least one area and one period");
    }
    std::set<std::pair<int, int>> seen;
    for (std::size_t o = 0; o < n; ++o) {
        if (area[o] < 0 || area[o] >= num_areas) {
            throw ValidationError("area index " + std::to_string(area[o] + 1) + " out of range");
        }
        if (period[o] < 0 || period[o] >= num_periods) {
            throw ValidationError("period index out of range");
        }
        if (individual[o] < 0 || individual[o] >= num_individuals()) {
            throw ValidationError("individual index out of range");
        }
        if (!seen.emplace(period[o], individual[o]).second) {
            throw ValidationError("duplicate observation for period " + std::to_string(period[o] + 1) +
                                  ", individual " + std::to_string(individual_ids[static_cast<std::size_t>(individual[o])]));
        }
    }
    (void)individual_areas();
}

std::filesystem::path dataset_sidecar_path(const std::filesystem::path& csv) {
    auto p = csv;
    p += ".meta";
    return p;
}

std::string to_string(CovariateLevel level) { return level == CovariateLevel::Area ? "area" : "individual"; }

CovariateLevel covariate_level_from_string(const std::string& s) {
    if (s == "area") {
        return CovariateLevel::Area;
    }
    if (s == "individual") {
        return CovariateLevel::Individual;
    }
    throw ValidationError("unknown covariate level '" + s + "'");
}

LongDataset read_dataset_csv(const std::filesystem::path& path, int num_areas) {
    const CsvTable table = CsvTable::read(path);
    if (table.header.size() < 4 || table.header[0] != "t" || table.header[1] != "i" || table.header[2] != "j" ||
        table.header[3] != "y") {
        throw ValidationError("dataset header must start with t,i,j,y");
    }
    LongDataset data;
    const std::size_t q = table.header.size() - 4;
    for (std::size_t c = 0; c < q; ++c) {
        data.covariate_info.push_back({table.header[4 + c], CovariateLevel::Individual, false});
    }
    const std::size_t n = table.rows.size();
    data.y.resize(static_cast<Eigen::Index>(n));
    data.covariates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
    std::vector<long long> raw_ids(n);
    int max_area = 0;
    int max_period = 0;
    for (std::size_t o = 0; o < n; ++o) {
        const auto& row = table.rows[o];
        const int t = parse_int(row[0], "t");
        const int j = parse_int(row[2], "j");
        if (t < 1 || j < 1) {
            throw ValidationError("t and j are 1-based and must be positive");
        }
        data.period.push_back(t - 1);
        data.area.push_back(j - 1);
        raw_ids[o] = parse_int(row[1], "i");
        data.y[static_cast<Eigen::Index>(o)] = parse_double(row[3], "y");
        for (std::size_t c = 0; c < q; ++c) {
            data.covariates(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(c)) =
                parse_double(row[4 + c], table.header[4 + c]);
        }
        max_area = std::max(max_area, j);
        max_period = std::max(max_period, t);
    }
    std::map<long long, int> dense;
    for (long long id : raw_ids) {
        dense.emplace(id, 0);
    }
    int next = 0;
    for (auto& [id, idx] : dense) {
        idx = next++;
        data.individual_ids.push_back(id);
    }
    for (long long id : raw_ids) {
        data.individual.push_back(dense.at(id));
    }
    if (num_areas > 0 && num_areas < max_area) {
        throw ValidationError("dataset references area " + std::to_string(max_area) + " but the graph has only " +
                              std::to_string(num_areas));
    }
    data.num_areas = num_areas > 0 ? num_areas : max_area;
    data.num_periods = max_period;
    data.validate();
    return data;
}

std::string dataset_csv_string(const LongDataset& data) {
    std::string out = "t,i,j,y";
    for (const auto& c : data.covariate_info) {
        out += "," + c.name;
    }
    out += '\n';
    for (Eigen::Index o = 0; o < data.size(); ++o) {
        const auto so = static_cast<std::size_t>(o);
        out += std::to_string(data.period[so] + 1);
        out += ',';
        out += std::to_string(data.individual_ids[static_cast<std::size_t>(data.individual[so])]);
        out += ',';
        out += std::to_string(data.area[so] + 1);
        out += ',';
        out += format_double(data.y[o]);
        for (Eigen::Index c = 0; c < data.covariates.cols(); ++c) {
            out += ',';
            out += format_double(data.covariates(o, c));
        }
        out += '\n';
    }
    return out;
}

void write_dataset_csv(const LongDataset& data, const std::filesystem::path& path) {
    write_file_atomic(path, dataset_csv_string(data));
}

}  // namespace carlevel
