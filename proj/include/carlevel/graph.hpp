#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace carlevel {

/// One directed weight as it appears in raw adjacency input (0-based).
struct AdjacencyEntry {
    int from;
    int to;
    double weight;
};

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool connected = true;

    [[nodiscard]] bool ok() const { return errors.empty(); }
};

/// Binary symmetric adjacency over K areas. Immutable once built; every
/// instance satisfies symmetry, no self-loops and 0/1 weights.
class SpatialGraph {
public:
    SpatialGraph() = default;

    /// Unordered 0-based pairs. Duplicate pairs collapse; self-loops and
    /// out-of-range indices throw std::invalid_argument.
    static SpatialGraph from_edges(int num_areas, const std::vector<std::pair<int, int>>& edges);

    /// Raw directed entries (as read from a 0/1 matrix). Throws with the
    /// validation errors if the entries do not form a valid graph.
    static SpatialGraph from_entries(int num_areas, const std::vector<AdjacencyEntry>& entries);

    static SpatialGraph from_dense(const Eigen::MatrixXd& w);

    /// Path graph on n nodes: the temporal neighbourhood structure.
    static SpatialGraph path(int n);

    [[nodiscard]] int num_areas() const { return num_areas_; }
    [[nodiscard]] std::size_t num_edges() const { return edges_.size(); }
    /// Edges with first < second, sorted.
    [[nodiscard]] const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    [[nodiscard]] const std::vector<int>& neighbors(int j) const { return neighbors_[static_cast<std::size_t>(j)]; }
    [[nodiscard]] int neighbor_count(int j) const { return static_cast<int>(neighbors(j).size()); }
    [[nodiscard]] std::vector<int> neighbor_counts() const;

    /// Component label per area, labels 0..c-1 in order of first appearance.
    [[nodiscard]] std::vector<int> component_labels() const;
    [[nodiscard]] int num_components() const;

    [[nodiscard]] Eigen::SparseMatrix<double> adjacency() const;
    /// R with R_jj = number of neighbours and R_jk = -w_jk.
    [[nodiscard]] Eigen::SparseMatrix<double> laplacian() const;
    [[nodiscard]] Eigen::MatrixXd dense_adjacency() const;

    /// x' R x, i.e. the sum over edges of (x_j - x_k)^2.
    [[nodiscard]] double laplacian_quadratic(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    friend bool operator==(const SpatialGraph& a, const SpatialGraph& b) {
        return a.num_areas_ == b.num_areas_ && a.edges_ == b.edges_;
    }

private:
    int num_areas_ = 0;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> neighbors_;
};

/// Band-structured temporal neighbourhood: d_tl = 1 iff |t - l| = 1.
struct TemporalGraph {
    int num_periods = 1;

    [[nodiscard]] SpatialGraph as_graph() const { return SpatialGraph::path(num_periods); }
};

struct PrecisionMatrix {
    Eigen::SparseMatrix<double> entries;
    bool is_strictly_positive_definite = true;

    [[nodiscard]] int dimension() const { return static_cast<int>(entries.rows()); }
};

struct GaussianConditional {
    double mean;
    double variance;
};

/// Largest autocorrelation accepted outside the intrinsic pathway.
inline constexpr double kMaxRho = 1.0 - 1e-8;

ValidationReport validate_graph(int num_areas, const std::vector<AdjacencyEntry>& entries);
ValidationReport validate_graph(const SpatialGraph& graph);

/// (rho R + (1 - rho) I) / tau_sq.
PrecisionMatrix build_leroux_precision(const SpatialGraph& graph, double rho, double tau_sq);
PrecisionMatrix build_temporal_precision(const TemporalGraph& tgraph, double rho_t, double tau_sq_t);

/// Full conditional of psi_j given psi_{-j} under the Leroux prior.
GaussianConditional leroux_conditional(const SpatialGraph& graph, const Eigen::Ref<const Eigen::VectorXd>& psi,
                                       int j, double rho, double tau_sq);

/// log det(rho R + (1 - rho) I) from the eigenvalues of R, computed once.
class LerouxLogDet {
public:
    explicit LerouxLogDet(const SpatialGraph& graph);
    [[nodiscard]] double operator()(double rho) const;

private:
    Eigen::VectorXd eigenvalues_;
};

// Adjacency file formats. Both use 1-based indices on disk.
//   edge list: first line "K=<num_areas>", then one "j,k" per line
//   matrix:    K lines of K comma-separated 0/1 values
SpatialGraph read_edge_list(const std::filesystem::path& path);
void write_edge_list(const SpatialGraph& graph, const std::filesystem::path& path);
SpatialGraph read_adjacency_matrix(const std::filesystem::path& path);
void write_adjacency_matrix(const SpatialGraph& graph, const std::filesystem::path& path);
/// Dispatches on the first line: "K=" means edge list, otherwise matrix.
SpatialGraph read_adjacency(const std::filesystem::path& path);

}  // namespace carlevel
