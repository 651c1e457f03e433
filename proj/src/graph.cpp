#include "carlevel/graph.hpp"

#include "carlevel/errors.hpp"
#include "carlevel/textio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace carlevel {

namespace {

std::string area_label(int j) { return std::to_string(j + 1); }

void check_rho(double rho) {
    if (!(rho >= 0.0) || rho > kMaxRho) {
        throw ValidationError("autocorrelation must lie in [0, 1 - 1e-8], got " + std::to_string(rho));
    }
}

}  // namespace

SpatialGraph SpatialGraph::from_edges(int num_areas, const std::vector<std::pair<int, int>>& edges) {
    if (num_areas < 1) {
        throw ValidationError("graph needs at least one area");
    }
    std::set<std::pair<int, int>> unique;
    for (auto [j, k] : edges) {
        if (j < 0 || k < 0 || j >= num_areas || k >= num_areas) {
            throw ValidationError("edge (" + area_label(j) + "," + area_label(k) + ") out of range");
        }
        if (j == k) {
            throw ValidationError("self-loop at area " + area_label(j));
        }
        unique.emplace(std::min(j, k), std::max(j, k));
    }
    SpatialGraph g;
    g.num_areas_ = num_areas;
    g.edges_.assign(unique.begin(), unique.end());
    g.neighbors_.assign(static_cast<std::size_t>(num_areas), {});
    for (auto [j, k] : g.edges_) {
        g.neighbors_[static_cast<std::size_t>(j)].push_back(k);
        g.neighbors_[static_cast<std::size_t>(k)].push_back(j);
    }
    for (auto& nb : g.neighbors_) {
        std::sort(nb.begin(), nb.end());
    }
    return g;
}

SpatialGraph SpatialGraph::from_entries(int num_areas, const std::vector<AdjacencyEntry>& entries) {
    const ValidationReport report = validate_graph(num_areas, entries);
    if (!report.ok()) {
        std::string msg = "invalid adjacency:";
        for (const auto& e : report.errors) {
            msg += " " + e + ";";
        }
        throw ValidationError(msg);
    }
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : entries) {
        if (e.weight == 1.0 && e.from < e.to) {
            edges.emplace_back(e.from, e.to);
        }
    }
    return from_edges(num_areas, edges);
}

SpatialGraph SpatialGraph::from_dense(const Eigen::MatrixXd& w) {
    if (w.rows() != w.cols()) {
        throw ValidationError("adjacency matrix must be square");
    }
    std::vector<AdjacencyEntry> entries;
    for (int j = 0; j < w.rows(); ++j) {
        for (int k = 0; k < w.cols(); ++k) {
            if (w(j, k) != 0.0) {
                entries.push_back({j, k, w(j, k)});
            }
        }
    }
    return from_entries(static_cast<int>(w.rows()), entries);
}

SpatialGraph SpatialGraph::path(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int t = 0; t + 1 < n; ++t) {
        edges.emplace_back(t, t + 1);
    }
    return from_edges(n, edges);
}

std::vector<int> SpatialGraph::neighbor_counts() const {
    std::vector<int> counts(static_cast<std::size_t>(num_areas_));
    for (int j = 0; j < num_areas_; ++j) {
        counts[static_cast<std::size_t>(j)] = neighbor_count(j);
    }
    return counts;
}

std::vector<int> SpatialGraph::component_labels() const {
    std::vector<int> label(static_cast<std::size_t>(num_areas_), -1);
    int next = 0;
    std::vector<int> stack;
    for (int start = 0; start < num_areas_; ++start) {
        if (label[static_cast<std::size_t>(start)] >= 0) {
            continue;
        }
        label[static_cast<std::size_t>(start)] = next;
        stack.push_back(start);
        while (!stack.empty()) {
            const int j = stack.back();
            stack.pop_back();
            for (int k : neighbors(j)) {
                if (label[static_cast<std::size_t>(k)] < 0) {
                    label[static_cast<std::size_t>(k)] = next;
                    stack.push_back(k);
                }
            }
        }
        ++next;
    }
    return label;
}

int SpatialGraph::num_components() const {
    const auto labels = component_labels();
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

Eigen::SparseMatrix<double> SpatialGraph::adjacency() const {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(2 * edges_.size());
    for (auto [j, k] : edges_) {
        triplets.emplace_back(j, k, 1.0);
        triplets.emplace_back(k, j, 1.0);
    }
    Eigen::SparseMatrix<double> w(num_areas_, num_areas_);
    w.setFromTriplets(triplets.begin(), triplets.end());
    return w;
}

Eigen::SparseMatrix<double> SpatialGraph::laplacian() const {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(2 * edges_.size() + static_cast<std::size_t>(num_areas_));
    for (auto [j, k] : edges_) {
        triplets.emplace_back(j, k, -1.0);
        triplets.emplace_back(k, j, -1.0);
    }
    for (int j = 0; j < num_areas_; ++j) {
        triplets.emplace_back(j, j, static_cast<double>(neighbor_count(j)));
    }
    Eigen::SparseMatrix<double> r(num_areas_, num_areas_);
    r.setFromTriplets(triplets.begin(), triplets.end());
    return r;
}

Eigen::MatrixXd SpatialGraph::dense_adjacency() const { return Eigen::MatrixXd(adjacency()); }

double SpatialGraph::laplacian_quadratic(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    double total = 0.0;
    for (auto [j, k] : edges_) {
        const double d = x[j] - x[k];
        total += d * d;
    }
    return total;
}

ValidationReport validate_graph(int num_areas, const std::vector<AdjacencyEntry>& entries) {
    ValidationReport report;
    if (num_areas < 1) {
        report.errors.emplace_back("graph needs at least one area");
        return report;
    }
    std::map<std::pair<int, int>, double> weights;
    for (const auto& e : entries) {
        if (e.from < 0 || e.to < 0 || e.from >= num_areas || e.to >= num_areas) {
            report.errors.push_back("entry (" + area_label(e.from) + "," + area_label(e.to) + ") out of range");
            continue;
        }
        if (e.weight != 0.0 && e.weight != 1.0) {
            report.errors.push_back("non-binary weight " + format_double(e.weight) + " at (" + area_label(e.from) +
                                    "," + area_label(e.to) + ")");
            continue;
        }
        if (e.from == e.to && e.weight != 0.0) {
            report.errors.push_back("self-loop at area " + area_label(e.from));
            continue;
        }
        weights[{e.from, e.to}] = e.weight;
    }
    std::vector<std::pair<int, int>> edges;
    for (const auto& [key, w] : weights) {
        const auto [j, k] = key;
        const auto it = weights.find({k, j});
        const double back = it == weights.end() ? 0.0 : it->second;
        if (w != back) {
            if (j < k || back == 0.0) {
                report.errors.push_back("asymmetric weights between areas " + area_label(j) + " and " + area_label(k));
            }
            continue;
        }
        if (w == 1.0 && j < k) {
            edges.emplace_back(j, k);
        }
    }
    if (!report.ok()) {
        return report;
    }
    const ValidationReport structural = validate_graph(SpatialGraph::from_edges(num_areas, edges));
    report.warnings = structural.warnings;
    report.connected = structural.connected;
    return report;
}

ValidationReport validate_graph(const SpatialGraph& graph) {
    ValidationReport report;
    for (int j = 0; j < graph.num_areas(); ++j) {
        if (graph.neighbor_count(j) == 0 && graph.num_areas() > 1) {
            report.warnings.push_back("area " + area_label(j) + " isolated");
        }
    }
    const int components = graph.num_components();
    report.connected = components <= 1;
    if (!report.connected) {
        report.warnings.push_back("graph disconnected (" + std::to_string(components) + " components)");
    }
    return report;
}

PrecisionMatrix build_leroux_precision(const SpatialGraph& graph, double rho, double tau_sq) {
    check_rho(rho);
    if (!(tau_sq > 0.0)) {
        throw ValidationError("tau_sq must be positive");
    }
    Eigen::SparseMatrix<double> identity(graph.num_areas(), graph.num_areas());
    identity.setIdentity();
    PrecisionMatrix q;
    q.entries = (rho * graph.laplacian() + (1.0 - rho) * identity) / tau_sq;
    q.entries.makeCompressed();
    q.is_strictly_positive_definite = true;
    return q;
}

PrecisionMatrix build_temporal_precision(const TemporalGraph& tgraph, double rho_t, double tau_sq_t) {
    if (tgraph.num_periods < 1) {
        throw ValidationError("temporal graph needs at least one period");
    }
    return build_leroux_precision(tgraph.as_graph(), rho_t, tau_sq_t);
}

GaussianConditional leroux_conditional(const SpatialGraph& graph, const Eigen::Ref<const Eigen::VectorXd>& psi,
                                       int j, double rho, double tau_sq) {
    if (j < 0 || j >= graph.num_areas()) {
        throw ValidationError("area index out of range");
    }
    check_rho(rho);
    double neighbour_sum = 0.0;
    for (int k : graph.neighbors(j)) {
        neighbour_sum += psi[k];
    }
    const double denom = rho * graph.neighbor_count(j) + 1.0 - rho;
    return {rho * neighbour_sum / denom, tau_sq / denom};
}

LerouxLogDet::LerouxLogDet(const SpatialGraph& graph) {
    const Eigen::MatrixXd r(graph.laplacian());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(r, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigen-decomposition of the graph Laplacian failed");
    }
    eigenvalues_ = solver.eigenvalues().cwiseMax(0.0);
}

double LerouxLogDet::operator()(double rho) const {
    return (1.0 + rho * (eigenvalues_.array() - 1.0)).log().sum();
}

SpatialGraph read_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open adjacency file " + path.string());
    }
    std::string line;
    int num_areas = -1;
    std::vector<std::pair<int, int>> edges;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (num_areas < 0) {
            if (line.rfind("K=", 0) != 0) {
                throw ValidationError("edge list must start with K=<num_areas>");
            }
            num_areas = parse_int(line.substr(2), "K");
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 2) {
            throw ValidationError("edge list line " + std::to_string(line_no) + ": expected 'j,k'");
        }
        edges.emplace_back(parse_int(fields[0], "area index") - 1, parse_int(fields[1], "area index") - 1);
    }
    if (num_areas < 0) {
        throw ValidationError("edge list is empty");
    }
    return SpatialGraph::from_edges(num_areas, edges);
}

void write_edge_list(const SpatialGraph& graph, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "K=" << graph.num_areas() << '\n';
    for (auto [j, k] : graph.edges()) {
        out << j + 1 << ',' << k + 1 << '\n';
    }
    write_file_atomic(path, out.str());
}

SpatialGraph read_adjacency_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open adjacency file " + path.string());
    }
    std::string line;
    std::vector<AdjacencyEntry> entries;
    int row = 0;
    int width = -1;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto fields = split(line, ',');
        if (width < 0) {
            width = static_cast<int>(fields.size());
        } else if (static_cast<int>(fields.size()) != width) {
            throw ValidationError("adjacency matrix rows have unequal length");
        }
        for (int k = 0; k < width; ++k) {
            const double w = parse_double(fields[static_cast<std::size_t>(k)], "weight");
            if (w != 0.0) {
                entries.push_back({row, k, w});
            }
        }
        ++row;
    }
    if (row != width) {
        throw ValidationError("adjacency matrix must be square");
    }
    return SpatialGraph::from_entries(row, entries);
}

void write_adjacency_matrix(const SpatialGraph& graph, const std::filesystem::path& path) {
    const Eigen::MatrixXd w = graph.dense_adjacency();
    std::ostringstream out;
    for (int j = 0; j < w.rows(); ++j) {
        for (int k = 0; k < w.cols(); ++k) {
            out << (k ? "," : "") << static_cast<int>(w(j, k));
        }
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

SpatialGraph read_adjacency(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open adjacency file " + path.string());
    }
    std::string first;
    while (std::getline(in, first) && trim(first).empty()) {
    }
    in.close();
    if (trim(first).rfind("K=", 0) == 0) {
        return read_edge_list(path);
    }
    return read_adjacency_matrix(path);
}

}  // namespace carlevel
