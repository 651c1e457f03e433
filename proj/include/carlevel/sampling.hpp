#pragma once

#include "carlevel/graph.hpp"
#include "carlevel/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <functional>
#include <optional>

namespace carlevel {

double sample_normal(RngStream& rng, double mean, double sd);
double sample_uniform(RngStream& rng, double lo, double hi);
/// Gamma with the given shape and rate.
double sample_gamma(RngStream& rng, double shape, double rate);
/// Inverse gamma with density proportional to x^(-a-1) exp(-b/x).
double sample_inverse_gamma(RngStream& rng, double a, double b);
Eigen::VectorXd sample_standard_normal(RngStream& rng, Eigen::Index n);

/// Draw from N(Q^-1 b, Q^-1) for a small dense SPD precision Q.
Eigen::VectorXd sample_canonical_dense(RngStream& rng, const Eigen::MatrixXd& precision, const Eigen::VectorXd& b);

/// Inverse-Wishart with `df` degrees of freedom and scale matrix `scale`
/// (mean scale / (df - d - 1)).
Eigen::MatrixXd sample_inverse_wishart(RngStream& rng, double df, const Eigen::MatrixXd& scale);

/// Sparse Cholesky of a precision matrix under a fill-reducing (AMD)
/// ordering: P Q P' = L L'.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const PrecisionMatrix& q);

    [[nodiscard]] int dimension() const { return dimension_; }
    [[nodiscard]] double log_determinant() const;
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    /// Maps iid standard normals z to a N(0, Q^-1) draw.
    [[nodiscard]] Eigen::VectorXd colour(const Eigen::VectorXd& z) const;
    /// L L' in the permuted ordering, and P Q P' for comparison.
    [[nodiscard]] Eigen::MatrixXd reconstructed() const;
    [[nodiscard]] Eigen::MatrixXd permuted_input() const;

private:
    int dimension_;
    Eigen::SparseMatrix<double> input_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
};

/// Draw from N(Q^-1 b, Q^-1). Throws NumericalError if Q is not positive definite.
Eigen::VectorXd sample_gmrf(RngStream& rng, const PrecisionMatrix& q, const Eigen::VectorXd& b);

/// Keeps the factor of (rho R + (1 - rho) I) for the most recent rho and
/// refactorises only when rho changes. Scaling by tau_sq is applied to the
/// draw, so tau_sq changes never trigger a refactorisation.
class LerouxGmrfCache {
public:
    explicit LerouxGmrfCache(const SpatialGraph& graph) : graph_(&graph) {}

    /// Zero-mean draw with covariance tau_sq * Q(rho)^-1.
    Eigen::VectorXd draw(RngStream& rng, double rho, double tau_sq);
    [[nodiscard]] int factorisations() const { return factorisations_; }

private:
    const SpatialGraph* graph_;
    std::optional<double> rho_;
    std::optional<CholeskyFactor> factor_;
    int factorisations_ = 0;
};

/// One univariate slice-sampling update (stepping out, then shrinkage) on
/// the open interval (lo, hi). The initial bracket has width `width` and is
/// clipped to the interval.
double slice_sample(RngStream& rng, const std::function<double(double)>& log_density, double current, double lo,
                    double hi, double width = 0.1);

}  // namespace carlevel
