#include "carlevel/sampling.hpp"

#include "carlevel/errors.hpp"

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <cmath>

namespace carlevel {

double sample_normal(RngStream& rng, double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean)) {
        throw ValidationError("sample_normal requires finite mean and sd > 0");
    }
    boost::random::normal_distribution<double> z(0.0, 1.0);
    return mean + sd * z(rng);
}

double sample_uniform(RngStream& rng, double lo, double hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw ValidationError("sample_uniform requires finite lo < hi");
    }
    return lo + (hi - lo) * rng.uniform01();
}

double sample_gamma(RngStream& rng, double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw ValidationError("gamma parameters must be positive");
    }
    boost::random::gamma_distribution<double> g(shape, 1.0);
    return g(rng) / rate;
}

double sample_inverse_gamma(RngStream& rng, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ValidationError("inverse gamma parameters must be positive");
    }
    double draw = 0.0;
    // A Gamma(a) draw can underflow to zero for very small shapes.
    do {
        draw = sample_gamma(rng, a, b);
    } while (!(draw > 0.0));
    return 1.0 / draw;
}

Eigen::VectorXd sample_standard_normal(RngStream& rng, Eigen::Index n) {
    boost::random::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out[i] = z(rng);
    }
    return out;
}

Eigen::VectorXd sample_canonical_dense(RngStream& rng, const Eigen::MatrixXd& precision, const Eigen::VectorXd& b) {
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("precision matrix is not positive definite");
    }
    Eigen::VectorXd mean = llt.solve(b);
    const Eigen::VectorXd z = sample_standard_normal(rng, b.size());
    mean += llt.matrixU().solve(z);
    return mean;
}

Eigen::MatrixXd sample_inverse_wishart(RngStream& rng, double df, const Eigen::MatrixXd& scale) {
    const Eigen::Index d = scale.rows();
    if (scale.cols() != d || !(df > static_cast<double>(d) - 1.0)) {
        throw ValidationError("inverse Wishart needs a square scale and df > d - 1");
    }
    // Bartlett decomposition of W ~ Wishart(df, scale^-1); the draw is W^-1.
    Eigen::LLT<Eigen::MatrixXd> scale_llt(scale);
    if (scale_llt.info() != Eigen::Success) {
        throw NumericalError("inverse Wishart scale is not positive definite");
    }
    const Eigen::MatrixXd scale_inv = scale_llt.solve(Eigen::MatrixXd::Identity(d, d));
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(scale_inv).matrixL();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    boost::random::normal_distribution<double> z(0.0, 1.0);
    for (Eigen::Index i = 0; i < d; ++i) {
        a(i, i) = std::sqrt(2.0 * sample_gamma(rng, 0.5 * (df - static_cast<double>(i)), 1.0));
        for (Eigen::Index j = 0; j < i; ++j) {
            a(i, j) = z(rng);
        }
    }
    const Eigen::MatrixXd la = l * a;
    const Eigen::MatrixXd w = la * la.transpose();
    Eigen::LLT<Eigen::MatrixXd> w_llt(w);
    if (w_llt.info() != Eigen::Success) {
        throw NumericalError("Wishart draw is singular");
    }
    Eigen::MatrixXd out = w_llt.solve(Eigen::MatrixXd::Identity(d, d));
    return 0.5 * (out + out.transpose());
}

CholeskyFactor::CholeskyFactor(const PrecisionMatrix& q) : dimension_(q.dimension()), input_(q.entries) {
    if (q.entries.rows() != q.entries.cols()) {
        throw ValidationError("precision matrix must be square");
    }
    llt_.compute(input_);
    if (llt_.info() != Eigen::Success) {
        throw NumericalError("Cholesky factorisation failed: precision matrix is not positive definite");
    }
}

double CholeskyFactor::log_determinant() const {
    const Eigen::SparseMatrix<double> l = llt_.matrixL();
    double total = 0.0;
    for (int j = 0; j < dimension_; ++j) {
        total += std::log(l.coeff(j, j));
    }
    return 2.0 * total;
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
    if (b.size() != dimension_) {
        throw ValidationError("dimension mismatch in Cholesky solve");
    }
    return llt_.solve(b);
}

Eigen::VectorXd CholeskyFactor::colour(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd u = llt_.matrixU().solve(z);
    return llt_.permutationPinv() * u;
}

Eigen::MatrixXd CholeskyFactor::reconstructed() const {
    const Eigen::MatrixXd l(llt_.matrixL());
    return l * l.transpose();
}

Eigen::MatrixXd CholeskyFactor::permuted_input() const {
    const Eigen::MatrixXd dense(input_);
    const auto& p = llt_.permutationP();
    return p * dense * p.transpose();
}

Eigen::VectorXd sample_gmrf(RngStream& rng, const PrecisionMatrix& q, const Eigen::VectorXd& b) {
    if (b.size() != q.dimension()) {
        throw ValidationError("canonical mean has the wrong dimension");
    }
    const CholeskyFactor factor(q);
    Eigen::VectorXd draw = factor.solve(b);
    draw += factor.colour(sample_standard_normal(rng, b.size()));
    return draw;
}

Eigen::VectorXd LerouxGmrfCache::draw(RngStream& rng, double rho, double tau_sq) {
    if (!(tau_sq > 0.0)) {
        throw ValidationError("tau_sq must be positive");
    }
    if (!rho_ || *rho_ != rho) {
        factor_.emplace(build_leroux_precision(*graph_, rho, 1.0));
        rho_ = rho;
        ++factorisations_;
    }
    return std::sqrt(tau_sq) * factor_->colour(sample_standard_normal(rng, graph_->num_areas()));
}

double slice_sample(RngStream& rng, const std::function<double(double)>& log_density, double current, double lo,
                    double hi, double width) {
    if (!(lo < current && current < hi)) {
        throw ValidationError("slice sampler: current value outside (lo, hi)");
    }
    const double f0 = log_density(current);
    if (std::isnan(f0)) {
        throw NumericalError("slice sampler: log density is NaN at the current value");
    }
    if (!std::isfinite(f0)) {
        throw NumericalError("slice sampler: log density is not finite at the current value");
    }
    const double level = f0 + std::log(rng.uniform01());

    double left = current - width * rng.uniform01();
    double right = left + width;
    left = std::max(left, lo);
    right = std::min(right, hi);
    while (left > lo && log_density(left) > level) {
        left = std::max(left - width, lo);
    }
    while (right < hi && log_density(right) > level) {
        right = std::min(right + width, hi);
    }

    while (true) {
        const double proposal = left + (right - left) * rng.uniform01();
        if (proposal <= lo || proposal >= hi) {
            continue;
        }
        const double f = log_density(proposal);
        if (f > level) {
            return proposal;
        }
        if (proposal < current) {
            left = proposal;
        } else {
            right = proposal;
        }
        if (right - left < 1e-14) {
            return current;
        }
    }
}

}  // namespace carlevel
