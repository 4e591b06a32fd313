#include "mbf/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace mbf {

DegenerateNeighborhood::DegenerateNeighborhood(std::size_t point, std::size_t found,
                                               std::size_t needed)
    : NumericalError("degenerate neighborhood at point " + std::to_string(point) + ": " +
                     std::to_string(found) + " neighbor(s), need at least " +
                     std::to_string(needed)),
      point_(point) {}

SolverError::SolverError(const std::string& what, double rcond, double residual)
    : NumericalError(what + " (rcond estimate " + std::to_string(rcond) + ", relative residual " +
                     std::to_string(residual) + ")"),
      rcond_(rcond),
      residual_(residual) {}

NumericalDivergence::NumericalDivergence(const std::string& what, std::size_t iteration)
    : NumericalError(what + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}

TimeSeries::TimeSeries(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
        throw InvalidArgument("time series needs at least one observation and one component");
    }
    if (!values_.allFinite()) {
        throw InvalidArgument("time series contains non-finite values");
    }
}

TimeSeries TimeSeries::appended(const RowVector& row) const {
    if (row.size() != values_.cols()) {
        throw InvalidArgument("appended row has " + std::to_string(row.size()) +
                              " components, series has " + std::to_string(values_.cols()));
    }
    Matrix next(values_.rows() + 1, values_.cols());
    next.topRows(values_.rows()) = values_;
    next.row(values_.rows()) = row;
    return TimeSeries(std::move(next));
}

TimeSeries TimeSeries::head(std::size_t n) const {
    if (n < 1 || n > length()) {
        throw InvalidArgument("head length " + std::to_string(n) + " outside [1, " +
                              std::to_string(length()) + "]");
    }
    return TimeSeries(values_.topRows(static_cast<Eigen::Index>(n)));
}

DenoisedSet DenoisedSet::from_patches(const PatchSet& patches) {
    return DenoisedSet{patches.patches, patches.times};
}

TangentProjector::TangentProjector(Eigen::MatrixXd matrix, std::size_t rank)
    : matrix_(std::move(matrix)), rank_(rank) {
    if (!satisfies_invariants(matrix_, rank_)) {
        throw InvalidArgument("matrix is not a symmetric idempotent projector of rank " +
                              std::to_string(rank_));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_);
    basis_ = eig.eigenvectors().rightCols(static_cast<Eigen::Index>(rank_));
}

TangentProjector::TangentProjector(Eigen::MatrixXd matrix, Eigen::MatrixXd basis)
    : matrix_(std::move(matrix)), basis_(std::move(basis)), rank_(static_cast<std::size_t>(basis_.cols())) {
    if (!satisfies_invariants(matrix_, rank_)) {
        throw InvalidArgument("basis columns are not orthonormal");
    }
}

TangentProjector TangentProjector::from_orthonormal_basis(const Eigen::MatrixXd& basis) {
    Eigen::MatrixXd p = basis * basis.transpose();
    // Exact symmetry; the product is symmetric only up to rounding.
    p = 0.5 * (p + p.transpose()).eval();
    return TangentProjector(std::move(p), basis);
}

bool TangentProjector::satisfies_invariants(const Eigen::MatrixXd& m, std::size_t rank) {
    if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) {
        return false;
    }
    if (rank < 1 || rank > static_cast<std::size_t>(m.rows())) {
        return false;
    }
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
        return false;
    }
    if ((m * m - m).norm() > kIdempotenceTol) {
        return false;
    }
    return std::abs(m.trace() - static_cast<double>(rank)) <= kTraceTol;
}

double NoiseSpec::at(std::size_t t) const {
    if (sigma.empty()) {
        return 0.0;
    }
    if (sigma.size() == 1) {
        return sigma.front();
    }
    if (t < 1 || t > sigma.size()) {
        throw IndexError("noise step " + std::to_string(t) + " outside [1, " +
                         std::to_string(sigma.size()) + "]");
    }
    return sigma[t - 1];
}

double NoiseSpec::max() const {
    return sigma.empty() ? 0.0 : *std::max_element(sigma.begin(), sigma.end());
}

void NoiseSpec::validate() const {
    for (double s : sigma) {
        if (!std::isfinite(s) || s < 0.0) {
            throw InvalidArgument("noise sigma must be finite and nonnegative");
        }
    }
    if (!(persistence >= 0.0 && persistence < 1.0)) {
        throw InvalidArgument("noise persistence must lie in [0, 1)");
    }
}

double epanechnikov(double u) {
    if (!std::isfinite(u) || u < 0.0) {
        throw InvalidArgument("epanechnikov: argument must be finite and nonnegative");
    }
    return u >= 1.0 ? 0.0 : 0.75 * (1.0 - u * u);
}

double heat_kernel(double sq_dist, double h_sq) {
    if (!(h_sq > 0.0) || !std::isfinite(h_sq)) {
        throw InvalidArgument("heat_kernel: bandwidth h^2 must be positive");
    }
    if (!(sq_dist >= 0.0)) {
        throw InvalidArgument("heat_kernel: squared distance must be nonnegative");
    }
    return std::exp(-sq_dist / h_sq);
}

double heat_kernel_quartic(double x) {
    if (!(x >= 0.0)) {
        throw InvalidArgument("heat_kernel_quartic: argument must be nonnegative");
    }
    return std::exp(-0.25 * x * x);
}

Vector row_distances(const Matrix& points, const RowVector& from) {
    return (points.rowwise() - from).rowwise().norm();
}

double median_knn_distance(const Matrix& points, std::size_t k) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (n < 2) {
        throw InvalidArgument("median_knn_distance needs at least two points");
    }
    k = std::clamp<std::size_t>(k, 1, n - 1);
    std::vector<double> kth(n);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector d = row_distances(points, points.row(static_cast<Eigen::Index>(i)));
        std::copy(d.data(), d.data() + n, dist.begin());
        dist[i] = std::numeric_limits<double>::infinity();
        std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1),
                         dist.end());
        kth[i] = dist[k - 1];
    }
    const auto mid = kth.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(kth.begin(), mid, kth.end());
    double med = *mid;
    if (n % 2 == 0) {
        med = 0.5 * (med + *std::max_element(kth.begin(), mid));
    }
    return med;
}

}  // namespace mbf
