#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "mbf/errors.hpp"

namespace mbf {

// Point data is stored one observation per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// A multivariate series Z_1..Z_T sampled on a uniform grid; row t-1 holds Z_t.
class TimeSeries {
public:
    explicit TimeSeries(Matrix values);

    const Matrix& values() const noexcept { return values_; }
    std::size_t length() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t components() const noexcept { return static_cast<std::size_t>(values_.cols()); }

    /// Observation at 1-based time t.
    auto at(std::size_t t) const { return values_.row(static_cast<Eigen::Index>(t - 1)); }

    /// Copy of this series with one more observation appended.
    TimeSeries appended(const RowVector& row) const;
    /// The first n observations.
    TimeSeries head(std::size_t n) const;

private:
    Matrix values_;
};

/// Sliding-window embeddings. Row i is the patch for 1-based time times[i].
struct PatchSet {
    Matrix patches;
    std::vector<std::size_t> times;
    std::size_t window = 0;
    std::size_t components = 0;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t dim() const noexcept { return window * components; }
};

/// Denoised patches, row-aligned with the PatchSet they came from.
struct DenoisedSet {
    Matrix points;
    std::vector<std::size_t> times;

    std::size_t size() const noexcept { return times.size(); }

    /// Identity denoising: the raw patches themselves.
    static DenoisedSet from_patches(const PatchSet& patches);
};

/// Orthogonal projector onto an estimated d-dimensional tangent space.
class TangentProjector {
public:
    static constexpr double kSymmetryTol = 1e-10;
    static constexpr double kIdempotenceTol = 1e-8;
    static constexpr double kTraceTol = 1e-8;

    /// Validates symmetry, idempotence and trace; throws InvalidArgument otherwise.
    TangentProjector(Eigen::MatrixXd matrix, std::size_t rank);

    /// P = B B^T for a D x d basis with orthonormal columns.
    static TangentProjector from_orthonormal_basis(const Eigen::MatrixXd& basis);

    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    /// Orthonormal D x d basis of the range.
    const Eigen::MatrixXd& basis() const noexcept { return basis_; }
    std::size_t rank() const noexcept { return rank_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

    /// True when the matrix satisfies all projector invariants.
    static bool satisfies_invariants(const Eigen::MatrixXd& m, std::size_t rank);

private:
    TangentProjector(Eigen::MatrixXd matrix, Eigen::MatrixXd basis);

    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd basis_;
    std::size_t rank_;
};

enum class NoiseDistribution { gaussian, bounded_uniform };

/// Per-step noise scale. A single entry in sigma applies to every step.
/// For bounded_uniform, sigma is the standard deviation of the uniform law.
///
/// With persistence rho > 0 each coordinate follows the stationary AR(1)
/// e_t = rho e_{t-1} + sqrt(1 - rho^2) sigma_t u_t, which keeps the marginal
/// scale sigma_t while correlating consecutive steps. rho = 0 is independent noise.
struct NoiseSpec {
    std::vector<double> sigma{0.0};
    NoiseDistribution distribution = NoiseDistribution::gaussian;
    double persistence = 0.0;

    static NoiseSpec none() { return NoiseSpec{}; }
    static NoiseSpec gaussian(double s) { return NoiseSpec{{s}, NoiseDistribution::gaussian}; }

    /// sigma at 1-based step t.
    double at(std::size_t t) const;
    double max() const;
    void validate() const;
};

/// 0.75 * max(0, 1 - u^2).
double epanechnikov(double u);

/// exp(-sq_dist / h_sq), the affinity used to build LDMM weight graphs.
double heat_kernel(double sq_dist, double h_sq);

/// exp(-x^2 / 4), the kernel K_0 applied to the normalised SAME argument.
double heat_kernel_quartic(double x);

/// Euclidean distances from every row of points to the given row.
Vector row_distances(const Matrix& points, const RowVector& from);

/// Median over points of the distance to their k-th nearest other point.
double median_knn_distance(const Matrix& points, std::size_t k);

}  // namespace mbf
