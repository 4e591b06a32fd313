#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mbf/core.hpp"

namespace mbf {

/// Structure-adaptive manifold estimation settings.
///
/// `iterations` counts total passes (K + 1). When `h0` is unset the initial
/// bandwidth is the median distance to the ceil(sqrt(N))-th nearest neighbour.
struct SameConfig {
    std::size_t dim = 1;
    std::size_t iterations = 5;
    std::optional<double> h0;
    double tau0 = 1.0;
    double decay = 1.25;  // a > 1, h_{k+1} = h_k / a
    double gamma = 1.5;   // refit neighbourhood radius is gamma * h_k

    void validate() const;
};

struct SameDiagnostics {
    std::vector<double> bandwidths;           // h_k actually used, one per pass
    std::size_t projector_fallbacks = 0;      // refits that kept the previous projector
    std::size_t zero_weight_fallbacks = 0;    // points whose weight row summed to zero
};

struct SameResult {
    DenoisedSet denoised;
    std::vector<TangentProjector> projectors;  // the projectors used in the final pass
    SameDiagnostics diagnostics;
};

/// Default initial bandwidth: median distance to the ceil(sqrt(N))-th nearest neighbour.
double same_default_bandwidth(const Matrix& points);

/// Projector onto the top-`dim` eigenvectors of a symmetric scatter matrix.
TangentProjector top_eigen_projector(const Eigen::MatrixXd& scatter, std::size_t dim);

/// Local-PCA tangent projectors over tau0-balls (the point itself included).
/// Throws DegenerateNeighborhood when a ball holds fewer than dim + 1 points.
std::vector<TangentProjector> init_projectors(const Matrix& points, std::size_t dim, double tau0);
std::vector<TangentProjector> init_projectors(const PatchSet& patches, const SameConfig& cfg);

/// w_ij = K_0(|P_i (Y_i - Y_j)|^2 / h^2) * 1(|Y_i - Y_j| <= tau0) with K_0(x) = exp(-x^2/4).
/// The 1/(N h^d) prefactor is dropped; it cancels in the weighted average.
Eigen::MatrixXd same_weights(const Matrix& points, const std::vector<TangentProjector>& projectors,
                             double h, double tau0);

/// Runs all passes of the SAME iteration and returns the last averages.
SameResult same_denoise(const PatchSet& patches, const SameConfig& cfg);

}  // namespace mbf
