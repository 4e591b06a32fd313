#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Core>

#include "mbf/core.hpp"

namespace mbf {

/// Low-dimensional manifold model settings.
///
/// Unset `h_sq` resolves to `bandwidth_scale` times the median squared
/// nearest-neighbour distance of the input, and unset `lambda` to h_sq / 7. `ridge` is relative: the solve
/// adds ridge * trace(L + mu W) / N to the diagonal.
struct LdmmConfig {
    std::optional<double> h_sq;
    std::optional<double> lambda;
    double mu = 1500.0;
    std::size_t max_iters = 7;
    double rel_tol = 1e-6;
    double ridge = 1e-10;
    double bandwidth_scale = 1.0;

    void validate() const;
};

struct GraphLaplacian {
    Vector degrees;
    Eigen::MatrixXd laplacian;
};

/// Symmetric heat-kernel affinities exp(-|U_t - U_j|^2 / h_sq).
Eigen::MatrixXd affinity_matrix(const Matrix& points, double h_sq);

/// Degree vector and L = D - W.
GraphLaplacian graph_laplacian(const Eigen::MatrixXd& affinity);

/// Solves (L + mu W + ridge I) V = mu W (U - r), one factorisation shared by all columns.
Matrix bregman_solve_v(const Eigen::MatrixXd& laplacian, const Eigen::MatrixXd& affinity, double mu,
                       const Matrix& u, const Matrix& r, double ridge);

/// Closed-form least-squares update (Y + alpha (V + r)) / (1 + alpha).
Matrix bregman_update_u(const Matrix& y, const Matrix& v, const Matrix& r, double alpha);

/// Iterate state of the split Bregman scheme.
struct LdmmState {
    Matrix u;
    Matrix r;
};

/// Parameters after resolving defaults against a concrete point set.
struct LdmmParams {
    double h_sq = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    double ridge = 0.0;  // relative, as in LdmmConfig
};

LdmmParams resolve_ldmm_params(const Matrix& points, const LdmmConfig& cfg);

/// One pass of affinity, Laplacian, V-solve, U-update and r-update.
LdmmState ldmm_step(const Matrix& y, const LdmmState& state, const LdmmParams& params);

struct LdmmResult {
    DenoisedSet denoised;
    std::size_t iterations = 0;
    bool converged = false;  // stopped on rel_tol rather than max_iters
    LdmmParams params;
};

LdmmResult ldmm_denoise(const PatchSet& patches, const LdmmConfig& cfg);

}  // namespace mbf
