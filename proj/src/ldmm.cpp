#include "mbf/ldmm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

namespace mbf {

void LdmmConfig::validate() const {
    if (h_sq && !(*h_sq > 0.0 && std::isfinite(*h_sq))) throw InvalidArgument("ldmm.h_sq must be positive");
    if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) throw InvalidArgument("ldmm.lambda must be nonnegative");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("ldmm.mu must be positive");
    if (max_iters < 1) throw InvalidArgument("ldmm.max_iters must be at least 1");
    if (!(rel_tol >= 0.0)) throw InvalidArgument("ldmm.rel_tol must be nonnegative");
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw InvalidArgument("ldmm.ridge must be nonnegative");
    if (!(bandwidth_scale > 0.0) || !std::isfinite(bandwidth_scale)) {
        throw InvalidArgument("ldmm.bandwidth_scale must be positive");
    }
}

Eigen::MatrixXd affinity_matrix(const Matrix& points, double h_sq) {
    if (!(h_sq > 0.0) || !std::isfinite(h_sq)) {
        throw InvalidArgument("affinity_matrix: h_sq must be positive");
    }
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd w(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        w(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = heat_kernel((points.row(i) - points.row(j)).squaredNorm(), h_sq);
            w(i, j) = v;
            w(j, i) = v;
        }
    }
    return w;
}

GraphLaplacian graph_laplacian(const Eigen::MatrixXd& affinity) {
    if (affinity.rows() != affinity.cols()) {
        throw InvalidArgument("graph_laplacian: affinity must be square");
    }
    if (affinity.size() > 0 && (affinity - affinity.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw InvalidArgument("graph_laplacian: affinity is not symmetric");
    }
    if ((affinity.array() < 0.0).any()) {
        throw InvalidArgument("graph_laplacian: affinity has negative entries");
    }
    GraphLaplacian g;
    g.degrees = affinity.rowwise().sum();
    g.laplacian = -affinity;
    g.laplacian.diagonal() += g.degrees;
    return g;
}

Matrix bregman_solve_v(const Eigen::MatrixXd& laplacian, const Eigen::MatrixXd& affinity, double mu,
                       const Matrix& u, const Matrix& r, double ridge) {
    const Eigen::Index n = laplacian.rows();
    if (laplacian.cols() != n || affinity.rows() != n || affinity.cols() != n || u.rows() != n ||
        r.rows() != n || r.cols() != u.cols()) {
        throw InvalidArgument("bregman_solve_v: inconsistent shapes");
    }
    if (!(mu > 0.0)) {
        throw InvalidArgument("bregman_solve_v: mu must be positive");
    }
    Eigen::MatrixXd system = laplacian + mu * affinity;
    system.diagonal().array() += ridge;
    const Eigen::MatrixXd rhs = mu * affinity * (u - r);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
    if (ldlt.info() != Eigen::Success || !(rcond > 0.0)) {
        throw SolverError("bregman_solve_v: factorisation failed", rcond,
                          std::numeric_limits<double>::quiet_NaN());
    }
    const Eigen::MatrixXd v = ldlt.solve(rhs);

    for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
        const double residual = (system * v.col(c) - rhs.col(c)).norm();
        const double scale = 1.0 + rhs.col(c).norm();
        if (!std::isfinite(residual) || residual > 1e-8 * scale) {
            throw SolverError("bregman_solve_v: system numerically singular, column " + std::to_string(c),
                              rcond, residual / scale);
        }
    }
    return v;
}

Matrix bregman_update_u(const Matrix& y, const Matrix& v, const Matrix& r, double alpha) {
    if (y.rows() != v.rows() || y.cols() != v.cols() || r.rows() != y.rows() || r.cols() != y.cols()) {
        throw InvalidArgument("bregman_update_u: inconsistent shapes");
    }
    if (!(alpha >= 0.0)) {
        throw InvalidArgument("bregman_update_u: alpha must be nonnegative");
    }
    return (y + alpha * (v + r)) / (1.0 + alpha);
}

LdmmParams resolve_ldmm_params(const Matrix& points, const LdmmConfig& cfg) {
    cfg.validate();
    LdmmParams p;
    if (cfg.h_sq) {
        p.h_sq = *cfg.h_sq;
    } else {
        const double nn = median_knn_distance(points, 1);
        p.h_sq = cfg.bandwidth_scale * nn * nn;
        if (!(p.h_sq > 0.0)) {
            throw InvalidArgument("ldmm: default h_sq is zero (coincident patches); set h_sq");
        }
    }
    p.lambda = cfg.lambda ? *cfg.lambda : p.h_sq / 7.0;
    p.mu = cfg.mu;
    p.ridge = cfg.ridge;
    return p;
}

LdmmState ldmm_step(const Matrix& y, const LdmmState& state, const LdmmParams& params) {
    const Eigen::MatrixXd w = affinity_matrix(state.u, params.h_sq);
    const GraphLaplacian g = graph_laplacian(w);
    const double n = static_cast<double>(y.rows());
    const double ridge = params.ridge * (g.laplacian.trace() + params.mu * w.trace()) / n;
    const Matrix v = bregman_solve_v(g.laplacian, w, params.mu, state.u, state.r, ridge);
    const double alpha = params.lambda / (params.mu * params.h_sq);

    LdmmState next;
    next.u = bregman_update_u(y, v, state.r, alpha);
    next.r = state.r + v - next.u;
    return next;
}

LdmmResult ldmm_denoise(const PatchSet& patches, const LdmmConfig& cfg) {
    const Matrix& y = patches.patches;
    if (y.rows() < 2) {
        throw InvalidArgument("ldmm_denoise: need at least two patches");
    }
    LdmmResult result;
    result.params = resolve_ldmm_params(y, cfg);

    LdmmState state{y, Matrix::Zero(y.rows(), y.cols())};
    for (std::size_t k = 0; k < cfg.max_iters; ++k) {
        LdmmState next = ldmm_step(y, state, result.params);
        if (!next.u.allFinite() || !next.r.allFinite()) {
            throw NumericalDivergence("ldmm_denoise: non-finite iterate", k + 1);
        }
        const double prev_norm = state.u.norm();
        const double change = (next.u - state.u).norm();
        state = std::move(next);
        result.iterations = k + 1;
        if (prev_norm > 0.0 ? change / prev_norm < cfg.rel_tol : change == 0.0) {
            result.converged = true;
            break;
        }
    }
    result.denoised = DenoisedSet{std::move(state.u), patches.times};
    return result;
}

}  // namespace mbf
