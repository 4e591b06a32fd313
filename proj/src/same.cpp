#include "mbf/same.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace mbf {

namespace {

Eigen::MatrixXd centered_scatter(const Matrix& points, const std::vector<Eigen::Index>& members) {
    RowVector mean = RowVector::Zero(points.cols());
    for (auto j : members) {
        mean += points.row(j);
    }
    mean /= static_cast<double>(members.size());
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(points.cols(), points.cols());
    for (auto j : members) {
        const RowVector diff = points.row(j) - mean;
        scatter.noalias() += diff.transpose() * diff;
    }
    return scatter;
}

void check_dim(std::size_t dim, Eigen::Index ambient) {
    if (dim < 1 || dim > static_cast<std::size_t>(ambient)) {
        throw InvalidArgument("manifold dimension " + std::to_string(dim) +
                              " must lie in [1, " + std::to_string(ambient) + "]");
    }
}

}  // namespace

void SameConfig::validate() const {
    if (dim < 1) throw InvalidArgument("same.dim must be at least 1");
    if (iterations < 1) throw InvalidArgument("same.iterations must be at least 1");
    if (h0 && !(*h0 > 0.0 && std::isfinite(*h0))) throw InvalidArgument("same.h0 must be positive");
    if (!(tau0 > 0.0)) throw InvalidArgument("same.tau0 must be positive");
    if (!(decay > 1.0) || !std::isfinite(decay)) throw InvalidArgument("same.decay must exceed 1");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("same.gamma must be positive");
}

double same_default_bandwidth(const Matrix& points) {
    const auto n = static_cast<double>(points.rows());
    return median_knn_distance(points, static_cast<std::size_t>(std::ceil(std::sqrt(n))));
}

TangentProjector top_eigen_projector(const Eigen::MatrixXd& scatter, std::size_t dim) {
    check_dim(dim, scatter.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of local scatter matrix failed");
    }
    // Eigenvalues come back in ascending order.
    return TangentProjector::from_orthonormal_basis(
        eig.eigenvectors().rightCols(static_cast<Eigen::Index>(dim)));
}

std::vector<TangentProjector> init_projectors(const Matrix& points, std::size_t dim, double tau0) {
    if (points.rows() == 0) {
        throw InvalidArgument("init_projectors: empty point set");
    }
    check_dim(dim, points.cols());
    if (!(tau0 > 0.0)) {
        throw InvalidArgument("init_projectors: tau0 must be positive");
    }
    std::vector<TangentProjector> out;
    out.reserve(static_cast<std::size_t>(points.rows()));
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const Vector dist = row_distances(points, points.row(i));
        members.clear();
        for (Eigen::Index j = 0; j < points.rows(); ++j) {
            if (dist(j) <= tau0) members.push_back(j);
        }
        if (members.size() < dim + 1) {
            throw DegenerateNeighborhood(static_cast<std::size_t>(i), members.size(), dim + 1);
        }
        out.push_back(top_eigen_projector(centered_scatter(points, members), dim));
    }
    return out;
}

std::vector<TangentProjector> init_projectors(const PatchSet& patches, const SameConfig& cfg) {
    cfg.validate();
    return init_projectors(patches.patches, cfg.dim, cfg.tau0);
}

Eigen::MatrixXd same_weights(const Matrix& points, const std::vector<TangentProjector>& projectors,
                             double h, double tau0) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw InvalidArgument("same_weights: bandwidth must be positive");
    }
    if (projectors.size() != static_cast<std::size_t>(points.rows())) {
        throw InvalidArgument("same_weights: need one projector per point");
    }
    const Eigen::Index n = points.rows();
    const double inv_h_sq = 1.0 / (h * h);
    Eigen::MatrixXd w(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Matrix diff = (-points).rowwise() + points.row(i);  // row j: Y_i - Y_j
        const Vector dist = diff.rowwise().norm();
        // |P (Y_i - Y_j)|^2 = |B^T (Y_i - Y_j)|^2 for an orthonormal basis B.
        const Vector tangential = (diff * projectors[static_cast<std::size_t>(i)].basis()).rowwise().squaredNorm();
        for (Eigen::Index j = 0; j < n; ++j) {
            w(i, j) = dist(j) <= tau0 ? heat_kernel_quartic(tangential(j) * inv_h_sq) : 0.0;
        }
    }
    return w;
}

SameResult same_denoise(const PatchSet& patches, const SameConfig& cfg) {
    cfg.validate();
    const Matrix& y = patches.patches;
    if (y.rows() == 0) {
        throw InvalidArgument("same_denoise: empty patch set");
    }
    const Eigen::Index n = y.rows();

    SameResult result;
    auto& diag = result.diagnostics;
    double h = cfg.h0 ? *cfg.h0 : same_default_bandwidth(y);
    if (!(h > 0.0)) {
        throw InvalidArgument("same_denoise: default bandwidth is zero (coincident patches); set h0");
    }
    std::vector<TangentProjector> projectors = init_projectors(y, cfg.dim, cfg.tau0);

    Matrix u(n, y.cols());
    std::vector<Eigen::Index> members;
    for (std::size_t pass = 0; pass < cfg.iterations; ++pass) {
        diag.bandwidths.push_back(h);
        const Eigen::MatrixXd w = same_weights(y, projectors, h, cfg.tau0);
        const Vector sums = w.rowwise().sum();
        u.noalias() = w * y;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (sums(t) > 0.0) {
                u.row(t) /= sums(t);
            } else {
                u.row(t) = y.row(t);
                ++diag.zero_weight_fallbacks;
            }
        }

        if (pass + 1 == cfg.iterations) break;

        const double radius = cfg.gamma * h;
        for (Eigen::Index t = 0; t < n; ++t) {
            const Matrix diff = u.rowwise() - u.row(t);
            const Vector dist = diff.rowwise().norm();
            members.clear();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (dist(j) <= radius) members.push_back(j);
            }
            if (members.size() < cfg.dim + 1) {
                ++diag.projector_fallbacks;
                continue;
            }
            // Scatter of differences from U_t itself, not from the neighbourhood mean.
            Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(y.cols(), y.cols());
            for (auto j : members) {
                scatter.noalias() += diff.row(j).transpose() * diff.row(j);
            }
            projectors[static_cast<std::size_t>(t)] = top_eigen_projector(scatter, cfg.dim);
        }
        h /= cfg.decay;
    }

    result.denoised = DenoisedSet{std::move(u), patches.times};
    result.projectors = std::move(projectors);
    return result;
}

}  // namespace mbf
