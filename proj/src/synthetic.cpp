#include "mbf/synthetic.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace mbf {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class NoiseSource {
public:
    NoiseSource(const NoiseSpec& spec, std::uint64_t seed, std::size_t coords)
        : spec_(spec), rng_(seed), state_(coords, 0.0) {
        spec_.validate();
    }

    /// Noise for coordinate `coord` at 1-based step t; steps must be visited in order.
    double draw(std::size_t t, std::size_t coord) {
        const double s = spec_.at(t);
        const double fresh = s == 0.0 ? 0.0 : s * unit_draw();
        const double rho = spec_.persistence;
        double& e = state_[coord];
        e = t == 1 || rho == 0.0 ? fresh : rho * e + std::sqrt(1.0 - rho * rho) * fresh;
        return e;
    }

private:
    double unit_draw() {
        if (spec_.distribution == NoiseDistribution::gaussian) {
            return normal_(rng_);
        }
        // Uniform on [-sqrt(3), sqrt(3)] has unit variance.
        return std::sqrt(3.0) * (2.0 * unit_(rng_) - 1.0);
    }

    NoiseSpec spec_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::vector<double> state_;
};

void check_noise_length(const NoiseSpec& noise, std::size_t length) {
    if (noise.sigma.size() > 1 && noise.sigma.size() != length) {
        throw InvalidArgument("noise sigma list has " + std::to_string(noise.sigma.size()) +
                              " entries for a series of length " + std::to_string(length));
    }
}

}  // namespace

ManifoldTag parse_manifold_tag(std::string_view name) {
    if (name == "line-subspace") return ManifoldTag::line_subspace;
    if (name == "circle") return ManifoldTag::circle;
    if (name == "graph-of-g") return ManifoldTag::graph_of_g;
    throw InvalidArgument("unknown manifold tag '" + std::string(name) + "'");
}

std::string to_string(ManifoldTag tag) {
    switch (tag) {
        case ManifoldTag::line_subspace: return "line-subspace";
        case ManifoldTag::circle: return "circle";
        case ManifoldTag::graph_of_g: return "graph-of-g";
    }
    return "unknown";
}

ManifoldTag tag_of(const ManifoldSpec& manifold) {
    return std::visit(Overloaded{[](const SubspaceManifold&) { return ManifoldTag::line_subspace; },
                                 [](const CircleManifold&) { return ManifoldTag::circle; },
                                 [](const GraphManifold&) { return ManifoldTag::graph_of_g; }},
                      manifold);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) {
    // FNV-1a over the stream name, then mixed with the master seed and index.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : stream) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(master ^ h) + index);
}

Eigen::MatrixXd ar_companion(const std::vector<double>& coeffs, std::size_t patch_dim) {
    if (coeffs.empty() || patch_dim < coeffs.size()) {
        throw InvalidArgument("ar_companion: patch dimension must be at least the AR order");
    }
    const auto d = static_cast<Eigen::Index>(patch_dim);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        a(0, static_cast<Eigen::Index>(i)) = coeffs[i];
    }
    for (Eigen::Index i = 1; i < d; ++i) {
        a(i, i - 1) = 1.0;
    }
    return a;
}

SubspaceManifold ar_subspace(const std::vector<double>& coeffs, std::size_t patch_dim) {
    const Eigen::MatrixXd a = ar_companion(coeffs, patch_dim);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    const double tol = 1e-12 * std::max(1.0, sv(0));
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > tol) ++rank;
    return SubspaceManifold{svd.matrixU().leftCols(rank)};
}

SyntheticSample gen_ar(const std::vector<double>& coeffs, std::size_t length, const NoiseSpec& noise,
                       std::uint64_t seed, const std::vector<double>& initial,
                       std::optional<std::size_t> patch_dim) {
    const std::size_t order = coeffs.size();
    if (order < 1) {
        throw InvalidArgument("gen_ar: need at least one coefficient");
    }
    if (order >= length) {
        throw InvalidArgument("gen_ar: order " + std::to_string(order) + " must be below length " +
                              std::to_string(length));
    }
    if (!initial.empty() && initial.size() != order) {
        throw InvalidArgument("gen_ar: initial values must match the AR order");
    }
    check_noise_length(noise, length);
    const std::size_t dim = patch_dim.value_or(order + 1);
    if (dim <= order) {
        throw InvalidArgument("gen_ar: patch dimension must exceed the AR order");
    }

    NoiseSource source(noise, derive_seed(seed, "ar-noise"), 1);
    Matrix z(static_cast<Eigen::Index>(length), 1);
    Matrix latent(static_cast<Eigen::Index>(length), 1);
    for (std::size_t t = 0; t < order; ++t) {
        z(static_cast<Eigen::Index>(t), 0) = initial.empty() ? 0.0 : initial[t];
        latent(static_cast<Eigen::Index>(t), 0) = z(static_cast<Eigen::Index>(t), 0);
    }
    for (std::size_t t = order; t < length; ++t) {
        double mean = 0.0;
        for (std::size_t i = 0; i < order; ++i) {
            mean += coeffs[i] * z(static_cast<Eigen::Index>(t - i - 1), 0);
        }
        latent(static_cast<Eigen::Index>(t), 0) = mean;
        z(static_cast<Eigen::Index>(t), 0) = mean + source.draw(t + 1, 0);
    }
    if (!z.allFinite()) {
        throw NumericalDivergence("gen_ar: trajectory overflowed", length);
    }
    return SyntheticSample{TimeSeries(std::move(z)), std::move(latent), ar_subspace(coeffs, dim), noise, seed};
}

SyntheticSample gen_central_subspace(const Eigen::MatrixXd& phi, const SmoothMap& g, std::size_t length,
                                     const NoiseSpec& noise, std::uint64_t seed, std::optional<Vector> z0) {
    const Eigen::Index p = phi.rows();
    if (p < 1 || phi.cols() < 1 || phi.cols() > p) {
        throw InvalidArgument("gen_central_subspace: Phi must be p x d with 1 <= d <= p");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi);
    if (qr.rank() != phi.cols()) {
        throw InvalidArgument("gen_central_subspace: Phi is not of full column rank");
    }
    if (length < 1) {
        throw InvalidArgument("gen_central_subspace: length must be positive");
    }
    check_noise_length(noise, length);

    NoiseSource source(noise, derive_seed(seed, "central-noise"), static_cast<std::size_t>(p));
    Vector prev(p);
    if (z0) {
        if (z0->size() != p) throw InvalidArgument("gen_central_subspace: Z_0 has wrong dimension");
        prev = *z0;
    } else {
        std::mt19937_64 rng(derive_seed(seed, "central-start"));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < p; ++i) prev(i) = normal(rng);
    }

    Matrix observed(static_cast<Eigen::Index>(length), 2 * p);
    Matrix latent(static_cast<Eigen::Index>(length), 2 * p);
    for (std::size_t t = 0; t < length; ++t) {
        const Vector mean = g(phi.transpose() * prev);
        if (mean.size() != p || !mean.allFinite()) {
            throw NumericalDivergence("gen_central_subspace: g returned a non-finite or mis-sized value", t + 1);
        }
        Vector next = mean;
        for (Eigen::Index i = 0; i < p; ++i) next(i) += source.draw(t + 1, static_cast<std::size_t>(i));
        const auto row = static_cast<Eigen::Index>(t);
        observed.row(row).head(p) = prev.transpose();
        observed.row(row).tail(p) = next.transpose();
        latent.row(row).head(p) = prev.transpose();
        latent.row(row).tail(p) = mean.transpose();
        prev = std::move(next);
    }
    return SyntheticSample{TimeSeries(std::move(observed)), std::move(latent), GraphManifold{phi, g}, noise, seed};
}

Mixing parse_mixing(std::string_view name) {
    if (name == "ergodic") return Mixing::ergodic;
    if (name == "periodic") return Mixing::periodic;
    throw InvalidArgument("unknown mixing regime '" + std::string(name) + "'");
}

SyntheticSample gen_circle_chain(const CircleChainParams& params, std::size_t length, const NoiseSpec& noise,
                                 std::uint64_t seed) {
    if (length < 1) {
        throw InvalidArgument("gen_circle_chain: length must be positive");
    }
    if (params.mixing == Mixing::ergodic && !(params.kappa > 0.0)) {
        throw InvalidArgument("gen_circle_chain: kappa must be positive");
    }
    if (!(params.jitter >= 0.0)) {
        throw InvalidArgument("gen_circle_chain: jitter must be nonnegative");
    }
    check_noise_length(noise, length);

    std::mt19937_64 rng(derive_seed(seed, "circle-chain"));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> angle0(0.0, 2.0 * std::numbers::pi);
    NoiseSource source(noise, derive_seed(seed, "circle-noise"), 2);

    const double step_sd = params.mixing == Mixing::ergodic ? 1.0 / std::sqrt(params.kappa) : params.jitter;
    const double drift = params.mixing == Mixing::ergodic ? 0.0 : params.rotation;

    Matrix latent(static_cast<Eigen::Index>(length), 2);
    Matrix observed(static_cast<Eigen::Index>(length), 2);
    double theta = angle0(rng);
    for (std::size_t t = 0; t < length; ++t) {
        if (t > 0) {
            theta = std::remainder(theta + drift + step_sd * normal(rng), 2.0 * std::numbers::pi);
        }
        const auto row = static_cast<Eigen::Index>(t);
        latent(row, 0) = std::cos(theta);
        latent(row, 1) = std::sin(theta);
        observed(row, 0) = latent(row, 0) + source.draw(t + 1, 0);
        observed(row, 1) = latent(row, 1) + source.draw(t + 1, 1);
    }
    return SyntheticSample{TimeSeries(std::move(observed)), std::move(latent), CircleManifold{}, noise, seed};
}

double graph_distance_1d(double x, double y, const std::function<double(double)>& g, std::size_t grid) {
    auto sq = [&](double u) {
        const double dy = g(u) - y;
        return (u - x) * (u - x) + dy * dy;
    };
    const double radius = std::abs(y - g(x));
    if (radius == 0.0) return 0.0;
    grid = std::max<std::size_t>(grid, 3);

    // Any minimiser u satisfies |u - x| <= |y - g(x)|.
    const double lo = x - radius;
    const double step = 2.0 * radius / static_cast<double>(grid - 1);
    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid; ++i) {
        const double val = sq(lo + step * static_cast<double>(i));
        if (val < best_val) {
            best_val = val;
            best = i;
        }
    }
    double a = lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
    double b = lo + step * static_cast<double>(std::min(best + 1, grid - 1));
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
        if (sq(c) < sq(d)) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    return std::sqrt(std::min(best_val, sq(0.5 * (a + b))));
}

ManifoldDistances manifold_distance(const Matrix& points, const ManifoldSpec& manifold) {
    return std::visit(
        Overloaded{
            [&](const CircleManifold&) {
                if (points.cols() != 2) throw InvalidArgument("circle distance needs planar points");
                return ManifoldDistances{(points.rowwise().norm().array() - 1.0).abs().matrix(), false};
            },
            [&](const SubspaceManifold& s) {
                if (points.cols() != s.basis.rows()) {
                    throw InvalidArgument("subspace distance: dimension mismatch");
                }
                const Matrix residual = points - (points * s.basis) * s.basis.transpose();
                return ManifoldDistances{residual.rowwise().norm(), false};
            },
            [&](const GraphManifold& gm) {
                const Eigen::Index p = gm.phi.rows();
                if (points.cols() != 2 * p) throw InvalidArgument("graph distance: dimension mismatch");
                Vector out(points.rows());
                for (Eigen::Index i = 0; i < points.rows(); ++i) {
                    const Vector first = points.row(i).head(p).transpose();
                    const Vector second = points.row(i).tail(p).transpose();
                    out(i) = (second - gm.g(gm.phi.transpose() * first)).norm();
                }
                return ManifoldDistances{out, true};
            }},
        manifold);
}

}  // namespace mbf
