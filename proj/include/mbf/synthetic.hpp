#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mbf/core.hpp"

namespace mbf {

/// Smooth map R^d -> R^p used by graph-type manifolds.
using SmoothMap = std::function<Vector(const Vector&)>;

/// Linear subspace spanned by the orthonormal columns of basis.
struct SubspaceManifold {
    Eigen::MatrixXd basis;
};

/// Unit circle centred at the origin of the plane.
struct CircleManifold {};

/// Graph {(x, g(Phi^T x))} of g composed with a linear projection.
struct GraphManifold {
    Eigen::MatrixXd phi;  // p x d
    SmoothMap g;
};

using ManifoldSpec = std::variant<SubspaceManifold, CircleManifold, GraphManifold>;

enum class ManifoldTag { line_subspace, circle, graph_of_g };

ManifoldTag parse_manifold_tag(std::string_view name);
std::string to_string(ManifoldTag tag);
ManifoldTag tag_of(const ManifoldSpec& manifold);

/// A sample of the model Y_t = X_t + eps_t with its ground truth.
struct SyntheticSample {
    TimeSeries observed;
    Matrix latent;  // X_t, row-aligned with observed
    ManifoldSpec manifold;
    NoiseSpec noise;
    std::uint64_t seed = 0;

    ManifoldTag tag() const { return tag_of(manifold); }
};

/// Deterministic substream seed derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

/// AR(tau): Z_t = sum_i a_i Z_{t-i} + xi_t.
///
/// `initial` supplies Z_1..Z_tau (zeros when empty). The manifold is the image
/// of the companion matrix in patch space of dimension `patch_dim`
/// (default tau + 1), where windows are ordered newest first.
SyntheticSample gen_ar(const std::vector<double>& coeffs, std::size_t length, const NoiseSpec& noise,
                       std::uint64_t seed, const std::vector<double>& initial = {},
                       std::optional<std::size_t> patch_dim = std::nullopt);

/// D x D companion matrix with the coefficients in the first row and a shifted identity below.
Eigen::MatrixXd ar_companion(const std::vector<double>& coeffs, std::size_t patch_dim);

/// Orthonormal basis of the companion matrix image.
SubspaceManifold ar_subspace(const std::vector<double>& coeffs, std::size_t patch_dim);

/// Central subspace recursion Z_t = g(Phi^T Z_{t-1}) + xi_t.
///
/// Observations are Y_t = (Z_{t-1}, Z_t) and latents X_t = (Z_{t-1}, g(Phi^T Z_{t-1})).
/// Z_0 is drawn standard normal when not given.
SyntheticSample gen_central_subspace(const Eigen::MatrixXd& phi, const SmoothMap& g, std::size_t length,
                                     const NoiseSpec& noise, std::uint64_t seed,
                                     std::optional<Vector> z0 = std::nullopt);

enum class Mixing { ergodic, periodic };

Mixing parse_mixing(std::string_view name);

inline constexpr double kGoldenRotation = 2.0 * std::numbers::pi * 0.6180339887498949;

struct CircleChainParams {
    double kappa = 50.0;  // ergodic step concentration; increments ~ N(0, 1/kappa)
    Mixing mixing = Mixing::ergodic;
    double rotation = kGoldenRotation;  // periodic step angle
    double jitter = 1e-3;               // periodic step noise (radians)
};

/// Markov chain on the unit circle observed with additive planar noise.
SyntheticSample gen_circle_chain(const CircleChainParams& params, std::size_t length,
                                 const NoiseSpec& noise, std::uint64_t seed);

struct ManifoldDistances {
    Vector distances;
    // True when a value is the vertical graph residual, an upper bound on the distance.
    bool surrogate = false;
};

/// Distance from each row of points to the manifold.
ManifoldDistances manifold_distance(const Matrix& points, const ManifoldSpec& manifold);

/// Exact distance from (x, y) to the graph of a scalar function, by a dense
/// grid over the feasible interval followed by golden-section refinement.
double graph_distance_1d(double x, double y, const std::function<double(double)>& g,
                         std::size_t grid = 10000);

}  // namespace mbf
