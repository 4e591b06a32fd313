#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mbf/same.hpp"
#include "mbf/synthetic.hpp"
#include "mbf/windowing.hpp"
#include "oracles.hpp"
#include "random.hpp"

using namespace mbf;
using mbf::testing::Gen;

namespace {

PatchSet cloud(const Matrix& points) {
    return PatchSet{points, std::vector<std::size_t>(static_cast<std::size_t>(points.rows()), 1), 1,
                    static_cast<std::size_t>(points.cols())};
}

TangentProjector x_axis() {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2);
    p(0, 0) = 1.0;
    return TangentProjector(p, 1);
}

}  // namespace

TEST_CASE("config validation") {
    SameConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.decay = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = SameConfig{};
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = SameConfig{};
    cfg.h0 = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = SameConfig{};
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = SameConfig{};
    cfg.tau0 = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("collinear points give the axis projector") {
    Matrix pts(3, 2);
    pts << 0, 0, 1, 0, 2, 0;
    for (const auto& p : init_projectors(pts, 1, 10.0)) {
        CHECK((p.matrix() - x_axis().matrix()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("initial projector follows the circle tangent") {
    const double deg = std::numbers::pi / 180.0;
    Matrix pts(3, 2);
    for (int i = 0; i < 3; ++i) {
        pts(i, 0) = std::cos(5.0 * i * deg);
        pts(i, 1) = std::sin(5.0 * i * deg);
    }
    const auto proj = init_projectors(pts, 1, 1.0);
    Eigen::Vector2d tangent(-std::sin(5.0 * deg), std::cos(5.0 * deg));
    const Eigen::VectorXd range = proj[1].basis().col(0);
    const double angle = std::acos(std::min(1.0, std::abs(range.dot(tangent))));
    CHECK(angle < 1e-2);
    // Brute-force check: the range is the dominant eigenvector of the 3-point scatter.
    Eigen::Vector2d mean = pts.colwise().mean().transpose();
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 3; ++i) scatter += (pts.row(i).transpose() - mean) * (pts.row(i).transpose() - mean).transpose();
    Eigen::Vector2d v(1.0, 0.3);
    for (int it = 0; it < 200; ++it) v = (scatter * v).normalized();
    CHECK(std::abs(std::abs(v.dot(range)) - 1.0) < 1e-10);
}

TEST_CASE("isolated point is a degenerate neighbourhood") {
    Matrix pts(3, 2);
    pts << 0, 0, 0.1, 0, 5, 5;
    try {
        init_projectors(pts, 1, 1.0);
        FAIL("expected DegenerateNeighborhood");
    } catch (const DegenerateNeighborhood& e) {
        CHECK(e.point() == 2);
    }
    Matrix single(1, 2);
    single << 0, 0;
    CHECK_THROWS_AS(init_projectors(single, 1, 1.0), DegenerateNeighborhood);
}

TEST_CASE("weights: identical points, threshold and the tangential argument") {
    const double h = 0.7;
    Matrix pts(2, 2);
    pts << 0, 0, 0, 0;
    auto w = same_weights(pts, {x_axis(), x_axis()}, h, 1.0);
    CHECK(w(0, 1) == 1.0);

    pts << 0, 0, 3, 0;
    w = same_weights(pts, {x_axis(), x_axis()}, h, 1.0);
    CHECK(w(0, 1) == 0.0);
    CHECK(w(0, 0) == 1.0);

    pts << 0, 0, h, h;
    w = same_weights(pts, {x_axis(), x_axis()}, h, 10.0);
    CHECK(w(0, 1) == doctest::Approx(std::exp(-0.25)).epsilon(1e-15));

    CHECK_THROWS_AS(same_weights(pts, {x_axis(), x_axis()}, 0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(same_weights(pts, {x_axis()}, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("single pass on three points matches hand evaluation") {
    Matrix pts(3, 2);
    pts << 0, 0, 1, 0, 0.5, 0.3;
    const double h0 = 10.0;
    const std::vector<Eigen::MatrixXd> proj(3, x_axis().matrix());
    const Matrix expected = mbf::testing::oracle_same_pass(pts, proj, h0, 10.0);

    // Point 3 by hand: tangential offsets are the x-differences.
    const double w31 = std::exp(-std::pow(0.25 / (h0 * h0), 2) / 4.0);
    const double w32 = w31;
    const double u3x = (w31 * 0.0 + w32 * 1.0 + 1.0 * 0.5) / (w31 + w32 + 1.0);
    const double u3y = (1.0 * 0.3) / (w31 + w32 + 1.0);
    CHECK(expected(2, 0) == doctest::Approx(u3x).epsilon(1e-15));
    CHECK(expected(2, 1) == doctest::Approx(u3y).epsilon(1e-15));

    const Matrix got = same_weights(pts, {x_axis(), x_axis(), x_axis()}, h0, 10.0) * pts;
    const Vector sums = same_weights(pts, {x_axis(), x_axis(), x_axis()}, h0, 10.0).rowwise().sum();
    for (int i = 0; i < 3; ++i) {
        for (int c = 0; c < 2; ++c) CHECK(got(i, c) / sums(i) == doctest::Approx(expected(i, c)).epsilon(1e-14));
    }
}

TEST_CASE("single pass matches the brute-force oracle on random instances") {
    Gen g(101);
    for (int i = 0; i < 200; ++i) {
        const std::size_t dim = g.index(1, 5);
        SameConfig cfg;
        cfg.dim = g.index(1, dim);
        const std::size_t n = g.index(cfg.dim + 1, 20);
        const Matrix y = g.matrix(n, dim, -1.0, 1.0);
        cfg.iterations = 1;
        cfg.tau0 = 10.0;
        const bool explicit_h = g.coin();
        if (explicit_h) cfg.h0 = g.uniform(0.05, 2.0);
        const SameResult res = same_denoise(cloud(y), cfg);
        std::vector<Eigen::MatrixXd> proj;
        for (const auto& p : res.projectors) proj.push_back(p.matrix());
        const double h = explicit_h ? *cfg.h0
                                    : mbf::testing::oracle_median_knn(
                                          y, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
        CHECK(res.diagnostics.bandwidths.front() == doctest::Approx(h).epsilon(1e-15));
        const Matrix expected = mbf::testing::oracle_same_pass(y, proj, h, cfg.tau0);
        CHECK((expected - res.denoised.points).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("points on a line stay on the line") {
    Gen g(7);
    Matrix pts(30, 3);
    Eigen::RowVector3d dir(0.3, -0.5, 0.8);
    for (int i = 0; i < 30; ++i) pts.row(i) = g.uniform(-2.0, 2.0) * dir;
    SameConfig cfg;
    cfg.tau0 = 10.0;
    cfg.iterations = 5;
    const Matrix out = same_denoise(cloud(pts), cfg).denoised.points;
    for (int i = 0; i < 30; ++i) {
        const Eigen::RowVector3d row = out.row(i);
        const Eigen::RowVector3d along = row.dot(dir.normalized()) * dir.normalized();
        CHECK((row - along).norm() < 1e-8);
    }
}

TEST_CASE("bandwidths shrink geometrically") {
    Gen g(3);
    SameConfig cfg;
    cfg.iterations = 6;
    cfg.h0 = 0.8;
    cfg.decay = 1.3;
    cfg.tau0 = 10.0;
    const SameResult res = same_denoise(cloud(g.matrix(25, 2)), cfg);
    REQUIRE(res.diagnostics.bandwidths.size() == 6);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(res.diagnostics.bandwidths[k] == doctest::Approx(0.8 * std::pow(1.3, -static_cast<double>(k))));
        if (k > 0) CHECK(res.diagnostics.bandwidths[k] < res.diagnostics.bandwidths[k - 1]);
    }
}

TEST_CASE("tiny refit neighbourhoods keep the previous projector") {
    Gen g(9);
    SameConfig cfg;
    cfg.iterations = 3;
    cfg.h0 = 1e-6;
    cfg.tau0 = 10.0;
    const Matrix y = g.matrix(10, 2);
    const SameResult res = same_denoise(cloud(y), cfg);
    CHECK(res.diagnostics.projector_fallbacks == 20);
    const auto initial = init_projectors(y, 1, 10.0);
    for (std::size_t i = 0; i < initial.size(); ++i) {
        CHECK((initial[i].matrix() - res.projectors[i].matrix()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("denoising a noisy circle reduces the distance to it") {
    CircleChainParams params;
    const SyntheticSample s = gen_circle_chain(params, 200, NoiseSpec::gaussian(0.05), 17);
    SameConfig cfg;
    cfg.iterations = 5;
    cfg.decay = 1.1;
    cfg.tau0 = 0.5;
    const PatchSet pts = embed(s.observed, 1, true);
    const Matrix out = same_denoise(pts, cfg).denoised.points;
    const double before = manifold_distance(pts.patches, CircleManifold{}).distances.array().square().mean();
    const double after = manifold_distance(out, CircleManifold{}).distances.array().square().mean();
    CHECK(after < before);
}
