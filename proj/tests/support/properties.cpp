#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mbf/cli.hpp"
#include "mbf/forecast.hpp"
#include "mbf/io.hpp"
#include "mbf/ldmm.hpp"
#include "mbf/same.hpp"
#include "oracles.hpp"
#include "random.hpp"
#include "tempdir.hpp"

namespace mbf::testing {

namespace {

class Recorder {
public:
    Recorder(std::string name, std::size_t cases) { out_.name = std::move(name), out_.cases = cases; }

    // Records at most one failure per case.
    void fail(std::size_t index, const std::string& what) {
        if (index == last_failed_) return;
        last_failed_ = index;
        ++out_.failures;
        if (out_.first_failure.empty()) out_.first_failure = "case " + std::to_string(index) + ": " + what;
    }
    void expect(bool ok, std::size_t index, const std::string& what) {
        if (!ok) fail(index, what);
    }
    PropertyOutcome done() { return out_; }

private:
    PropertyOutcome out_;
    std::size_t last_failed_ = std::numeric_limits<std::size_t>::max();
};

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

bool projector_ok(const Eigen::MatrixXd& p, std::size_t rank) {
    const double sym = (p - p.transpose()).cwiseAbs().maxCoeff();
    const double idem = (p * p - p).cwiseAbs().maxCoeff();
    const double trace = std::abs(p.trace() - static_cast<double>(rank));
    return sym <= 1e-10 && idem <= 1e-8 && trace <= 1e-8;
}

// Smallest radius that gives every point at least `count` neighbours including itself.
double covering_radius(const Matrix& y, std::size_t count) {
    double radius = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        std::vector<double> d;
        for (Eigen::Index j = 0; j < y.rows(); ++j) d.push_back((y.row(i) - y.row(j)).norm());
        std::sort(d.begin(), d.end());
        radius = std::max(radius, d[std::min(count, d.size()) - 1]);
    }
    return radius;
}

Matrix wavy_series(Gen& g, std::size_t length, std::size_t components) {
    Matrix z(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(components));
    for (std::size_t c = 0; c < components; ++c) {
        const double omega = g.uniform(0.2, 2.5);
        const double phase = g.uniform(0.0, 6.3);
        const double amp = g.uniform(0.5, 2.0);
        for (std::size_t t = 0; t < length; ++t) {
            z(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) =
                amp * std::sin(omega * static_cast<double>(t) + phase) + g.normal(0.05);
        }
    }
    return z;
}

int run(const std::vector<std::string>& args, std::string* out_text = nullptr) {
    std::vector<const char*> argv{"mbf"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str() + err.str();
    return rc;
}

}  // namespace

PropertyOutcome check_kernel_properties(std::size_t cases, std::uint64_t seed) {
    Recorder rec("kernel compact support and monotonicity", cases);
    Gen g(seed);
    for (std::size_t i = 0; i < cases; ++i) {
        double u1 = g.uniform(0.0, 2.0);
        double u2 = g.coin() ? g.uniform(0.0, 2.0) : u1 + g.uniform(0.0, 1e-6);
        if (u1 > u2) std::swap(u1, u2);
        const double k1 = epanechnikov(u1);
        const double k2 = epanechnikov(u2);
        rec.expect(k1 >= 0.0 && k2 >= 0.0, i, "negative Epanechnikov value");
        rec.expect(u2 < 1.0 || k2 == 0.0, i, "Epanechnikov nonzero outside support at u=" + num(u2));
        rec.expect(u1 >= 1.0 || k1 > 0.0, i, "Epanechnikov zero inside support at u=" + num(u1));
        rec.expect(k1 >= k2, i, "Epanechnikov not monotone on [" + num(u1) + ", " + num(u2) + "]");
        rec.expect(epanechnikov(0.0) == 0.75, i, "K(0) != 3/4");

        const double h_sq = g.uniform(1e-3, 10.0);
        const double s1 = u1 * u1 * 5.0;
        const double s2 = u2 * u2 * 5.0;
        const double w1 = heat_kernel(s1, h_sq);
        const double w2 = heat_kernel(s2, h_sq);
        rec.expect(w1 <= 1.0 && w2 > 0.0 && w1 >= w2, i, "heat kernel not a decreasing map into (0, 1]");
        rec.expect(heat_kernel_quartic(u1) >= heat_kernel_quartic(u2), i, "quartic kernel not monotone");
        rec.expect(heat_kernel_quartic(0.0) == 1.0, i, "K_0(0) != 1");

        bool threw = false;
        try {
            epanechnikov(-g.uniform(1e-9, 1.0));
        } catch (const InvalidArgument&) {
            threw = true;
        }
        rec.expect(threw, i, "negative argument accepted");
    }
    return rec.done();
}

PropertyOutcome check_projector_properties(std::size_t cases, std::uint64_t seed) {
    Recorder rec("projector symmetry, idempotence and trace", cases);
    Gen g(seed);
    for (std::size_t i = 0; i < cases; ++i) {
        const std::size_t dim = g.index(1, 6);
        const std::size_t rank = g.index(1, dim);
        const std::size_t n = g.index(rank + 1, 16);
        const Matrix y = g.matrix(n, dim);
        try {
            for (const auto& p : init_projectors(y, rank, 10.0)) {
                rec.expect(projector_ok(p.matrix(), rank) && p.rank() == rank, i, "initial projector invariant");
                const Eigen::MatrixXd gram = p.basis().transpose() * p.basis();
                rec.expect((gram - Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(rank),
                                                             static_cast<Eigen::Index>(rank)))
                                   .cwiseAbs()
                                   .maxCoeff() <= 1e-10,
                           i, "basis not orthonormal");
            }
            const Eigen::MatrixXd a = g.matrix(dim + 2, dim);
            rec.expect(projector_ok(top_eigen_projector(a.transpose() * a, rank).matrix(), rank), i,
                       "scatter projector invariant");

            SameConfig cfg;
            cfg.dim = rank;
            cfg.iterations = g.index(2, 4);
            cfg.tau0 = 10.0;
            for (const auto& p : same_denoise(PatchSet{y, std::vector<std::size_t>(n, 1), 1, dim}, cfg).projectors) {
                rec.expect(projector_ok(p.matrix(), rank), i, "refit projector invariant");
            }
        } catch (const std::exception& e) {
            rec.fail(i, e.what());
        }
    }
    return rec.done();
}

PropertyOutcome check_laplacian_properties(std::size_t cases, std::uint64_t seed) {
    Recorder rec("Laplacian zero row sums and positive semidefiniteness", cases);
    Gen g(seed);
    for (std::size_t i = 0; i < cases; ++i) {
        const std::size_t n = g.index(1, 12);
        const Matrix y = g.matrix(n, g.index(1, 4), -2.0, 2.0);
        const double h_sq = g.uniform(0.05, 5.0);
        const Eigen::MatrixXd w = affinity_matrix(y, h_sq);
        const GraphLaplacian lap = graph_laplacian(w);
        const Eigen::MatrixXd& l = lap.laplacian;
        const double scale = 1.0 + lap.degrees.maxCoeff();

        rec.expect(l.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * scale, i, "nonzero row sum");
        rec.expect((l - l.transpose()).cwiseAbs().maxCoeff() == 0.0, i, "Laplacian not symmetric");

        const Vector x = g.matrix(n, 1, -3.0, 3.0).col(0);
        double pairwise = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                const double d = x(static_cast<Eigen::Index>(a)) - x(static_cast<Eigen::Index>(b));
                pairwise += 0.5 * w(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * d * d;
            }
        }
        const double quad = x.dot(l * x);
        rec.expect(std::abs(quad - pairwise) <= 1e-10 * (1.0 + pairwise), i,
                   "x^T L x != sum of weighted squared differences");
        const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(l).eigenvalues().minCoeff();
        rec.expect(min_eig >= -1e-10 * scale, i, "negative eigenvalue " + num(min_eig));
    }
    return rec.done();
}

PropertyOutcome check_same_convex_hull(std::size_t cases, std::uint64_t seed) {
    Recorder rec("SAME outputs are convex combinations of inputs", cases);
    Gen g(seed);
    for (std::size_t i = 0; i < cases; ++i) {
        const std::size_t dim = g.index(1, 4);
        SameConfig cfg;
        cfg.dim = g.index(1, std::min<std::size_t>(dim, 2));
        const std::size_t n = g.index(cfg.dim + 2, 25);
        const Matrix y = g.matrix(n, dim, -1.0, 1.0);
        cfg.iterations = g.index(1, 4);
        cfg.tau0 = covering_radius(y, cfg.dim + 1) * g.uniform(1.0, 3.0);
        cfg.decay = g.uniform(1.05, 2.0);
        cfg.gamma = g.uniform(0.5, 3.0);
        if (g.coin()) cfg.h0 = g.uniform(0.05, 2.0);
        try {
            const SameResult res = same_denoise(PatchSet{y, std::vector<std::size_t>(n, 1), 1, dim}, cfg);
            const double h = res.diagnostics.bandwidths.back();
            std::vector<Eigen::MatrixXd> proj;
            for (const auto& p : res.projectors) proj.push_back(p.matrix());
            const Eigen::MatrixXd w = oracle_same_weights(y, proj, h, cfg.tau0);
            for (std::size_t t = 0; t < n; ++t) {
                const auto row = static_cast<Eigen::Index>(t);
                const Vector coeff = w.row(row).transpose() / w.row(row).sum();
                rec.expect(coeff.minCoeff() >= 0.0, i, "negative barycentric coefficient");
                rec.expect(std::abs(coeff.sum() - 1.0) <= 1e-12, i, "coefficients do not sum to 1");
                const RowVector rebuilt = coeff.transpose() * y;
                rec.expect((rebuilt - res.denoised.points.row(row)).cwiseAbs().maxCoeff() <= 1e-10, i,
                           "output differs from the convex combination");
                for (Eigen::Index c = 0; c < y.cols(); ++c) {
                    double lo = std::numeric_limits<double>::infinity();
                    double hi = -lo;
                    for (std::size_t j = 0; j < n; ++j) {
                        if (coeff(static_cast<Eigen::Index>(j)) > 0.0) {
                            lo = std::min(lo, y(static_cast<Eigen::Index>(j), c));
                            hi = std::max(hi, y(static_cast<Eigen::Index>(j), c));
                        }
                    }
                    const double v = res.denoised.points(row, c);
                    rec.expect(v >= lo - 1e-12 && v <= hi + 1e-12, i, "output leaves the support box");
                }
            }
        } catch (const std::exception& e) {
            rec.fail(i, e.what());
        }
    }
    return rec.done();
}

PropertyOutcome check_weight_normalization(std::size_t cases, std::uint64_t seed) {
    Recorder rec("forecast weight normalisation and increment bounds", cases);
    Gen g(seed);
    for (std::size_t i = 0; i < cases; ++i) {
        const std::size_t n = g.index(1, 30);
        const std::size_t k = g.index(1, n);
        const std::size_t length = n + g.index(1, 30);
        // Distinct patch times drawn from [2, length].
        std::vector<std::size_t> pool;
        for (std::size_t t = 2; t <= length; ++t) pool.push_back(t);
        for (std::size_t a = pool.size(); a > 1; --a) std::swap(pool[a - 1], pool[g.index(0, a - 1)]);
        std::vector<std::size_t> times(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));

        Vector dist(static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t mode = g.index(0, 9);
            dist(static_cast<Eigen::Index>(j)) = mode == 0 ? 0.0 : mode == 1 ? 0.5 : g.uniform(0.0, 3.0);
        }
        const double tau = g.index(0, 4) == 0 ? std::numeric_limits<double>::infinity() : g.uniform(0.5, 50.0);
        const std::size_t query = length + 1;

        const KnnWeights kw = knn_weights_from_distances(dist, times, query, k, tau);
        const Vector& w = kw.weights;
        rec.expect(w.minCoeff() >= 0.0, i, "negative weight");
        rec.expect(w.sum() > 0.0, i, "weights sum to zero");
        const Vector normalised = w / w.sum();
        rec.expect(std::abs(normalised.sum() - 1.0) <= 1e-12, i, "normalised weights do not sum to 1");

        std::vector<double> dv(dist.data(), dist.data() + n);
        const Vector expected = oracle_knn_weights(dv, times, query, k, tau);
        rec.expect((expected - w).cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + expected.cwiseAbs().maxCoeff()), i,
                   "weights differ from the brute-force oracle");

        std::vector<double> sorted = dv;
        std::sort(sorted.begin(), sorted.end());
        const bool distinct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
        if (!kw.uniform_fallback && distinct) {
            rec.expect(static_cast<std::size_t>((w.array() > 0.0).count()) <= k - 1, i,
                       "more than k - 1 positive weights");
        }

        const Matrix z = g.matrix(length, g.index(1, 3), -5.0, 5.0);
        const TimeSeries series(z);
        const RowVector fc = one_step_forecast(series, w, times);
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::size_t j = 0; j < n; ++j) {
                if (w(static_cast<Eigen::Index>(j)) <= 0.0) continue;
                const auto row = static_cast<Eigen::Index>(times[j] - 1);
                lo = std::min(lo, z(row, c) - z(row - 1, c));
                hi = std::max(hi, z(row, c) - z(row - 1, c));
            }
            const double last = z(z.rows() - 1, c);
            const double slack = 1e-12 * (1.0 + std::abs(last) + std::abs(lo) + std::abs(hi));
            rec.expect(fc(c) >= last + lo - slack && fc(c) <= last + hi + slack, i,
                       "forecast outside the increment range");
        }
    }
    return rec.done();
}

PropertyOutcome check_translation_equivariance(std::size_t cases, std::uint64_t seed) {
    Recorder rec("translation equivariance of the k-NN and SAME pipelines", cases);
    Gen g(seed);
    for (std::size_t i = 0; i < cases; ++i) {
        const std::size_t p = g.index(1, 3);
        const std::size_t length = g.index(15, 40);
        const std::size_t window = g.index(2, 4);
        const Matrix z = wavy_series(g, length, p);
        RowVector shift(static_cast<Eigen::Index>(p));
        for (Eigen::Index c = 0; c < shift.size(); ++c) shift(c) = g.uniform(-100.0, 100.0);

        ForecastConfig cfg;
        cfg.k = {g.index(1, std::min<std::size_t>(6, length - window))};
        cfg.tau = g.uniform(1.0, 50.0);
        if (i % 2 == 1) {
            SameConfig same;
            same.iterations = g.index(1, 3);
            same.tau0 = 100.0;
            cfg.denoiser = same;
        }
        const std::size_t m = g.index(1, 3);
        try {
            const Matrix base = predict(TimeSeries(z), window, cfg, m).values;
            const Matrix moved = predict(TimeSeries(z.rowwise() + shift), window, cfg, m).values;
            const double err = ((moved.rowwise() - shift) - base).cwiseAbs().maxCoeff();
            rec.expect(err <= 1e-8 * (1.0 + shift.cwiseAbs().maxCoeff()), i,
                       std::string(i % 2 ? "SAME" : "k-NN") + " pipeline moved by " + num(err));
        } catch (const std::exception& e) {
            rec.fail(i, e.what());
        }
    }
    return rec.done();
}

PropertyOutcome check_cli_determinism(std::size_t cases, std::uint64_t seed) {
    Recorder rec("seeded determinism of every CLI command", cases);
    Gen g(seed);
    TempDir dir("mbf-determinism");
    const char* denoisers[] = {"none", "same", "ldmm"};
    for (std::size_t i = 0; i < cases; ++i) {
        const std::string tag = std::to_string(i);
        const auto cfg_path = dir / ("c" + tag + ".ini");
        std::ostringstream ini;
        ini << "seed = " << g.bits() % 1000000 << "\n";
        ini << "[window]\nsize = " << g.index(2, 4) << "\n";
        ini << "[forecast]\nk = " << g.index(2, 5) << "\ntau = " << format_number(g.uniform(1.0, 40.0)) << "\n";
        ini << "[denoiser]\nkind = " << denoisers[g.index(0, 2)] << "\n";
        ini << "[same]\niterations = " << g.index(1, 3) << "\ntau0 = 50\n";
        ini << "[ldmm]\nmax_iters = " << g.index(1, 3) << "\nmu = " << format_number(g.uniform(0.5, 5.0))
            << "\nbandwidth_scale = 10\n";
        ini << "[synthetic]\nmanifold = circle\nlength = " << g.index(40, 60)
            << "\nsigma = " << format_number(g.uniform(0.0, 0.1)) << "\nmixing = "
            << (g.coin() ? "periodic" : "ergodic") << "\n";
        ini << "[backtest]\nsource = synthetic\nlookfronts = 1, 2\nholdout = " << g.index(2, 4)
            << "\nmethods = knn, same\n";
        ini << "[ratestudy]\nlengths = 20, 30\ntrials = " << g.index(1, 2) << "\n";
        write_file(cfg_path, ini.str());

        std::vector<std::string> args;
        std::vector<std::string> outputs;
        switch (i % 3) {
            case 0: {
                const auto input = dir / ("s" + tag + ".csv");
                std::ostringstream csv;
                write_csv(csv, wavy_series(g, g.index(25, 45), g.index(1, 3)));
                write_file(input, csv.str());
                args = {"forecast", "--input", input.string(), "--lookfront", std::to_string(g.index(1, 3))};
                outputs = {".csv"};
                break;
            }
            case 1:
                args = {"backtest"};
                outputs = {".csv", ".json"};
                break;
            default:
                args = {"ratestudy"};
                outputs = {".csv"};
                break;
        }
        args.insert(args.end(), {"--config", cfg_path.string()});
        if (g.coin()) args.insert(args.end(), {"--seed", std::to_string(g.bits() % 1000)});

        std::vector<std::string> runs[2];
        for (int r = 0; r < 2; ++r) {
            const auto out = dir / ("o" + tag + "-" + std::to_string(r) + ".csv");
            auto full = args;
            full.insert(full.end(), {"--output", out.string()});
            std::string log;
            const int rc = run(full, &log);
            if (rc != 0) {
                rec.fail(i, args[0] + " exited " + std::to_string(rc) + ": " + log);
                break;
            }
            for (const auto& ext : outputs) {
                auto path = out;
                runs[r].push_back(read_file(path.replace_extension(ext)));
            }
        }
        rec.expect(runs[0] == runs[1], i, args[0] + " output differs between identical runs");
    }
    return rec.done();
}

std::vector<PropertyOutcome> check_all_properties(std::size_t cases, std::uint64_t seed) {
    return {check_kernel_properties(cases, seed + 1),      check_projector_properties(cases, seed + 2),
            check_laplacian_properties(cases, seed + 3),   check_same_convex_hull(cases, seed + 4),
            check_weight_normalization(cases, seed + 5),   check_translation_equivariance(cases, seed + 6),
            check_cli_determinism(cases, seed + 7)};
}

}  // namespace mbf::testing
