#include "mbf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "mbf/windowing.hpp"

namespace mbf {

Vector rmse(const Matrix& predictions, const Matrix& actuals) {
    if (predictions.rows() != actuals.rows() || predictions.cols() != actuals.cols()) {
        throw InvalidArgument("rmse: prediction and actual shapes differ");
    }
    if (predictions.rows() == 0) {
        throw InvalidArgument("rmse: no evaluation points");
    }
    return ((predictions - actuals).array().square().colwise().mean()).sqrt().transpose();
}

BacktestError::BacktestError(std::size_t origin, const std::string& method, const std::string& cause)
    : std::runtime_error("backtest failed at origin T=" + std::to_string(origin) + " for method '" + method +
                         "': " + cause),
      origin_(origin),
      method_(method) {}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(count);
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : workers) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

ForecastReport backtest(const TimeSeries& series, const std::vector<MethodSpec>& methods,
                        const BacktestOptions& options) {
    if (methods.empty()) {
        throw InvalidArgument("backtest: no methods given");
    }
    if (options.lookfronts.empty() ||
        std::any_of(options.lookfronts.begin(), options.lookfronts.end(), [](std::size_t m) { return m < 1; })) {
        throw InvalidArgument("backtest: lookfronts must be positive");
    }
    const std::size_t max_look = *std::max_element(options.lookfronts.begin(), options.lookfronts.end());
    const std::size_t length = series.length();
    if (options.holdout < max_look) {
        throw InvalidArgument("backtest: holdout must be at least the largest lookfront");
    }
    if (options.holdout >= length) {
        throw InvalidArgument("backtest: holdout leaves no training data");
    }
    const std::size_t first_origin = length - options.holdout;
    const std::size_t origins = options.holdout - max_look + 1;
    const std::size_t p = series.components();

    // forecasts[method][origin] is a max_look x p matrix
    std::vector<std::vector<Matrix>> forecasts(methods.size(), std::vector<Matrix>(origins));
    parallel_for(methods.size() * origins, options.jobs, [&](std::size_t item) {
        const std::size_t mi = item / origins;
        const std::size_t oi = item % origins;
        const std::size_t train = first_origin + oi;
        try {
            forecasts[mi][oi] = predict(series.head(train), methods[mi].window, methods[mi].forecast, max_look).values;
        } catch (const std::exception& e) {
            std::throw_with_nested(BacktestError(train, methods[mi].name, e.what()));
        }
    });

    ForecastReport report;
    report.origins = origins;
    report.components = p;
    report.seed = options.seed;
    std::vector<std::size_t> looks = options.lookfronts;
    std::sort(looks.begin(), looks.end());
    looks.erase(std::unique(looks.begin(), looks.end()), looks.end());
    for (std::size_t m : looks) {
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            BacktestTrace trace;
            trace.method = methods[mi].name;
            trace.lookfront = m;
            trace.predictions.resize(static_cast<Eigen::Index>(origins), static_cast<Eigen::Index>(p));
            trace.actuals.resize(static_cast<Eigen::Index>(origins), static_cast<Eigen::Index>(p));
            for (std::size_t oi = 0; oi < origins; ++oi) {
                const std::size_t target = first_origin + oi + m;
                trace.targets.push_back(target);
                trace.predictions.row(static_cast<Eigen::Index>(oi)) =
                    forecasts[mi][oi].row(static_cast<Eigen::Index>(m - 1));
                trace.actuals.row(static_cast<Eigen::Index>(oi)) = series.at(target);
            }
            const Vector err = rmse(trace.predictions, trace.actuals);
            for (std::size_t c = 0; c < p; ++c) {
                report.rows.push_back(ReportRow{m, methods[mi].name, c + 1, err(static_cast<Eigen::Index>(c))});
            }
            report.traces.push_back(std::move(trace));
        }
    }
    return report;
}

TrialError denoise_trial(const SampleGenerator& generator, std::size_t length, const DenoiserConfig& denoiser,
                         std::uint64_t seed) {
    const SyntheticSample sample = generator(length, seed);
    // Subspace manifolds live in patch space; otherwise each observation is a point.
    std::size_t window = 1;
    if (const auto* sub = std::get_if<SubspaceManifold>(&sample.manifold)) {
        window = static_cast<std::size_t>(sub->basis.rows()) / sample.observed.components();
    }
    const PatchSet cloud = embed(sample.observed, window, true);
    const DenoisedSet out = denoise(cloud, denoiser);
    TrialError err;
    err.raw = manifold_distance(cloud.patches, sample.manifold).distances.array().square().mean();
    err.denoised = manifold_distance(out.points, sample.manifold).distances.array().square().mean();
    return err;
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    for (double v : values) s.mean += v;
    s.mean /= n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

std::uint64_t curve_trial_seed(std::uint64_t master, std::size_t length, std::size_t trial) {
    return derive_seed(derive_seed(master, "ratestudy", length), "trial", trial);
}

std::vector<CurveRow> denoise_error_curve(const SampleGenerator& generator, const std::vector<std::size_t>& lengths,
                                          const DenoiserConfig& denoiser, std::size_t trials, std::uint64_t seed,
                                          std::size_t jobs) {
    if (trials < 1) {
        throw InvalidArgument("denoise_error_curve: need at least one trial");
    }
    if (lengths.empty() || !std::is_sorted(lengths.begin(), lengths.end()) ||
        std::adjacent_find(lengths.begin(), lengths.end()) != lengths.end()) {
        throw InvalidArgument("denoise_error_curve: length grid must be strictly increasing");
    }
    std::vector<TrialError> errors(lengths.size() * trials);
    parallel_for(errors.size(), jobs, [&](std::size_t item) {
        const std::size_t li = item / trials;
        errors[item] = denoise_trial(generator, lengths[li], denoiser, curve_trial_seed(seed, lengths[li], item % trials));
    });

    std::vector<CurveRow> rows;
    for (std::size_t li = 0; li < lengths.size(); ++li) {
        std::vector<double> denoised;
        std::vector<double> raw;
        for (std::size_t t = 0; t < trials; ++t) {
            denoised.push_back(errors[li * trials + t].denoised);
            raw.push_back(errors[li * trials + t].raw);
        }
        const Summary s = summarize(denoised);
        rows.push_back(CurveRow{lengths[li], s.mean, s.std, summarize(raw).mean});
    }
    return rows;
}

}  // namespace mbf
