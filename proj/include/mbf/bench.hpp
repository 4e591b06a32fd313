#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbf/core.hpp"
#include "mbf/forecast.hpp"
#include "mbf/synthetic.hpp"

namespace mbf {

/// Per-component root mean squared error over the rows.
Vector rmse(const Matrix& predictions, const Matrix& actuals);

struct MethodSpec {
    std::string name;
    std::size_t window = 11;
    ForecastConfig forecast;
};

struct BacktestOptions {
    std::vector<std::size_t> lookfronts{1};
    std::size_t holdout = 12;  // origins span the last `holdout` observations
    std::uint64_t seed = 0;    // recorded for provenance; the pipeline itself is deterministic
    std::size_t jobs = 1;
};

struct ReportRow {
    std::size_t lookfront = 0;
    std::string method;
    std::size_t component = 0;  // 1-based
    double rmse = 0.0;
};

/// Forecasts gathered for one (method, lookfront) pair, one row per origin.
struct BacktestTrace {
    std::string method;
    std::size_t lookfront = 0;
    std::vector<std::size_t> targets;  // 1-based time of each forecast target
    Matrix predictions;
    Matrix actuals;
};

struct ForecastReport {
    std::vector<ReportRow> rows;  // ordered by lookfront, then method, then component
    std::vector<BacktestTrace> traces;
    std::size_t origins = 0;
    std::size_t components = 0;
    std::uint64_t seed = 0;
};

/// Raised when one (origin, method) item fails; the cause is nested.
class BacktestError : public std::runtime_error {
public:
    BacktestError(std::size_t origin, const std::string& method, const std::string& cause);
    std::size_t origin() const noexcept { return origin_; }
    const std::string& method() const noexcept { return method_; }

private:
    std::size_t origin_;
    std::string method_;
};

/// Rolling-origin evaluation with an expanding training window.
///
/// For each training length T_o in [T - holdout, T - max lookfront], every method
/// forecasts max-lookfront steps ahead once; the forecast at lookfront m is scored
/// against Z_{T_o + m}.
ForecastReport backtest(const TimeSeries& series, const std::vector<MethodSpec>& methods,
                        const BacktestOptions& options);

/// Produces a sample of the requested length from a seed.
using SampleGenerator = std::function<SyntheticSample(std::size_t length, std::uint64_t seed)>;

struct TrialError {
    double denoised = 0.0;  // mean squared manifold distance after denoising
    double raw = 0.0;       // same for the observations themselves
};

/// One trial: generate, embed the observations as a point cloud, denoise, measure.
/// Subspace manifolds are measured in patch space, all others on the raw rows.
TrialError denoise_trial(const SampleGenerator& generator, std::size_t length, const DenoiserConfig& denoiser,
                         std::uint64_t seed);

struct CurveRow {
    std::size_t length = 0;
    double mean_sq_dist = 0.0;
    double std = 0.0;  // sample standard deviation across trials
    double raw_mean_sq_dist = 0.0;
};

struct Summary {
    double mean = 0.0;
    double std = 0.0;
};

Summary summarize(const std::vector<double>& values);

/// Seed of trial `trial` at series length `length`.
std::uint64_t curve_trial_seed(std::uint64_t master, std::size_t length, std::size_t trial);

/// Reconstruction error against series length, averaged over independent trials.
std::vector<CurveRow> denoise_error_curve(const SampleGenerator& generator, const std::vector<std::size_t>& lengths,
                                          const DenoiserConfig& denoiser, std::size_t trials, std::uint64_t seed,
                                          std::size_t jobs = 1);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first failure
/// by index is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace mbf
