#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbf/bench.hpp"
#include "mbf/forecast.hpp"
#include "mbf/synthetic.hpp"

namespace mbf {

/// Invalid configuration. `field` is the dotted key path, e.g. "forecast.k".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message);
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct SyntheticConfig {
    ManifoldTag manifold = ManifoldTag::circle;
    std::size_t length = 200;
    NoiseSpec noise = NoiseSpec::gaussian(0.05);
    CircleChainParams circle;
    std::vector<double> ar_coeffs{0.5};
    double graph_gain = 0.9;  // graph-of-g uses g(u) = gain * sin(u) with p = d = 1
};

struct BacktestConfig {
    std::vector<std::size_t> lookfronts{1, 2, 3, 4};
    std::size_t holdout = 12;
    std::vector<std::string> methods{"knn", "same", "ldmm"};
    // "input" reads the --input series, "synthetic" generates it from [synthetic].
    std::string source = "input";
};

struct RateStudyConfig {
    std::vector<std::size_t> lengths{100, 400, 1600};
    std::size_t trials = 10;
};

/// Everything a CLI run needs. `forecast.denoiser` is the [denoiser] selection;
/// `same` and `ldmm` keep both parameter sets so backtests can compare methods.
struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t window = 11;
    ForecastConfig forecast;
    SameConfig same;
    LdmmConfig ldmm;
    SyntheticConfig synthetic;
    BacktestConfig backtest;
    RateStudyConfig ratestudy;
};

/// Defaults: window 11, k = 9 for every component, tau = 20, SAME with 21 passes,
/// LDMM with mu = 1500 and 7 iterations.
RunConfig default_config();

/// Reads INI text over the defaults. Unknown sections or keys are errors.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Re-applies cross-field checks after command-line overrides.
void validate(const RunConfig& cfg);

/// Forecast settings with the denoiser named by a backtest method ("knn", "same", "ldmm").
ForecastConfig method_forecast(const RunConfig& cfg, const std::string& method);

/// Sample generator described by [synthetic], ignoring its length.
SampleGenerator make_generator(const SyntheticConfig& cfg);

/// Series used for forecasting from a sample: the observations, or for graph-of-g
/// samples the current-state block of each row.
TimeSeries forecast_series(const SyntheticSample& sample);

/// Canonical INI text of the full configuration, defaults included.
std::string to_ini(const RunConfig& cfg);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace mbf
