#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mbf/core.hpp"
#include "mbf/ldmm.hpp"
#include "mbf/same.hpp"

namespace mbf {

/// Plain k-NN on raw patches.
struct NoDenoise {};

using DenoiserConfig = std::variant<NoDenoise, SameConfig, LdmmConfig>;

std::string denoiser_name(const DenoiserConfig& cfg);

struct ForecastConfig {
    std::vector<std::size_t> k{5};  // one entry, or one per component
    double tau = 20.0;
    DenoiserConfig denoiser = NoDenoise{};
    // Denoise only the initial patch set; later recursive steps use raw patches
    // for the newly created windows.
    bool freeze_denoise = false;
    // Z-score each component with the series' own mean and standard deviation
    // before embedding; forecasts are mapped back to the original units.
    bool standardize = false;

    /// Neighbour count for a component, broadcasting a single entry.
    std::size_t k_for(std::size_t component) const;
    void validate(std::size_t components) const;
};

struct KnnWeights {
    Vector weights;          // aligned with the history rows
    double bandwidth = 0.0;  // h_k, the k-th smallest distance
    bool uniform_fallback = false;
};

/// Discounted Epanechnikov weights w_t = exp(-(query_time - t) / tau) K(|q - X_t| / h_k).
///
/// Distances are ranked with ties broken by earlier time. If h_k is zero or
/// every weight vanishes, the k nearest points get weight 1 instead.
KnnWeights knn_weights(const RowVector& query, const DenoisedSet& history, std::size_t query_time,
                       std::size_t k, double tau);

/// Same as above over precomputed distances from the query to each history row.
KnnWeights knn_weights_from_distances(const Vector& distances, std::span<const std::size_t> times,
                                      std::size_t query_time, std::size_t k, double tau);

/// Z_T + sum_t w_t (Z_t - Z_{t-1}) / sum_t w_t, with one weight vector shared by all components.
RowVector one_step_forecast(const TimeSeries& series, const Vector& weights,
                            std::span<const std::size_t> patch_times);

/// Per-component variant: component c uses weights[c].
RowVector one_step_forecast(const TimeSeries& series, const std::vector<Vector>& weights,
                            std::span<const std::size_t> patch_times);

struct ForecastDiagnostics {
    std::size_t uniform_fallbacks = 0;
    std::size_t same_projector_fallbacks = 0;
};

struct Forecast {
    Matrix values;  // m x p, row s is the forecast for T + s + 1
    ForecastDiagnostics diagnostics;
};

/// Recursive m-step forecast with the configured denoiser.
Forecast predict(const TimeSeries& series, std::size_t window, const ForecastConfig& cfg,
                 std::size_t lookfront);

/// Runs the configured denoiser over a patch set (identity for NoDenoise).
DenoisedSet denoise(const PatchSet& patches, const DenoiserConfig& cfg,
                    ForecastDiagnostics* diagnostics = nullptr);

}  // namespace mbf
