#include "mbf/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "mbf/windowing.hpp"

namespace mbf {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string denoiser_name(const DenoiserConfig& cfg) {
    return std::visit(Overloaded{[](const NoDenoise&) { return std::string("knn"); },
                                 [](const SameConfig&) { return std::string("same"); },
                                 [](const LdmmConfig&) { return std::string("ldmm"); }},
                      cfg);
}

std::size_t ForecastConfig::k_for(std::size_t component) const {
    if (k.size() == 1) return k.front();
    if (component >= k.size()) {
        throw IndexError("no neighbour count for component " + std::to_string(component));
    }
    return k[component];
}

void ForecastConfig::validate(std::size_t components) const {
    if (k.empty() || (k.size() != 1 && k.size() != components)) {
        throw InvalidArgument("forecast.k needs one entry or one per component (" +
                              std::to_string(components) + ")");
    }
    if (std::any_of(k.begin(), k.end(), [](std::size_t v) { return v < 1; })) {
        throw InvalidArgument("forecast.k entries must be at least 1");
    }
    if (!(tau > 0.0)) {
        throw InvalidArgument("forecast.tau must be positive");
    }
    std::visit(Overloaded{[](const NoDenoise&) {}, [](const SameConfig& c) { c.validate(); },
                          [](const LdmmConfig& c) { c.validate(); }},
               denoiser);
}

KnnWeights knn_weights_from_distances(const Vector& distances, std::span<const std::size_t> times,
                                      std::size_t query_time, std::size_t k, double tau) {
    const auto n = static_cast<std::size_t>(distances.size());
    if (times.size() != n) {
        throw InvalidArgument("knn_weights: distances and times differ in length");
    }
    if (k < 1 || k > n) {
        throw InvalidArgument("knn_weights: k = " + std::to_string(k) + " outside [1, " +
                              std::to_string(n) + "]");
    }
    if (!(tau > 0.0)) {
        throw InvalidArgument("knn_weights: tau must be positive");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto da = distances(static_cast<Eigen::Index>(a));
        const auto db = distances(static_cast<Eigen::Index>(b));
        return da != db ? da < db : times[a] < times[b];
    });

    KnnWeights out;
    out.weights = Vector::Zero(static_cast<Eigen::Index>(n));
    out.bandwidth = distances(static_cast<Eigen::Index>(order[k - 1]));

    if (out.bandwidth > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            if (times[i] >= query_time) {
                throw InvalidArgument("knn_weights: history time " + std::to_string(times[i]) +
                                      " is not before the query time");
            }
            const double u = distances(static_cast<Eigen::Index>(i)) / out.bandwidth;
            if (u >= 1.0) continue;
            const double age = static_cast<double>(query_time - times[i]);
            out.weights(static_cast<Eigen::Index>(i)) = std::exp(-age / tau) * epanechnikov(u);
        }
    }
    if (!(out.weights.sum() > 0.0)) {
        out.weights.setZero();
        for (std::size_t i = 0; i < k; ++i) {
            out.weights(static_cast<Eigen::Index>(order[i])) = 1.0;
        }
        out.uniform_fallback = true;
    }
    return out;
}

KnnWeights knn_weights(const RowVector& query, const DenoisedSet& history, std::size_t query_time,
                       std::size_t k, double tau) {
    if (query.size() != history.points.cols()) {
        throw InvalidArgument("knn_weights: query dimension does not match history");
    }
    return knn_weights_from_distances(row_distances(history.points, query), history.times, query_time,
                                      k, tau);
}

namespace {

void check_patch_times(const TimeSeries& series, std::span<const std::size_t> patch_times) {
    for (std::size_t t : patch_times) {
        if (t < 2 || t > series.length()) {
            throw InvalidArgument("one_step_forecast: patch time " + std::to_string(t) +
                                  " has no observed increment");
        }
    }
}

double weighted_increment(const TimeSeries& series, const Vector& weights,
                          std::span<const std::size_t> patch_times, Eigen::Index component) {
    if (static_cast<std::size_t>(weights.size()) != patch_times.size()) {
        throw InvalidArgument("one_step_forecast: weights and patch times differ in length");
    }
    const double total = weights.sum();
    if (!(total > 0.0)) {
        throw ContractViolation("one_step_forecast: weights sum to zero");
    }
    const Matrix& z = series.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < patch_times.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(patch_times[i] - 1);
        acc += weights(static_cast<Eigen::Index>(i)) * (z(row, component) - z(row - 1, component));
    }
    return acc / total;
}

}  // namespace

RowVector one_step_forecast(const TimeSeries& series, const Vector& weights,
                            std::span<const std::size_t> patch_times) {
    return one_step_forecast(series, std::vector<Vector>(series.components(), weights), patch_times);
}

RowVector one_step_forecast(const TimeSeries& series, const std::vector<Vector>& weights,
                            std::span<const std::size_t> patch_times) {
    if (weights.size() != series.components()) {
        throw InvalidArgument("one_step_forecast: need one weight vector per component");
    }
    check_patch_times(series, patch_times);
    RowVector out = series.at(series.length());
    for (std::size_t c = 0; c < weights.size(); ++c) {
        out(static_cast<Eigen::Index>(c)) +=
            weighted_increment(series, weights[c], patch_times, static_cast<Eigen::Index>(c));
    }
    return out;
}

DenoisedSet denoise(const PatchSet& patches, const DenoiserConfig& cfg, ForecastDiagnostics* diagnostics) {
    return std::visit(
        Overloaded{[&](const NoDenoise&) { return DenoisedSet::from_patches(patches); },
                   [&](const SameConfig& c) {
                       SameResult r = same_denoise(patches, c);
                       if (diagnostics) {
                           diagnostics->same_projector_fallbacks += r.diagnostics.projector_fallbacks;
                       }
                       return std::move(r.denoised);
                   },
                   [&](const LdmmConfig& c) { return ldmm_denoise(patches, c).denoised; }},
        cfg);
}

Forecast predict(const TimeSeries& series, std::size_t window, const ForecastConfig& cfg,
                 std::size_t lookfront) {
    if (lookfront < 1) {
        throw InvalidArgument("predict: lookfront must be at least 1");
    }
    const std::size_t p = series.components();
    cfg.validate(p);

    if (cfg.standardize) {
        const RowVector mean = series.values().colwise().mean();
        const Matrix centred = series.values().rowwise() - mean;
        RowVector scale = (centred.array().square().colwise().mean()).sqrt().matrix();
        for (Eigen::Index c = 0; c < scale.size(); ++c) {
            if (!(scale(c) > 0.0)) scale(c) = 1.0;  // constant component
        }
        ForecastConfig inner = cfg;
        inner.standardize = false;
        Forecast out = predict(TimeSeries(centred.array().rowwise() / scale.array()), window, inner, lookfront);
        out.values = (out.values.array().rowwise() * scale.array()).matrix().rowwise() + mean;
        return out;
    }

    Forecast out;
    out.values.resize(static_cast<Eigen::Index>(lookfront), static_cast<Eigen::Index>(p));
    TimeSeries current = series;
    std::optional<DenoisedSet> frozen;

    for (std::size_t step = 0; step < lookfront; ++step) {
        const PatchSet patches = embed(current, window, true);
        const auto n = static_cast<Eigen::Index>(patches.size());

        DenoisedSet points;
        if (cfg.freeze_denoise && frozen) {
            points = DenoisedSet::from_patches(patches);
            points.points.topRows(frozen->points.rows()) = frozen->points;
        } else {
            points = denoise(patches, cfg.denoiser, &out.diagnostics);
            if (cfg.freeze_denoise) frozen = points;
        }

        const RowVector query = points.points.row(n - 1);
        const Matrix history = points.points.topRows(n - 1);
        const std::span<const std::size_t> history_times(patches.times.data(), patches.times.size() - 1);
        const Vector distances = row_distances(history, query);
        const std::size_t query_time = patches.times.back();

        std::vector<Vector> weights;
        weights.reserve(p);
        for (std::size_t c = 0; c < p; ++c) {
            KnnWeights w = knn_weights_from_distances(distances, history_times, query_time, cfg.k_for(c), cfg.tau);
            if (w.uniform_fallback) ++out.diagnostics.uniform_fallbacks;
            weights.push_back(std::move(w.weights));
        }
        const RowVector next = one_step_forecast(current, weights, history_times);
        out.values.row(static_cast<Eigen::Index>(step)) = next;
        if (step + 1 < lookfront) current = current.appended(next);
    }
    return out;
}

}  // namespace mbf
