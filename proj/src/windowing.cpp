#include "mbf/windowing.hpp"

#include <string>

namespace mbf {

PatchSet embed(const TimeSeries& series, std::size_t window, bool include_query) {
    const std::size_t length = series.length();
    const std::size_t p = series.components();
    if (window < 1) {
        throw InvalidArgument("embed: window length must be at least 1");
    }
    if (window >= length) {
        throw InvalidArgument("embed: window length " + std::to_string(window) +
                              " must be smaller than series length " + std::to_string(length));
    }

    const std::size_t last = include_query ? length + 1 : length;
    const std::size_t count = last - window;

    PatchSet out;
    out.window = window;
    out.components = p;
    out.patches.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(window * p));
    out.times.reserve(count);

    const Matrix& z = series.values();
    for (std::size_t t = window + 1, row = 0; t <= last; ++t, ++row) {
        out.times.push_back(t);
        for (std::size_t c = 0; c < p; ++c) {
            for (std::size_t j = 1; j <= window; ++j) {
                out.patches(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c * window + j - 1)) =
                    z(static_cast<Eigen::Index>(t - j - 1), static_cast<Eigen::Index>(c));
            }
        }
    }
    return out;
}

std::size_t unembed_time(std::size_t patch_index, const PatchSet& patches) {
    if (patch_index >= patches.times.size()) {
        throw IndexError("patch index " + std::to_string(patch_index) + " out of range [0, " +
                         std::to_string(patches.times.size()) + ")");
    }
    return patches.times[patch_index];
}

}  // namespace mbf
