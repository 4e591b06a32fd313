#pragma once

#include <cstddef>

#include "mbf/core.hpp"

namespace mbf {

/// Sliding-window patches Y_t = (Z_{t-1}, ..., Z_{t-b}) for t = b+1..T, plus
/// t = T+1 when include_query is set.
///
/// Layout is component-major with the newest sample first inside each block:
/// entry (c * b + j - 1) of the patch for time t is Z_{t-j, c}.
PatchSet embed(const TimeSeries& series, std::size_t window, bool include_query);

/// Source time of a patch row.
std::size_t unembed_time(std::size_t patch_index, const PatchSet& patches);

}  // namespace mbf
