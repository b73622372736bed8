#pragma once

#include <functional>

#include "kam/fourier_series.hpp"

namespace kam {

/// Runs body(0..count-1) on up to `threads` workers. Callers write results
/// into per-index slots, so the outcome does not depend on the thread count.
/// The first exception is rethrown after every worker has joined.
void parallel_for(Index count, int threads, const std::function<void(Index)>& body);

}  // namespace kam
