#pragma once

#include "fpd/resolution.hpp"
#include "fpd/series.hpp"

namespace fpd::io {

/// Length of one sampling interval in minutes (5min, 10min, hourly, daily).
int interval_minutes(Resolution r);

/// Linear-interpolation upsampling (10min -> 5min, hourly -> 5min, hourly ->
/// 10min). Each input point i expands to f points interpolating towards point
/// i + 1; the last point is held, so lengths scale exactly by f and every
/// original value stays on the original grid.
SeriesBatch resample(const SeriesBatch& x, Resolution to);

/// Block means to a coarser resolution (the inverse direction of resample).
SeriesBatch aggregate_mean(const SeriesBatch& x, Resolution to);

}  // namespace fpd::io
