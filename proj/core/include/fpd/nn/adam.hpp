#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fpd/nn/layers.hpp"

namespace fpd::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment estimates, one array per parameter. Starts empty with
/// step 0 and is sized on the first update.
struct AdamState {
    std::size_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update of every parameter from its accumulated
/// gradient. Throws NumericError (before touching anything) on a non-finite
/// gradient.
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config);

}  // namespace fpd::nn
