#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fpd/nn/layers.hpp"

namespace fpd::nn {

struct GradCheckOptions {
    double step = 1e-4;
    double tolerance = 1e-4;
    /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
    double floor = 1e-6;
    /// When a perturbation flips a ReLU, retry with step/10 this many times,
    /// then skip the entry (counted in `skipped`).
    int refinements = 3;
    bool check_input = true;
    /// Test hook: perturb the analytic gradient of every parameter whose
    /// owning layer name contains this string. Empty = off.
    std::string corrupt;
};

struct GradCheckEntry {
    std::string target;  ///< qualified parameter name, or "input"
    std::size_t checked = 0;
    std::size_t skipped = 0;
    double max_rel_error = 0.0;
    bool passed = true;
};

struct GradCheckResult {
    std::string name;
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    std::string worst;  ///< target with the largest error
    std::size_t skipped = 0;
    bool passed = true;
};

/// Compares backward() against central differences of the scalar probe loss
/// sum(r * forward(x)) for a fixed random r. Runs in training mode, so
/// batchnorm running statistics of `net` are updated as a side effect.
GradCheckResult check_gradients(Layer& net, const Tensor3& x, Rng& rng,
                                const GradCheckOptions& options = {});

/// Every layer kind plus a two-block residual network, with random small
/// shapes drawn from `seed`.
std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed,
                                                 const GradCheckOptions& options = {});

}  // namespace fpd::nn
