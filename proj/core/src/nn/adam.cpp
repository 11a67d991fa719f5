#include "fpd/nn/adam.hpp"

#include <cmath>

#include "fpd/error.hpp"

namespace fpd::nn {

void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config) {
    if (!(config.lr > 0.0) || config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 ||
        config.beta2 >= 1.0 || !(config.eps > 0.0)) {
        throw ArgumentError("adam_step: invalid hyperparameters");
    }
    if (state.step == 0 && state.m.empty()) {
        for (const Parameter* p : params) {
            state.m.emplace_back(p->value.size(), 0.0);
            state.v.emplace_back(p->value.size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) {
        throw DimensionError("adam_step: state tracks " + std::to_string(state.m.size()) +
                             " parameters, got " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter& p = *params[i];
        if (p.grad.size() != p.value.size() || state.m[i].size() != p.value.size()) {
            throw DimensionError("adam_step: shape mismatch for " + p.qualified_name());
        }
        for (double g : p.grad) {
            if (!std::isfinite(g)) {
                throw NumericError("adam_step: non-finite gradient in " + p.qualified_name());
            }
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad[j];
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
            const double mh = m[j] / c1;
            const double vh = v[j] / c2;
            p.value[j] -= config.lr * mh / (std::sqrt(vh) + config.eps);
        }
    }
}

}  // namespace fpd::nn
