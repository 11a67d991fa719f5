#include "fpd/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fpd/error.hpp"

namespace fpd::nn {

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw DimensionError("softmax: empty logits");
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - top);
        z += p[i];
    }
    for (double& v : p) {
        v /= z;
    }
    return p;
}

LossResult softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size()) {
        throw ArgumentError("softmax_cross_entropy: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(logits.size()) + ")");
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) {
        z += std::exp(l - top);
    }
    const double log_z = top + std::log(z);
    LossResult r;
    r.loss = log_z - logits[label];
    r.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        r.grad[i] = std::exp(logits[i] - log_z);
    }
    r.grad[label] -= 1.0;
    return r;
}

LossResult mse(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) {
        throw DimensionError("mse: prediction has " + std::to_string(pred.size()) +
                             " entries, target " + std::to_string(target.size()));
    }
    LossResult r;
    r.grad.resize(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = pred[k] - target[k];
        r.loss += d * d;
        r.grad[k] = 2.0 * d;
    }
    return r;
}

}  // namespace fpd::nn
