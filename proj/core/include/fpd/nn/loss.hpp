#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fpd::nn {

struct LossResult {
    double loss = 0.0;
    std::vector<double> grad;  ///< d loss / d input, same length as the input
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// -log softmax(logits)[label]; gradient softmax - onehot.
LossResult softmax_cross_entropy(std::span<const double> logits, std::size_t label);

/// Sum of squared errors; gradient 2 (pred - target).
LossResult mse(std::span<const double> pred, std::span<const double> target);

}  // namespace fpd::nn
