#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpd/hierarchy.hpp"
#include "fpd/nn/tensor.hpp"
#include "fpd/series.hpp"

namespace fpd {

inline constexpr std::size_t kRegressionTargets = 9;

/// mean, std, min, max, range, slope, lag-1 autocorrelation, skewness,
/// zero fraction. Population moments; autocorrelation and skewness are 0 for
/// a constant segment.
using RegressionTargets = std::array<double, kRegressionTargets>;

inline constexpr std::array<const char*, kRegressionTargets> kRegressionTargetNames = {
    "mean", "std", "min", "max", "range", "slope", "autocorr1", "skewness", "zero_fraction"};

RegressionTargets regression_targets(std::span<const double> segment);

struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch_size = 64;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    std::size_t classes = 4;
    std::size_t targets = kRegressionTargets;
    double validation_fraction = 0.1;
    std::vector<Resolution> levels{Resolution::Hourly, Resolution::Daily};
    /// Levels above the first also see raw inputs averaged to their input
    /// resolution, so they work from either entry point.
    bool mixed_inputs = true;

    void validate() const;
    nlohmann::json to_json() const;
    /// Missing keys keep their defaults.
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
    std::string level;
    std::size_t epoch = 0;
    double mse = 0.0;
    double ce = 0.0;
    double loss = 0.0;
    double accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;

    nlohmann::json to_json() const;
};

using EpochSink = std::function<void(const EpochRecord&)>;

struct JointLoss {
    double mse_term = 0.0;  ///< batch mean of the per-sample squared-error sums
    double ce_term = 0.0;   ///< batch mean of the per-sample cross entropies
    double total = 0.0;     ///< mse_term + ce_term
    nn::Tensor3 grad_regression;      ///< (B, K, 1)
    nn::Tensor3 grad_classification;  ///< (B, C, 1)
    std::size_t correct = 0;
};

/// Joint regression + classification loss over head outputs (B, K, 1) and
/// logits (B, C, 1), with unit weights, averaged over the batch.
JointLoss joint_loss(const nn::Tensor3& regression, const nn::Tensor3& logits,
                     std::span<const double> targets, std::span<const int> labels);

/// Inputs, labels and raw regression targets of one level.
struct LevelDataset {
    Resolution level = Resolution::Hourly;
    nn::Tensor3 inputs;
    std::vector<int> labels;
    std::vector<double> targets;  ///< N x K, row-major, unnormalized
    std::size_t from_features = 0;
    std::size_t from_raw = 0;

    std::size_t size() const noexcept { return inputs.batch(); }
};

/// Builds level inputs from a labeled batch. Data at the level's input
/// resolution enters raw; finer data is passed through the (trained) lower
/// levels first. Throws StateError if a needed lower level is untrained.
LevelDataset prepare_level_dataset(const ExtractorStack& stack, Resolution level,
                                   const SeriesBatch& data);

/// The views of `data` a level trains on: the batch itself plus, with
/// `mixed`, its block average at the level's input resolution.
std::vector<SeriesBatch> training_views(const SeriesBatch& data, Resolution level, bool mixed);

/// Trains one level with heads attached; other levels are untouched.
std::vector<EpochRecord> train_level(ExtractorStack& stack, Resolution level,
                                     std::span<const SeriesBatch> data, const TrainConfig& config,
                                     const EpochSink& sink = {});

/// Fault-type classification plus min/max magnitude regression of the
/// transient module (created on first use).
std::vector<EpochRecord> train_transient(ExtractorStack& stack, const SeriesBatch& data,
                                         std::span<const double> min_amplitude,
                                         std::span<const double> max_amplitude,
                                         const TrainConfig& config, const EpochSink& sink = {});

/// CRC-32 over architecture, weights and running statistics.
std::uint32_t stack_checksum(const ExtractorStack& stack);

/// Drops the heads, freezes the stack and stamps its version. Idempotent.
ExtractorStack& finalize(ExtractorStack& stack);

/// Held-out style accuracy of the classification head on `data` (eval mode).
double head_accuracy(const LevelModule& module, const nn::Tensor3& inputs,
                     std::span<const int> labels);

}  // namespace fpd
