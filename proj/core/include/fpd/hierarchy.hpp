#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpd/linalg.hpp"
#include "fpd/nn/layers.hpp"
#include "fpd/resolution.hpp"
#include "fpd/series.hpp"

namespace fpd {

/// Feature rows emitted by one extractor level.
///
/// Rows are grouped by the source window they came from (`window_rows[i]`
/// consecutive rows per input window). `means` holds, per row, the mean raw
/// value of the segment the row summarises; the next level consumes it as
/// its mean channel.
struct FeatureSet {
    linalg::Matrix rows;
    Resolution duration = Resolution::Hourly;
    std::vector<double> means;
    std::vector<std::size_t> window_rows;
    std::vector<std::int64_t> window_starts;  ///< start minute per window, may be empty
    std::string version;

    std::size_t size() const noexcept { return rows.rows(); }
    std::size_t dim() const noexcept { return rows.cols(); }
};

enum class InputSource { FromFeatures, FromRaw };

/// Model input of one level: (segments, D, L). Feature channels come first
/// and the raw-value (or mean) channel is last.
struct LevelInput {
    Resolution level = Resolution::Hourly;
    InputSource source = InputSource::FromRaw;
    nn::Tensor3 data;
    std::vector<std::size_t> valid;            ///< real positions per segment (month padding)
    std::vector<std::size_t> window_segments;  ///< segments per source window
    std::vector<int> labels;                   ///< per segment, copied from the source window
    std::vector<std::int64_t> window_starts;   ///< start minute per window, may be empty

    std::size_t segments() const noexcept { return data.batch(); }
};

struct ArchitectureConfig {
    std::size_t channels = 8;  ///< D: D-1 carried features plus the mean channel
    std::size_t width = 32;
    std::size_t blocks = 2;
    bool average_pool = false;  ///< pool over length instead of flattening before the projection
    std::size_t transient_width = 32;
    std::size_t transient_stages = 4;
    std::size_t transient_features = 2048;

    std::size_t feature_dim() const noexcept { return channels - 1; }
    void validate() const;
    nlohmann::json to_json() const;
    static ArchitectureConfig from_json(const nlohmann::json& j);
};

/// Per-statistic z-score constants for the regression targets.
struct TargetScaler {
    std::vector<double> mean;
    std::vector<double> scale;

    bool empty() const noexcept { return mean.empty(); }
};

/// One extractor M_r: body producing features, plus the task heads that only
/// exist until the stack is finalized.
struct LevelModule {
    Resolution level = Resolution::Hourly;
    std::size_t input_channels = 0;
    std::size_t input_length = 0;
    nn::Sequential body;
    std::optional<nn::Linear> regression_head;
    std::optional<nn::Linear> classification_head;
    TargetScaler scaler;
    std::size_t classes = 0;
    bool trained = false;
};

/// Ordered per-level modules plus the optional transient module.
class ExtractorStack {
public:
    ExtractorStack() = default;

    /// Freshly initialized (untrained) modules for `schedule`, which must be a
    /// contiguous run of module levels. Weights are drawn from `seed`.
    static ExtractorStack create(const ArchitectureConfig& arch, std::vector<Resolution> schedule,
                                 std::uint64_t seed);

    const ArchitectureConfig& architecture() const noexcept { return arch_; }
    const std::vector<Resolution>& schedule() const noexcept { return schedule_; }

    bool has_level(Resolution level) const noexcept { return modules_.count(level) != 0; }
    LevelModule& module(Resolution level);
    const LevelModule& module(Resolution level) const;

    bool has_transient() const noexcept { return transient_.has_value(); }
    LevelModule& transient();
    const LevelModule& transient() const;
    void set_transient(LevelModule module);

    /// Adds a module (used when loading artifacts).
    void put(LevelModule module);
    void set_schedule(std::vector<Resolution> schedule);

    bool frozen() const noexcept { return frozen_; }
    const std::string& version() const noexcept { return version_; }
    void freeze(std::string version);

    nlohmann::json& training_config() noexcept { return training_config_; }
    const nlohmann::json& training_config() const noexcept { return training_config_; }

    /// Every module in a fixed order: schedule levels, then transient.
    std::vector<const LevelModule*> modules() const;
    std::vector<LevelModule*> modules();

private:
    ArchitectureConfig arch_;
    std::vector<Resolution> schedule_;
    std::map<Resolution, LevelModule> modules_;
    std::optional<LevelModule> transient_;
    bool frozen_ = false;
    std::string version_;
    nlohmann::json training_config_ = nlohmann::json::object();
};

/// Stem conv -> bn -> relu -> residual blocks -> projection to D-1 features.
nn::Sequential build_level_body(const ArchitectureConfig& arch, std::size_t length);

/// Conv stem to the transient width, stride-2 conv-bn-relu stages, flatten,
/// linear to the transient feature size.
nn::Sequential build_transient_body(const ArchitectureConfig& arch);

/// Switch mechanism: exactly one of `prev` (features of the level below) and
/// `raw` (a series at this level's input resolution) must be given.
LevelInput build_input(const FeatureSet* prev, const SeriesBatch* raw, Resolution level,
                       std::size_t channels);

/// Mean of the last channel of each segment over its valid positions.
std::vector<double> level_mean(const LevelInput& input);
double segment_mean(std::span<const double> values);

/// Runs the module of `input.level` in eval mode; one row per segment.
FeatureSet extract_at(const ExtractorStack& stack, const LevelInput& input);

/// Walks the levels from the module consuming `x.resolution` up to `target`.
FeatureSet extract_hierarchical(const ExtractorStack& stack, const SeriesBatch& x,
                                Resolution target);

/// 3-channel, 960-point transient windows -> one row per sample.
FeatureSet extract_transient(const ExtractorStack& stack, const SeriesBatch& x);

/// Forward pass of a body in chunks; per-sample results do not depend on the
/// chunking.
nn::Tensor3 infer_chunked(const nn::Layer& body, const nn::Tensor3& x, std::size_t chunk = 512);

}  // namespace fpd
