#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpd/resolution.hpp"

namespace fpd {

/// Hours of the day treated as night, as a half-open circular range
/// [start_hour, end_hour). The default 22:00–05:00 spans 7 hours.
struct NightWindow {
    int start_hour = 22;
    int end_hour = 5;

    bool contains(double hour_of_day) const noexcept;
    int hours() const noexcept;
    /// Night hours in chronological order starting at start_hour.
    std::vector<int> hour_list() const;

    bool operator==(const NightWindow&) const = default;
};

enum class Normalization { PerSample, PerDataset, None };

std::string_view to_string(Normalization n) noexcept;
Normalization parse_normalization(std::string_view name);

/// A batch of fixed-length windows: samples × channels × length, row-major.
///
/// Steady-state data is single channel; transient recordings carry three
/// (voltage magnitude, phase angle, frequency). Optional per-sample metadata
/// is either empty or holds exactly one entry per sample.
struct SeriesBatch {
    std::size_t samples = 0;
    std::size_t channels = 1;
    std::size_t length = 0;
    std::vector<double> values;

    Resolution resolution = Resolution::FiveMin;
    Normalization normalization = Normalization::None;
    std::string source;
    NightWindow night;

    std::vector<int> labels;                  ///< class label per sample
    std::vector<std::size_t> valid_lengths;   ///< real points per window (month padding)
    std::vector<std::int64_t> start_minutes;  ///< window start, minutes since 1970-01-01

    static SeriesBatch zeros(std::size_t samples, std::size_t length, Resolution resolution,
                             std::size_t channels = 1);

    double& at(std::size_t sample, std::size_t t) { return values[sample * channels * length + t]; }
    double at(std::size_t sample, std::size_t t) const {
        return values[sample * channels * length + t];
    }
    double& at(std::size_t sample, std::size_t channel, std::size_t t) {
        return values[(sample * channels + channel) * length + t];
    }
    double at(std::size_t sample, std::size_t channel, std::size_t t) const {
        return values[(sample * channels + channel) * length + t];
    }

    /// All channels of one sample.
    std::span<double> sample(std::size_t i) {
        return {values.data() + i * channels * length, channels * length};
    }
    std::span<const double> sample(std::size_t i) const {
        return {values.data() + i * channels * length, channels * length};
    }
    std::span<const double> channel(std::size_t i, std::size_t c) const {
        return {values.data() + (i * channels + c) * length, length};
    }

    std::size_t valid_length(std::size_t i) const {
        return valid_lengths.empty() ? length : valid_lengths[i];
    }

    /// Checks shape/metadata consistency and finiteness; throws on violation.
    void validate() const;

    /// Copy with only the listed samples (metadata carried along).
    SeriesBatch select(std::span<const std::size_t> indices) const;
};

/// Stacks batches with identical window shape and resolution.
SeriesBatch concatenate(std::span<const SeriesBatch> parts);

}  // namespace fpd
