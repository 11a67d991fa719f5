#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fpd/resolution.hpp"
#include "fpd/series.hpp"

namespace fpd::io {

/// Desk-scale stand-ins for the four steady-state source categories. The
/// enum value doubles as the class label.
enum class SourceKind { Solar = 0, Wind = 1, Load = 2, Ev = 3 };

std::string_view to_string(SourceKind k) noexcept;
SourceKind parse_source_kind(std::string_view name);

/// One day window per sample at 5min, 10min or hourly resolution with values
/// in [0, 1]: wind as a fraction of rated power, the other kinds scaled by
/// their own daily maximum (taken at 5-minute resolution before averaging).
/// Windows start at 2020-01-01 and are consecutive.
SeriesBatch synth_solar(std::size_t days, Resolution resolution, std::uint64_t seed);
SeriesBatch synth_wind(std::size_t days, Resolution resolution, std::uint64_t seed);
SeriesBatch synth_load(std::size_t days, Resolution resolution, std::uint64_t seed);
SeriesBatch synth_ev(std::size_t days, Resolution resolution, std::uint64_t seed);
SeriesBatch synth_source(SourceKind kind, std::size_t days, Resolution resolution,
                         std::uint64_t seed);

/// `days_per_kind` windows of every listed kind, labeled with the kind.
SeriesBatch synth_corpus(std::span<const SourceKind> kinds, std::size_t days_per_kind,
                         Resolution resolution, std::uint64_t seed);

enum class FaultType { None = 0, Sag = 1, Swell = 2, FrequencyDip = 3 };

std::string_view to_string(FaultType f) noexcept;
FaultType parse_fault_type(std::string_view name);

struct TransientSet {
    SeriesBatch batch;  ///< 3 channels (magnitude, angle, frequency) x 960, labels = fault type
    std::vector<double> min_amplitude;
    std::vector<double> max_amplitude;
};

/// 8 s at 120 Hz of per-unit voltage magnitude, phase angle and frequency
/// with one event per sample drawn uniformly from `mix`.
TransientSet synth_transient(std::size_t n, std::uint64_t seed, std::span<const FaultType> mix);

}  // namespace fpd::io
