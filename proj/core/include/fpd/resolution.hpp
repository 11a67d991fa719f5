#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace fpd {

/// Sampling resolution of a series, and the duration a feature row summarises.
///
/// The steady-state chain is FiveMin < Hourly < Daily < Monthly < Yearly.
/// TenMin only exists as an ingestion resolution (upsampled to FiveMin before
/// extraction); Transient is incomparable with the steady-state levels.
enum class Resolution { FiveMin, TenMin, Hourly, Daily, Monthly, Yearly, Transient };

std::string_view to_string(Resolution r) noexcept;

/// Accepts "5min", "10min", "hourly", "daily", "monthly", "yearly", "transient"
/// (plus a few spelled-out aliases). Throws ArgumentError otherwise.
Resolution parse_resolution(std::string_view name);

/// True for the resolutions of the module chain (FiveMin..Yearly).
bool in_chain(Resolution r) noexcept;

/// Position in the chain; throws ArgumentError for TenMin/Transient.
int chain_rank(Resolution r);

std::optional<Resolution> next_resolution(Resolution r) noexcept;
std::optional<Resolution> previous_resolution(Resolution r) noexcept;

/// Number of points at resolution r that form one point of the next level:
/// FiveMin 12, Hourly 24, Daily 31 (months padded), Monthly 12, Transient 960.
std::size_t segment_length(Resolution r);

/// Sampling intervals per hour (5-min: 12, 10-min: 6, hourly: 1).
/// Throws for resolutions coarser than hourly.
std::size_t intervals_per_hour(Resolution r);

/// Extractor levels are named by the duration of the features they emit:
/// the Hourly module consumes 5-minute segments, the Daily module hourly ones.
bool is_module_level(Resolution level) noexcept;

/// Resolution of the data a module level consumes (Hourly -> FiveMin, ...).
Resolution module_input(Resolution level);

/// Module levels from the one consuming `entry` data up to `target`, inclusive.
std::vector<Resolution> levels_between(Resolution entry, Resolution target);

}  // namespace fpd
