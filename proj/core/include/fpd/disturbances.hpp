#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpd/series.hpp"

namespace fpd::disturb {

/// Every disturbance works window by window over the valid positions of each
/// channel, draws its randomness from `seed` alone (so levels of the same
/// seed are nested), and returns an exact copy at level 0.

enum class Kind {
    GaussianNoise,
    MissingData,
    Contamination,
    GaussianSmooth,
    ErrorAccumulate,
    TimeShift,
    PeriodOffset,
    NighttimeViolation,
    MomentMatchedFabricate,
};

std::string_view to_string(Kind k) noexcept;
Kind parse_kind(std::string_view name);
std::vector<Kind> all_kinds();

/// Adds N(0, α) noise; α is a variance.
SeriesBatch gaussian_noise(const SeriesBatch& x, double alpha, std::uint64_t seed);

/// Zeroes exactly ⌊α·T⌋ distinct positions per window.
SeriesBatch missing_data(const SeriesBatch& x, double alpha, std::uint64_t seed);

enum class ContaminationMode { Sample, Point };

/// Sample mode replaces ⌊α·N⌋ whole windows of `x` by windows of `y`; point
/// mode replaces ⌊α·T⌋ positions of every window by the same positions of a
/// paired `y` window.
SeriesBatch contamination(const SeriesBatch& x, const SeriesBatch& y, double alpha,
                          std::uint64_t seed, ContaminationMode mode = ContaminationMode::Sample);

/// Gaussian filter with standard deviation α, truncated at 4σ, reflective
/// (half-sample symmetric) boundary.
SeriesBatch gaussian_smooth(const SeriesBatch& x, double alpha);

/// Normalized discrete kernel of gaussian_smooth, 2·radius+1 taps.
std::vector<double> gaussian_kernel(double sigma);

/// x̃_t = x_t·E_t with E_0 = 1, E_t = E_{t−1}·ε_t, ε_t ~ N(1, α²).
SeriesBatch error_accumulate(const SeriesBatch& x, double alpha, std::uint64_t seed);

/// Circular forward shift: x′[t] = x[(t − α) mod T], 0 ≤ α < T.
SeriesBatch time_shift(const SeriesBatch& x, std::size_t alpha);

/// time_shift by α hours worth of intervals of the batch's resolution.
SeriesBatch period_offset(const SeriesBatch& x, double hours);

struct ViolationOptions {
    double low = 0.2;   ///< injected value range as a fraction of the window's daytime peak
    double high = 0.8;
};

/// Fills α contiguous night hours of every day window with values drawn
/// uniformly from [low, high] times the window's daytime peak.
SeriesBatch nighttime_violation(const SeriesBatch& x, std::size_t hours, std::uint64_t seed,
                                const ViolationOptions& options = {});

struct Fabricated {
    SeriesBatch batch;
    double regularization = 0.0;  ///< ridge added to a degenerate covariance
};

/// Draws N windows from the Gaussian with the raw windows' mean and
/// covariance. Requires N ≥ window size + 1.
Fabricated moment_matched_fabricate(const SeriesBatch& x, std::uint64_t seed);

struct Disturbance {
    Kind kind = Kind::GaussianNoise;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    ContaminationMode contamination_mode = ContaminationMode::Sample;
    ViolationOptions violation;
};

struct Applied {
    SeriesBatch batch;
    double regularization = 0.0;
};

/// Dispatches on the kind; contamination needs `auxiliary`.
Applied apply(const Disturbance& d, const SeriesBatch& x, const SeriesBatch* auxiliary = nullptr);

struct PresetLevels {
    Kind kind;
    std::vector<double> alphas;
};

/// "fig2": the six benchmark disturbances with four levels each;
/// "fig3": period offset and nighttime violation.
std::vector<PresetLevels> preset(std::string_view name);

enum class RampCategory {
    StrongDown,
    ModerateDown,
    MildDown,
    Neutral,
    MildUp,
    ModerateUp,
    StrongUp,
};

std::string_view to_string(RampCategory c) noexcept;

struct RampThresholds {
    double strong;
    double moderate;
    double mild;
};

/// Scenario 1: 0.50 / 0.33 / 0.25; scenario 2: 0.30 / 0.20 / 0.10.
RampThresholds ramp_thresholds(int scenario);

/// Down-ramps are half-open towards zero, up-ramps towards infinity, and
/// neutral is the closed band [−mild, mild].
RampCategory classify_ramp(double rate, int scenario);

struct RampLabel {
    RampCategory category = RampCategory::Neutral;
    int scenario = 1;
    double rate = 0.0;
};

/// r = (P[5] − P[0]) / P_max over six 10-minute values.
RampLabel ramp_label(std::span<const double> window, double p_max, int scenario);

}  // namespace fpd::disturb
