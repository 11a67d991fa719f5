#include "fpd/disturbances.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fpd/error.hpp"
#include "fpd/linalg.hpp"

namespace fpd::disturb {

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 9> kKindNames{{
    {Kind::GaussianNoise, "gaussian_noise"},
    {Kind::MissingData, "missing_data"},
    {Kind::Contamination, "contamination"},
    {Kind::GaussianSmooth, "gaussian_smooth"},
    {Kind::ErrorAccumulate, "error_accumulate"},
    {Kind::TimeShift, "time_shift"},
    {Kind::PeriodOffset, "period_offset"},
    {Kind::NighttimeViolation, "nighttime_violation"},
    {Kind::MomentMatchedFabricate, "moment_matched_fabricate"},
}};

using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, Kind kind) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(kind) + 0x51u};
    return Rng(seq);
}

std::string name(Kind k) {
    return std::string(to_string(k));
}

void require_nonnegative(double alpha, Kind k) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw ArgumentError(name(k) + ": level must be a finite value >= 0 (got " + std::to_string(alpha) + ")");
    }
}

void require_fraction(double alpha, Kind k) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ArgumentError(name(k) + ": level must lie in [0, 1] (got " + std::to_string(alpha) + ")");
    }
}

std::size_t require_count(double alpha, Kind k) {
    require_nonnegative(alpha, k);
    if (alpha != std::floor(alpha)) {
        throw ArgumentError(name(k) + ": level must be a whole number (got " + std::to_string(alpha) + ")");
    }
    return static_cast<std::size_t>(alpha);
}

std::size_t floor_count(double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
}

/// Calls f(row, valid) for every (sample, channel) row of a mutable batch.
template <typename F>
void for_each_row(SeriesBatch& x, F&& f) {
    for (std::size_t i = 0; i < x.samples; ++i) {
        const std::size_t valid = x.valid_length(i);
        for (std::size_t c = 0; c < x.channels; ++c) {
            f(std::span<double>(x.values.data() + (i * x.channels + c) * x.length, valid), i);
        }
    }
}

/// First `k` entries of a uniformly random permutation of 0..n-1; the order
/// depends only on the generator state, so prefixes nest across k.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

/// Index of the reflected sample for scipy-style 'reflect' boundaries.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    return m < static_cast<std::ptrdiff_t>(n) ? static_cast<std::size_t>(m)
                                              : static_cast<std::size_t>(period - 1 - m);
}

}  // namespace

std::string_view to_string(Kind k) noexcept {
    for (const auto& [kind, text] : kKindNames) {
        if (kind == k) return text;
    }
    return "unknown";
}

Kind parse_kind(std::string_view text) {
    for (const auto& [kind, label] : kKindNames) {
        if (label == text) return kind;
    }
    if (text == "noise") return Kind::GaussianNoise;
    if (text == "missing") return Kind::MissingData;
    if (text == "smooth") return Kind::GaussianSmooth;
    if (text == "night_violation" || text == "violation") return Kind::NighttimeViolation;
    if (text == "fabricate") return Kind::MomentMatchedFabricate;
    std::string known;
    for (const auto& [kind, label] : kKindNames) known += (known.empty() ? "" : ", ") + std::string(label);
    throw ArgumentError("unknown disturbance '" + std::string(text) + "' (expected one of " + known + ")");
}

std::vector<Kind> all_kinds() {
    std::vector<Kind> out;
    for (const auto& entry : kKindNames) out.push_back(entry.first);
    return out;
}

SeriesBatch gaussian_noise(const SeriesBatch& x, double alpha, std::uint64_t seed) {
    require_nonnegative(alpha, Kind::GaussianNoise);
    x.validate();
    SeriesBatch out = x;
    if (alpha == 0.0) return out;
    Rng rng = make_rng(seed, Kind::GaussianNoise);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(alpha);
    for_each_row(out, [&](std::span<double> row, std::size_t) {
        for (double& v : row) v += sd * normal(rng);
    });
    return out;
}

SeriesBatch missing_data(const SeriesBatch& x, double alpha, std::uint64_t seed) {
    require_fraction(alpha, Kind::MissingData);
    x.validate();
    SeriesBatch out = x;
    if (alpha == 0.0) return out;
    Rng rng = make_rng(seed, Kind::MissingData);
    for_each_row(out, [&](std::span<double> row, std::size_t) {
        const auto order = permutation(row.size(), rng);
        const std::size_t k = floor_count(alpha, row.size());
        for (std::size_t j = 0; j < k; ++j) row[order[j]] = 0.0;
    });
    return out;
}

SeriesBatch contamination(const SeriesBatch& x, const SeriesBatch& y, double alpha, std::uint64_t seed,
                          ContaminationMode mode) {
    require_fraction(alpha, Kind::Contamination);
    x.validate();
    y.validate();
    if (x.channels != y.channels || x.length != y.length) {
        throw DimensionError("contamination: source windows are " + std::to_string(y.channels) + "x" +
                             std::to_string(y.length) + ", target windows " + std::to_string(x.channels) +
                             "x" + std::to_string(x.length));
    }
    if (y.samples == 0) {
        throw ArgumentError("contamination: the contaminating dataset is empty");
    }
    SeriesBatch out = x;
    if (alpha == 0.0) return out;
    Rng rng = make_rng(seed, Kind::Contamination);
    const auto targets = permutation(x.samples, rng);
    const auto sources = permutation(y.samples, rng);
    const std::size_t window = x.channels * x.length;
    if (mode == ContaminationMode::Sample) {
        const std::size_t k = floor_count(alpha, x.samples);
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t src = sources[j % y.samples];
            std::copy_n(y.values.begin() + static_cast<std::ptrdiff_t>(src * window), window,
                        out.values.begin() + static_cast<std::ptrdiff_t>(targets[j] * window));
            if (!out.valid_lengths.empty()) {
                out.valid_lengths[targets[j]] = std::min(out.valid_lengths[targets[j]], y.valid_length(src));
            }
        }
        return out;
    }
    for (std::size_t i = 0; i < x.samples; ++i) {
        const std::size_t src = sources[i % y.samples];
        const std::size_t valid = std::min(x.valid_length(i), y.valid_length(src));
        const auto order = permutation(valid, rng);
        const std::size_t k = floor_count(alpha, valid);
        for (std::size_t c = 0; c < x.channels; ++c) {
            for (std::size_t j = 0; j < k; ++j) out.at(i, c, order[j]) = y.at(src, c, order[j]);
        }
    }
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ArgumentError("gaussian_kernel: sigma must be positive");
    }
    const auto radius = static_cast<std::ptrdiff_t>(4.0 * sigma + 0.5);
    std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        w[static_cast<std::size_t>(k + radius)] = v;
        total += v;
    }
    for (double& v : w) v /= total;
    return w;
}

SeriesBatch gaussian_smooth(const SeriesBatch& x, double alpha) {
    require_nonnegative(alpha, Kind::GaussianSmooth);
    x.validate();
    SeriesBatch out = x;
    if (alpha == 0.0) return out;
    const auto w = gaussian_kernel(alpha);
    const auto radius = static_cast<std::ptrdiff_t>(w.size() / 2);
    std::vector<double> source;
    for_each_row(out, [&](std::span<double> row, std::size_t) {
        source.assign(row.begin(), row.end());
        const std::size_t n = row.size();
        for (std::size_t t = 0; t < n; ++t) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                acc += w[static_cast<std::size_t>(k + radius)] *
                       source[reflect(static_cast<std::ptrdiff_t>(t) + k, n)];
            }
            row[t] = acc;
        }
    });
    return out;
}

SeriesBatch error_accumulate(const SeriesBatch& x, double alpha, std::uint64_t seed) {
    require_nonnegative(alpha, Kind::ErrorAccumulate);
    x.validate();
    SeriesBatch out = x;
    if (alpha == 0.0) return out;
    Rng rng = make_rng(seed, Kind::ErrorAccumulate);
    std::normal_distribution<double> normal(0.0, 1.0);
    for_each_row(out, [&](std::span<double> row, std::size_t) {
        double e = 1.0;
        for (std::size_t t = 1; t < row.size(); ++t) {
            e *= 1.0 + alpha * normal(rng);
            row[t] *= e;
        }
    });
    return out;
}

SeriesBatch time_shift(const SeriesBatch& x, std::size_t alpha) {
    x.validate();
    SeriesBatch out = x;
    if (alpha == 0) return out;
    for (std::size_t i = 0; i < x.samples; ++i) {
        if (alpha >= x.valid_length(i)) {
            throw ArgumentError("time_shift: shift " + std::to_string(alpha) + " must be below the window length " +
                                std::to_string(x.valid_length(i)));
        }
    }
    std::vector<double> source;
    for_each_row(out, [&](std::span<double> row, std::size_t) {
        source.assign(row.begin(), row.end());
        const std::size_t n = row.size();
        for (std::size_t t = 0; t < n; ++t) row[t] = source[(t + n - alpha) % n];
    });
    return out;
}

SeriesBatch period_offset(const SeriesBatch& x, double hours) {
    require_nonnegative(hours, Kind::PeriodOffset);
    const double steps = hours * static_cast<double>(intervals_per_hour(x.resolution));
    if (steps != std::floor(steps)) {
        throw ArgumentError("period_offset: " + std::to_string(hours) + " h is not a whole number of " +
                            std::string(to_string(x.resolution)) + " intervals");
    }
    return time_shift(x, static_cast<std::size_t>(steps));
}

SeriesBatch nighttime_violation(const SeriesBatch& x, std::size_t hours, std::uint64_t seed,
                                const ViolationOptions& options) {
    x.validate();
    const int night_hours = x.night.hours();
    if (hours > static_cast<std::size_t>(night_hours)) {
        throw ArgumentError("nighttime_violation: " + std::to_string(hours) + " h exceeds the " +
                            std::to_string(night_hours) + " h night window");
    }
    if (!(options.low >= 0.0 && options.low <= options.high)) {
        throw ArgumentError("nighttime_violation: need 0 <= low <= high");
    }
    SeriesBatch out = x;
    if (hours == 0) return out;
    const std::size_t per_hour = intervals_per_hour(x.resolution);
    if (x.length != 24 * per_hour) {
        throw DimensionError("nighttime_violation: expects day windows of " + std::to_string(24 * per_hour) +
                             " points");
    }
    const auto night = x.night.hour_list();
    Rng rng = make_rng(seed, Kind::NighttimeViolation);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t slots = static_cast<std::size_t>(night_hours) - hours + 1;
    for (std::size_t i = 0; i < x.samples; ++i) {
        const std::int64_t start = x.start_minutes.empty() ? 0 : x.start_minutes[i];
        const std::int64_t offset = ((start % 1440) + 1440) % 1440;
        auto hour_at = [&](std::size_t t) {
            return static_cast<int>(((offset + static_cast<std::int64_t>(t * 60 / per_hour)) % 1440) / 60);
        };
        // Draws are taken for every night point regardless of the level.
        const double pick = unit(rng);
        std::vector<double> fractions(static_cast<std::size_t>(night_hours) * per_hour * x.channels);
        for (double& f : fractions) f = options.low + (options.high - options.low) * unit(rng);
        const std::size_t first = std::min(slots - 1, static_cast<std::size_t>(pick * static_cast<double>(slots)));
        for (std::size_t c = 0; c < x.channels; ++c) {
            double peak = 0.0;
            for (std::size_t t = 0; t < x.length; ++t) {
                if (!x.night.contains(hour_at(t) + 0.5)) peak = std::max(peak, x.at(i, c, t));
            }
            for (std::size_t t = 0; t < x.length; ++t) {
                const int h = hour_at(t);
                const auto pos = static_cast<std::size_t>(std::find(night.begin(), night.end(), h) - night.begin());
                if (pos < first || pos >= first + hours) continue;
                const std::size_t within = (t % per_hour);
                out.at(i, c, t) = fractions[(c * night.size() + pos) * per_hour + within] * peak;
            }
        }
    }
    return out;
}

Fabricated moment_matched_fabricate(const SeriesBatch& x, std::uint64_t seed) {
    x.validate();
    const std::size_t dim = x.channels * x.length;
    if (x.samples < dim + 1) {
        throw ArgumentError("moment_matched_fabricate: need at least " + std::to_string(dim + 1) +
                            " windows to estimate a " + std::to_string(dim) + "-dimensional covariance (got " +
                            std::to_string(x.samples) + ")");
    }
    const linalg::Matrix rows(x.samples, dim, x.values);
    const linalg::Vector mean = linalg::batch_mean(rows);
    linalg::Matrix cov = linalg::batch_cov(rows);
    const linalg::SymmetricEigen eig = linalg::sym_eig(cov);
    const double tr = linalg::trace(cov);
    Fabricated result{x, 0.0};
    if (eig.values[dim - 1] <= 1e-12 * tr) {
        result.regularization = 1e-8 * tr;
        for (std::size_t j = 0; j < dim; ++j) cov(j, j) += result.regularization;
    }
    const linalg::Matrix root = linalg::spd_sqrt(cov);
    Rng rng = make_rng(seed, Kind::MomentMatchedFabricate);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(dim);
    for (std::size_t i = 0; i < x.samples; ++i) {
        for (double& v : z) v = normal(rng);
        auto out = result.batch.sample(i);
        for (std::size_t r = 0; r < dim; ++r) {
            const auto row = root.row(r);
            double acc = mean[r];
            for (std::size_t k = 0; k < dim; ++k) acc += row[k] * z[k];
            out[r] = acc;
        }
    }
    return result;
}

Applied apply(const Disturbance& d, const SeriesBatch& x, const SeriesBatch* auxiliary) {
    switch (d.kind) {
    case Kind::GaussianNoise: return {gaussian_noise(x, d.alpha, d.seed)};
    case Kind::MissingData: return {missing_data(x, d.alpha, d.seed)};
    case Kind::Contamination:
        if (auxiliary == nullptr) {
            throw ArgumentError("contamination: a contaminating dataset is required");
        }
        return {contamination(x, *auxiliary, d.alpha, d.seed, d.contamination_mode)};
    case Kind::GaussianSmooth: return {gaussian_smooth(x, d.alpha)};
    case Kind::ErrorAccumulate: return {error_accumulate(x, d.alpha, d.seed)};
    case Kind::TimeShift: return {time_shift(x, require_count(d.alpha, d.kind))};
    case Kind::PeriodOffset: return {period_offset(x, d.alpha)};
    case Kind::NighttimeViolation:
        return {nighttime_violation(x, require_count(d.alpha, d.kind), d.seed, d.violation)};
    case Kind::MomentMatchedFabricate: {
        Fabricated f = moment_matched_fabricate(x, d.seed);
        return {std::move(f.batch), f.regularization};
    }
    }
    throw ArgumentError("apply: unknown disturbance kind");
}

std::vector<PresetLevels> preset(std::string_view name) {
    if (name == "fig2") {
        return {
            {Kind::GaussianNoise, {0.0, 0.16, 1.6, 4.0}},
            {Kind::MissingData, {0.0, 0.1, 0.25, 0.5}},
            {Kind::Contamination, {0.0, 0.25, 0.5, 0.75}},
            {Kind::GaussianSmooth, {0.0, 10.0, 20.0, 30.0}},
            {Kind::ErrorAccumulate, {0.0, 0.005, 0.01, 0.03}},
            {Kind::TimeShift, {0.0, 40.0, 60.0, 80.0}},
        };
    }
    if (name == "fig3") {
        return {
            {Kind::PeriodOffset, {0.0, 2.0, 4.0}},
            {Kind::NighttimeViolation, {0.0, 2.0, 3.0}},
        };
    }
    throw ArgumentError("unknown preset '" + std::string(name) + "' (expected fig2 or fig3)");
}

std::string_view to_string(RampCategory c) noexcept {
    switch (c) {
    case RampCategory::StrongDown: return "strong_down";
    case RampCategory::ModerateDown: return "moderate_down";
    case RampCategory::MildDown: return "mild_down";
    case RampCategory::Neutral: return "neutral";
    case RampCategory::MildUp: return "mild_up";
    case RampCategory::ModerateUp: return "moderate_up";
    case RampCategory::StrongUp: return "strong_up";
    }
    return "unknown";
}

RampThresholds ramp_thresholds(int scenario) {
    if (scenario == 1) return {0.50, 0.33, 0.25};
    if (scenario == 2) return {0.30, 0.20, 0.10};
    throw ArgumentError("ramp scenario must be 1 or 2 (got " + std::to_string(scenario) + ")");
}

RampCategory classify_ramp(double rate, int scenario) {
    const RampThresholds th = ramp_thresholds(scenario);
    if (std::isnan(rate)) {
        throw ArgumentError("classify_ramp: rate is NaN");
    }
    if (rate < -th.strong) return RampCategory::StrongDown;
    if (rate < -th.moderate) return RampCategory::ModerateDown;
    if (rate < -th.mild) return RampCategory::MildDown;
    if (rate <= th.mild) return RampCategory::Neutral;
    if (rate <= th.moderate) return RampCategory::MildUp;
    if (rate <= th.strong) return RampCategory::ModerateUp;
    return RampCategory::StrongUp;
}

RampLabel ramp_label(std::span<const double> window, double p_max, int scenario) {
    if (window.size() != 6) {
        throw DimensionError("ramp_label: expects 6 values (got " + std::to_string(window.size()) + ")");
    }
    if (!(p_max > 0.0) || !std::isfinite(p_max)) {
        throw ArgumentError("ramp_label: P_max must be positive");
    }
    const double rate = (window[5] - window[0]) / p_max;
    return {classify_ramp(rate, scenario), scenario, rate};
}

}  // namespace fpd::disturb
