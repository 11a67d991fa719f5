#include "fpd/io/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fpd/error.hpp"
#include "fpd/io/csv.hpp"
#include "fpd/io/resample.hpp"

namespace fpd::io {

namespace {

using Rng = std::mt19937_64;

constexpr std::size_t kPointsPerDay = 288;  // 5-minute base grid
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Rng make_rng(std::uint64_t seed, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
    return Rng(seq);
}

double hour_of(std::size_t k) {
    return static_cast<double>(k) * 5.0 / 60.0;
}

int day_of_year(std::int64_t start_minute) {
    using namespace std::chrono;
    const sys_days day{days{start_minute / 1440}};
    const year_month_day ymd{day};
    return static_cast<int>((day - sys_days{ymd.year() / January / 1}).count());
}

int weekday_of(std::int64_t start_minute) {
    using namespace std::chrono;
    return static_cast<int>(weekday{sys_days{days{start_minute / 1440}}}.c_encoding());
}

void normalize_max(std::vector<double>& v) {
    const double peak = *std::max_element(v.begin(), v.end());
    if (peak > 0.0) {
        for (double& x : v) x /= peak;
    }
}

/// Wind is already a capacity fraction; the other kinds are scaled to their
/// daily peak.
template <typename DayFn>
SeriesBatch generate(std::size_t days, Resolution resolution, SourceKind kind, std::uint64_t seed,
                     DayFn&& day_fn) {
    const bool per_sample = kind != SourceKind::Wind;
    if (days == 0) {
        throw ArgumentError("synth: days must be at least 1");
    }
    if (resolution != Resolution::FiveMin && resolution != Resolution::TenMin &&
        resolution != Resolution::Hourly) {
        throw ArgumentError("synth: resolution must be 5min, 10min or hourly, got '" +
                            std::string(to_string(resolution)) + "'");
    }
    Rng rng = make_rng(seed, static_cast<std::uint32_t>(kind) + 1u);
    SeriesBatch b = SeriesBatch::zeros(days, kPointsPerDay, Resolution::FiveMin);
    b.normalization = per_sample ? Normalization::PerSample : Normalization::PerDataset;
    b.source = std::string(to_string(kind));
    const std::int64_t start = default_start_minute();
    for (std::size_t d = 0; d < days; ++d) {
        const std::int64_t day_start = start + static_cast<std::int64_t>(d) * 1440;
        std::vector<double> v = day_fn(rng, day_start);
        for (double& x : v) x = std::max(0.0, x);
        if (per_sample) normalize_max(v);
        std::copy(v.begin(), v.end(), b.sample(d).begin());
        b.start_minutes.push_back(day_start);
        b.labels.push_back(static_cast<int>(kind));
    }
    if (resolution != Resolution::FiveMin) {
        b = aggregate_mean(b, resolution);
    }
    return b;
}

std::vector<double> solar_day(Rng& rng, std::int64_t day_start) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double doy = day_of_year(day_start);
    const double daylight = 11.0 + 2.5 * std::sin(kTwoPi * (doy - 80.0) / 365.25);
    const double noon = 12.5 + 0.15 * n(rng);
    const double sunrise = noon - daylight / 2.0;
    const double sunset = noon + daylight / 2.0;
    const double weather = u(rng);
    double cloud = 0.0;
    if (weather < 0.5) {
        cloud = 0.1 * u(rng);
    } else if (weather < 0.8) {
        cloud = 0.2 + 0.4 * u(rng);
    } else {
        cloud = 0.6 + 0.3 * u(rng);
    }
    std::vector<double> v(kPointsPerDay, 0.0);
    double z = n(rng);
    const double phi = 0.95;
    const double innov = std::sqrt(1.0 - phi * phi);
    for (std::size_t k = 0; k < kPointsPerDay; ++k) {
        z = phi * z + innov * n(rng);
        const double h = hour_of(k);
        if (h <= sunrise || h >= sunset) continue;
        const double clear = std::pow(std::sin(std::numbers::pi * (h - sunrise) / daylight), 1.3);
        const double atten = std::clamp(1.0 - cloud * (0.5 + 0.5 * std::tanh(1.5 * z)), 0.02, 1.0);
        v[k] = clear * atten;
    }
    return v;
}

std::vector<double> wind_day(Rng& rng, std::int64_t /*day_start*/) {
    std::normal_distribution<double> n(0.0, 1.0);
    const double mean_speed = std::exp(std::log(8.0) + 0.3 * n(rng));
    const double phase = 15.0 + 2.0 * n(rng);
    const double phi = 0.985;
    const double innov = std::sqrt(1.0 - phi * phi);
    double u = n(rng);
    std::vector<double> v(kPointsPerDay, 0.0);
    for (std::size_t k = 0; k < kPointsPerDay; ++k) {
        u = phi * u + innov * n(rng);
        const double diurnal = 0.3 * std::sin(kTwoPi * (hour_of(k) - phase) / 24.0);
        const double speed = std::max(0.0, mean_speed * (1.0 + 0.3 * u + diurnal));
        double p = 0.0;
        if (speed >= 3.0 && speed < 12.0) {
            const double r = (speed - 3.0) / 9.0;
            p = r * r * r;
        } else if (speed >= 12.0 && speed < 25.0) {
            p = 1.0;
        }
        v[k] = p;
    }
    return v;
}

double bump(double h, double centre, double width) {
    const double d = (h - centre) / width;
    return std::exp(-0.5 * d * d);
}

std::vector<double> load_day(Rng& rng, std::int64_t day_start) {
    std::normal_distribution<double> n(0.0, 1.0);
    const int wd = weekday_of(day_start);
    const bool weekend = wd == 0 || wd == 6;
    const double base = 0.35 + 0.04 * n(rng);
    const double morning_at = (weekend ? 9.0 : 7.5) + 0.4 * n(rng);
    const double morning = (weekend ? 0.2 : 0.35) * (1.0 + 0.15 * n(rng));
    const double evening_at = 19.0 + 0.4 * n(rng);
    const double evening = 0.55 * (1.0 + 0.15 * n(rng));
    const double phi = 0.9;
    double e = 0.0;
    std::vector<double> v(kPointsPerDay, 0.0);
    for (std::size_t k = 0; k < kPointsPerDay; ++k) {
        e = phi * e + 0.03 * n(rng);
        const double h = hour_of(k);
        const double night_dip = 0.12 * bump(h, 3.5, 1.8);
        v[k] = base - night_dip + morning * bump(h, morning_at, 1.2) + evening * bump(h, evening_at, 1.8) + e;
    }
    return v;
}

std::vector<double> ev_day(Rng& rng, std::int64_t /*day_start*/) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::poisson_distribution<int> sessions(8.0);
    std::vector<double> v(kPointsPerDay, 0.0);
    for (std::size_t k = 0; k < kPointsPerDay; ++k) {
        v[k] = 0.02 + 0.01 * std::abs(n(rng));
    }
    const int count = std::max(1, sessions(rng));
    for (int s = 0; s < count; ++s) {
        const double start = std::fmod(18.5 + 1.5 * n(rng) + 24.0, 24.0);
        const double duration = 1.0 + 2.5 * u(rng);
        const double power = 0.3 + 0.7 * u(rng);
        for (std::size_t k = 0; k < kPointsPerDay; ++k) {
            double h = hour_of(k);
            if (h < start) h += 24.0;  // sessions may run past midnight into the morning
            if (h - start < duration) v[k] += power;
        }
    }
    return v;
}

}  // namespace

std::string_view to_string(SourceKind k) noexcept {
    switch (k) {
    case SourceKind::Solar: return "solar";
    case SourceKind::Wind: return "wind";
    case SourceKind::Load: return "load";
    case SourceKind::Ev: return "ev";
    }
    return "solar";
}

SourceKind parse_source_kind(std::string_view name) {
    if (name == "solar") return SourceKind::Solar;
    if (name == "wind") return SourceKind::Wind;
    if (name == "load") return SourceKind::Load;
    if (name == "ev") return SourceKind::Ev;
    throw ArgumentError("unknown source kind '" + std::string(name) + "' (solar, wind, load, ev)");
}

SeriesBatch synth_solar(std::size_t days, Resolution resolution, std::uint64_t seed) {
    return generate(days, resolution, SourceKind::Solar, seed, solar_day);
}

SeriesBatch synth_wind(std::size_t days, Resolution resolution, std::uint64_t seed) {
    return generate(days, resolution, SourceKind::Wind, seed, wind_day);
}

SeriesBatch synth_load(std::size_t days, Resolution resolution, std::uint64_t seed) {
    return generate(days, resolution, SourceKind::Load, seed, load_day);
}

SeriesBatch synth_ev(std::size_t days, Resolution resolution, std::uint64_t seed) {
    return generate(days, resolution, SourceKind::Ev, seed, ev_day);
}

SeriesBatch synth_source(SourceKind kind, std::size_t days, Resolution resolution,
                         std::uint64_t seed) {
    switch (kind) {
    case SourceKind::Solar: return synth_solar(days, resolution, seed);
    case SourceKind::Wind: return synth_wind(days, resolution, seed);
    case SourceKind::Load: return synth_load(days, resolution, seed);
    case SourceKind::Ev: return synth_ev(days, resolution, seed);
    }
    throw ArgumentError("unknown source kind");
}

SeriesBatch synth_corpus(std::span<const SourceKind> kinds, std::size_t days_per_kind,
                         Resolution resolution, std::uint64_t seed) {
    if (kinds.empty()) {
        throw ArgumentError("synth_corpus: no source kinds given");
    }
    std::vector<SeriesBatch> parts;
    for (SourceKind k : kinds) {
        parts.push_back(synth_source(k, days_per_kind, resolution, seed));
    }
    return concatenate(parts);
}

std::string_view to_string(FaultType f) noexcept {
    switch (f) {
    case FaultType::None: return "none";
    case FaultType::Sag: return "sag";
    case FaultType::Swell: return "swell";
    case FaultType::FrequencyDip: return "freq_dip";
    }
    return "none";
}

FaultType parse_fault_type(std::string_view name) {
    if (name == "none") return FaultType::None;
    if (name == "sag") return FaultType::Sag;
    if (name == "swell") return FaultType::Swell;
    if (name == "freq_dip" || name == "frequency_dip") return FaultType::FrequencyDip;
    throw ArgumentError("unknown fault type '" + std::string(name) + "' (none, sag, swell, freq_dip)");
}

TransientSet synth_transient(std::size_t n, std::uint64_t seed, std::span<const FaultType> mix) {
    if (mix.empty()) {
        throw ArgumentError("synth_transient: empty fault mix");
    }
    if (n == 0) {
        throw ArgumentError("synth_transient: n must be at least 1");
    }
    const std::size_t len = segment_length(Resolution::Transient);
    Rng rng = make_rng(seed, 0x7a11u);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, mix.size() - 1);

    TransientSet out;
    out.batch = SeriesBatch::zeros(n, len, Resolution::Transient, 3);
    out.batch.source = "transient";
    for (std::size_t i = 0; i < n; ++i) {
        const FaultType fault = mix[pick(rng)];
        const auto start = static_cast<std::size_t>(120 + u(rng) * 480);
        const auto dur = static_cast<std::size_t>(60 + u(rng) * 240);
        const double sag_depth = 0.1 + 0.4 * u(rng);
        const double swell_height = 0.1 + 0.3 * u(rng);
        const double dip = 0.004 + 0.016 * u(rng);
        const double angle_jump = 0.01 + 0.04 * u(rng);
        double lo = 1e9;
        double hi = -1e9;
        for (std::size_t t = 0; t < len; ++t) {
            double mag = 1.0 + 0.003 * noise(rng);
            double ang = 0.5 + 0.002 * noise(rng);
            double freq = 1.0 + 0.0005 * noise(rng);
            const bool active = t >= start && t < start + dur;
            if (active) {
                const double shape = std::sin(std::numbers::pi * static_cast<double>(t - start) /
                                              static_cast<double>(dur));
                switch (fault) {
                case FaultType::Sag:
                    mag -= sag_depth;
                    ang -= angle_jump;
                    break;
                case FaultType::Swell:
                    mag += swell_height;
                    ang += angle_jump;
                    break;
                case FaultType::FrequencyDip:
                    freq -= dip * shape;
                    mag -= 0.02 * shape;
                    break;
                case FaultType::None: break;
                }
            }
            mag = std::clamp(mag, 0.0, 1.5);
            ang = std::clamp(ang, 0.0, 1.5);
            freq = std::clamp(freq, 0.0, 1.5);
            out.batch.at(i, 0, t) = mag;
            out.batch.at(i, 1, t) = ang;
            out.batch.at(i, 2, t) = freq;
            lo = std::min(lo, mag);
            hi = std::max(hi, mag);
        }
        out.batch.labels.push_back(static_cast<int>(fault));
        out.min_amplitude.push_back(lo);
        out.max_amplitude.push_back(hi);
    }
    return out;
}

}  // namespace fpd::io
