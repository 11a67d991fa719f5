#include "fpd/io/resample.hpp"

#include <string>

#include "fpd/error.hpp"

namespace fpd::io {

namespace {

std::string name_of(Resolution r) {
    return std::string(to_string(r));
}

}  // namespace

int interval_minutes(Resolution r) {
    switch (r) {
    case Resolution::FiveMin: return 5;
    case Resolution::TenMin: return 10;
    case Resolution::Hourly: return 60;
    case Resolution::Daily: return 1440;
    default: break;
    }
    throw ArgumentError("no fixed interval for resolution '" + name_of(r) + "'");
}

SeriesBatch resample(const SeriesBatch& x, Resolution to) {
    const bool supported = (x.resolution == Resolution::TenMin && to == Resolution::FiveMin) ||
                           (x.resolution == Resolution::Hourly &&
                            (to == Resolution::FiveMin || to == Resolution::TenMin));
    if (!supported) {
        throw ArgumentError("resample: unsupported pair " + name_of(x.resolution) + " -> " +
                            name_of(to) + " (only 10min->5min, hourly->5min, hourly->10min)");
    }
    const std::size_t f =
        static_cast<std::size_t>(interval_minutes(x.resolution) / interval_minutes(to));
    SeriesBatch out = x;
    out.resolution = to;
    out.length = x.length * f;
    out.values.assign(out.samples * out.channels * out.length, 0.0);
    for (auto& v : out.valid_lengths) v *= f;
    for (std::size_t i = 0; i < x.samples; ++i) {
        for (std::size_t c = 0; c < x.channels; ++c) {
            const auto src = x.channel(i, c);
            const std::size_t valid = x.valid_length(i);
            for (std::size_t t = 0; t < valid; ++t) {
                const double a = src[t];
                const double b = t + 1 < valid ? src[t + 1] : a;
                for (std::size_t j = 0; j < f; ++j) {
                    out.at(i, c, t * f + j) =
                        j == 0 ? a : a + (b - a) * static_cast<double>(j) / static_cast<double>(f);
                }
            }
        }
    }
    return out;
}

SeriesBatch aggregate_mean(const SeriesBatch& x, Resolution to) {
    const int from_min = interval_minutes(x.resolution);
    const int to_min = interval_minutes(to);
    if (to_min <= from_min || to_min % from_min != 0) {
        throw ArgumentError("aggregate_mean: cannot average " + name_of(x.resolution) + " to " +
                            name_of(to));
    }
    const std::size_t f = static_cast<std::size_t>(to_min / from_min);
    if (x.length % f != 0) {
        throw DimensionError("aggregate_mean: window length " + std::to_string(x.length) +
                             " is not a multiple of " + std::to_string(f));
    }
    for (std::size_t v : x.valid_lengths) {
        if (v % f != 0) {
            throw DimensionError("aggregate_mean: valid length not a multiple of the block size");
        }
    }
    SeriesBatch out = x;
    out.resolution = to;
    out.length = x.length / f;
    out.values.assign(out.samples * out.channels * out.length, 0.0);
    for (auto& v : out.valid_lengths) v /= f;
    const double inv = 1.0 / static_cast<double>(f);
    for (std::size_t i = 0; i < x.samples; ++i) {
        for (std::size_t c = 0; c < x.channels; ++c) {
            const auto src = x.channel(i, c);
            for (std::size_t t = 0; t < out.length; ++t) {
                double s = 0.0;
                for (std::size_t j = 0; j < f; ++j) s += src[t * f + j];
                out.at(i, c, t) = s * inv;
            }
        }
    }
    return out;
}

}  // namespace fpd::io
