#include "fpd/series.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fpd/error.hpp"
#include "fpd/linalg.hpp"

namespace fpd {

bool NightWindow::contains(double hour_of_day) const noexcept {
    const double h = std::fmod(std::fmod(hour_of_day, 24.0) + 24.0, 24.0);
    if (start_hour == end_hour) {
        return false;
    }
    if (start_hour < end_hour) {
        return h >= start_hour && h < end_hour;
    }
    return h >= start_hour || h < end_hour;
}

int NightWindow::hours() const noexcept {
    return ((end_hour - start_hour) % 24 + 24) % 24;
}

std::vector<int> NightWindow::hour_list() const {
    std::vector<int> out;
    for (int k = 0; k < hours(); ++k) {
        out.push_back((start_hour + k) % 24);
    }
    return out;
}

std::string_view to_string(Normalization n) noexcept {
    switch (n) {
    case Normalization::PerSample: return "per_sample";
    case Normalization::PerDataset: return "per_dataset";
    case Normalization::None: return "none";
    }
    return "none";
}

Normalization parse_normalization(std::string_view name) {
    if (name == "per_sample" || name == "sample") return Normalization::PerSample;
    if (name == "per_dataset" || name == "dataset") return Normalization::PerDataset;
    if (name == "none") return Normalization::None;
    throw ArgumentError("unknown normalization '" + std::string(name) + "'");
}

SeriesBatch SeriesBatch::zeros(std::size_t samples, std::size_t length, Resolution resolution,
                               std::size_t channels) {
    SeriesBatch b;
    b.samples = samples;
    b.channels = channels;
    b.length = length;
    b.resolution = resolution;
    b.values.assign(samples * channels * length, 0.0);
    return b;
}

void SeriesBatch::validate() const {
    std::ostringstream os;
    if (values.size() != samples * channels * length) {
        os << "SeriesBatch: " << values.size() << " values for shape " << samples << "x"
           << channels << "x" << length;
        throw DimensionError(os.str());
    }
    if (!labels.empty() && labels.size() != samples) {
        throw DimensionError("SeriesBatch: labels size does not match samples");
    }
    if (!valid_lengths.empty()) {
        if (valid_lengths.size() != samples) {
            throw DimensionError("SeriesBatch: valid_lengths size does not match samples");
        }
        for (std::size_t v : valid_lengths) {
            if (v == 0 || v > length) {
                throw DimensionError("SeriesBatch: valid length outside (0, length]");
            }
        }
    }
    if (!start_minutes.empty() && start_minutes.size() != samples) {
        throw DimensionError("SeriesBatch: start_minutes size does not match samples");
    }
    if (!linalg::all_finite(values)) {
        throw NumericError("SeriesBatch: non-finite values");
    }
}

SeriesBatch SeriesBatch::select(std::span<const std::size_t> indices) const {
    SeriesBatch out = *this;
    out.samples = indices.size();
    out.values.clear();
    out.values.reserve(indices.size() * channels * length);
    out.labels.clear();
    out.valid_lengths.clear();
    out.start_minutes.clear();
    for (std::size_t idx : indices) {
        if (idx >= samples) {
            throw DimensionError("SeriesBatch::select: index out of range");
        }
        const auto s = sample(idx);
        out.values.insert(out.values.end(), s.begin(), s.end());
        if (!labels.empty()) out.labels.push_back(labels[idx]);
        if (!valid_lengths.empty()) out.valid_lengths.push_back(valid_lengths[idx]);
        if (!start_minutes.empty()) out.start_minutes.push_back(start_minutes[idx]);
    }
    return out;
}

SeriesBatch concatenate(std::span<const SeriesBatch> parts) {
    if (parts.empty()) {
        throw ArgumentError("concatenate: no batches given");
    }
    SeriesBatch out = parts.front();
    out.samples = 0;
    out.values.clear();
    out.labels.clear();
    out.valid_lengths.clear();
    out.start_minutes.clear();
    const bool keep_labels = std::all_of(parts.begin(), parts.end(),
                                         [](const SeriesBatch& p) { return !p.labels.empty(); });
    const bool keep_valid = std::any_of(parts.begin(), parts.end(), [](const SeriesBatch& p) {
        return !p.valid_lengths.empty();
    });
    const bool keep_starts = std::all_of(parts.begin(), parts.end(), [](const SeriesBatch& p) {
        return !p.start_minutes.empty();
    });
    for (const auto& p : parts) {
        if (p.length != out.length || p.channels != out.channels ||
            p.resolution != out.resolution) {
            throw DimensionError("concatenate: batches differ in window shape or resolution");
        }
        out.values.insert(out.values.end(), p.values.begin(), p.values.end());
        if (keep_labels) out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
        if (keep_valid) {
            for (std::size_t i = 0; i < p.samples; ++i) {
                out.valid_lengths.push_back(p.valid_length(i));
            }
        }
        if (keep_starts) {
            out.start_minutes.insert(out.start_minutes.end(), p.start_minutes.begin(),
                                     p.start_minutes.end());
        }
        out.samples += p.samples;
    }
    if (parts.size() > 1) {
        out.source = "mixed";
    }
    return out;
}

}  // namespace fpd
