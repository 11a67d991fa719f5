#include "fpd/hierarchy.hpp"

#include <algorithm>
#include <chrono>

#include "fpd/error.hpp"

namespace fpd {

namespace {

constexpr std::size_t kMinMonthDays = 28;
constexpr std::int64_t kMinutesPerDay = 24 * 60;

std::string name_of(Resolution r) {
    return std::string(to_string(r));
}

/// Splits `days` consecutive days starting at `start_minute` into calendar
/// months; each must be complete.
std::vector<std::size_t> month_sizes(std::size_t days, std::optional<std::int64_t> start_minute) {
    if (!start_minute) {
        if (days < kMinMonthDays || days > 31) {
            throw DimensionError("monthly level: a window of " + std::to_string(days) +
                                 " days without timestamps must be exactly one month");
        }
        return {days};
    }
    using namespace std::chrono;
    const std::int64_t first_day = *start_minute >= 0
                                       ? *start_minute / kMinutesPerDay
                                       : -((-*start_minute + kMinutesPerDay - 1) / kMinutesPerDay);
    std::vector<std::size_t> sizes;
    std::size_t d = 0;
    while (d < days) {
        const year_month_day ymd{sys_days{std::chrono::days{first_day + static_cast<std::int64_t>(d)}}};
        const auto length = static_cast<std::size_t>(
            static_cast<unsigned>(year_month_day_last{ymd.year(), month_day_last{ymd.month()}}.day()));
        if (static_cast<unsigned>(ymd.day()) != 1 || d + length > days) {
            throw DimensionError("monthly level: window does not cover whole calendar months");
        }
        sizes.push_back(length);
        d += length;
    }
    return sizes;
}

/// Segment sizes for `points` consecutive values at `input` resolution.
std::vector<std::size_t> segment_sizes(std::size_t points, Resolution input, Resolution level,
                                       std::optional<std::int64_t> start_minute) {
    if (input == Resolution::Daily) {
        return month_sizes(points, start_minute);
    }
    const std::size_t l = segment_length(input);
    if (points < l) {
        throw DimensionError(name_of(level) + " level: window of " + std::to_string(points) +
                             " " + name_of(input) + " points is shorter than one " +
                             name_of(level) + " unit (" + std::to_string(l) + ")");
    }
    if (points % l != 0) {
        throw DimensionError(name_of(level) + " level: " + std::to_string(points) + " " +
                             name_of(input) + " points is not a multiple of " +
                             std::to_string(l));
    }
    return std::vector<std::size_t>(points / l, l);
}

linalg::Matrix to_rows(const nn::Tensor3& y) {
    const std::size_t d = y.channels() * y.length();
    return linalg::Matrix(y.batch(), d, std::vector<double>(y.data().begin(), y.data().end()));
}

}  // namespace

// ---- architecture -----------------------------------------------------------

void ArchitectureConfig::validate() const {
    if (channels < 2) {
        throw ArgumentError("architecture: channels (D) must be at least 2");
    }
    if (width == 0 || transient_width == 0 || transient_features == 0) {
        throw ArgumentError("architecture: widths must be positive");
    }
    if (transient_stages > 9) {
        throw ArgumentError("architecture: too many transient downsampling stages");
    }
}

nlohmann::json ArchitectureConfig::to_json() const {
    return {{"channels", channels},
            {"width", width},
            {"blocks", blocks},
            {"average_pool", average_pool},
            {"transient_width", transient_width},
            {"transient_stages", transient_stages},
            {"transient_features", transient_features}};
}

ArchitectureConfig ArchitectureConfig::from_json(const nlohmann::json& j) {
    ArchitectureConfig a;
    a.channels = j.value("channels", a.channels);
    a.width = j.value("width", a.width);
    a.blocks = j.value("blocks", a.blocks);
    a.average_pool = j.value("average_pool", a.average_pool);
    a.transient_width = j.value("transient_width", a.transient_width);
    a.transient_stages = j.value("transient_stages", a.transient_stages);
    a.transient_features = j.value("transient_features", a.transient_features);
    a.validate();
    return a;
}

nn::Sequential build_level_body(const ArchitectureConfig& arch, std::size_t length) {
    arch.validate();
    nn::Sequential body;
    body.add<nn::Conv1d>(arch.channels, arch.width, 3, 1, 1);
    body.add<nn::BatchNorm1d>(arch.width);
    body.add<nn::ReLU>();
    for (std::size_t b = 0; b < arch.blocks; ++b) {
        body.add<nn::ResidualBlock>(arch.width, arch.width);
    }
    if (arch.average_pool) {
        body.add<nn::GlobalAvgPool>();
        body.add<nn::Linear>(arch.width, arch.feature_dim());
    } else {
        body.add<nn::Linear>(arch.width * length, arch.feature_dim());
    }
    return body;
}

nn::Sequential build_transient_body(const ArchitectureConfig& arch) {
    arch.validate();
    nn::Sequential body;
    body.add<nn::Conv1d>(3, arch.transient_width, 3, 1, 1);
    body.add<nn::BatchNorm1d>(arch.transient_width);
    body.add<nn::ReLU>();
    std::size_t length = segment_length(Resolution::Transient);
    for (std::size_t s = 0; s < arch.transient_stages; ++s) {
        body.add<nn::Conv1d>(arch.transient_width, arch.transient_width, 3, 2, 1);
        body.add<nn::BatchNorm1d>(arch.transient_width);
        body.add<nn::ReLU>();
        length = (length + 2 - 3) / 2 + 1;
    }
    body.add<nn::Linear>(arch.transient_width * length, arch.transient_features);
    return body;
}

// ---- stack ------------------------------------------------------------------

ExtractorStack ExtractorStack::create(const ArchitectureConfig& arch,
                                      std::vector<Resolution> schedule, std::uint64_t seed) {
    arch.validate();
    ExtractorStack s;
    s.arch_ = arch;
    s.set_schedule(std::move(schedule));
    nn::Rng rng(seed);
    for (Resolution level : s.schedule_) {
        LevelModule m;
        m.level = level;
        m.input_channels = arch.channels;
        m.input_length = segment_length(module_input(level));
        m.body = build_level_body(arch, m.input_length);
        m.body.set_name(name_of(level));
        m.body.reset_parameters(rng);
        s.modules_.emplace(level, std::move(m));
    }
    return s;
}

void ExtractorStack::set_schedule(std::vector<Resolution> schedule) {
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!is_module_level(schedule[i])) {
            throw ArgumentError("schedule: '" + name_of(schedule[i]) + "' is not an extractor level");
        }
        if (i > 0 && next_resolution(schedule[i - 1]) != schedule[i]) {
            throw ArgumentError("schedule: levels must be contiguous and ordered bottom-up");
        }
    }
    schedule_ = std::move(schedule);
}

LevelModule& ExtractorStack::module(Resolution level) {
    auto it = modules_.find(level);
    if (it == modules_.end()) {
        throw ArgumentError("extractor stack has no module for level '" + name_of(level) + "'");
    }
    return it->second;
}

const LevelModule& ExtractorStack::module(Resolution level) const {
    return const_cast<ExtractorStack*>(this)->module(level);
}

LevelModule& ExtractorStack::transient() {
    if (!transient_) {
        throw ArgumentError("extractor stack has no transient module");
    }
    return *transient_;
}

const LevelModule& ExtractorStack::transient() const {
    return const_cast<ExtractorStack*>(this)->transient();
}

void ExtractorStack::set_transient(LevelModule module) {
    module.level = Resolution::Transient;
    transient_ = std::move(module);
}

void ExtractorStack::put(LevelModule module) {
    if (module.level == Resolution::Transient) {
        set_transient(std::move(module));
        return;
    }
    const Resolution level = module.level;
    modules_.insert_or_assign(level, std::move(module));
}

void ExtractorStack::freeze(std::string version) {
    for (LevelModule* m : modules()) {
        m->regression_head.reset();
        m->classification_head.reset();
    }
    frozen_ = true;
    version_ = std::move(version);
}

std::vector<const LevelModule*> ExtractorStack::modules() const {
    std::vector<const LevelModule*> out;
    for (Resolution level : schedule_) {
        auto it = modules_.find(level);
        if (it != modules_.end()) out.push_back(&it->second);
    }
    if (transient_) out.push_back(&*transient_);
    return out;
}

std::vector<LevelModule*> ExtractorStack::modules() {
    std::vector<LevelModule*> out;
    for (Resolution level : schedule_) {
        auto it = modules_.find(level);
        if (it != modules_.end()) out.push_back(&it->second);
    }
    if (transient_) out.push_back(&*transient_);
    return out;
}

// ---- input assembly ---------------------------------------------------------

LevelInput build_input(const FeatureSet* prev, const SeriesBatch* raw, Resolution level,
                       std::size_t channels) {
    if ((prev == nullptr) == (raw == nullptr)) {
        throw ArgumentError("build_input: give exactly one of previous-level features or raw data");
    }
    if (channels < 2) {
        throw ArgumentError("build_input: need at least 2 channels");
    }
    const Resolution input_res = module_input(level);
    const std::size_t length = segment_length(input_res);

    LevelInput in;
    in.level = level;
    // Segment layout: (window, first point, size).
    struct Seg {
        std::size_t window, offset, size;
    };
    std::vector<Seg> segs;
    std::size_t windows = 0;

    if (raw != nullptr) {
        in.source = InputSource::FromRaw;
        if (raw->resolution != input_res) {
            throw ArgumentError("build_input: " + name_of(level) + " level expects " +
                                name_of(input_res) + " data, got " + name_of(raw->resolution));
        }
        if (raw->channels != 1) {
            throw DimensionError("build_input: steady-state data must have one channel");
        }
        windows = raw->samples;
        in.window_starts = raw->start_minutes;
        for (std::size_t w = 0; w < windows; ++w) {
            std::optional<std::int64_t> start;
            if (!raw->start_minutes.empty()) start.emplace(raw->start_minutes[w]);
            std::size_t off = 0;
            const auto sizes = segment_sizes(raw->valid_length(w), input_res, level, start);
            for (std::size_t s : sizes) {
                segs.push_back({w, off, s});
                off += s;
            }
            in.window_segments.push_back(sizes.size());
        }
    } else {
        in.source = InputSource::FromFeatures;
        if (prev->duration != input_res) {
            throw ArgumentError("build_input: " + name_of(level) + " level expects " +
                                name_of(input_res) + " features, got " + name_of(prev->duration));
        }
        if (prev->dim() != channels - 1) {
            throw DimensionError("build_input: features have dimension " +
                                 std::to_string(prev->dim()) + ", level expects " +
                                 std::to_string(channels - 1));
        }
        if (prev->means.size() != prev->size()) {
            throw DimensionError("build_input: feature set lacks per-row means");
        }
        std::vector<std::size_t> rows_per_window = prev->window_rows;
        if (rows_per_window.empty()) {
            rows_per_window.push_back(prev->size());
        }
        std::size_t total = 0;
        for (std::size_t r : rows_per_window) total += r;
        if (total != prev->size()) {
            throw DimensionError("build_input: window row counts do not add up to the feature rows");
        }
        windows = rows_per_window.size();
        if (!prev->window_starts.empty() && prev->window_starts.size() != windows) {
            throw DimensionError("build_input: window start count does not match windows");
        }
        in.window_starts = prev->window_starts;
        std::size_t base = 0;
        for (std::size_t w = 0; w < windows; ++w) {
            std::size_t off = 0;
            std::optional<std::int64_t> start;
            if (!in.window_starts.empty()) start.emplace(in.window_starts[w]);
            const auto sizes = segment_sizes(rows_per_window[w], input_res, level, start);
            for (std::size_t s : sizes) {
                segs.push_back({w, base + off, s});
                off += s;
            }
            base += rows_per_window[w];
            in.window_segments.push_back(sizes.size());
        }
    }

    in.data = nn::Tensor3(segs.size(), channels, length);
    in.valid.reserve(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const Seg& s = segs[i];
        in.valid.push_back(s.size);
        if (raw != nullptr) {
            const auto values = raw->channel(s.window, 0);
            for (std::size_t t = 0; t < s.size; ++t) {
                in.data.at(i, channels - 1, t) = values[s.offset + t];
            }
            if (!raw->labels.empty()) in.labels.push_back(raw->labels[s.window]);
        } else {
            for (std::size_t t = 0; t < s.size; ++t) {
                const auto row = prev->rows.row(s.offset + t);
                for (std::size_t c = 0; c + 1 < channels; ++c) {
                    in.data.at(i, c, t) = row[c];
                }
                in.data.at(i, channels - 1, t) = prev->means[s.offset + t];
            }
        }
    }
    return in;
}

double segment_mean(std::span<const double> values) {
    if (values.empty()) {
        throw ArgumentError("level_mean: empty segment");
    }
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

std::vector<double> level_mean(const LevelInput& input) {
    if (input.segments() == 0) {
        throw ArgumentError("level_mean: no segments");
    }
    const std::size_t last = input.data.channels() - 1;
    std::vector<double> out(input.segments());
    for (std::size_t i = 0; i < input.segments(); ++i) {
        const std::size_t v = input.valid.empty() ? input.data.length() : input.valid[i];
        const auto sample = input.data.sample(i);
        out[i] = segment_mean(sample.subspan(last * input.data.length(), v));
    }
    return out;
}

// ---- extraction -------------------------------------------------------------

nn::Tensor3 infer_chunked(const nn::Layer& body, const nn::Tensor3& x, std::size_t chunk) {
    if (x.batch() <= chunk) {
        return body.infer(x);
    }
    const nn::Shape os = body.output_shape(x.shape());
    nn::Tensor3 out(os);
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < x.batch(); start += chunk) {
        const std::size_t end = std::min(x.batch(), start + chunk);
        idx.resize(end - start);
        for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
        const nn::Tensor3 y = body.infer(nn::gather(x, idx));
        std::copy(y.data().begin(), y.data().end(),
                  out.data().begin() + static_cast<std::ptrdiff_t>(start * os.per_sample()));
    }
    return out;
}

FeatureSet extract_at(const ExtractorStack& stack, const LevelInput& input) {
    const LevelModule& m = stack.module(input.level);
    if (input.data.channels() != m.input_channels || input.data.length() != m.input_length) {
        throw DimensionError("extract_at: " + name_of(input.level) + " module takes (" +
                             std::to_string(m.input_channels) + ", " +
                             std::to_string(m.input_length) + ") segments, got " +
                             nn::to_string(input.data.shape()));
    }
    FeatureSet f;
    f.rows = to_rows(infer_chunked(m.body, input.data));
    f.duration = input.level;
    f.means = level_mean(input);
    f.window_rows = input.window_segments;
    f.window_starts = input.window_starts;
    f.version = stack.version();
    if (!linalg::all_finite(f.rows.data())) {
        throw NumericError("extract_at: non-finite features at level " + name_of(input.level));
    }
    return f;
}

FeatureSet extract_hierarchical(const ExtractorStack& stack, const SeriesBatch& x,
                                Resolution target) {
    if (x.resolution == Resolution::TenMin) {
        throw ArgumentError("extract_hierarchical: 10min data must be resampled to 5min first");
    }
    const auto levels = levels_between(x.resolution, target);
    FeatureSet features;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const LevelInput in = i == 0
                                  ? build_input(nullptr, &x, levels[i], stack.architecture().channels)
                                  : build_input(&features, nullptr, levels[i],
                                                stack.architecture().channels);
        features = extract_at(stack, in);
    }
    return features;
}

FeatureSet extract_transient(const ExtractorStack& stack, const SeriesBatch& x) {
    if (x.channels != 3 || x.length != segment_length(Resolution::Transient)) {
        throw DimensionError("extract_transient: expected 3 channels of 960 points, got " +
                             std::to_string(x.channels) + " x " + std::to_string(x.length));
    }
    const LevelModule& m = stack.transient();
    const nn::Tensor3 in(nn::Shape{x.samples, x.channels, x.length}, x.values);
    FeatureSet f;
    f.rows = to_rows(infer_chunked(m.body, in, 64));
    f.duration = Resolution::Transient;
    f.window_rows.assign(x.samples, 1);
    f.means.resize(x.samples);
    for (std::size_t i = 0; i < x.samples; ++i) {
        f.means[i] = segment_mean(x.channel(i, 0));
    }
    f.version = stack.version();
    return f;
}

}  // namespace fpd
