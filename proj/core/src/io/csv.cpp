#include "fpd/io/csv.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <zlib.h>

#include "fpd/error.hpp"
#include "fpd/io/resample.hpp"

namespace fpd::io {

namespace {

constexpr std::int64_t kMinutesPerDay = 1440;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open '" + path + "'");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}

std::chrono::year_month_day civil(std::int64_t minutes) {
    return std::chrono::year_month_day{
        std::chrono::sys_days{std::chrono::days{floor_div(minutes, kMinutesPerDay)}}};
}

std::int64_t minutes_of(std::chrono::year_month_day ymd) {
    return static_cast<std::int64_t>(std::chrono::sys_days{ymd}.time_since_epoch().count()) *
           kMinutesPerDay;
}

bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

int read_int(std::string_view s, std::size_t pos, std::size_t len) {
    if (pos + len > s.size()) throw FormatError("bad timestamp");
    int v = 0;
    const auto res = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (res.ec != std::errc() || res.ptr != s.data() + pos + len) throw FormatError("bad timestamp");
    return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::string& path) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw FormatError("'" + path + "' has no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

/// Window key and expected point count for a timestamp at `res`.
struct WindowSpec {
    std::int64_t start;
    std::size_t position;
    std::size_t points;
};

WindowSpec window_of(std::int64_t minute, Resolution res) {
    using namespace std::chrono;
    switch (res) {
    case Resolution::FiveMin:
    case Resolution::TenMin:
    case Resolution::Hourly: {
        const int step = interval_minutes(res);
        const std::int64_t day = floor_div(minute, kMinutesPerDay) * kMinutesPerDay;
        const std::int64_t offset = minute - day;
        if (offset % step != 0) {
            throw FormatError("timestamp " + format_timestamp(minute) + " is off the " +
                              std::string(to_string(res)) + " grid");
        }
        return {day, static_cast<std::size_t>(offset / step),
                static_cast<std::size_t>(kMinutesPerDay / step)};
    }
    case Resolution::Daily: {
        if (minute % kMinutesPerDay != 0) {
            throw FormatError("daily timestamp " + format_timestamp(minute) + " is not at midnight");
        }
        const auto ymd = civil(minute);
        const year_month_day first{ymd.year(), ymd.month(), day{1}};
        const unsigned last = static_cast<unsigned>(year_month_day_last{ymd.year(), month_day_last{ymd.month()}}.day());
        return {minutes_of(first), static_cast<unsigned>(ymd.day()) - 1u, last};
    }
    case Resolution::Monthly: {
        const auto ymd = civil(minute);
        if (minute % kMinutesPerDay != 0 || ymd.day() != day{1}) {
            throw FormatError("monthly timestamp " + format_timestamp(minute) +
                              " is not the first of a month");
        }
        const year_month_day first{ymd.year(), January, day{1}};
        return {minutes_of(first), static_cast<unsigned>(ymd.month()) - 1u, 12};
    }
    default: break;
    }
    throw ArgumentError("load_csv: unsupported resolution '" + std::string(to_string(res)) + "'");
}

}  // namespace

// ---- manifest -------------------------------------------------------------------

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json j = {{"path", path},
                        {"resolution", to_string(resolution)},
                        {"timestamp_column", timestamp_column},
                        {"value_column", value_column},
                        {"label", label},
                        {"source", source},
                        {"normalization", to_string(normalization)},
                        {"night_window", {{"start_hour", night.start_hour}, {"end_hour", night.end_hour}}}};
    if (!extra.empty()) j["extra"] = extra;
    return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j, const std::string& base_dir) {
    DatasetManifest m;
    try {
        m.path = j.at("path").get<std::string>();
        m.resolution = parse_resolution(j.at("resolution").get<std::string>());
        m.timestamp_column = j.value("timestamp_column", m.timestamp_column);
        m.value_column = j.value("value_column", m.value_column);
        m.label = j.value("label", -1);
        m.source = j.value("source", std::string());
        m.normalization = parse_normalization(j.value("normalization", std::string("none")));
        if (j.contains("night_window")) {
            m.night.start_hour = j.at("night_window").value("start_hour", m.night.start_hour);
            m.night.end_hour = j.at("night_window").value("end_hour", m.night.end_hour);
        }
        if (j.contains("extra")) m.extra = j.at("extra");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
    if (m.night.start_hour < 0 || m.night.start_hour > 23 || m.night.end_hour < 0 ||
        m.night.end_hour > 23) {
        throw FormatError("manifest: night window hours must be in [0, 23]");
    }
    if (!base_dir.empty() && std::filesystem::path(m.path).is_relative()) {
        m.path = (std::filesystem::path(base_dir) / m.path).string();
    }
    return m;
}

DatasetManifest DatasetManifest::load(const std::string& manifest_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest '" + manifest_path + "': " + e.what());
    }
    return from_json(j, std::filesystem::path(manifest_path).parent_path().string());
}

void DatasetManifest::save(const std::string& manifest_path) const {
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write '" + manifest_path + "'");
    }
    out << to_json().dump(2) << '\n';
}

std::string LoadReport::summary() const {
    std::ostringstream os;
    os << rows << " rows read, " << dropped_rows << " rows dropped, " << windows << " windows, "
       << dropped_windows << " incomplete windows dropped (" << dropped_points << " points)";
    return os.str();
}

// ---- csv text -------------------------------------------------------------------

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t i = 0;
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
        record.clear();
    };
    for (; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\n') {
            end_record();
        } else if (ch == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
        } else {
            field.push_back(ch);
            field_started = true;
        }
    }
    if (quoted) {
        throw FormatError("csv: unterminated quoted field");
    }
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

std::int64_t parse_timestamp(std::string_view s) {
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
        throw FormatError("bad timestamp '" + std::string(s) + "'");
    }
    using namespace std::chrono;
    const int y = read_int(s, 0, 4);
    const int mo = read_int(s, 5, 2);
    const int d = read_int(s, 8, 2);
    int hh = 0;
    int mm = 0;
    if (s.size() > 10) {
        if ((s[10] != ' ' && s[10] != 'T') || s.size() < 16 || s[13] != ':') {
            throw FormatError("bad timestamp '" + std::string(s) + "'");
        }
        hh = read_int(s, 11, 2);
        mm = read_int(s, 14, 2);
        if (s.size() > 16) {
            if (s[16] != ':' || s.size() != 19 || read_int(s, 17, 2) != 0) {
                throw FormatError("bad timestamp '" + std::string(s) + "' (seconds must be 00)");
            }
        }
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59) {
        throw FormatError("bad timestamp '" + std::string(s) + "'");
    }
    return minutes_of(ymd) + hh * 60 + mm;
}

std::string format_timestamp(std::int64_t minutes) {
    const auto ymd = civil(minutes);
    const std::int64_t in_day = minutes - floor_div(minutes, kMinutesPerDay) * kMinutesPerDay;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(in_day / 60), static_cast<int>(in_day % 60));
    return buf;
}

std::int64_t default_start_minute() {
    using namespace std::chrono;
    return minutes_of(year_month_day{year{2020}, January, day{1}});
}

// ---- load / write ---------------------------------------------------------------

void apply_normalization(SeriesBatch& batch, Normalization mode) {
    batch.normalization = mode;
    if (mode == Normalization::None) return;
    const std::size_t per = batch.channels * batch.length;
    auto scale_range = [&](std::size_t begin, std::size_t end, double peak) {
        if (peak > 0.0) {
            for (std::size_t k = begin; k < end; ++k) batch.values[k] /= peak;
        }
    };
    if (mode == Normalization::PerSample) {
        for (std::size_t i = 0; i < batch.samples; ++i) {
            double peak = 0.0;
            for (std::size_t k = i * per; k < (i + 1) * per; ++k) peak = std::max(peak, std::abs(batch.values[k]));
            scale_range(i * per, (i + 1) * per, peak);
        }
    } else {
        double peak = 0.0;
        for (double v : batch.values) peak = std::max(peak, std::abs(v));
        scale_range(0, batch.values.size(), peak);
    }
}

SeriesBatch load_csv(const DatasetManifest& manifest, LoadReport* report) {
    if (manifest.resolution == Resolution::Yearly || manifest.resolution == Resolution::Transient) {
        throw ArgumentError("load_csv: unsupported resolution '" +
                            std::string(to_string(manifest.resolution)) + "'");
    }
    if (!std::filesystem::exists(manifest.path)) {
        throw FormatError("data file '" + manifest.path + "' does not exist");
    }
    const auto records = parse_csv(read_file(manifest.path));
    if (records.empty()) {
        throw FormatError("'" + manifest.path + "' is empty (header required)");
    }
    const std::size_t ts_col = column_index(records[0], manifest.timestamp_column, manifest.path);
    const std::size_t val_col = column_index(records[0], manifest.value_column, manifest.path);

    LoadReport rep;
    struct Window {
        std::vector<double> values;
        std::vector<bool> seen;
        std::size_t count = 0;
    };
    std::map<std::int64_t, Window> windows;
    for (std::size_t r = 1; r < records.size(); ++r) {
        ++rep.rows;
        const auto& rec = records[r];
        double value = 0.0;
        std::int64_t minute = 0;
        if (rec.size() <= std::max(ts_col, val_col) || !parse_double(rec[val_col], value)) {
            ++rep.dropped_rows;
            continue;
        }
        try {
            minute = parse_timestamp(rec[ts_col]);
        } catch (const FormatError&) {
            ++rep.dropped_rows;
            continue;
        }
        const WindowSpec spec = window_of(minute, manifest.resolution);
        Window& w = windows[spec.start];
        if (w.values.empty()) {
            w.values.assign(spec.points, 0.0);
            w.seen.assign(spec.points, false);
        }
        if (w.seen[spec.position]) {
            throw FormatError("duplicate timestamp " + format_timestamp(minute) + " in '" +
                              manifest.path + "'");
        }
        w.seen[spec.position] = true;
        w.values[spec.position] = value;
        ++w.count;
    }

    const std::size_t length = manifest.resolution == Resolution::Daily
                                   ? segment_length(Resolution::Daily)
                                   : manifest.resolution == Resolution::Monthly
                                         ? 12
                                         : static_cast<std::size_t>(kMinutesPerDay / interval_minutes(manifest.resolution));
    SeriesBatch out;
    out.channels = 1;
    out.length = length;
    out.resolution = manifest.resolution;
    out.source = manifest.source;
    out.night = manifest.night;
    const bool padded = manifest.resolution == Resolution::Daily;
    for (auto& [start, w] : windows) {
        if (w.count != w.values.size()) {
            ++rep.dropped_windows;
            rep.dropped_points += w.count;
            continue;
        }
        w.values.resize(length, 0.0);
        out.values.insert(out.values.end(), w.values.begin(), w.values.end());
        out.start_minutes.push_back(start);
        if (padded) out.valid_lengths.push_back(w.count);
        if (manifest.label >= 0) out.labels.push_back(manifest.label);
        ++out.samples;
    }
    rep.windows = out.samples;
    if (report != nullptr) *report = rep;
    if (out.samples == 0) {
        throw FormatError("'" + manifest.path + "' has no complete windows (" + rep.summary() + ")");
    }
    apply_normalization(out, manifest.normalization);
    return out;
}

void write_csv(const SeriesBatch& batch, const std::string& path) {
    batch.validate();
    if (batch.channels != 1) {
        throw DimensionError("write_csv: only single-channel series can be written in long format");
    }
    int step = 0;
    if (batch.resolution != Resolution::Daily && batch.resolution != Resolution::Monthly) {
        step = interval_minutes(batch.resolution);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write '" + path + "'");
    }
    out << "timestamp,value\n";
    char buf[64];
    std::int64_t next_start = default_start_minute();
    for (std::size_t i = 0; i < batch.samples; ++i) {
        const std::int64_t start = batch.start_minutes.empty() ? next_start : batch.start_minutes[i];
        const std::size_t n = batch.valid_length(i);
        const auto values = batch.channel(i, 0);
        auto ymd = civil(start);
        for (std::size_t t = 0; t < n; ++t) {
            std::int64_t minute = start;
            if (batch.resolution == Resolution::Daily) {
                minute = start + static_cast<std::int64_t>(t) * kMinutesPerDay;
            } else if (batch.resolution == Resolution::Monthly) {
                const auto ym = std::chrono::year_month{ymd.year(), ymd.month()} + std::chrono::months{static_cast<int>(t)};
                minute = minutes_of(std::chrono::year_month_day{ym.year(), ym.month(), std::chrono::day{1}});
            } else {
                minute = start + static_cast<std::int64_t>(t) * step;
            }
            std::snprintf(buf, sizeof buf, "%.17g", values[t]);
            out << format_timestamp(minute) << ',' << buf << '\n';
        }
        if (batch.resolution == Resolution::Daily) {
            next_start = start + static_cast<std::int64_t>(n) * kMinutesPerDay;
        } else if (batch.resolution == Resolution::Monthly) {
            const auto ym = std::chrono::year_month{ymd.year(), ymd.month()} + std::chrono::years{1};
            next_start = minutes_of(std::chrono::year_month_day{ym.year(), ym.month(), std::chrono::day{1}});
        } else {
            next_start = start + static_cast<std::int64_t>(batch.length) * step;
        }
    }
    if (!out) {
        throw FormatError("error while writing '" + path + "'");
    }
}

std::string file_checksum(const std::string& path) {
    const std::string bytes = read_file(path);
    const uLong crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()),
                            static_cast<uInt>(bytes.size()));
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

}  // namespace fpd::io
