#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpd/resolution.hpp"
#include "fpd/series.hpp"

namespace fpd::io {

/// Describes one long-format CSV file (timestamp column + value column).
struct DatasetManifest {
    std::string path;
    Resolution resolution = Resolution::FiveMin;
    std::string timestamp_column = "timestamp";
    std::string value_column = "value";
    int label = -1;  ///< class label given to every window, -1 = unlabeled
    std::string source;
    Normalization normalization = Normalization::None;
    NightWindow night;
    nlohmann::json extra = nlohmann::json::object();  ///< free-form notes (disturbance applied, ...)

    nlohmann::json to_json() const;
    /// Relative `path` entries are resolved against `base_dir`.
    static DatasetManifest from_json(const nlohmann::json& j, const std::string& base_dir = "");
    static DatasetManifest load(const std::string& manifest_path);
    void save(const std::string& manifest_path) const;
};

struct LoadReport {
    std::size_t rows = 0;             ///< data rows read (excluding the header)
    std::size_t dropped_rows = 0;     ///< unparseable timestamp or value
    std::size_t windows = 0;
    std::size_t dropped_windows = 0;  ///< incomplete days / months / years
    std::size_t dropped_points = 0;   ///< valid rows inside dropped windows

    std::string summary() const;
};

/// Parses RFC-4180 CSV text into records (quoted fields, doubled quotes,
/// CRLF or LF line ends).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

/// "YYYY-MM-DD HH:MM[:SS]" (or 'T' separator) -> minutes since 1970-01-01.
std::int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t minutes);

/// Cuts a long-format series into windows of the resolution's natural
/// duration (day for 5min/10min/hourly, calendar month for daily, year for
/// monthly). Incomplete windows and unparseable rows are dropped and counted.
SeriesBatch load_csv(const DatasetManifest& manifest, LoadReport* report = nullptr);

/// Writes a single-channel batch in long format. Windows without start
/// timestamps are laid out as consecutive windows from 2020-01-01.
void write_csv(const SeriesBatch& batch, const std::string& path);

/// Scales windows to [0, 1]-style ranges per the normalization mode (max of
/// absolute values; all-zero windows are left alone).
void apply_normalization(SeriesBatch& batch, Normalization mode);

/// Default first-window timestamp of generated data (2020-01-01 00:00).
std::int64_t default_start_minute();

/// CRC-32 of a file's bytes, as 8 hex digits.
std::string file_checksum(const std::string& path);

}  // namespace fpd::io
