#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpd/hierarchy.hpp"
#include "fpd/io/csv.hpp"
#include "fpd/report.hpp"
#include "fpd/series.hpp"

namespace fpd::cli {

/// Bad flag combinations detected after parsing; exits with the usage code.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadedDataset {
    std::string manifest_path;
    io::DatasetManifest manifest;
    SeriesBatch batch;
    std::string checksum;  ///< of the CSV file
};

LoadedDataset load_dataset(const std::string& manifest_path, std::ostream& err);

/// `dir/name.csv` -> `dir/name.json`.
std::string manifest_path_for(const std::string& csv_path);

/// Writes the CSV and a manifest next to it (path stored relative to it).
void write_dataset(const SeriesBatch& batch, const std::string& csv_path, io::DatasetManifest manifest);

/// --model value, else $FPD_MODEL, else a usage error.
std::string resolve_model(const std::string& flag);

std::string utc_now();

void write_text(const std::string& path, const std::string& text);

Resolution parse_level(const std::string& text);

/// Provenance block shared by every report.
Provenance make_provenance(const nlohmann::json& config, std::uint64_t seed,
                           const std::vector<ReportInput>& inputs, const std::string& model_version);

}  // namespace fpd::cli
