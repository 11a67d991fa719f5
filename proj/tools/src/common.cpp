#include "common.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "fpd/error.hpp"

namespace fpd::cli {

LoadedDataset load_dataset(const std::string& manifest_path, std::ostream& err) {
    LoadedDataset d;
    d.manifest_path = manifest_path;
    d.manifest = io::DatasetManifest::load(manifest_path);
    io::LoadReport report;
    d.batch = io::load_csv(d.manifest, &report);
    if (report.dropped_rows > 0 || report.dropped_windows > 0) {
        err << manifest_path << ": " << report.summary() << "\n";
    }
    d.checksum = io::file_checksum(d.manifest.path);
    return d;
}

std::string manifest_path_for(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension(".json");
    return p.string();
}

void write_dataset(const SeriesBatch& batch, const std::string& csv_path, io::DatasetManifest manifest) {
    const std::filesystem::path csv(csv_path);
    if (csv.has_parent_path()) {
        std::filesystem::create_directories(csv.parent_path());
    }
    io::write_csv(batch, csv_path);
    manifest.path = csv.filename().string();
    manifest.resolution = batch.resolution;
    manifest.normalization = Normalization::None;
    manifest.save(manifest_path_for(csv_path));
}

std::string resolve_model(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("FPD_MODEL"); env != nullptr && *env != '\0') return env;
    throw UsageError("no model given: pass --model or set FPD_MODEL");
}

std::string utc_now() {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    const auto day = std::chrono::floor<std::chrono::days>(now);
    const std::chrono::year_month_day ymd{day};
    const std::chrono::hh_mm_ss hms{now - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write '" + path + "'");
    }
    out << text;
}

Resolution parse_level(const std::string& text) {
    try {
        return parse_resolution(text);
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }
}

Provenance make_provenance(const nlohmann::json& config, std::uint64_t seed,
                           const std::vector<ReportInput>& inputs, const std::string& model_version) {
    Provenance p;
    p.config_hash = config_hash(config);
    p.seed = seed;
    p.inputs = inputs;
    p.model_version = model_version;
    p.generated_at = utc_now();
    return p;
}

}  // namespace fpd::cli
