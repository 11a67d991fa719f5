#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpd/hierarchy.hpp"
#include "fpd/metrics.hpp"
#include "fpd/series.hpp"

namespace fpd {

inline constexpr std::array<std::string_view, 8> kMetricNames = {
    "fpd", "js", "mmd_rbf", "mmd_linear", "crps", "energy", "mape", "raw_frechet"};

bool is_metric_name(std::string_view name) noexcept;

/// Comma-separated metric names ("all" for every metric), returned in
/// registry order without duplicates.
std::vector<std::string> parse_metric_list(std::string_view text);

/// Library version string baked in at build time.
std::string tool_version();

/// CRC-32 (hex) of the compact dump of `config`.
std::string config_hash(const nlohmann::json& config);

struct ReportInput {
    std::string name;
    std::string checksum;
};

struct Provenance {
    std::string tool_version = fpd::tool_version();
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<ReportInput> inputs;
    std::string model_version;
    std::string generated_at;  ///< the only wall-clock field; empty means omitted

    nlohmann::ordered_json to_json() const;
};

/// Named metric values plus diagnostics and provenance.
class MetricReport {
public:
    /// Throws ArgumentError for unknown names and NumericError for non-finite values.
    void set(std::string_view name, double value);
    bool has(std::string_view name) const;
    double at(std::string_view name) const;
    const nlohmann::ordered_json& values() const noexcept { return values_; }

    /// Free-form diagnostics (regularization applied, excluded points, ...).
    void detail(const std::string& key, nlohmann::ordered_json value);
    const nlohmann::ordered_json& details() const noexcept { return details_; }

    Provenance provenance;

    /// {"metrics": {...}, "details": {...}, "provenance": {...}}
    nlohmann::ordered_json to_json() const;

private:
    nlohmann::ordered_json values_ = nlohmann::ordered_json::object();
    nlohmann::ordered_json details_ = nlohmann::ordered_json::object();
};

struct EvaluationOptions {
    std::uint64_t seed = 0;
    std::optional<double> rbf_bandwidth;
    bool mmd_mean_term = true;
    /// Feature rows per set used for MMD; larger sets are subsampled.
    std::size_t mmd_max_samples = 2000;
    metrics::Pairing pairing = metrics::Pairing::Random;
    double mape_epsilon = 1e-8;
};

/// Feature-space metrics need both feature sets; raw-space metrics need both
/// raw batches. Set `a` is the reference (observations, MAPE denominators).
struct EvaluationData {
    const FeatureSet* features_a = nullptr;
    const FeatureSet* features_b = nullptr;
    const SeriesBatch* raw_a = nullptr;
    const SeriesBatch* raw_b = nullptr;
};

bool needs_features(std::span<const std::string> metric_names);

/// Computes the listed metrics into a report (provenance left for the caller).
MetricReport evaluate_metrics(const EvaluationData& data, std::span<const std::string> metric_names,
                              const EvaluationOptions& options = {});

}  // namespace fpd
