#include "fpd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <zlib.h>

#include "fpd/error.hpp"

#ifndef FPD_VERSION
#define FPD_VERSION "0.0.0"
#endif

namespace fpd {

namespace {

/// Seeded subsample of `count` rows, kept in original order.
linalg::Matrix subsample(const linalg::Matrix& rows, std::size_t count, std::uint64_t seed) {
    if (rows.rows() <= count) return rows;
    std::vector<std::size_t> idx(rows.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    linalg::Matrix out(count, rows.cols());
    for (std::size_t i = 0; i < count; ++i) {
        std::copy(rows.row(idx[i]).begin(), rows.row(idx[i]).end(), out.row(i).begin());
    }
    return out;
}

bool wants(std::span<const std::string> names, std::string_view name) {
    return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace

bool is_metric_name(std::string_view name) noexcept {
    return std::find(kMetricNames.begin(), kMetricNames.end(), name) != kMetricNames.end();
}

std::vector<std::string> parse_metric_list(std::string_view text) {
    std::vector<std::string> requested;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        std::string item(text.substr(pos, comma - pos));
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) requested.push_back(item);
        pos = comma + 1;
    }
    if (requested.empty()) {
        throw ArgumentError("no metrics requested");
    }
    std::vector<std::string> out;
    for (std::string_view name : kMetricNames) {
        const bool all = std::find(requested.begin(), requested.end(), "all") != requested.end();
        if (all || std::find(requested.begin(), requested.end(), name) != requested.end()) {
            out.emplace_back(name);
        }
    }
    for (const auto& r : requested) {
        if (r != "all" && !is_metric_name(r)) {
            std::string known;
            for (auto n : kMetricNames) known += (known.empty() ? "" : ", ") + std::string(n);
            throw ArgumentError("unknown metric '" + r + "' (expected one of " + known + ")");
        }
    }
    return out;
}

std::string tool_version() {
    return FPD_VERSION;
}

std::string config_hash(const nlohmann::json& config) {
    const std::string text = config.dump();
    const auto crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(text.data()),
                           static_cast<uInt>(text.size()));
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

void MetricReport::set(std::string_view name, double value) {
    if (!is_metric_name(name)) {
        throw ArgumentError("unknown metric '" + std::string(name) + "'");
    }
    if (!std::isfinite(value)) {
        throw NumericError("metric '" + std::string(name) + "' is not finite");
    }
    values_[std::string(name)] = value;
}

bool MetricReport::has(std::string_view name) const {
    return values_.contains(std::string(name));
}

double MetricReport::at(std::string_view name) const {
    if (!has(name)) {
        throw ArgumentError("report has no metric '" + std::string(name) + "'");
    }
    return values_.at(std::string(name)).get<double>();
}

void MetricReport::detail(const std::string& key, nlohmann::ordered_json value) {
    details_[key] = std::move(value);
}

nlohmann::ordered_json Provenance::to_json() const {
    nlohmann::ordered_json in = nlohmann::ordered_json::array();
    for (const auto& i : inputs) {
        in.push_back({{"name", i.name}, {"checksum", i.checksum}});
    }
    nlohmann::ordered_json prov = {
        {"tool_version", tool_version}, {"config_hash", config_hash}, {"seed", seed}, {"inputs", in}};
    if (!model_version.empty()) prov["model_version"] = model_version;
    if (!generated_at.empty()) prov["generated_at"] = generated_at;
    return prov;
}

nlohmann::ordered_json MetricReport::to_json() const {
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    for (std::string_view name : kMetricNames) {
        if (has(name)) metrics[std::string(name)] = values_.at(std::string(name));
    }
    return {{"metrics", metrics}, {"details", details_}, {"provenance", provenance.to_json()}};
}

bool needs_features(std::span<const std::string> names) {
    return wants(names, "fpd") || wants(names, "js") || wants(names, "mmd_rbf") || wants(names, "mmd_linear");
}

MetricReport evaluate_metrics(const EvaluationData& data, std::span<const std::string> names,
                              const EvaluationOptions& options) {
    for (const auto& n : names) {
        if (!is_metric_name(n)) throw ArgumentError("unknown metric '" + n + "'");
    }
    MetricReport report;
    const bool raw_needed = wants(names, "crps") || wants(names, "energy") || wants(names, "mape") ||
                            wants(names, "raw_frechet");
    if (needs_features(names) && (data.features_a == nullptr || data.features_b == nullptr)) {
        throw ArgumentError("evaluate: feature metrics need extracted features for both sets");
    }
    if (raw_needed && (data.raw_a == nullptr || data.raw_b == nullptr)) {
        throw ArgumentError("evaluate: raw-data metrics need both raw datasets");
    }

    if (wants(names, "fpd") || wants(names, "js")) {
        const auto ga = metrics::fit_gaussian(*data.features_a);
        const auto gb = metrics::fit_gaussian(*data.features_b);
        if (wants(names, "fpd")) report.set("fpd", metrics::fpd(ga, gb));
        if (wants(names, "js")) {
            const auto js = metrics::js_gaussian(ga, gb);
            report.set("js", js.value);
            if (js.regularization > 0.0) report.detail("js_regularization", js.regularization);
        }
        report.detail("feature_rows", {data.features_a->size(), data.features_b->size()});
    }
    if (wants(names, "mmd_rbf") || wants(names, "mmd_linear")) {
        const std::size_t n = std::min({data.features_a->size(), data.features_b->size(), options.mmd_max_samples});
        const auto za = subsample(data.features_a->rows, n, options.seed);
        const auto zb = subsample(data.features_b->rows, n, options.seed + 1);
        if (n != data.features_a->size() || n != data.features_b->size()) {
            report.detail("mmd_subsampled_rows", n);
        }
        metrics::MmdOptions mo;
        mo.mean_term = options.mmd_mean_term;
        if (wants(names, "mmd_rbf")) {
            mo.kernel = metrics::Kernel::Rbf;
            const double h = options.rbf_bandwidth ? *options.rbf_bandwidth : metrics::median_pairwise_distance(za, zb);
            mo.bandwidth = h;
            report.set("mmd_rbf", metrics::mmd(za, zb, mo));
            report.detail("mmd_rbf_bandwidth", h);
        }
        if (wants(names, "mmd_linear")) {
            mo.kernel = metrics::Kernel::Linear;
            report.set("mmd_linear", metrics::mmd(za, zb, mo));
        }
        if (!options.mmd_mean_term) report.detail("mmd_form", "textbook");
    }
    if (raw_needed) {
        const auto xa = metrics::flatten(*data.raw_a);
        const auto xb = metrics::flatten(*data.raw_b);
        if (xa.cols() != xb.cols()) {
            throw DimensionError("evaluate: raw windows differ in size (" + std::to_string(xa.cols()) + " vs " +
                                 std::to_string(xb.cols()) + ")");
        }
        if (wants(names, "crps")) report.set("crps", metrics::crps(xb, xa));
        if (wants(names, "energy")) report.set("energy", metrics::energy_score(xa, xb));
        if (wants(names, "mape")) {
            const std::size_t n = std::min(xa.rows(), xb.rows());
            const auto ma = subsample(xa, n, options.seed + 2);
            const auto mb = subsample(xb, n, options.seed + 3);
            const auto m = metrics::mape_paired(ma, mb, options.pairing, options.seed, options.mape_epsilon);
            report.set("mape", m.value);
            report.detail("mape_pairing", std::string(metrics::to_string(options.pairing)));
            report.detail("mape_excluded_points", m.excluded);
            report.detail("mape_used_points", m.used);
        }
        if (wants(names, "raw_frechet")) report.set("raw_frechet", metrics::raw_frechet(*data.raw_a, *data.raw_b));
    }
    return report;
}

}  // namespace fpd
