#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "common.hpp"
#include "fpd/disturbances.hpp"
#include "fpd/error.hpp"
#include "fpd/hierarchy.hpp"
#include "fpd/io/artifact.hpp"
#include "fpd/io/resample.hpp"
#include "fpd/io/synth.hpp"
#include "fpd/metrics.hpp"
#include "fpd/nn/gradcheck.hpp"
#include "fpd/report.hpp"
#include "fpd/training.hpp"

namespace fpd::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string alpha_tag(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string scaling_note(io::SourceKind kind) {
    return kind == io::SourceKind::Wind ? "fraction of rated power" : "daily maximum of the 5-minute series";
}

/// 10-minute data enters at 5 minutes; otherwise data is interpolated up or
/// block-averaged down to `entry`.
SeriesBatch to_entry(SeriesBatch x, const std::string& entry) {
    if (x.resolution == Resolution::TenMin) x = io::resample(x, Resolution::FiveMin);
    if (entry.empty()) return x;
    const Resolution to = parse_level(entry);
    if (to == x.resolution) return x;
    return chain_rank(to) < chain_rank(x.resolution) ? io::resample(x, to) : io::aggregate_mean(x, to);
}

std::vector<std::string> metric_list(const std::string& text) {
    try {
        return parse_metric_list(text);
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }
}

ordered_json disturbance_json(const disturb::Disturbance& d, double regularization) {
    ordered_json j = {{"kind", disturb::to_string(d.kind)}, {"alpha", d.alpha}, {"seed", d.seed}};
    if (d.kind == disturb::Kind::Contamination) {
        j["mode"] = d.contamination_mode == disturb::ContaminationMode::Point ? "point" : "sample";
    }
    if (d.kind == disturb::Kind::NighttimeViolation) {
        j["low"] = d.violation.low;
        j["high"] = d.violation.high;
    }
    if (regularization > 0.0) j["regularization"] = regularization;
    return j;
}

void write_disturbed(const LoadedDataset& src, const disturb::Disturbance& d, const disturb::Applied& applied,
                     const std::string& csv_path) {
    io::DatasetManifest m = src.manifest;
    if (!m.extra.contains("scaling")) {
        m.extra["scaling"] = std::string(to_string(src.manifest.normalization));
    }
    m.extra["derived_from"] = src.checksum;
    m.extra["disturbance"] = json::parse(disturbance_json(d, applied.regularization).dump());
    write_dataset(applied.batch, csv_path, std::move(m));
}

}  // namespace

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream&) {
    const Resolution res = parse_level(o.resolution);
    std::vector<io::SourceKind> kinds;
    if (o.kind == "all") {
        kinds = {io::SourceKind::Solar, io::SourceKind::Wind, io::SourceKind::Load, io::SourceKind::Ev};
    } else {
        kinds = {io::parse_source_kind(o.kind)};
    }
    for (io::SourceKind kind : kinds) {
        SeriesBatch batch = io::synth_source(kind, o.days, res, o.seed);
        const int label = o.label.value_or(static_cast<int>(kind));
        batch.labels.assign(batch.samples, label);

        io::DatasetManifest m;
        m.label = label;
        m.source = std::string(io::to_string(kind));
        m.night = batch.night;
        m.extra["scaling"] = scaling_note(kind);
        m.extra["generator"] = {{"kind", io::to_string(kind)}, {"days", o.days},
                                {"resolution", to_string(res)}, {"seed", o.seed}};
        const std::string path = o.kind == "all"
            ? (std::filesystem::path(o.out) / (std::string(io::to_string(kind)) + ".csv")).string()
            : o.out;
        write_dataset(batch, path, std::move(m));
        out << manifest_path_for(path) << "\n";
    }
    return kExitOk;
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
    TrainConfig cfg;
    cfg.lr = o.lr;
    cfg.batch_size = o.batch_size;
    cfg.epochs = o.epochs;
    cfg.seed = o.seed;
    cfg.validation_fraction = o.validation_fraction;
    cfg.mixed_inputs = !o.no_mixed_inputs;
    cfg.levels.clear();
    for (const auto& l : o.levels) cfg.levels.push_back(parse_level(l));

    ArchitectureConfig arch;
    arch.channels = o.channels;
    arch.width = o.width;
    arch.blocks = o.blocks;
    arch.average_pool = o.average_pool;
    try {
        arch.validate();
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }

    std::vector<SeriesBatch> parts;
    json data_info = json::array();
    int max_label = -1;
    for (const auto& path : o.data) {
        LoadedDataset d = load_dataset(path, err);
        if (d.batch.labels.empty()) {
            throw UsageError(path + ": training data needs a class label in its manifest");
        }
        for (int l : d.batch.labels) max_label = std::max(max_label, l);
        data_info.push_back({{"checksum", d.checksum}, {"label", d.manifest.label}, {"windows", d.batch.samples}});
        parts.push_back(to_entry(std::move(d.batch), ""));
    }
    const SeriesBatch corpus = concatenate(parts);
    cfg.classes = o.classes.value_or(static_cast<std::size_t>(max_label + 1));
    if (cfg.classes < 2) {
        throw UsageError("need at least two classes (pass --classes or label more kinds)");
    }
    try {
        cfg.validate();
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }

    std::ofstream log;
    if (!o.log.empty()) {
        log.open(o.log, std::ios::binary);
        if (!log) throw FormatError("cannot write '" + o.log + "'");
    }
    std::vector<EpochRecord> history;
    auto sink = [&](const EpochRecord& r) {
        history.push_back(r);
        const std::string line = r.to_json().dump();
        if (!o.quiet) out << line << "\n" << std::flush;
        if (log) log << line << "\n" << std::flush;
    };

    ExtractorStack stack = ExtractorStack::create(arch, cfg.levels, cfg.seed);
    stack.training_config() = {{"train", cfg.to_json()}, {"data", data_info}};
    for (Resolution level : cfg.levels) {
        const std::vector<SeriesBatch> views = training_views(corpus, level, cfg.mixed_inputs);
        train_level(stack, level, views, cfg, sink);
    }
    finalize(stack);
    io::save_stack(stack, o.out);

    if (!o.history.empty()) {
        std::ostringstream csv;
        csv << "level,epoch,mse,ce,loss,accuracy,val_loss,val_accuracy\n";
        for (const auto& r : history) {
            csv << r.level << ',' << r.epoch << ',' << format_g(r.mse) << ',' << format_g(r.ce) << ','
                << format_g(r.loss) << ',' << format_g(r.accuracy) << ',' << format_g(r.val_loss) << ','
                << format_g(r.val_accuracy) << "\n";
        }
        write_text(o.history, csv.str());
    }
    out << json{{"model", o.out}, {"version", stack.version()}}.dump() << "\n";
    return kExitOk;
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
    const std::vector<std::string> names = metric_list(o.metrics);
    const Resolution target = parse_level(o.target);
    const std::string model_path = resolve_model(o.model);

    LoadedDataset a = load_dataset(o.a, err);
    LoadedDataset b = load_dataset(o.b, err);
    const SeriesBatch xa = to_entry(a.batch, o.entry);
    const SeriesBatch xb = to_entry(b.batch, o.entry);

    EvaluationData data{nullptr, nullptr, &xa, &xb};
    FeatureSet fa;
    FeatureSet fb;
    std::string model_version;
    if (needs_features(names)) {
        const ExtractorStack stack = io::load_stack(model_path);
        model_version = stack.version();
        fa = extract_hierarchical(stack, xa, target);
        fb = extract_hierarchical(stack, xb, target);
        data.features_a = &fa;
        data.features_b = &fb;
    }

    EvaluationOptions opts;
    opts.seed = o.seed;
    opts.rbf_bandwidth = o.bandwidth;
    opts.mmd_mean_term = !o.textbook_mmd;
    opts.pairing = metrics::parse_pairing(o.pairing);

    ordered_json config = {{"command", "evaluate"},
                           {"model", model_path},
                           {"a", o.a},
                           {"b", o.b},
                           {"entry", to_string(xa.resolution)},
                           {"target", to_string(target)},
                           {"metrics", names},
                           {"seed", o.seed},
                           {"pairing", o.pairing},
                           {"bandwidth", o.bandwidth ? json(*o.bandwidth) : json(nullptr)},
                           {"textbook_mmd", o.textbook_mmd}};

    MetricReport report = evaluate_metrics(data, names, opts);
    report.provenance = make_provenance(json::parse(config.dump()), o.seed,
                                        {{o.a, a.checksum}, {o.b, b.checksum}}, model_version);
    ordered_json j = report.to_json();
    j["config"] = config;
    const std::string text = j.dump(2) + "\n";
    if (!o.out.empty()) write_text(o.out, text);
    out << text;
    return kExitOk;
}

int cmd_disturb(const DisturbOptions& o, std::ostream& out, std::ostream& err) {
    if (o.preset.empty() && (o.kind.empty() || !o.alpha)) {
        throw UsageError("disturb needs --kind and --alpha, or --preset");
    }
    LoadedDataset src = load_dataset(o.data, err);
    std::optional<LoadedDataset> aux;
    if (!o.aux.empty()) aux = load_dataset(o.aux, err);

    disturb::Disturbance base;
    base.seed = o.seed;
    base.contamination_mode = o.point ? disturb::ContaminationMode::Point : disturb::ContaminationMode::Sample;
    base.violation = {o.low, o.high};

    auto apply_one = [&](disturb::Kind kind, double alpha, const std::string& path) {
        if (kind == disturb::Kind::Contamination && !aux) {
            throw UsageError("contamination needs a contaminating dataset (--aux)");
        }
        disturb::Disturbance d = base;
        d.kind = kind;
        d.alpha = alpha;
        disturb::Applied applied;
        try {
            applied = disturb::apply(d, src.batch, aux ? &aux->batch : nullptr);
        } catch (const ArgumentError& e) {
            throw UsageError(e.what());
        }
        write_disturbed(src, d, applied, path);
        out << manifest_path_for(path) << "\n";
    };

    if (!o.preset.empty()) {
        const auto grid = disturb::preset(o.preset);
        for (const auto& level : grid) {
            if (level.kind == disturb::Kind::Contamination && !aux) {
                throw UsageError("preset " + o.preset + " includes contamination: pass --aux");
            }
        }
        for (const auto& level : grid) {
            for (double alpha : level.alphas) {
                const std::string name = std::string(disturb::to_string(level.kind)) + "_a" + alpha_tag(alpha) + ".csv";
                apply_one(level.kind, alpha, (std::filesystem::path(o.out) / name).string());
            }
        }
        return kExitOk;
    }
    apply_one(disturb::parse_kind(o.kind), *o.alpha, o.out);
    return kExitOk;
}

int cmd_benchmark(const BenchmarkOptions& o, std::ostream& out, std::ostream& err) {
    const std::vector<std::string> names = metric_list(o.metrics);
    const Resolution target = parse_level(o.target);
    const std::string model_path = resolve_model(o.model);
    const auto grid = disturb::preset(o.preset);

    const ExtractorStack stack = io::load_stack(model_path);
    LoadedDataset src = load_dataset(o.data, err);
    const SeriesBatch x = to_entry(src.batch, o.entry);
    std::optional<LoadedDataset> aux;
    std::optional<SeriesBatch> y;
    if (!o.aux.empty()) {
        aux = load_dataset(o.aux, err);
        y = to_entry(aux->batch, o.entry);
    }

    ordered_json config = {{"command", "benchmark"},
                           {"model", model_path},
                           {"data", o.data},
                           {"aux", o.aux},
                           {"preset", o.preset},
                           {"seed", o.seed},
                           {"seeds", o.seeds},
                           {"entry", to_string(x.resolution)},
                           {"target", to_string(target)},
                           {"metrics", names}};
    std::vector<ReportInput> inputs{{o.data, src.checksum}};
    if (aux) inputs.push_back({o.aux, aux->checksum});
    const Provenance prov = make_provenance(json::parse(config.dump()), o.seed, inputs, stack.version());

    const bool features = needs_features(names);
    FeatureSet fx;
    if (features) fx = extract_hierarchical(stack, x, target);

    std::ostringstream csv;
    csv << "disturbance,alpha,metric,value,seed\n";
    ordered_json rows = ordered_json::array();
    ordered_json failure = nullptr;

    for (const auto& level : grid) {
        for (double alpha : level.alphas) {
            for (std::size_t k = 0; k < o.seeds && failure.is_null(); ++k) {
                const std::uint64_t seed = o.seed + k;
                const std::string kind(disturb::to_string(level.kind));
                try {
                    disturb::Disturbance d;
                    d.kind = level.kind;
                    d.alpha = alpha;
                    d.seed = seed;
                    const disturb::Applied applied = disturb::apply(d, x, y ? &*y : nullptr);
                    FeatureSet fd;
                    EvaluationData data{nullptr, nullptr, &x, &applied.batch};
                    if (features) {
                        fd = extract_hierarchical(stack, applied.batch, target);
                        data.features_a = &fx;
                        data.features_b = &fd;
                    }
                    EvaluationOptions opts;
                    opts.seed = seed;
                    const MetricReport r = evaluate_metrics(data, names, opts);
                    for (const auto& name : names) {
                        csv << kind << ',' << alpha_tag(alpha) << ',' << name << ',' << format_g(r.at(name)) << ','
                            << seed << "\n";
                    }
                    rows.push_back({{"disturbance", kind},
                                    {"alpha", alpha},
                                    {"seed", seed},
                                    {"metrics", r.values()},
                                    {"details", r.details()}});
                    err << kind << " alpha=" << alpha_tag(alpha) << " seed=" << seed << " done\n";
                } catch (const std::exception& e) {
                    failure = {{"disturbance", kind}, {"alpha", alpha}, {"seed", seed}, {"error", e.what()}};
                }
            }
            if (!failure.is_null()) break;
        }
        if (!failure.is_null()) break;
    }

    const std::filesystem::path dir(o.out_dir);
    write_text((dir / "benchmark.csv").string(), csv.str());
    ordered_json j = {{"complete", failure.is_null()},
                      {"failure", failure},
                      {"config", config},
                      {"provenance", prov.to_json()},
                      {"rows", rows}};
    write_text((dir / "benchmark.json").string(), j.dump(2) + "\n");
    out << (dir / "benchmark.csv").string() << "\n" << (dir / "benchmark.json").string() << "\n";
    if (!failure.is_null()) {
        err << "error: benchmark stopped at " << failure["disturbance"].get<std::string>() << " alpha="
            << alpha_tag(failure["alpha"].get<double>()) << ": " << failure["error"].get<std::string>()
            << " (partial results kept)\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_gradcheck(const GradcheckOptions& o, std::ostream& out, std::ostream& err) {
    nn::GradCheckOptions opts;
    opts.tolerance = o.tolerance;
    opts.corrupt = o.corrupt;
    double worst = 0.0;
    std::vector<std::string> failed;
    for (std::size_t k = 0; k < o.seeds; ++k) {
        const std::uint64_t seed = o.seed + k;
        for (const auto& r : nn::run_gradcheck_suite(seed, opts)) {
            char line[256];
            std::snprintf(line, sizeof line, "seed %llu %-16s max_rel_error %.3e skipped %zu %s",
                          static_cast<unsigned long long>(seed), r.name.c_str(), r.max_rel_error, r.skipped,
                          r.passed ? "PASS" : "FAIL");
            out << line << "\n";
            worst = std::max(worst, r.max_rel_error);
            if (!r.passed) {
                char msg[256];
                std::snprintf(msg, sizeof msg, "%s (%s): max relative error %.3e > %.1e", r.name.c_str(),
                              r.worst.c_str(), r.max_rel_error, o.tolerance);
                failed.emplace_back(msg);
            }
        }
    }
    if (!failed.empty()) {
        for (const auto& f : failed) err << "gradient check failed: " << f << "\n";
        return kExitRuntime;
    }
    char line[96];
    std::snprintf(line, sizeof line, "all checks passed, max relative error %.3e", worst);
    out << line << "\n";
    return kExitOk;
}

}  // namespace fpd::cli
