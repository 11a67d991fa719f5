#include "cli.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "common.hpp"
#include "fpd/disturbances.hpp"
#include "fpd/error.hpp"
#include "fpd/report.hpp"

namespace fpd::cli {
namespace {

std::string option_flag(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

bool on_command_line(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
        return a == flag || a.rfind(flag + "=", 0) == 0;
    });
}

void append_value(std::vector<std::string>& args, const std::string& flag, const nlohmann::json& v) {
    if (v.is_boolean()) {
        if (v.get<bool>()) args.push_back(flag);
    } else if (v.is_string()) {
        args.push_back(flag);
        args.push_back(v.get<std::string>());
    } else if (v.is_number()) {
        args.push_back(flag);
        args.push_back(v.dump());
    } else if (v.is_array()) {
        for (const auto& item : v) append_value(args, flag, item);
    } else if (!v.is_null()) {
        throw UsageError("config key " + flag + ": unsupported value " + v.dump());
    }
}

/// Strips `--config FILE` and appends the file's settings that the command
/// line does not already give.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file");
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw UsageError("config file '" + path + "' must hold a JSON object");

    const auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.starts_with("-"); });
    const std::string command = sub == args.end() ? "" : *sub;
    const std::vector<std::string> given = args;
    auto take = [&](const std::string& key, const nlohmann::json& v) {
        const std::string flag = option_flag(key);
        if (!on_command_line(given, flag)) append_value(args, flag, v);
    };
    for (const auto& [key, value] : j.items()) {
        if (value.is_object()) {
            if (key != command) continue;
            for (const auto& [k, v] : value.items()) take(k, v);
        } else {
            take(key, value);
        }
    }
    return args;
}

CLI::Validator resolution_of(std::vector<std::string> names) {
    return CLI::IsMember(std::move(names));
}

const CLI::Validator kDisturbanceKind(
    [](std::string& s) -> std::string {
        try {
            s = std::string(disturb::to_string(disturb::parse_kind(s)));
            return {};
        } catch (const fpd::Error& e) {
            return e.what();
        }
    },
    "KIND", "disturbance kind");

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fréchet power-scenario distance: train extractors, disturb data, score synthetic series", "fpd"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    SynthOptions synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic dataset (CSV + manifest)");
    s->add_option("--kind", synth.kind, "solar, wind, load, ev, or all")
        ->check(CLI::IsMember({"solar", "wind", "load", "ev", "all"}))
        ->capture_default_str();
    s->add_option("--days", synth.days, "Day windows per kind")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--resolution", synth.resolution)->check(resolution_of({"5min", "10min", "hourly"}))->capture_default_str();
    s->add_option("--seed", synth.seed)->capture_default_str();
    s->add_option("--out", synth.out, "CSV path (a directory with --kind all)")->required();
    s->add_option("--label", synth.label, "Class label (default: the kind's index)");

    TrainOptions train;
    auto* t = app.add_subcommand("train", "Train the extractor levels bottom-up and save the model");
    t->add_option("--data", train.data, "Labeled dataset manifests")->required()->check(CLI::ExistingFile);
    t->add_option("--levels", train.levels, "Levels to train, lowest first")->delimiter(',')->capture_default_str();
    t->add_option("--epochs", train.epochs)->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--batch-size", train.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--lr", train.lr)->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--seed", train.seed)->capture_default_str();
    t->add_option("--classes", train.classes, "Class count (default: largest label + 1)");
    t->add_option("--validation-fraction", train.validation_fraction)->check(CLI::Range(0.0, 0.9))->capture_default_str();
    t->add_flag("--no-mixed-inputs", train.no_mixed_inputs, "Upper levels train on extracted features only");
    t->add_option("--channels", train.channels, "Feature channels D (D-1 features + mean)")->capture_default_str();
    t->add_option("--width", train.width)->capture_default_str();
    t->add_option("--blocks", train.blocks)->capture_default_str();
    t->add_flag("--average-pool", train.average_pool);
    t->add_option("--out", train.out, "Model artifact path")->required();
    t->add_option("--history", train.history, "Loss history CSV");
    t->add_option("--log", train.log, "JSON-lines training log");
    t->add_flag("--quiet", train.quiet, "No per-epoch lines on stdout");

    EvaluateOptions eval;
    auto* e = app.add_subcommand("evaluate", "Score dataset B against reference dataset A");
    e->add_option("--model", eval.model, "Model artifact (default: $FPD_MODEL)");
    e->add_option("--a", eval.a, "Reference dataset manifest")->required()->check(CLI::ExistingFile);
    e->add_option("--b", eval.b, "Candidate dataset manifest")->required()->check(CLI::ExistingFile);
    e->add_option("--entry,--resample-to", eval.entry, "Resolution both sets enter the hierarchy at")
        ->check(resolution_of({"5min", "hourly", "daily", "monthly"}));
    e->add_option("--target", eval.target)->check(resolution_of({"hourly", "daily", "monthly", "yearly"}))->capture_default_str();
    e->add_option("--metrics", eval.metrics, "Comma list or 'all'")->capture_default_str();
    e->add_option("--seed", eval.seed)->capture_default_str();
    e->add_option("--pairing", eval.pairing, "MAPE pairing")->check(CLI::IsMember({"index", "random"}))->capture_default_str();
    e->add_option("--bandwidth", eval.bandwidth, "RBF bandwidth (default: median pairwise distance)")->check(CLI::PositiveNumber);
    e->add_flag("--textbook-mmd", eval.textbook_mmd, "MMD without the mean-difference term");
    e->add_option("--out", eval.out, "Report JSON path (also printed)");

    DisturbOptions dist;
    auto* d = app.add_subcommand("disturb", "Apply a disturbance (or a preset grid) to a dataset");
    d->add_option("--data", dist.data, "Dataset manifest")->required()->check(CLI::ExistingFile);
    auto* kind_opt = d->add_option("--kind", dist.kind)->check(kDisturbanceKind);
    auto* alpha_opt = d->add_option("--alpha", dist.alpha, "Disturbance level");
    d->add_option("--seed", dist.seed)->capture_default_str();
    d->add_option("--aux", dist.aux, "Contaminating dataset manifest")->check(CLI::ExistingFile);
    d->add_flag("--point", dist.point, "Point-wise contamination");
    d->add_option("--low", dist.low, "Violation value range, fraction of the daytime peak")->capture_default_str();
    d->add_option("--high", dist.high)->capture_default_str();
    auto* preset_opt = d->add_option("--preset", dist.preset, "Every level of a preset grid")->check(CLI::IsMember({"fig2", "fig3"}));
    d->add_option("--out", dist.out, "CSV path (a directory with --preset)")->required();
    kind_opt->excludes(preset_opt);
    alpha_opt->excludes(preset_opt);

    BenchmarkOptions bench;
    auto* b = app.add_subcommand("benchmark", "FPD and friends over a preset disturbance grid");
    b->add_option("--model", bench.model, "Model artifact (default: $FPD_MODEL)");
    b->add_option("--data", bench.data, "Reference dataset manifest")->required()->check(CLI::ExistingFile);
    b->add_option("--aux", bench.aux, "Contaminating dataset manifest")->check(CLI::ExistingFile);
    b->add_option("--preset", bench.preset)->check(CLI::IsMember({"fig2", "fig3"}))->capture_default_str();
    b->add_option("--seed", bench.seed, "First seed")->capture_default_str();
    b->add_option("--seeds", bench.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber)->capture_default_str();
    b->add_option("--entry,--resample-to", bench.entry)->check(resolution_of({"5min", "hourly", "daily", "monthly"}));
    b->add_option("--target", bench.target)->check(resolution_of({"hourly", "daily", "monthly", "yearly"}))->capture_default_str();
    b->add_option("--metrics", bench.metrics)->capture_default_str();
    b->add_option("--out-dir", bench.out_dir)->required();

    GradcheckOptions grad;
    auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every layer's backward pass");
    g->add_option("--seed", grad.seed)->capture_default_str();
    g->add_option("--seeds", grad.seeds)->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--tolerance", grad.tolerance)->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--corrupt", grad.corrupt)->group("");  // test hook

    try {
        std::vector<std::string> args = merge_config(raw_args);
        std::reverse(args.begin(), args.end());
        try {
            app.parse(args);
        } catch (const CLI::ParseError& pe) {
            const int code = app.exit(pe, out, err);
            return code == 0 ? kExitOk : kExitUsage;
        }
        if (*s) return cmd_synth(synth, out, err);
        if (*t) return cmd_train(train, out, err);
        if (*e) return cmd_evaluate(eval, out, err);
        if (*d) return cmd_disturb(dist, out, err);
        if (*b) return cmd_benchmark(bench, out, err);
        if (*g) return cmd_gradcheck(grad, out, err);
        return kExitUsage;
    } catch (const UsageError& ue) {
        err << "error: " << ue.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace fpd::cli
