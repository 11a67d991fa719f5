#include "fpd/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <zlib.h>

#include "fpd/error.hpp"
#include "fpd/io/resample.hpp"
#include "fpd/nn/adam.hpp"
#include "fpd/nn/loss.hpp"

namespace fpd {

namespace {

std::string name_of(Resolution r) {
    return std::string(to_string(r));
}

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void append_targets(const LevelInput& in, std::vector<double>& out) {
    const std::size_t last = in.data.channels() - 1;
    for (std::size_t i = 0; i < in.segments(); ++i) {
        const auto s = in.data.sample(i).subspan(last * in.data.length(), in.valid[i]);
        const RegressionTargets t = regression_targets(s);
        out.insert(out.end(), t.begin(), t.end());
    }
}

nn::Tensor3 concat(const std::vector<nn::Tensor3>& parts) {
    std::size_t n = 0;
    for (const auto& p : parts) n += p.batch();
    nn::Tensor3 out(n, parts.front().channels(), parts.front().length());
    std::size_t off = 0;
    for (const auto& p : parts) {
        if (p.channels() != out.channels() || p.length() != out.length()) {
            throw DimensionError("training data views disagree in input shape");
        }
        std::copy(p.data().begin(), p.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(off));
        off += p.size();
    }
    return out;
}

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

Split split_indices(std::size_t n, double fraction, nn::Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    if (fraction > 0.0 && n_val == 0 && n >= 10) n_val = 1;
    Split s;
    s.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    std::sort(s.validation.begin(), s.validation.end());
    return s;
}

TargetScaler fit_scaler(const std::vector<double>& targets, std::size_t k,
                        const std::vector<std::size_t>& rows) {
    TargetScaler s;
    s.mean.assign(k, 0.0);
    s.scale.assign(k, 1.0);
    if (rows.empty()) return s;
    const double n = static_cast<double>(rows.size());
    for (std::size_t r : rows) {
        for (std::size_t j = 0; j < k; ++j) s.mean[j] += targets[r * k + j];
    }
    for (double& m : s.mean) m /= n;
    std::vector<double> var(k, 0.0);
    for (std::size_t r : rows) {
        for (std::size_t j = 0; j < k; ++j) {
            const double d = targets[r * k + j] - s.mean[j];
            var[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < k; ++j) {
        const double sd = std::sqrt(var[j] / n);
        s.scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

Evaluation evaluate_rows(const LevelModule& m, const nn::Tensor3& inputs,
                         const std::vector<int>& labels, const std::vector<double>& targets,
                         std::size_t k, const std::vector<std::size_t>& rows) {
    if (rows.empty()) return {};
    const nn::Tensor3 x = nn::gather(inputs, rows);
    const nn::Tensor3 f = infer_chunked(m.body, x);
    const nn::Tensor3 reg = m.regression_head->infer(f);
    const nn::Tensor3 logits = m.classification_head->infer(f);
    std::vector<double> t;
    std::vector<int> l;
    for (std::size_t r : rows) {
        t.insert(t.end(), targets.begin() + static_cast<std::ptrdiff_t>(r * k),
                 targets.begin() + static_cast<std::ptrdiff_t>((r + 1) * k));
        l.push_back(labels[r]);
    }
    const JointLoss jl = joint_loss(reg, logits, t, l);
    return {jl.total, static_cast<double>(jl.correct) / static_cast<double>(rows.size())};
}

/// Shared optimisation loop for steady-state levels and the transient module.
std::vector<EpochRecord> fit_module(LevelModule& m, const nn::Tensor3& inputs,
                                    const std::vector<int>& labels,
                                    const std::vector<double>& raw_targets, std::size_t k,
                                    const TrainConfig& cfg, std::uint64_t salt,
                                    const EpochSink& sink) {
    const std::size_t n = inputs.batch();
    if (n < 2) {
        throw ArgumentError("training " + name_of(m.level) + ": need at least 2 samples");
    }
    if (labels.size() != n || raw_targets.size() != n * k) {
        throw DimensionError("training " + name_of(m.level) + ": labels/targets do not match inputs");
    }
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= cfg.classes) {
            throw ArgumentError("training " + name_of(m.level) + ": label " + std::to_string(l) +
                                " outside [0, " + std::to_string(cfg.classes) + ")");
        }
    }

    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(salt)};
    nn::Rng rng(seq);
    const Split split = split_indices(n, cfg.validation_fraction, rng);

    m.scaler = fit_scaler(raw_targets, k, split.train);
    std::vector<double> targets(raw_targets.size());
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
            targets[r * k + j] = (raw_targets[r * k + j] - m.scaler.mean[j]) / m.scaler.scale[j];
        }
    }

    const std::size_t features = m.body.output_shape({1, inputs.channels(), inputs.length()}).per_sample();
    m.classes = cfg.classes;
    m.regression_head.emplace(features, k);
    m.classification_head.emplace(features, cfg.classes);
    m.regression_head->set_name(name_of(m.level) + ".regression_head");
    m.classification_head->set_name(name_of(m.level) + ".classification_head");
    m.regression_head->reset_parameters(rng);
    m.classification_head->reset_parameters(rng);

    std::vector<nn::Parameter*> params = m.body.parameters();
    for (auto* p : m.regression_head->parameters()) params.push_back(p);
    for (auto* p : m.classification_head->parameters()) params.push_back(p);
    nn::AdamState state;
    const nn::AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};

    std::vector<EpochRecord> history;
    std::vector<std::size_t> order = split.train;
    std::vector<double> batch_targets;
    std::vector<int> batch_labels;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochRecord rec;
        rec.level = name_of(m.level);
        rec.epoch = epoch;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, end - start);
            batch_targets.clear();
            batch_labels.clear();
            for (std::size_t r : rows) {
                batch_targets.insert(batch_targets.end(), targets.begin() + static_cast<std::ptrdiff_t>(r * k),
                                     targets.begin() + static_cast<std::ptrdiff_t>((r + 1) * k));
                batch_labels.push_back(labels[r]);
            }
            const nn::Tensor3 x = nn::gather(inputs, rows);

            for (auto* p : params) std::fill(p->grad.begin(), p->grad.end(), 0.0);
            const nn::Tensor3 f = m.body.forward(x, nn::Mode::Train);
            const nn::Tensor3 reg = m.regression_head->forward(f, nn::Mode::Train);
            const nn::Tensor3 logits = m.classification_head->forward(f, nn::Mode::Train);
            const JointLoss jl = joint_loss(reg, logits, batch_targets, batch_labels);
            if (!std::isfinite(jl.total)) {
                throw NumericError("training " + name_of(m.level) + ": non-finite loss in epoch " +
                                   std::to_string(epoch));
            }
            nn::Tensor3 df = m.regression_head->backward(jl.grad_regression);
            const nn::Tensor3 dc = m.classification_head->backward(jl.grad_classification);
            for (std::size_t i = 0; i < df.size(); ++i) df.storage()[i] += dc.data()[i];
            m.body.backward(df);
            nn::adam_step(params, state, adam);

            const double b = static_cast<double>(rows.size());
            rec.mse += jl.mse_term * b;
            rec.ce += jl.ce_term * b;
            correct += jl.correct;
        }
        const double nt = static_cast<double>(std::max<std::size_t>(order.size(), 1));
        rec.mse /= nt;
        rec.ce /= nt;
        rec.loss = rec.mse + rec.ce;
        rec.accuracy = static_cast<double>(correct) / nt;
        const Evaluation ev = evaluate_rows(m, inputs, labels, targets, k, split.validation);
        rec.val_loss = ev.loss;
        rec.val_accuracy = ev.accuracy;
        history.push_back(rec);
        if (sink) sink(rec);
    }
    m.trained = true;
    return history;
}

void crc_bytes(uLong& crc, const void* data, std::size_t size) {
    crc = crc32(crc, static_cast<const Bytef*>(data), static_cast<uInt>(size));
}

void crc_doubles(uLong& crc, const std::vector<double>& v) {
    crc_bytes(crc, v.data(), v.size() * sizeof(double));
}

}  // namespace

RegressionTargets regression_targets(std::span<const double> x) {
    if (x.size() < 2) {
        throw ArgumentError("regression_targets: segment needs at least 2 points");
    }
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    double lo = x[0];
    double hi = x[0];
    std::size_t zeros = 0;
    for (double v : x) {
        mean += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (v == 0.0) ++zeros;
    }
    mean /= n;
    double m2 = 0.0;
    double m3 = 0.0;
    double lag = 0.0;
    double sty = 0.0;
    const double tmean = (n - 1.0) / 2.0;
    double stt = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double d = x[t] - mean;
        m2 += d * d;
        m3 += d * d * d;
        if (t + 1 < x.size()) lag += d * (x[t + 1] - mean);
        const double dt = static_cast<double>(t) - tmean;
        sty += dt * d;
        stt += dt * dt;
    }
    const double var = m2 / n;
    const bool constant = hi == lo;
    RegressionTargets r{};
    r[0] = mean;
    r[1] = std::sqrt(var);
    r[2] = lo;
    r[3] = hi;
    r[4] = hi - lo;
    r[5] = constant ? 0.0 : sty / stt;
    r[6] = constant ? 0.0 : lag / m2;
    r[7] = constant ? 0.0 : (m3 / n) / (var * std::sqrt(var));
    r[8] = static_cast<double>(zeros) / n;
    return r;
}

// ---- config -------------------------------------------------------------------

void TrainConfig::validate() const {
    if (!(lr > 0.0) || batch_size == 0 || classes < 2) {
        throw ArgumentError("train config: lr and batch size must be positive, classes >= 2");
    }
    if (targets != kRegressionTargets) {
        throw ArgumentError("train config: K must be " + std::to_string(kRegressionTargets));
    }
    if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
        throw ArgumentError("train config: validation fraction must be in [0, 1)");
    }
    for (Resolution l : levels) {
        if (!is_module_level(l)) {
            throw ArgumentError("train config: '" + name_of(l) + "' is not an extractor level");
        }
    }
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json lv = nlohmann::json::array();
    for (Resolution l : levels) lv.push_back(name_of(l));
    return {{"lr", lr},
            {"beta1", beta1},
            {"beta2", beta2},
            {"eps", eps},
            {"batch_size", batch_size},
            {"epochs", epochs},
            {"seed", seed},
            {"classes", classes},
            {"targets", targets},
            {"validation_fraction", validation_fraction},
            {"levels", lv},
            {"mixed_inputs", mixed_inputs}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.classes = j.value("classes", c.classes);
    c.targets = j.value("targets", c.targets);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.mixed_inputs = j.value("mixed_inputs", c.mixed_inputs);
    if (j.contains("levels")) {
        c.levels.clear();
        for (const auto& l : j.at("levels")) c.levels.push_back(parse_resolution(l.get<std::string>()));
    }
    c.validate();
    return c;
}

nlohmann::json EpochRecord::to_json() const {
    return {{"level", level},       {"epoch", epoch},       {"mse", mse},
            {"ce", ce},             {"loss", loss},         {"accuracy", accuracy},
            {"val_loss", val_loss}, {"val_accuracy", val_accuracy}};
}

// ---- loss -----------------------------------------------------------------------

JointLoss joint_loss(const nn::Tensor3& regression, const nn::Tensor3& logits,
                     std::span<const double> targets, std::span<const int> labels) {
    const std::size_t b = regression.batch();
    const std::size_t k = regression.channels() * regression.length();
    const std::size_t c = logits.channels() * logits.length();
    if (logits.batch() != b || labels.size() != b) {
        throw DimensionError("joint_loss: batch sizes of heads and labels differ");
    }
    if (targets.size() != b * k) {
        throw DimensionError("joint_loss: regression head emits " + std::to_string(k) +
                             " values per sample but targets hold " +
                             std::to_string(b == 0 ? 0 : targets.size() / b));
    }
    if (b == 0) {
        throw ArgumentError("joint_loss: empty batch");
    }
    JointLoss out;
    out.grad_regression = nn::Tensor3(regression.shape());
    out.grad_classification = nn::Tensor3(logits.shape());
    const double inv = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        if (labels[i] < 0) {
            throw ArgumentError("joint_loss: negative label");
        }
        const nn::LossResult r = nn::mse(regression.sample(i), targets.subspan(i * k, k));
        const nn::LossResult e =
            nn::softmax_cross_entropy(logits.sample(i), static_cast<std::size_t>(labels[i]));
        out.mse_term += r.loss;
        out.ce_term += e.loss;
        auto gr = out.grad_regression.sample(i);
        auto gc = out.grad_classification.sample(i);
        for (std::size_t j = 0; j < k; ++j) gr[j] = r.grad[j] * inv;
        for (std::size_t j = 0; j < c; ++j) gc[j] = e.grad[j] * inv;
        if (argmax(logits.sample(i)) == static_cast<std::size_t>(labels[i])) ++out.correct;
    }
    out.mse_term *= inv;
    out.ce_term *= inv;
    out.total = out.mse_term + out.ce_term;
    return out;
}

// ---- datasets -------------------------------------------------------------------

LevelDataset prepare_level_dataset(const ExtractorStack& stack, Resolution level,
                                   const SeriesBatch& data) {
    if (data.labels.size() != data.samples) {
        throw ArgumentError("training data for " + name_of(level) + " needs one label per window");
    }
    const Resolution input_res = module_input(level);
    const std::size_t d = stack.architecture().channels;
    LevelDataset ds;
    ds.level = level;
    LevelInput in;
    if (data.resolution == input_res) {
        in = build_input(nullptr, &data, level, d);
        ds.from_raw = in.segments();
    } else if (in_chain(data.resolution) && chain_rank(data.resolution) < chain_rank(input_res)) {
        for (Resolution lower : levels_between(data.resolution, input_res)) {
            if (!stack.has_level(lower) || !stack.module(lower).trained) {
                throw StateError("training " + name_of(level) + " from " + name_of(data.resolution) +
                                 " data needs a trained " + name_of(lower) + " level");
            }
        }
        const FeatureSet f = extract_hierarchical(stack, data, input_res);
        in = build_input(&f, nullptr, level, d);
        for (std::size_t w = 0; w < in.window_segments.size(); ++w) {
            in.labels.insert(in.labels.end(), in.window_segments[w], data.labels[w]);
        }
        ds.from_features = in.segments();
    } else {
        throw ArgumentError("cannot train the " + name_of(level) + " level on " +
                            name_of(data.resolution) + " data");
    }
    ds.labels = in.labels;
    append_targets(in, ds.targets);
    ds.inputs = std::move(in.data);
    return ds;
}

std::vector<SeriesBatch> training_views(const SeriesBatch& data, Resolution level, bool mixed) {
    std::vector<SeriesBatch> out{data};
    const Resolution input_res = module_input(level);
    if (mixed && input_res != Resolution::Daily && in_chain(data.resolution) &&
        chain_rank(data.resolution) < chain_rank(input_res)) {
        out.push_back(io::aggregate_mean(data, input_res));
    }
    return out;
}

// ---- training -------------------------------------------------------------------

std::vector<EpochRecord> train_level(ExtractorStack& stack, Resolution level,
                                     std::span<const SeriesBatch> data, const TrainConfig& config,
                                     const EpochSink& sink) {
    config.validate();
    if (stack.frozen()) {
        throw StateError("cannot train a finalized stack");
    }
    if (data.empty()) {
        throw ArgumentError("train_level: no training data");
    }
    LevelModule& m = stack.module(level);
    std::vector<nn::Tensor3> inputs;
    std::vector<int> labels;
    std::vector<double> targets;
    for (const SeriesBatch& b : data) {
        LevelDataset ds = prepare_level_dataset(stack, level, b);
        labels.insert(labels.end(), ds.labels.begin(), ds.labels.end());
        targets.insert(targets.end(), ds.targets.begin(), ds.targets.end());
        inputs.push_back(std::move(ds.inputs));
    }
    const nn::Tensor3 x = concat(inputs);
    inputs.clear();
    return fit_module(m, x, labels, targets, kRegressionTargets, config,
                      static_cast<std::uint64_t>(chain_rank(level)) + 1, sink);
}

std::vector<EpochRecord> train_transient(ExtractorStack& stack, const SeriesBatch& data,
                                         std::span<const double> min_amplitude,
                                         std::span<const double> max_amplitude,
                                         const TrainConfig& config, const EpochSink& sink) {
    config.validate();
    if (stack.frozen()) {
        throw StateError("cannot train a finalized stack");
    }
    if (data.channels != 3 || data.length != segment_length(Resolution::Transient)) {
        throw DimensionError("train_transient: samples must be 3 x 960");
    }
    if (data.labels.size() != data.samples || min_amplitude.size() != data.samples ||
        max_amplitude.size() != data.samples) {
        throw DimensionError("train_transient: need a fault label and min/max amplitude per sample");
    }
    if (!stack.has_transient()) {
        LevelModule m;
        m.level = Resolution::Transient;
        m.input_channels = 3;
        m.input_length = segment_length(Resolution::Transient);
        m.body = build_transient_body(stack.architecture());
        m.body.set_name("transient");
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed), 0x7a11u};
        nn::Rng rng(seq);
        m.body.reset_parameters(rng);
        stack.set_transient(std::move(m));
    }
    const nn::Tensor3 x(nn::Shape{data.samples, 3, data.length}, data.values);
    std::vector<double> targets;
    targets.reserve(2 * data.samples);
    for (std::size_t i = 0; i < data.samples; ++i) {
        targets.push_back(min_amplitude[i]);
        targets.push_back(max_amplitude[i]);
    }
    return fit_module(stack.transient(), x, data.labels, targets, 2, config, 100, sink);
}

double head_accuracy(const LevelModule& module, const nn::Tensor3& inputs,
                     std::span<const int> labels) {
    if (!module.classification_head) {
        throw StateError("head_accuracy: module has no classification head");
    }
    if (labels.size() != inputs.batch() || labels.empty()) {
        throw DimensionError("head_accuracy: one label per input required");
    }
    const nn::Tensor3 logits = module.classification_head->infer(infer_chunked(module.body, inputs));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (argmax(logits.sample(i)) == static_cast<std::size_t>(labels[i])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::uint32_t stack_checksum(const ExtractorStack& stack) {
    uLong crc = crc32(0L, Z_NULL, 0);
    const std::string arch = stack.architecture().to_json().dump();
    crc_bytes(crc, arch.data(), arch.size());
    for (const LevelModule* m : stack.modules()) {
        const std::string cfg = std::string(to_string(m->level)) + m->body.config().dump();
        crc_bytes(crc, cfg.data(), cfg.size());
        for (const nn::Parameter* p : m->body.parameter_view()) crc_doubles(crc, p->value);
        for (const auto* b : m->body.buffer_view()) crc_doubles(crc, *b);
        crc_doubles(crc, m->scaler.mean);
        crc_doubles(crc, m->scaler.scale);
    }
    return static_cast<std::uint32_t>(crc);
}

ExtractorStack& finalize(ExtractorStack& stack) {
    if (stack.frozen()) {
        return stack;
    }
    for (Resolution level : stack.schedule()) {
        if (!stack.has_level(level) || !stack.module(level).trained) {
            throw StateError("finalize: scheduled level '" + name_of(level) + "' is untrained");
        }
    }
    if (stack.has_transient() && !stack.transient().trained) {
        throw StateError("finalize: transient module is untrained");
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", stack_checksum(stack));
    stack.freeze(std::string("fpd-") + buf);
    return stack;
}

}  // namespace fpd
