#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "fpd/error.hpp"
#include "fpd/io/artifact.hpp"
#include "fpd/io/synth.hpp"
#include "fpd/nn/loss.hpp"
#include "fpd/training.hpp"

using namespace fpd;

namespace {

/// Direct definitions, written independently of the library.
RegressionTargets reference_targets(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0, lo = x[0], hi = x[0], zeros = 0.0;
    for (double v : x) {
        mean += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (v == 0.0) zeros += 1.0;
    }
    mean /= n;
    double m2 = 0.0, m3 = 0.0, lag = 0.0, tbar = (n - 1.0) / 2.0, stt = 0.0, sty = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double d = x[t] - mean;
        m2 += d * d;
        m3 += d * d * d;
        if (t + 1 < x.size()) lag += d * (x[t + 1] - mean);
        stt += (t - tbar) * (t - tbar);
        sty += (t - tbar) * d;
    }
    const double var = m2 / n;
    const double skew = var > 0.0 ? (m3 / n) / std::pow(var, 1.5) : 0.0;
    const double ac = m2 > 0.0 ? lag / m2 : 0.0;
    return {mean, std::sqrt(var), lo, hi, hi - lo, sty / stt, ac, skew, zeros / n};
}

std::vector<std::vector<double>> body_parameters(const LevelModule& m) {
    std::vector<std::vector<double>> out;
    for (const nn::Parameter* p : m.body.parameter_view()) out.push_back(p->value);
    return out;
}

SeriesBatch two_class(std::size_t days, std::uint64_t seed) {
    const std::array kinds{io::SourceKind::Solar, io::SourceKind::Wind};
    return io::synth_corpus(kinds, days, Resolution::FiveMin, seed);
}

}  // namespace

TEST(RegressionTargets, ConstantAndRamp) {
    const std::vector<double> fives(12, 5.0);
    const RegressionTargets c = regression_targets(fives);
    const RegressionTargets expected{5, 0, 5, 5, 0, 0, 0, 0, 0};
    for (std::size_t k = 0; k < kRegressionTargets; ++k) EXPECT_EQ(c[k], expected[k]) << kRegressionTargetNames[k];

    std::vector<double> ramp(12);
    for (std::size_t t = 0; t < 12; ++t) ramp[t] = static_cast<double>(t);
    const RegressionTargets r = regression_targets(ramp);
    EXPECT_NEAR(r[5], 1.0, 1e-14);
    EXPECT_EQ(r[4], 11.0);
    EXPECT_THROW(regression_targets(std::vector<double>{1.0}), ArgumentError);
}

TEST(RegressionTargets, MatchDirectFormulas) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(2 + trial % 30);
        for (double& v : x) v = trial % 3 == 0 ? std::max(0.0, g(rng)) : g(rng);
        const RegressionTargets a = regression_targets(x), b = reference_targets(x);
        for (std::size_t k = 0; k < kRegressionTargets; ++k)
            EXPECT_NEAR(a[k], b[k], 1e-12 * (1.0 + std::abs(b[k]))) << kRegressionTargetNames[k];
        EXPECT_GE(a[1], 0.0);
        EXPECT_GE(a[8], 0.0);
        EXPECT_LE(a[8], 1.0);
    }
}

TEST(JointLoss, HandCases) {
    nn::Tensor3 reg(nn::Shape{1, 9, 1});
    std::vector<double> targets(9, 0.0);
    nn::Tensor3 confident(nn::Shape{1, 2, 1});
    confident.at(0, 0, 0) = 60.0;
    const std::vector<int> label{0};
    EXPECT_NEAR(joint_loss(reg, confident, targets, label).total, 0.0, 1e-20);

    const nn::Tensor3 uniform(nn::Shape{1, 2, 1});
    const JointLoss l = joint_loss(reg, uniform, targets, label);
    EXPECT_NEAR(l.total, std::log(2.0), 1e-15);
    EXPECT_THROW(joint_loss(reg, uniform, std::vector<double>(8, 0.0), label), DimensionError);
}

TEST(JointLoss, DecomposesIntoStandaloneTermsAndMatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    const std::size_t b = 6, k = 9, c = 4;
    nn::Tensor3 reg(nn::Shape{b, k, 1}), logits(nn::Shape{b, c, 1});
    for (double& v : reg.data()) v = g(rng);
    for (double& v : logits.data()) v = g(rng);
    std::vector<double> targets(b * k);
    for (double& v : targets) v = g(rng);
    const std::vector<int> labels{0, 3, 1, 2, 2, 0};

    const JointLoss jl = joint_loss(reg, logits, targets, labels);
    double mse = 0.0, ce = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        mse += nn::mse(reg.sample(i), std::span<const double>(targets).subspan(i * k, k)).loss;
        ce += nn::softmax_cross_entropy(logits.sample(i), static_cast<std::size_t>(labels[i])).loss;
    }
    EXPECT_EQ(jl.mse_term, mse * (1.0 / b));
    EXPECT_EQ(jl.ce_term, ce * (1.0 / b));
    EXPECT_EQ(jl.total, jl.mse_term + jl.ce_term);

    const double h = 1e-6;
    for (std::size_t j = 0; j < reg.data().size(); ++j) {
        nn::Tensor3 p = reg, m = reg;
        p.data()[j] += h;
        m.data()[j] -= h;
        const double num = (joint_loss(p, logits, targets, labels).total - joint_loss(m, logits, targets, labels).total) / (2 * h);
        EXPECT_NEAR(jl.grad_regression.data()[j], num, 1e-6);
    }
    for (std::size_t j = 0; j < logits.data().size(); ++j) {
        nn::Tensor3 p = logits, m = logits;
        p.data()[j] += h;
        m.data()[j] -= h;
        const double num = (joint_loss(reg, p, targets, labels).total - joint_loss(reg, m, targets, labels).total) / (2 * h);
        EXPECT_NEAR(jl.grad_classification.data()[j], num, 1e-6);
    }
}

TEST(TrainLevel, ZeroEpochsKeepsInitialization) {
    TrainConfig cfg = fixture::small_config(0);
    cfg.classes = 2;
    ExtractorStack stack = ExtractorStack::create(ArchitectureConfig{}, cfg.levels, cfg.seed);
    const auto before = body_parameters(stack.module(Resolution::Hourly));
    const std::vector<SeriesBatch> data{two_class(3, 1)};
    train_level(stack, Resolution::Hourly, data, cfg);
    EXPECT_EQ(body_parameters(stack.module(Resolution::Hourly)), before);
}

TEST(TrainLevel, TwoClassHeldOutAccuracy) {
    TrainConfig cfg;
    cfg.seed = 3;
    cfg.classes = 2;
    ExtractorStack stack = ExtractorStack::create(ArchitectureConfig{}, cfg.levels, cfg.seed);
    const std::vector<SeriesBatch> data{two_class(100, 1)};
    const auto history = train_level(stack, Resolution::Hourly, data, cfg);
    EXPECT_EQ(history.size(), cfg.epochs);
    for (const EpochRecord& r : history) EXPECT_TRUE(std::isfinite(r.loss));

    const LevelDataset held_out = prepare_level_dataset(stack, Resolution::Hourly, two_class(10, 99));
    EXPECT_GT(head_accuracy(stack.module(Resolution::Hourly), held_out.inputs, held_out.labels), 0.9);
}

TEST(TrainLevel, SameSeedSameWeightsAndHistory) {
    std::vector<std::string> logs[2];
    std::vector<std::uint8_t> bytes[2];
    for (int run = 0; run < 2; ++run) {
        TrainConfig cfg = fixture::small_config(2);
        ExtractorStack stack = ExtractorStack::create(ArchitectureConfig{}, cfg.levels, cfg.seed);
        const std::vector<SeriesBatch> data{io::synth_corpus(
            std::array{io::SourceKind::Solar, io::SourceKind::Wind, io::SourceKind::Load, io::SourceKind::Ev},
            4, Resolution::FiveMin, 7)};
        for (Resolution lv : cfg.levels)
            for (const EpochRecord& r : train_level(stack, lv, data, cfg)) logs[run].push_back(r.to_json().dump());
        bytes[run] = io::serialize_stack(finalize(stack));
    }
    EXPECT_EQ(logs[0], logs[1]);
    EXPECT_EQ(bytes[0], bytes[1]);
}

TEST(TrainLevel, LowerLevelsStayFrozenAndOrderIsEnforced) {
    TrainConfig cfg = fixture::small_config(1);
    ExtractorStack stack = ExtractorStack::create(ArchitectureConfig{}, cfg.levels, cfg.seed);
    const SeriesBatch corpus = io::synth_corpus(
        std::array{io::SourceKind::Solar, io::SourceKind::Wind, io::SourceKind::Load, io::SourceKind::Ev}, 3,
        Resolution::FiveMin, 7);
    const std::vector<SeriesBatch> data{corpus};
    EXPECT_THROW(train_level(stack, Resolution::Daily, data, cfg), StateError);

    train_level(stack, Resolution::Hourly, data, cfg);
    const auto hourly = body_parameters(stack.module(Resolution::Hourly));
    std::vector<std::vector<double>> running;
    for (auto* b : stack.module(Resolution::Hourly).body.buffers()) running.push_back(*b);
    train_level(stack, Resolution::Daily, training_views(corpus, Resolution::Daily, true), cfg);
    EXPECT_EQ(body_parameters(stack.module(Resolution::Hourly)), hourly);
    std::vector<std::vector<double>> after;
    for (auto* b : stack.module(Resolution::Hourly).body.buffers()) after.push_back(*b);
    EXPECT_EQ(after, running);
}

TEST(TrainLevel, NonFiniteLossAborts) {
    TrainConfig cfg = fixture::small_config(3);
    cfg.lr = 1e300;
    cfg.classes = 2;
    ExtractorStack stack = ExtractorStack::create(ArchitectureConfig{}, cfg.levels, cfg.seed);
    const std::vector<SeriesBatch> data{two_class(3, 1)};
    EXPECT_THROW(train_level(stack, Resolution::Hourly, data, cfg), NumericError);
}

TEST(Finalize, DropsHeadsIsIdempotentAndNeedsTraining) {
    ExtractorStack stack = fixture::train_small(3, 1);
    EXPECT_TRUE(stack.frozen());
    for (const LevelModule* m : stack.modules()) {
        EXPECT_FALSE(m->regression_head.has_value());
        EXPECT_FALSE(m->classification_head.has_value());
    }
    const auto bytes = io::serialize_stack(stack);
    const std::string version = stack.version();
    finalize(stack);
    EXPECT_EQ(stack.version(), version);
    EXPECT_EQ(io::serialize_stack(stack), bytes);
    EXPECT_EQ(extract_hierarchical(stack, io::synth_ev(2, Resolution::FiveMin, 1), Resolution::Daily).size(), 2u);

    ExtractorStack untrained = ExtractorStack::create(ArchitectureConfig{}, {Resolution::Hourly}, 0);
    EXPECT_THROW(finalize(untrained), StateError);
    EXPECT_THROW(train_level(stack, Resolution::Hourly, std::vector<SeriesBatch>{two_class(1, 1)}, fixture::small_config(1)),
                 StateError);
}

TEST(TrainTransient, SagVersusSwellAndAmplitudes) {
    const std::array mix{io::FaultType::Sag, io::FaultType::Swell};
    const io::TransientSet train = io::synth_transient(160, 1, mix);
    const io::TransientSet test = io::synth_transient(60, 2, mix);
    TrainConfig cfg;
    cfg.seed = 3;
    cfg.batch_size = 16;
    ExtractorStack stack = ExtractorStack::create(ArchitectureConfig{}, {Resolution::Hourly}, 0);
    train_transient(stack, train.batch, train.min_amplitude, train.max_amplitude, cfg);
    const LevelModule& m = stack.transient();

    const nn::Tensor3 x(nn::Shape{test.batch.samples, 3, 960}, test.batch.values);
    EXPECT_GT(head_accuracy(m, x, test.batch.labels), 0.9);

    // Regression head works on z-scored targets: beat the constant predictor.
    const nn::Tensor3 pred = m.regression_head->infer(infer_chunked(m.body, x, 64));
    for (std::size_t j = 0; j < 2; ++j) {
        const auto& truth = j == 0 ? test.min_amplitude : test.max_amplitude;
        double mean = 0.0;
        for (double v : truth) mean += v;
        mean /= static_cast<double>(truth.size());
        double mse = 0.0, var = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double p = pred.sample(i)[j] * m.scaler.scale[j] + m.scaler.mean[j];
            mse += (p - truth[i]) * (p - truth[i]);
            var += (truth[i] - mean) * (truth[i] - mean);
        }
        EXPECT_LT(mse, var) << (j == 0 ? "min" : "max");
    }
    EXPECT_THROW(train_transient(stack, io::synth_solar(2, Resolution::FiveMin, 1), {}, {}, cfg), DimensionError);
}
