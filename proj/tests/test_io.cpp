#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "fpd/error.hpp"
#include "fpd/io/artifact.hpp"
#include "fpd/io/csv.hpp"
#include "fpd/io/resample.hpp"
#include "fpd/io/synth.hpp"

using namespace fpd;
using namespace fpd::io;

namespace {

std::string write_day_csv(const std::filesystem::path& dir, std::size_t rows, bool bad_row) {
    const auto path = dir / "day.csv";
    std::ofstream f(path);
    f << "timestamp,value\n";
    const std::int64_t start = default_start_minute();
    for (std::size_t t = 0; t < rows; ++t) {
        f << format_timestamp(start + static_cast<std::int64_t>(5 * t)) << ',' << 0.001 * t << '\n';
        if (bad_row && t == 100) f << format_timestamp(start + 5 * 100 + 2) << ",not-a-number\n";
    }
    return path.string();
}

DatasetManifest manifest_for(const std::string& path, Resolution r = Resolution::FiveMin) {
    DatasetManifest m;
    m.path = path;
    m.resolution = r;
    return m;
}

SeriesBatch random_batch(std::size_t n, std::size_t length, Resolution r, std::uint64_t seed) {
    SeriesBatch b = SeriesBatch::zeros(n, length, r);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (double& v : b.values) v = g(rng);
    return b;
}

double lag1_autocorrelation(std::span<const double> x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        den += (x[t] - mean) * (x[t] - mean);
        if (t + 1 < x.size()) num += (x[t] - mean) * (x[t + 1] - mean);
    }
    return num / den;
}

}  // namespace

TEST(Csv, ParsesQuotingAndLineEnds) {
    const auto recs = parse_csv("a,\"b,c\",\"say \"\"hi\"\"\"\r\n1,2,3\n");
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0], (std::vector<std::string>{"a", "b,c", "say \"hi\""}));
    EXPECT_EQ(recs[1], (std::vector<std::string>{"1", "2", "3"}));
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("q\""), "\"q\"\"\"");
    EXPECT_THROW(parse_csv("\"open"), FormatError);
}

TEST(Csv, TimestampRoundTrip) {
    EXPECT_EQ(parse_timestamp("1970-01-01 00:00"), 0);
    EXPECT_EQ(parse_timestamp("2020-01-01T00:05:00"), default_start_minute() + 5);
    EXPECT_EQ(format_timestamp(parse_timestamp("2024-02-29 23:55")), "2024-02-29 23:55");
    EXPECT_THROW(parse_timestamp("2020-13-01 00:00"), FormatError);
    EXPECT_THROW(parse_timestamp("yesterday"), FormatError);
}

TEST(LoadCsv, SingleDayIsOneWindow) {
    const auto dir = fixture::scratch("single_day");
    LoadReport rep;
    const SeriesBatch b = load_csv(manifest_for(write_day_csv(dir, 288, false)), &rep);
    EXPECT_EQ(b.samples, 1u);
    EXPECT_EQ(b.length, 288u);
    EXPECT_EQ(rep.rows, 288u);
    EXPECT_EQ(rep.dropped_rows, 0u);
    EXPECT_DOUBLE_EQ(b.at(0, 287), 0.287);
}

TEST(LoadCsv, BadRowIsDroppedAndReported) {
    const auto dir = fixture::scratch("bad_row");
    LoadReport rep;
    const SeriesBatch b = load_csv(manifest_for(write_day_csv(dir, 288, true)), &rep);
    EXPECT_EQ(b.samples, 1u);
    EXPECT_EQ(rep.rows, 289u);
    EXPECT_EQ(rep.dropped_rows, 1u);
    EXPECT_NE(rep.summary().find("1 rows dropped"), std::string::npos);
}

TEST(LoadCsv, IncompleteDayIsCountedNotSilent) {
    const auto dir = fixture::scratch("partial");
    LoadReport rep;
    EXPECT_THROW(load_csv(manifest_for(write_day_csv(dir, 200, false)), &rep), FormatError);
    EXPECT_THROW(load_csv(manifest_for((dir / "missing.csv").string())), FormatError);
}

TEST(LoadCsv, WriteLoadRoundTrip) {
    const auto dir = fixture::scratch("round_trip");
    for (Resolution r : {Resolution::FiveMin, Resolution::TenMin, Resolution::Hourly}) {
        SeriesBatch x = synth_load(5, r, 11);
        for (std::size_t k = 0; k < x.values.size(); ++k) x.values[k] += 1e-9 * std::sin(double(k));
        const auto path = (dir / ("x" + std::string(to_string(r)) + ".csv")).string();
        write_csv(x, path);
        const SeriesBatch y = load_csv(manifest_for(path, r));
        ASSERT_EQ(y.samples, x.samples);
        ASSERT_EQ(y.length, x.length);
        for (std::size_t k = 0; k < x.values.size(); ++k) EXPECT_NEAR(y.values[k], x.values[k], 1e-12);
        EXPECT_EQ(y.start_minutes, x.start_minutes);
    }
}

TEST(LoadCsv, ManifestRoundTrip) {
    const auto dir = fixture::scratch("manifest");
    DatasetManifest m = manifest_for("data.csv", Resolution::Hourly);
    m.label = 2;
    m.normalization = Normalization::PerDataset;
    m.night = NightWindow{21, 6};
    m.save((dir / "m.json").string());
    const DatasetManifest back = DatasetManifest::load((dir / "m.json").string());
    EXPECT_EQ(back.path, (dir / "data.csv").string());
    EXPECT_EQ(back.resolution, Resolution::Hourly);
    EXPECT_EQ(back.label, 2);
    EXPECT_EQ(back.normalization, Normalization::PerDataset);
    EXPECT_EQ(back.night, (NightWindow{21, 6}));
}

TEST(Normalization, PerSampleAndPerDataset) {
    SeriesBatch b = SeriesBatch::zeros(2, 3, Resolution::Hourly);
    b.values = {1, 2, 4, -1, 0.5, 0.25};
    SeriesBatch s = b;
    apply_normalization(s, Normalization::PerSample);
    EXPECT_EQ(s.values, (std::vector<double>{0.25, 0.5, 1, -1, 0.5, 0.25}));
    SeriesBatch d = b;
    apply_normalization(d, Normalization::PerDataset);
    EXPECT_EQ(d.values, (std::vector<double>{0.25, 0.5, 1, -0.25, 0.125, 0.0625}));
}

TEST(Resample, HandCases) {
    SeriesBatch ten = SeriesBatch::zeros(1, 2, Resolution::TenMin);
    ten.values = {0.0, 2.0};
    const SeriesBatch five = resample(ten, Resolution::FiveMin);
    EXPECT_EQ(five.values, (std::vector<double>{0.0, 1.0, 2.0, 2.0}));

    SeriesBatch c = SeriesBatch::zeros(3, 24, Resolution::Hourly);
    for (double& v : c.values) v = 0.7;
    for (double v : resample(c, Resolution::FiveMin).values) EXPECT_DOUBLE_EQ(v, 0.7);
    EXPECT_EQ(resample(c, Resolution::FiveMin).length, 288u);
    EXPECT_EQ(resample(c, Resolution::TenMin).length, 144u);
    EXPECT_THROW(resample(five, Resolution::Hourly), ArgumentError);
}

TEST(Resample, GridValuesRecoveredAndLinear) {
    const SeriesBatch x = random_batch(4, 24, Resolution::Hourly, 1);
    const SeriesBatch y = random_batch(4, 24, Resolution::Hourly, 2);
    const SeriesBatch up = resample(x, Resolution::FiveMin);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t t = 0; t < 24; ++t) EXPECT_EQ(up.at(i, 12 * t), x.at(i, t));

    const double a = 0.3, b = -1.7;
    SeriesBatch mix = x;
    for (std::size_t k = 0; k < mix.values.size(); ++k) mix.values[k] = a * x.values[k] + b * y.values[k];
    const SeriesBatch lhs = resample(mix, Resolution::FiveMin);
    const SeriesBatch ry = resample(y, Resolution::FiveMin);
    for (std::size_t k = 0; k < lhs.values.size(); ++k)
        EXPECT_NEAR(lhs.values[k], a * up.values[k] + b * ry.values[k], 1e-12);
}

TEST(Resample, AggregateMeanIsBlockAverage) {
    const SeriesBatch x = random_batch(2, 288, Resolution::FiveMin, 3);
    const SeriesBatch h = aggregate_mean(x, Resolution::Hourly);
    ASSERT_EQ(h.length, 24u);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t t = 0; t < 24; ++t) {
            double s = 0.0;
            for (std::size_t k = 0; k < 12; ++k) s += x.at(i, 12 * t + k);
            EXPECT_NEAR(h.at(i, t), s / 12.0, 1e-15);
        }
}

TEST(Synth, RangesDeterminismAndShape) {
    for (SourceKind k : {SourceKind::Solar, SourceKind::Wind, SourceKind::Load, SourceKind::Ev}) {
        for (Resolution r : {Resolution::FiveMin, Resolution::TenMin, Resolution::Hourly}) {
            const SeriesBatch b = synth_source(k, 10, r, 4);
            EXPECT_EQ(b.samples, 10u);
            EXPECT_EQ(b.length, 24 * intervals_per_hour(r));
            for (double v : b.values) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
            EXPECT_EQ(synth_source(k, 10, r, 4).values, b.values);
            EXPECT_NE(synth_source(k, 10, r, 5).values, b.values);
        }
    }
    EXPECT_THROW(synth_solar(0, Resolution::FiveMin, 0), ArgumentError);
    EXPECT_THROW(synth_solar(3, Resolution::Daily, 0), ArgumentError);
}

TEST(Synth, SolarIsZeroAtNight) {
    const SeriesBatch b = synth_solar(30, Resolution::FiveMin, 8);
    for (std::size_t i = 0; i < b.samples; ++i) {
        double peak = 0.0;
        for (std::size_t t = 0; t < b.length; ++t) {
            if (b.night.contains(t / 12.0)) EXPECT_EQ(b.at(i, t), 0.0);
            peak = std::max(peak, b.at(i, t));
        }
        EXPECT_GT(peak, 0.0);
    }
}

TEST(Synth, WindIsPersistentAtFiveMinutes) {
    // Over the whole series; a single day pinned at rated power has almost no
    // variance, so its own coefficient is dominated by a few dips.
    for (std::uint64_t seed : {2u, 5u, 9u}) {
        const SeriesBatch b = synth_wind(30, Resolution::FiveMin, seed);
        EXPECT_GT(lag1_autocorrelation(b.values), 0.8);
    }
}

TEST(Synth, CorpusLabelsFollowKinds) {
    const std::array kinds{SourceKind::Wind, SourceKind::Ev};
    const SeriesBatch c = synth_corpus(kinds, 3, Resolution::Hourly, 1);
    EXPECT_EQ(c.labels, (std::vector<int>{1, 1, 1, 3, 3, 3}));
}

TEST(Synth, TransientEventsAndLabels) {
    const std::array mix{FaultType::None, FaultType::Sag, FaultType::Swell, FaultType::FrequencyDip};
    const TransientSet set = synth_transient(40, 6, mix);
    const SeriesBatch& b = set.batch;
    ASSERT_EQ(b.channels, 3u);
    ASSERT_EQ(b.length, 960u);
    for (std::size_t i = 0; i < b.samples; ++i) {
        const auto mag = b.channel(i, 0);
        const auto [lo, hi] = std::minmax_element(mag.begin(), mag.end());
        EXPECT_DOUBLE_EQ(set.min_amplitude[i], *lo);
        EXPECT_DOUBLE_EQ(set.max_amplitude[i], *hi);
        for (double v : b.sample(i)) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.5);
        }
        const auto fault = static_cast<FaultType>(b.labels[i]);
        if (fault == FaultType::Sag) EXPECT_LT(*lo, 1.0);
        if (fault == FaultType::Swell) EXPECT_GT(*hi, 1.0);
        if (fault == FaultType::None) {
            EXPECT_NEAR(*lo, 1.0, 0.05);
            EXPECT_NEAR(*hi, 1.0, 0.05);
        }
    }
    EXPECT_THROW(synth_transient(4, 0, std::span<const FaultType>{}), ArgumentError);
}

TEST(Artifact, RoundTripGivesIdenticalFeatures) {
    const ExtractorStack& stack = fixture::small_stack();
    const auto dir = fixture::scratch("artifact");
    const auto path = (dir / "model.fpd").string();
    save_stack(stack, path);
    const ExtractorStack back = load_stack(path);
    EXPECT_EQ(back.version(), stack.version());
    EXPECT_EQ(serialize_stack(back), serialize_stack(stack));

    const SeriesBatch x = synth_wind(6, Resolution::FiveMin, 99);
    const FeatureSet a = extract_hierarchical(stack, x, Resolution::Daily);
    const FeatureSet b = extract_hierarchical(back, x, Resolution::Daily);
    ASSERT_EQ(a.rows.data().size(), b.rows.data().size());
    for (std::size_t k = 0; k < a.rows.data().size(); ++k) EXPECT_EQ(a.rows.data()[k], b.rows.data()[k]);
}

TEST(Artifact, CorruptionAndVersionAreRejected) {
    const std::vector<std::uint8_t> bytes = serialize_stack(fixture::small_stack());

    std::vector<std::uint8_t> corrupt = bytes;
    corrupt[corrupt.size() / 2] ^= 0x10;
    EXPECT_THROW(deserialize_stack(corrupt), ChecksumError);

    std::vector<std::uint8_t> newer = bytes;
    newer[8] = static_cast<std::uint8_t>(kArtifactVersion + 1);
    EXPECT_THROW(deserialize_stack(newer), VersionError);

    std::vector<std::uint8_t> magic = bytes;
    magic[0] = 'X';
    EXPECT_THROW(deserialize_stack(magic), FormatError);
    EXPECT_THROW(deserialize_stack({bytes.begin(), bytes.begin() + 20}), FormatError);

    ExtractorStack unfinished = ExtractorStack::create(ArchitectureConfig{}, {Resolution::Hourly}, 0);
    EXPECT_THROW(save_stack(unfinished, (fixture::scratch("unfinished") / "m.fpd").string()), StateError);
}
