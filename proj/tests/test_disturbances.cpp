#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fpd/disturbances.hpp"
#include "fpd/error.hpp"
#include "fpd/io/synth.hpp"
#include "fpd/metrics.hpp"
#include "oracles.hpp"

using namespace fpd;
using namespace fpd::disturb;

namespace {

/// Strictly positive random windows, so injected zeros are countable.
SeriesBatch positive_batch(std::size_t n, std::size_t length, std::uint64_t seed,
                           Resolution res = Resolution::FiveMin) {
    SeriesBatch b = SeriesBatch::zeros(n, length, res);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (double& v : b.values) v = u(rng);
    return b;
}

std::size_t zeros_in(const SeriesBatch& b, std::size_t i) {
    const auto s = b.sample(i);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), 0.0));
}

bool same_window(const SeriesBatch& a, std::size_t i, const SeriesBatch& b, std::size_t j) {
    const auto x = a.sample(i), y = b.sample(j);
    return std::equal(x.begin(), x.end(), y.begin());
}

}  // namespace

TEST(Disturbances, ZeroLevelIsBitwiseIdentityForEveryKind) {
    const SeriesBatch x = io::synth_solar(12, Resolution::FiveMin, 1);
    const SeriesBatch y = io::synth_wind(12, Resolution::FiveMin, 2);
    for (Kind k : all_kinds()) {
        if (k == Kind::MomentMatchedFabricate) continue;  // has no level
        Disturbance d;
        d.kind = k;
        d.alpha = 0.0;
        d.seed = 9;
        const SeriesBatch out = apply(d, x, &y).batch;
        EXPECT_EQ(out.values, x.values) << to_string(k);
        EXPECT_EQ(out.start_minutes, x.start_minutes);
    }
}

TEST(Disturbances, FixedKindLevelSeedIsDeterministic) {
    const SeriesBatch x = io::synth_solar(40, Resolution::FiveMin, 3);
    const SeriesBatch y = io::synth_load(40, Resolution::FiveMin, 4);
    for (const auto& levels : preset("fig2")) {
        for (double a : levels.alphas) {
            const Disturbance d{levels.kind, a, 17};
            EXPECT_EQ(apply(d, x, &y).batch.values, apply(d, x, &y).batch.values) << to_string(levels.kind) << a;
        }
    }
    const SeriesBatch h = io::synth_wind(60, Resolution::Hourly, 3);
    EXPECT_EQ(moment_matched_fabricate(h, 5).batch.values, moment_matched_fabricate(h, 5).batch.values);
}

TEST(GaussianNoise, VarianceFourOnManyPoints) {
    const SeriesBatch x = positive_batch(50, 288, 5);
    const SeriesBatch out = gaussian_noise(x, 4.0, 7);
    double sum = 0.0, sq = 0.0;
    const double n = static_cast<double>(x.values.size());
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        const double d = out.values[i] - x.values[i];
        sum += d;
        sq += d * d;
    }
    const double var = sq / n - (sum / n) * (sum / n);
    EXPECT_GE(x.values.size(), 10000u);
    EXPECT_NEAR(var, 4.0, 0.4);
    EXPECT_THROW(gaussian_noise(x, -1.0, 0), ArgumentError);
}

TEST(MissingData, ExactFloorCountPerWindow) {
    const SeriesBatch x = positive_batch(20, 288, 6);
    EXPECT_EQ(zeros_in(missing_data(x, 0.5, 1), 0), 144u);
    for (double a : {0.0, 0.1, 0.25, 0.5, 0.77, 1.0}) {
        const SeriesBatch out = missing_data(x, a, 3);
        for (std::size_t i = 0; i < x.samples; ++i) EXPECT_EQ(zeros_in(out, i), static_cast<std::size_t>(std::floor(a * 288)));
    }
    EXPECT_THROW(missing_data(x, 1.5, 0), ArgumentError);
}

TEST(MissingData, LevelsOfOneSeedAreNested) {
    const SeriesBatch x = positive_batch(5, 100, 7);
    const SeriesBatch low = missing_data(x, 0.1, 4);
    const SeriesBatch high = missing_data(x, 0.5, 4);
    for (std::size_t k = 0; k < x.values.size(); ++k)
        if (low.values[k] == 0.0) EXPECT_EQ(high.values[k], 0.0);
}

TEST(Contamination, SampleModeReplacementCountAndBoundary) {
    const SeriesBatch x = positive_batch(40, 24, 8, Resolution::Hourly);
    SeriesBatch y = positive_batch(60, 24, 9, Resolution::Hourly);
    for (double& v : y.values) v += 5.0;  // distinguishable from x
    for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const SeriesBatch out = contamination(x, y, a, 2);
        std::size_t replaced = 0;
        for (std::size_t i = 0; i < x.samples; ++i) {
            if (same_window(out, i, x, i)) continue;
            ++replaced;
            bool from_y = false;
            for (std::size_t j = 0; j < y.samples && !from_y; ++j) from_y = same_window(out, i, y, j);
            EXPECT_TRUE(from_y);
        }
        EXPECT_EQ(replaced, static_cast<std::size_t>(std::floor(a * 40)));
    }
}

TEST(Contamination, PointModeReplacesFloorPositionsPerWindow) {
    const SeriesBatch x = positive_batch(10, 48, 10, Resolution::Hourly);
    SeriesBatch y = SeriesBatch::zeros(10, 48, Resolution::Hourly);
    for (double& v : y.values) v = -1.0;
    const SeriesBatch out = contamination(x, y, 0.25, 3, ContaminationMode::Point);
    for (std::size_t i = 0; i < 10; ++i) {
        const auto s = out.sample(i);
        EXPECT_EQ(std::count(s.begin(), s.end(), -1.0), 12);
    }
    EXPECT_THROW(contamination(x, SeriesBatch::zeros(3, 12, Resolution::Hourly), 0.5, 0), DimensionError);
}

TEST(GaussianSmooth, ConstantUnchangedAndImpulseGivesKernel) {
    SeriesBatch c = SeriesBatch::zeros(2, 200, Resolution::FiveMin);
    for (double& v : c.values) v = 0.37;
    for (double v : gaussian_smooth(c, 10.0).values) EXPECT_NEAR(v, 0.37, 1e-15);

    for (double sigma : {0.5, 1.0, 3.3, 10.0}) {
        const auto taps = oracle::gaussian_taps(sigma);
        const auto lib = gaussian_kernel(sigma);
        ASSERT_EQ(lib.size(), taps.size());
        for (std::size_t k = 0; k < taps.size(); ++k) EXPECT_NEAR(lib[k], taps[k], 1e-16);

        SeriesBatch impulse = SeriesBatch::zeros(1, 201, Resolution::FiveMin);
        impulse.values[100] = 1.0;
        const SeriesBatch out = gaussian_smooth(impulse, sigma);
        const std::size_t r = taps.size() / 2;
        for (std::size_t t = 0; t < 201; ++t) {
            const long off = static_cast<long>(t) - 100;
            const double expected = std::abs(off) <= static_cast<long>(r) ? taps[static_cast<std::size_t>(off + static_cast<long>(r))] : 0.0;
            EXPECT_NEAR(out.values[t], expected, 1e-16);
        }
    }
}

TEST(GaussianSmooth, ReflectiveBoundaryKeepsMassOfEdgeImpulse) {
    SeriesBatch impulse = SeriesBatch::zeros(1, 50, Resolution::FiveMin);
    impulse.values[0] = 1.0;
    const SeriesBatch out = gaussian_smooth(impulse, 2.0);
    double mass = 0.0;
    for (double v : out.values) mass += v;
    EXPECT_NEAR(mass, 1.0, 1e-14);
}

TEST(ErrorAccumulate, ReplayOfTheFactorStream) {
    const SeriesBatch x = positive_batch(6, 288, 11);
    SeriesBatch ones = x;
    std::fill(ones.values.begin(), ones.values.end(), 1.0);
    const double alpha = 0.03;
    const SeriesBatch e = error_accumulate(ones, alpha, 5);  // E_t itself
    const SeriesBatch out = error_accumulate(x, alpha, 5);
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.samples; ++i) {
        EXPECT_EQ(e.at(i, 0), 1.0);
        for (std::size_t t = 0; t < x.length; ++t) EXPECT_EQ(out.at(i, t), x.at(i, t) * e.at(i, t));
        for (std::size_t t = 1; t < x.length; ++t) {
            // log E_t − log E_{t−1} is the log of one N(1, α²) factor.
            const double z = (e.at(i, t) / e.at(i, t - 1) - 1.0) / alpha;
            sum += z;
            sq += z * z;
            ++count;
        }
    }
    const double mean = sum / count;
    EXPECT_NEAR(mean, 0.0, 0.1);
    EXPECT_NEAR(std::sqrt(sq / count - mean * mean), 1.0, 0.1);
}

TEST(TimeShift, HandCaseRejectionAndComposition) {
    SeriesBatch abc = SeriesBatch::zeros(1, 3, Resolution::Hourly);
    abc.values = {1.0, 2.0, 3.0};
    EXPECT_EQ(time_shift(abc, 1).values, (std::vector<double>{3.0, 1.0, 2.0}));
    EXPECT_THROW(time_shift(abc, 3), ArgumentError);

    const SeriesBatch x = positive_batch(4, 288, 12);
    for (std::size_t a : {5u, 40u, 200u})
        for (std::size_t b : {1u, 80u, 287u})
            EXPECT_EQ(time_shift(time_shift(x, a), b).values, time_shift(x, (a + b) % 288).values);
}

TEST(TimeShift, PreservesValueMultisetPerWindow) {
    const SeriesBatch x = io::synth_load(5, Resolution::FiveMin, 3);
    const SeriesBatch out = time_shift(x, 80);
    for (std::size_t i = 0; i < x.samples; ++i) {
        std::vector<double> a(x.sample(i).begin(), x.sample(i).end());
        std::vector<double> b(out.sample(i).begin(), out.sample(i).end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        EXPECT_EQ(a, b);
    }
}

TEST(PeriodOffset, HoursConvertToIntervals) {
    const SeriesBatch five = io::synth_solar(3, Resolution::FiveMin, 1);
    EXPECT_EQ(period_offset(five, 2.0).values, time_shift(five, 24).values);
    const SeriesBatch hourly = io::synth_solar(3, Resolution::Hourly, 1);
    EXPECT_EQ(period_offset(hourly, 4.0).values, time_shift(hourly, 4).values);
    EXPECT_EQ(period_offset(five, 0.0).values, five.values);
    EXPECT_THROW(period_offset(hourly, 0.5), ArgumentError);
}

TEST(NighttimeViolation, InjectsExactlyAlphaHoursBelowThePeak) {
    const SeriesBatch x = io::synth_solar(30, Resolution::FiveMin, 4);
    for (std::size_t hours : {2u, 3u}) {
        const SeriesBatch out = nighttime_violation(x, hours, 8);
        for (std::size_t i = 0; i < x.samples; ++i) {
            double peak = 0.0;
            for (std::size_t t = 0; t < x.length; ++t) peak = std::max(peak, x.at(i, t));
            std::size_t injected = 0;
            for (std::size_t t = 0; t < x.length; ++t) {
                if (out.at(i, t) == x.at(i, t)) continue;
                EXPECT_EQ(x.at(i, t), 0.0);
                EXPECT_GT(out.at(i, t), 0.0);
                EXPECT_LE(out.at(i, t), peak);
                ++injected;
            }
            EXPECT_EQ(injected, hours * 12);
        }
    }
    EXPECT_EQ(nighttime_violation(x, 0, 8).values, x.values);
    EXPECT_THROW(nighttime_violation(x, 8, 0), ArgumentError);
}

TEST(Fabricate, MatchesMomentsButNotStructure) {
    SeriesBatch x = io::synth_wind(400, Resolution::Hourly, 6);
    const Fabricated f = moment_matched_fabricate(x, 3);
    EXPECT_EQ(f.batch.samples, x.samples);
    const linalg::Matrix fx = metrics::flatten(x), ff = metrics::flatten(f.batch);
    const auto mx = oracle::column_means(fx), mf = oracle::column_means(ff);
    for (std::size_t t = 0; t < 24; ++t) {
        // Standard error of a column mean is at most 1/sqrt(400) for values in [0, 1].
        EXPECT_NEAR(mf[t], mx[t], 0.15);
    }
    const double fab = metrics::raw_frechet(x, f.batch);
    const double noisy = metrics::raw_frechet(x, gaussian_noise(x, 1.6, 3));
    EXPECT_LT(fab, 0.1 * noisy);
    EXPECT_EQ(moment_matched_fabricate(x, 3).batch.values, f.batch.values);
    EXPECT_THROW(moment_matched_fabricate(io::synth_wind(10, Resolution::Hourly, 1), 0), ArgumentError);
}

TEST(Fabricate, DegenerateCovarianceIsRidgedAndReported) {
    // Solar night hours are identically zero, so the covariance is singular.
    const Fabricated f = moment_matched_fabricate(io::synth_solar(100, Resolution::Hourly, 2), 1);
    EXPECT_GT(f.regularization, 0.0);
}

TEST(Apply, LevelDomainChecks) {
    const SeriesBatch x = positive_batch(3, 288, 13);
    EXPECT_THROW(apply({Kind::TimeShift, 2.5, 0}, x), ArgumentError);
    EXPECT_THROW(apply({Kind::NighttimeViolation, 1.5, 0}, x), ArgumentError);
    EXPECT_THROW(apply({Kind::Contamination, 0.5, 0}, x), ArgumentError);
    EXPECT_THROW(apply({Kind::MissingData, -0.1, 0}, x), ArgumentError);
}

TEST(Presets, GridsAndNames) {
    const auto fig2 = preset("fig2");
    ASSERT_EQ(fig2.size(), 6u);
    EXPECT_EQ(fig2[0].kind, Kind::GaussianNoise);
    EXPECT_EQ(fig2[0].alphas, (std::vector<double>{0.0, 0.16, 1.6, 4.0}));
    EXPECT_EQ(fig2[1].alphas, (std::vector<double>{0.0, 0.1, 0.25, 0.5}));
    EXPECT_EQ(fig2[2].alphas, (std::vector<double>{0.0, 0.25, 0.5, 0.75}));
    EXPECT_EQ(fig2[3].alphas, (std::vector<double>{0.0, 10.0, 20.0, 30.0}));
    EXPECT_EQ(fig2[4].alphas, (std::vector<double>{0.0, 0.005, 0.01, 0.03}));
    EXPECT_EQ(fig2[5].alphas, (std::vector<double>{0.0, 40.0, 60.0, 80.0}));
    std::size_t rows = 0;
    for (const auto& p : fig2) rows += p.alphas.size();
    EXPECT_EQ(rows, 24u);
    const auto fig3 = preset("fig3");
    EXPECT_EQ(fig3[0].alphas, (std::vector<double>{0.0, 2.0, 4.0}));
    EXPECT_EQ(fig3[1].alphas, (std::vector<double>{0.0, 2.0, 3.0}));
    EXPECT_THROW(preset("fig9"), ArgumentError);

    EXPECT_EQ(parse_kind("missing"), Kind::MissingData);
    EXPECT_EQ(parse_kind("gaussian_noise"), Kind::GaussianNoise);
    EXPECT_EQ(parse_kind("fabricate"), Kind::MomentMatchedFabricate);
    EXPECT_THROW(parse_kind("gremlins"), ArgumentError);
}

TEST(Ramp, TableExamples) {
    EXPECT_EQ(classify_ramp(0.6, 1), RampCategory::StrongUp);
    EXPECT_EQ(classify_ramp(0.0, 1), RampCategory::Neutral);
    EXPECT_EQ(classify_ramp(0.0, 2), RampCategory::Neutral);
    EXPECT_EQ(classify_ramp(-0.25, 2), RampCategory::ModerateDown);

    const std::vector<double> window{2.0, 2.5, 3.0, 4.0, 5.0, 8.0};
    const RampLabel l = ramp_label(window, 10.0, 1);
    EXPECT_DOUBLE_EQ(l.rate, 0.6);
    EXPECT_EQ(l.category, RampCategory::StrongUp);
    EXPECT_THROW(ramp_label(std::vector<double>{1, 2, 3}, 10.0, 1), DimensionError);
    EXPECT_THROW(ramp_label(window, 0.0, 1), ArgumentError);
}

TEST(Ramp, BoundariesFollowTheTable) {
    // Scenario 1
    EXPECT_EQ(classify_ramp(-0.50, 1), RampCategory::ModerateDown);
    EXPECT_EQ(classify_ramp(-0.33, 1), RampCategory::MildDown);
    EXPECT_EQ(classify_ramp(-0.25, 1), RampCategory::Neutral);
    EXPECT_EQ(classify_ramp(0.25, 1), RampCategory::Neutral);
    EXPECT_EQ(classify_ramp(0.33, 1), RampCategory::MildUp);
    EXPECT_EQ(classify_ramp(0.50, 1), RampCategory::ModerateUp);
    EXPECT_EQ(classify_ramp(std::nextafter(0.50, 1.0), 1), RampCategory::StrongUp);
    EXPECT_EQ(classify_ramp(std::nextafter(-0.50, -1.0), 1), RampCategory::StrongDown);
    // Scenario 2
    EXPECT_EQ(classify_ramp(-0.30, 2), RampCategory::ModerateDown);
    EXPECT_EQ(classify_ramp(-0.20, 2), RampCategory::MildDown);
    EXPECT_EQ(classify_ramp(-0.10, 2), RampCategory::Neutral);
    EXPECT_EQ(classify_ramp(0.10, 2), RampCategory::Neutral);
    EXPECT_EQ(classify_ramp(0.20, 2), RampCategory::MildUp);
    EXPECT_EQ(classify_ramp(0.30, 2), RampCategory::ModerateUp);
    EXPECT_THROW(classify_ramp(NAN, 1), ArgumentError);
    EXPECT_THROW(classify_ramp(0.0, 3), ArgumentError);
}

TEST(Ramp, CategoriesPartitionRandomRates) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int scenario : {1, 2}) {
        const RampThresholds th = ramp_thresholds(scenario);
        for (int i = 0; i < 100000; ++i) {
            const double r = u(rng);
            // Independent reading of the table: exactly one predicate holds.
            const bool fired[7] = {r < -th.strong,
                                   -th.strong <= r && r < -th.moderate,
                                   -th.moderate <= r && r < -th.mild,
                                   -th.mild <= r && r <= th.mild,
                                   th.mild < r && r <= th.moderate,
                                   th.moderate < r && r <= th.strong,
                                   r > th.strong};
            ASSERT_EQ(std::count(std::begin(fired), std::end(fired), true), 1);
            const auto expected = static_cast<RampCategory>(std::find(std::begin(fired), std::end(fired), true) - std::begin(fired));
            ASSERT_EQ(classify_ramp(r, scenario), expected) << r;
        }
    }
}
