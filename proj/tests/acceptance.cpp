/// Acceptance run: one PASS/FAIL line per criterion, exit status = number of
/// failed criteria. Criteria 6-8 share one trained stack; 10 retrains it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "fpd/disturbances.hpp"
#include "fpd/hierarchy.hpp"
#include "fpd/io/artifact.hpp"
#include "fpd/io/synth.hpp"
#include "fpd/linalg.hpp"
#include "fpd/metrics.hpp"
#include "fpd/nn/gradcheck.hpp"
#include "fpd/training.hpp"
#include "oracles.hpp"

using namespace fpd;
using linalg::Matrix;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = true;
    std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

/// Within `tol` relative to max(1, |expected|).
bool close(double got, double expected, double tol) {
    return std::abs(got - expected) <= tol * std::max(1.0, std::abs(expected));
}

metrics::GaussianEmbedding embedding(std::vector<double> mean, Matrix cov) {
    metrics::GaussianEmbedding g;
    g.mean = linalg::Vector(std::move(mean));
    g.cov = std::move(cov);
    g.count = 100;
    return g;
}

// ---- 1-5, 9: numerics --------------------------------------------------------

Verdict closed_form() {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.05, 4.0);
    double worst1 = 0.0, worst8 = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double m1 = 3 * g(rng), m2 = 3 * g(rng), s1 = u(rng), s2 = u(rng);
        const double expected = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
        const double got = metrics::fpd(embedding({m1}, Matrix(1, 1, s1 * s1)), embedding({m2}, Matrix(1, 1, s2 * s2)));
        worst1 = std::max(worst1, std::abs(got - expected) / std::abs(expected));
    }
    for (int i = 0; i < 50; ++i) {
        const Matrix q = oracle::random_orthogonal(8, rng);
        std::vector<double> l1(8), l2(8), m1(8), m2(8);
        double expected = 0.0;
        for (int k = 0; k < 8; ++k) {
            l1[k] = u(rng) * u(rng);
            l2[k] = u(rng) * u(rng);
            m1[k] = g(rng);
            m2[k] = g(rng);
            expected += (m1[k] - m2[k]) * (m1[k] - m2[k]);
            expected += (std::sqrt(l1[k]) - std::sqrt(l2[k])) * (std::sqrt(l1[k]) - std::sqrt(l2[k]));
        }
        const double got = metrics::fpd(embedding(m1, oracle::with_spectrum(q, l1)), embedding(m2, oracle::with_spectrum(q, l2)));
        worst8 = std::max(worst8, std::abs(got - expected) / std::max(1.0, std::abs(expected)));
    }
    return {worst1 <= 1e-10 && worst8 <= 1e-8, fmt("1-D worst rel %.2e (<=1e-10), d=8 commuting worst %.2e (<=1e-8)", worst1, worst8)};
}

Verdict identity_law() {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> dim(1, 16);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const std::size_t d = dim(rng);
        std::uniform_int_distribution<std::size_t> rows(d + 1, 512);
        const std::size_t n = rows(rng);
        Matrix z = oracle::random_matrix(n, d, rng, 0.1 + 3.0 * (i % 7));
        if (i % 5 == 0) {  // nearly collinear columns
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 1; c < d; ++c) z(r, c) = z(r, 0) * (1.0 + 1e-3 * c) + 1e-6 * z(r, c);
        }
        const auto fit = metrics::fit_gaussian(z);
        worst = std::max(worst, metrics::fpd(fit, metrics::fit_gaussian(z)));
    }
    return {worst <= 1e-6, fmt("worst fpd(fit(Z), fit(Z)) = %.2e over 100 sets (<=1e-6)", worst)};
}

Verdict spd_roundtrip() {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> size(1, 64);
    std::uniform_real_distribution<double> logc(-6.0, 2.0);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = i < 8 ? 64 : size(rng);
        Matrix a = oracle::random_spd(n, rng, std::pow(10.0, logc(rng)));
        const Matrix r = linalg::spd_sqrt(a);
        const Matrix rr = oracle::matmul(r, r);
        double diff = 0.0;
        for (std::size_t k = 0; k < a.data().size(); ++k) diff += (rr.data()[k] - a.data()[k]) * (rr.data()[k] - a.data()[k]);
        worst = std::max(worst, std::sqrt(diff) / oracle::frob(a));
    }
    return {worst <= 1e-7, fmt("worst ||sqrt(A)^2 - A||_F / ||A||_F = %.2e over 500 matrices (<=1e-7)", worst)};
}

Verdict gradient_suite() {
    double worst = 0.0;
    std::string worst_name;
    std::size_t checks = 0, failed = 0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        for (const auto& r : nn::run_gradcheck_suite(seed)) {
            ++checks;
            if (!r.passed) ++failed;
            if (r.max_rel_error > worst) {
                worst = r.max_rel_error;
                worst_name = r.name + " (" + r.worst + ")";
            }
        }
    }
    return {failed == 0 && worst <= 1e-4,
            fmt("%zu checks over 25 seeds, %zu failed, worst rel err %.2e in %s (<=1e-4)", checks, failed, worst, worst_name.c_str())};
}

Verdict brute_force_metrics() {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> count(2, 16), dim(1, 6);
    std::uniform_real_distribution<double> bw(0.3, 3.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = dim(rng);
        const std::size_t n = count(rng);
        const Matrix a = oracle::random_matrix(n, d, rng);
        const Matrix b = oracle::random_matrix(n, d, rng, 1.5);
        const double h = bw(rng);
        const std::vector<double> obs = [&] {
            std::vector<double> o(d);
            for (std::size_t t = 0; t < d; ++t) o[t] = b(0, t);
            return o;
        }();
        const double pairs[4][2] = {
            {metrics::mmd(a, b, {metrics::Kernel::Rbf, h}), oracle::mmd(a, b, true, h)},
            {metrics::mmd(a, b, {metrics::Kernel::Linear}), oracle::mmd(a, b, false, 0.0)},
            {metrics::crps(a, obs), oracle::crps(a, obs)},
            {metrics::energy_score(a, b), oracle::energy(a, b)},
        };
        for (const auto& p : pairs) worst = std::max(worst, std::abs(p[0] - p[1]) / std::max(1.0, std::abs(p[1])));
    }
    return {worst <= 1e-10, fmt("worst deviation from O(n^2) oracles %.2e over 100 trials (<=1e-10)", worst)};
}

Verdict ramp_partition() {
    const double table[2][3] = {{0.50, 0.33, 0.25}, {0.30, 0.20, 0.10}};
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    std::size_t bad = 0;
    for (int scenario = 1; scenario <= 2; ++scenario) {
        const double s = table[scenario - 1][0], m = table[scenario - 1][1], l = table[scenario - 1][2];
        for (int i = 0; i < 1000000; ++i) {
            // Every eighth draw sits exactly on a boundary.
            const double edges[6] = {-s, -m, -l, l, m, s};
            const double r = i % 8 == 0 ? edges[(i / 8) % 6] : u(rng);
            const bool hit[7] = {r < -s, -s <= r && r < -m, -m <= r && r < -l, -l <= r && r <= l,
                                 l < r && r <= m, m < r && r <= s, r > s};
            const int n = static_cast<int>(std::count(hit, hit + 7, true));
            const int expected = static_cast<int>(std::find(hit, hit + 7, true) - hit);
            if (n != 1 || static_cast<int>(disturb::classify_ramp(r, scenario)) != expected) ++bad;
        }
    }
    auto label = [](double rate, int scenario) {
        const std::vector<double> w{0.1, 0.2, 0.2, 0.3, 0.3, 0.1 + rate * 2.0};
        return disturb::ramp_label(w, 2.0, scenario).category;
    };
    using C = disturb::RampCategory;
    const bool examples = label(0.6, 1) == C::StrongUp && label(0.0, 1) == C::Neutral && label(0.0, 2) == C::Neutral &&
                          label(-0.25, 2) == C::ModerateDown;
    return {bad == 0 && examples, fmt("%zu misclassified of 2x10^6 rates, table examples %s", bad, examples ? "ok" : "WRONG")};
}

// ---- 6-8, 10: trained stack ------------------------------------------------

constexpr std::size_t kDaysPerKind = 150;
constexpr std::size_t kEpochs = 10;

ExtractorStack train_stack(double* seconds) {
    const auto t0 = Clock::now();
    const std::vector kinds{io::SourceKind::Solar, io::SourceKind::Wind, io::SourceKind::Load, io::SourceKind::Ev};
    const SeriesBatch corpus = io::synth_corpus(kinds, kDaysPerKind, Resolution::FiveMin, 7);
    TrainConfig cfg;
    cfg.epochs = kEpochs;
    cfg.seed = 3;
    ExtractorStack stack = ExtractorStack::create(ArchitectureConfig{}, cfg.levels, cfg.seed);
    for (Resolution level : cfg.levels) train_level(stack, level, training_views(corpus, level, cfg.mixed_inputs), cfg);
    finalize(stack);
    *seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return stack;
}

metrics::GaussianEmbedding daily(const ExtractorStack& stack, const SeriesBatch& x) {
    return metrics::fit_gaussian(extract_hierarchical(stack, x, Resolution::Daily));
}

Verdict fig2_monotone(const ExtractorStack& stack, double train_seconds) {
    int good_seeds = 0;
    std::string failures;
    for (int s = 0; s < 10; ++s) {
        const SeriesBatch x = io::synth_wind(365, Resolution::FiveMin, 1000 + s);
        const SeriesBatch aux = io::synth_solar(365, Resolution::FiveMin, 2000 + s);
        const auto gx = daily(stack, x);
        bool ok = true;
        for (const auto& p : disturb::preset("fig2")) {
            std::vector<double> v;
            for (double a : p.alphas) {
                const disturb::Disturbance d{p.kind, a, static_cast<std::uint64_t>(s)};
                v.push_back(metrics::fpd(gx, daily(stack, disturb::apply(d, x, &aux).batch)));
            }
            bool mono = v.back() > v.front();
            for (std::size_t i = 1; i < v.size(); ++i) mono = mono && v[i] >= v[i - 1];
            if (!mono) failures += fmt(" seed%d:%s", s, std::string(disturb::to_string(p.kind)).c_str());
            ok = ok && mono;
        }
        good_seeds += ok;
    }
    return {good_seeds >= 9, fmt("all six disturbances monotone in %d/10 seeds (>=9), stack trained in %.0fs%s", good_seeds,
                                 train_seconds, failures.c_str())};
}

Verdict fabrication_blind_spot(const ExtractorStack& stack) {
    // A 10 MW farm: noise variances are in MW^2, the extractor sees the
    // series scaled by the reference maximum.
    const double capacity = 10.0;
    SeriesBatch x = io::synth_wind(365, Resolution::FiveMin, 5000);
    for (double& v : x.values) v *= capacity;
    const SeriesBatch fab = disturb::moment_matched_fabricate(x, 0).batch;
    const SeriesBatch loud = disturb::gaussian_noise(x, 1.6, 0);
    const SeriesBatch light = disturb::gaussian_noise(x, 0.16, 0);
    const double ref = *std::max_element(x.values.begin(), x.values.end());
    auto scaled = [&](SeriesBatch b) {
        for (double& v : b.values) v /= ref;
        return b;
    };
    const auto gx = daily(stack, scaled(x));
    const double raw_fab = metrics::raw_frechet(x, fab), raw_loud = metrics::raw_frechet(x, loud);
    const double fpd_fab = metrics::fpd(gx, daily(stack, scaled(fab))), fpd_light = metrics::fpd(gx, daily(stack, scaled(light)));
    return {raw_fab < raw_loud && fpd_fab > fpd_light,
            fmt("raw_frechet fab %.4g < noise1.6 %.4g; fpd fab %.4g > noise0.16 %.4g", raw_fab, raw_loud, fpd_fab, fpd_light)};
}

Verdict fig3_increasing(const ExtractorStack& stack) {
    const auto presets = disturb::preset("fig3");
    std::vector<int> good(presets.size(), 0);
    for (int s = 0; s < 10; ++s) {
        const SeriesBatch solar = io::synth_solar(365, Resolution::FiveMin, 3000 + s);
        const auto gs = daily(stack, solar);
        for (std::size_t k = 0; k < presets.size(); ++k) {
            std::vector<double> v;
            for (double a : presets[k].alphas) {
                const disturb::Disturbance d{presets[k].kind, a, static_cast<std::uint64_t>(s)};
                v.push_back(metrics::fpd(gs, daily(stack, disturb::apply(d, solar).batch)));
            }
            good[k] += v[1] > v[0] && v[2] > v[1];
        }
    }
    return {good[0] >= 9 && good[1] >= 9,
            fmt("period_offset increasing in %d/10 seeds, nighttime_violation in %d/10 (each >=9)", good[0], good[1])};
}

Verdict determinism(const ExtractorStack& stack) {
    double seconds = 0.0;
    const ExtractorStack again = train_stack(&seconds);
    const bool same_bytes = io::serialize_stack(again) == io::serialize_stack(stack);

    const auto dir = std::filesystem::temp_directory_path() / "fpd_acceptance";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "model.fpd").string();
    io::save_stack(stack, path);
    const ExtractorStack loaded = io::load_stack(path);
    bool same_features = true;
    for (const SeriesBatch& x : {io::synth_load(60, Resolution::FiveMin, 77), io::synth_solar(40, Resolution::FiveMin, 78)}) {
        for (Resolution target : {Resolution::Hourly, Resolution::Daily}) {
            const FeatureSet a = extract_hierarchical(stack, x, target), b = extract_hierarchical(loaded, x, target);
            same_features = same_features && a.rows.rows() == b.rows.rows() &&
                            std::equal(a.rows.data().begin(), a.rows.data().end(), b.rows.data().begin());
        }
    }
    std::filesystem::remove_all(dir);
    return {same_bytes && same_features, fmt("retrain artifact %s (%.0fs), save/load features %s",
                                             same_bytes ? "byte-identical" : "DIFFERS", seconds,
                                             same_features ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* name, double limit_seconds, const std::function<Verdict()>& body) {
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = body();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        const bool in_time = seconds < limit_seconds;
        const bool pass = v.pass && in_time;
        failed += !pass;
        std::printf("%s criterion %d (%s): %s [%.1fs, limit %.0fs%s]\n", pass ? "PASS" : "FAIL", id, name, v.detail.c_str(),
                    seconds, limit_seconds, in_time ? "" : ", TOO SLOW");
        std::fflush(stdout);
    };

    report(1, "closed-form Frechet", 5, closed_form);
    report(2, "identity law", 5, identity_law);
    report(3, "spd_sqrt round trip", 30, spd_roundtrip);
    report(4, "gradient suite", 120, gradient_suite);
    report(5, "brute-force metrics", 10, brute_force_metrics);

    std::optional<ExtractorStack> stack;
    double train_seconds = 0.0;
    report(6, "disturbance monotonicity", 900, [&] {
        stack.emplace(train_stack(&train_seconds));
        return fig2_monotone(*stack, train_seconds);
    });
    auto with_stack = [&](auto f) {
        return [&, f]() -> Verdict {
            if (!stack) return {false, "no trained stack"};
            return f(*stack);
        };
    };
    report(7, "fabrication blind spot", 120, with_stack(fabrication_blind_spot));
    report(8, "solar offset and night violation", 300, with_stack(fig3_increasing));
    report(9, "ramp partition", 2, ramp_partition);
    report(10, "determinism and persistence", 720, with_stack(determinism));

    std::printf("%d of 10 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
