#include "fpd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fpd/error.hpp"

namespace fpd::metrics {

using linalg::Matrix;
using linalg::Vector;

namespace {

void require_same_dim(const GaussianEmbedding& a, const GaussianEmbedding& b, const char* op) {
    if (a.dim() != b.dim() || a.cov.rows() != a.dim() || b.cov.rows() != b.dim()) {
        std::ostringstream os;
        os << op << ": embedding dimensions differ (" << a.dim() << " vs " << b.dim() << ")";
        throw DimensionError(os.str());
    }
}

void require_same_cols(const Matrix& a, const Matrix& b, const char* op) {
    if (a.cols() != b.cols()) {
        std::ostringstream os;
        os << op << ": feature dimensions differ (" << a.cols() << " vs " << b.cols() << ")";
        throw DimensionError(os.str());
    }
}

void require_finite(const Matrix& m, const char* op) {
    if (!linalg::all_finite(m.data())) {
        throw NumericError(std::string(op) + ": input contains NaN or Inf");
    }
}

double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(linalg::squared_distance(a, b));
}

/// Inverse and log-determinant of an SPD matrix via its eigendecomposition,
/// with the ridge needed to make it numerically invertible.
struct Factored {
    Matrix inverse;
    double log_det = 0.0;
    double ridge = 0.0;
};

Factored factor(const Matrix& cov, const char* op) {
    const std::size_t d = cov.rows();
    const double tr = linalg::trace(cov);
    linalg::SymmetricEigen eig = linalg::sym_eig(cov);
    double ridge = 0.0;
    const double smallest = d ? eig.values[d - 1] : 1.0;
    if (d && smallest <= 1e-12 * std::max(tr, 0.0)) {
        ridge = 1e-10 * tr;
        if (!(ridge > 0.0) || smallest + ridge <= 0.0) {
            throw NumericError(std::string(op) + ": covariance is singular beyond regularization");
        }
    }
    Factored f{Matrix(d, d), 0.0, ridge};
    for (std::size_t k = 0; k < d; ++k) {
        const double lambda = eig.values[k] + ridge;
        f.log_det += std::log(lambda);
        for (std::size_t i = 0; i < d; ++i) {
            const double vi = eig.vectors(i, k) / lambda;
            for (std::size_t j = 0; j < d; ++j) {
                f.inverse(i, j) += vi * eig.vectors(j, k);
            }
        }
    }
    return f;
}

Divergence kl_factored(const GaussianEmbedding& a, const Factored& fa, const GaussianEmbedding& b,
                       const Factored& fb) {
    const std::size_t d = a.dim();
    double tr_term = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            tr_term += fb.inverse(i, j) * (a.cov(j, i) + (i == j ? fa.ridge : 0.0));
        }
    }
    double quad = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double di = b.mean[i] - a.mean[i];
        for (std::size_t j = 0; j < d; ++j) {
            quad += di * fb.inverse(i, j) * (b.mean[j] - a.mean[j]);
        }
    }
    double value = 0.5 * (tr_term + quad - static_cast<double>(d) + fb.log_det - fa.log_det);
    if (value < 0.0 && value > -1e-8 * std::max(1.0, tr_term + quad)) {
        value = 0.0;
    }
    return {value, std::max(fa.ridge, fb.ridge)};
}

double kernel(Kernel k, std::span<const double> x, std::span<const double> y, double inv_two_h2) {
    if (k == Kernel::Linear) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
        return s;
    }
    return std::exp(-linalg::squared_distance(x, y) * inv_two_h2);
}

double kernel_mean(Kernel k, const Matrix& a, const Matrix& b, double inv_two_h2) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < b.rows(); ++j) row += kernel(k, a.row(i), b.row(j), inv_two_h2);
        total += row;
    }
    return total / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

double mean_pair_distance(const Matrix& a, const Matrix& b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < b.rows(); ++j) row += distance(a.row(i), b.row(j));
        total += row;
    }
    return total / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

/// Per time step: sorted member values and their prefix sums.
struct SortedColumn {
    std::vector<double> values;
    std::vector<double> prefix;  ///< prefix[k] = sum of the k smallest
    double spread = 0.0;         ///< ½E|X−X′|
};

SortedColumn sort_column(const Matrix& ensemble, std::size_t t) {
    const std::size_t m = ensemble.rows();
    SortedColumn c;
    c.values.resize(m);
    for (std::size_t i = 0; i < m; ++i) c.values[i] = ensemble(i, t);
    std::sort(c.values.begin(), c.values.end());
    c.prefix.assign(m + 1, 0.0);
    double pairs = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        c.prefix[k + 1] = c.prefix[k] + c.values[k];
        // sum_{i<j} (x_j - x_i) with x sorted
        pairs += c.values[k] * static_cast<double>(k) - c.prefix[k];
    }
    const double md = static_cast<double>(m);
    c.spread = pairs / (md * md);  // ½ · 2·pairs / m²
    return c;
}

double mean_abs_deviation(const SortedColumn& c, double y) {
    const std::size_t m = c.values.size();
    const auto below = static_cast<std::size_t>(std::lower_bound(c.values.begin(), c.values.end(), y) -
                                                c.values.begin());
    const double lo = y * static_cast<double>(below) - c.prefix[below];
    const double hi = (c.prefix[m] - c.prefix[below]) - y * static_cast<double>(m - below);
    return (lo + hi) / static_cast<double>(m);
}

void require_ensemble(const Matrix& ensemble, std::size_t length) {
    if (ensemble.rows() < 2) {
        throw ArgumentError("crps: the ensemble needs at least 2 members (got " +
                            std::to_string(ensemble.rows()) + ")");
    }
    if (ensemble.cols() != length || length == 0) {
        throw DimensionError("crps: ensemble length " + std::to_string(ensemble.cols()) +
                             " does not match observation length " + std::to_string(length));
    }
    require_finite(ensemble, "crps");
}

}  // namespace

GaussianEmbedding fit_gaussian(const Matrix& rows) {
    if (rows.rows() < 2) {
        throw ArgumentError("fit_gaussian: need at least 2 samples (got " + std::to_string(rows.rows()) + ")");
    }
    require_finite(rows, "fit_gaussian");
    return {linalg::batch_mean(rows), linalg::batch_cov(rows), rows.rows()};
}

GaussianEmbedding fit_gaussian(const FeatureSet& features) {
    return fit_gaussian(features.rows);
}

double fpd(const GaussianEmbedding& a, const GaussianEmbedding& b) {
    require_same_dim(a, b, "fpd");
    const double mean_term = linalg::squared_distance(a.mean.values(), b.mean.values());
    const double tr1 = linalg::trace(a.cov);
    const double tr2 = linalg::trace(b.cov);
    const double cross = linalg::cross_sqrt_trace(a.cov, b.cov);
    const double value = mean_term + tr1 + tr2 - 2.0 * cross;
    if (!std::isfinite(value)) {
        throw NumericError("fpd: result is not finite");
    }
    if (value < 0.0) {
        if (value > -1e-8 * std::max(1.0, mean_term + tr1 + tr2)) {
            return 0.0;
        }
        throw NumericError("fpd: negative distance " + std::to_string(value));
    }
    return value;
}

Divergence kl_gaussian(const GaussianEmbedding& a, const GaussianEmbedding& b) {
    require_same_dim(a, b, "kl_gaussian");
    return kl_factored(a, factor(a.cov, "kl_gaussian"), b, factor(b.cov, "kl_gaussian"));
}

Divergence js_gaussian(const GaussianEmbedding& a, const GaussianEmbedding& b) {
    require_same_dim(a, b, "js_gaussian");
    const std::size_t d = a.dim();
    GaussianEmbedding mix{Vector(d), Matrix(d, d), a.count + b.count};
    for (std::size_t i = 0; i < d; ++i) {
        mix.mean[i] = 0.5 * (a.mean[i] + b.mean[i]);
        for (std::size_t j = 0; j < d; ++j) {
            mix.cov(i, j) = 0.5 * (a.cov(i, j) + b.cov(i, j));
        }
    }
    const Factored fa = factor(a.cov, "js_gaussian");
    const Factored fb = factor(b.cov, "js_gaussian");
    const Factored fm = factor(mix.cov, "js_gaussian");
    const Divergence left = kl_factored(a, fa, mix, fm);
    const Divergence right = kl_factored(b, fb, mix, fm);
    return {0.5 * left.value + 0.5 * right.value, std::max(left.regularization, right.regularization)};
}

std::string_view to_string(Kernel k) noexcept {
    return k == Kernel::Rbf ? "rbf" : "linear";
}

double median_pairwise_distance(const Matrix& z1, const Matrix& z2) {
    require_same_cols(z1, z2, "median_pairwise_distance");
    const std::size_t n = z1.rows() + z2.rows();
    auto row = [&](std::size_t i) { return i < z1.rows() ? z1.row(i) : z2.row(i - z1.rows()); };
    std::vector<double> d;
    d.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) d.push_back(distance(row(i), row(j)));
    }
    if (d.empty()) return 1.0;
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    double median = *mid;
    if (d.size() % 2 == 0) {
        median = 0.5 * (median + *std::max_element(d.begin(), mid));
    }
    return median > 0.0 ? median : 1.0;
}

double mmd(const Matrix& z1, const Matrix& z2, const MmdOptions& options) {
    require_same_cols(z1, z2, "mmd");
    if (z1.rows() != z2.rows()) {
        throw DimensionError("mmd: sample counts differ (" + std::to_string(z1.rows()) + " vs " +
                             std::to_string(z2.rows()) +
                             "); subsample the larger set to the same size first");
    }
    if (z1.rows() == 0) {
        throw ArgumentError("mmd: empty sample sets");
    }
    require_finite(z1, "mmd");
    require_finite(z2, "mmd");
    double inv_two_h2 = 0.0;
    if (options.kernel == Kernel::Rbf) {
        const double h = options.bandwidth ? *options.bandwidth : median_pairwise_distance(z1, z2);
        if (!(h > 0.0)) {
            throw ArgumentError("mmd: rbf bandwidth must be positive");
        }
        inv_two_h2 = std::isinf(h) ? 0.0 : 1.0 / (2.0 * h * h);
    }
    const double k11 = kernel_mean(options.kernel, z1, z1, inv_two_h2);
    const double k22 = kernel_mean(options.kernel, z2, z2, inv_two_h2);
    const double k12 = kernel_mean(options.kernel, z1, z2, inv_two_h2);
    double value = k11 + k22 - 2.0 * k12;
    if (options.mean_term) {
        const Vector m1 = linalg::batch_mean(z1);
        const Vector m2 = linalg::batch_mean(z2);
        value += linalg::squared_distance(m1.values(), m2.values());
    }
    return value;
}

double crps(const Matrix& ensemble, std::span<const double> observation) {
    require_ensemble(ensemble, observation.size());
    if (!linalg::all_finite(observation)) {
        throw NumericError("crps: observation contains NaN or Inf");
    }
    double total = 0.0;
    for (std::size_t t = 0; t < observation.size(); ++t) {
        const SortedColumn c = sort_column(ensemble, t);
        total += mean_abs_deviation(c, observation[t]) - c.spread;
    }
    return std::max(0.0, total / static_cast<double>(observation.size()));
}

double crps(const Matrix& ensemble, const Matrix& observations) {
    require_ensemble(ensemble, observations.cols());
    if (observations.rows() == 0) {
        throw ArgumentError("crps: no observations");
    }
    require_finite(observations, "crps");
    double total = 0.0;
    for (std::size_t t = 0; t < observations.cols(); ++t) {
        const SortedColumn c = sort_column(ensemble, t);
        double column = 0.0;
        for (std::size_t i = 0; i < observations.rows(); ++i) {
            column += mean_abs_deviation(c, observations(i, t)) - c.spread;
        }
        total += column / static_cast<double>(observations.rows());
    }
    return std::max(0.0, total / static_cast<double>(observations.cols()));
}

double energy_score(const Matrix& z1, const Matrix& z2) {
    require_same_cols(z1, z2, "energy_score");
    if (z1.rows() < 2 || z2.rows() < 2) {
        throw ArgumentError("energy_score: each set needs at least 2 samples");
    }
    require_finite(z1, "energy_score");
    require_finite(z2, "energy_score");
    const double value =
        mean_pair_distance(z1, z2) - 0.5 * mean_pair_distance(z1, z1) - 0.5 * mean_pair_distance(z2, z2);
    return std::max(0.0, value);
}

std::string_view to_string(Pairing p) noexcept {
    return p == Pairing::Index ? "index" : "random";
}

Pairing parse_pairing(std::string_view text) {
    if (text == "index") return Pairing::Index;
    if (text == "random") return Pairing::Random;
    throw ArgumentError("unknown pairing '" + std::string(text) + "' (expected index or random)");
}

MapeResult mape_paired(const Matrix& x1, const Matrix& x2, Pairing pairing, std::uint64_t seed,
                       double epsilon) {
    if (x1.rows() != x2.rows() || x1.cols() != x2.cols()) {
        throw DimensionError("mape_paired: sets must have the same shape");
    }
    if (x1.rows() == 0) {
        throw ArgumentError("mape_paired: empty sets");
    }
    require_finite(x1, "mape_paired");
    require_finite(x2, "mape_paired");
    std::vector<std::size_t> partner(x1.rows());
    std::iota(partner.begin(), partner.end(), std::size_t{0});
    if (pairing == Pairing::Random) {
        std::mt19937_64 rng(seed);
        std::shuffle(partner.begin(), partner.end(), rng);
    }
    MapeResult r;
    double total = 0.0;
    for (std::size_t i = 0; i < x1.rows(); ++i) {
        const auto a = x1.row(i);
        const auto b = x2.row(partner[i]);
        for (std::size_t t = 0; t < a.size(); ++t) {
            if (std::fabs(a[t]) < epsilon) {
                ++r.excluded;
                continue;
            }
            total += std::fabs(a[t] - b[t]) / std::fabs(a[t]);
            ++r.used;
        }
    }
    if (r.used == 0) {
        throw NumericError("mape_paired: every reference value is below epsilon");
    }
    r.value = total / static_cast<double>(r.used);
    return r;
}

Matrix flatten(const SeriesBatch& x) {
    x.validate();
    return Matrix(x.samples, x.channels * x.length, x.values);
}

double raw_frechet(const SeriesBatch& x1, const SeriesBatch& x2) {
    if (x1.channels != x2.channels || x1.length != x2.length) {
        throw DimensionError("raw_frechet: window shapes differ (" + std::to_string(x1.channels) + "x" +
                             std::to_string(x1.length) + " vs " + std::to_string(x2.channels) + "x" +
                             std::to_string(x2.length) + ")");
    }
    return fpd(fit_gaussian(flatten(x1)), fit_gaussian(flatten(x2)));
}

}  // namespace fpd::metrics
