#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "fpd/hierarchy.hpp"
#include "fpd/linalg.hpp"
#include "fpd/series.hpp"

namespace fpd::metrics {

/// Mean and population covariance of a feature cloud.
struct GaussianEmbedding {
    linalg::Vector mean;
    linalg::Matrix cov;
    std::size_t count = 0;

    std::size_t dim() const noexcept { return mean.dim(); }
};

/// Rows are samples. Requires at least 2 finite rows.
GaussianEmbedding fit_gaussian(const linalg::Matrix& rows);
GaussianEmbedding fit_gaussian(const FeatureSet& features);

/// ‖m1−m2‖² + Tr(Σ1 + Σ2 − 2(Σ1Σ2)^{1/2}). Round-off negatives are reported as 0.
double fpd(const GaussianEmbedding& a, const GaussianEmbedding& b);

/// A divergence value plus the ridge that had to be added to keep the
/// covariances invertible (0 when none was needed).
struct Divergence {
    double value = 0.0;
    double regularization = 0.0;
};

/// KL(N(m1,Σ1) ‖ N(m2,Σ2)). A numerically singular covariance receives
/// +1e-10·trace·I.
Divergence kl_gaussian(const GaussianEmbedding& a, const GaussianEmbedding& b);

/// ½KL(a‖M) + ½KL(b‖M) with M the moment-matched Gaussian
/// (½(m1+m2), ½(Σ1+Σ2)).
Divergence js_gaussian(const GaussianEmbedding& a, const GaussianEmbedding& b);

enum class Kernel { Rbf, Linear };

std::string_view to_string(Kernel k) noexcept;

struct MmdOptions {
    Kernel kernel = Kernel::Rbf;
    /// RBF length scale h in exp(−‖x−y‖²/(2h²)); defaults to the median
    /// pairwise distance of the pooled rows.
    std::optional<double> bandwidth;
    /// Adds ‖m1−m2‖² to the kernel sums; off gives the textbook (biased) MMD².
    bool mean_term = true;
};

/// Both sets must have the same number of rows.
double mmd(const linalg::Matrix& z1, const linalg::Matrix& z2, const MmdOptions& options = {});

/// Median of the distances over all distinct pairs of the pooled rows; 1 if
/// that median is 0.
double median_pairwise_distance(const linalg::Matrix& z1, const linalg::Matrix& z2);

/// Ensemble rows (members × T) against one observed series of length T:
/// mean over t of E|X−y| − ½E|X−X′|, expectations over all member pairs.
double crps(const linalg::Matrix& ensemble, std::span<const double> observation);

/// Mean CRPS of every observation row against the same ensemble.
double crps(const linalg::Matrix& ensemble, const linalg::Matrix& observations);

/// E‖X−Y‖ − ½E‖X−X′‖ − ½E‖Y−Y′‖ over all row pairs.
double energy_score(const linalg::Matrix& z1, const linalg::Matrix& z2);

enum class Pairing { Index, Random };

std::string_view to_string(Pairing p) noexcept;
Pairing parse_pairing(std::string_view text);

struct MapeResult {
    double value = 0.0;
    std::size_t used = 0;      ///< point pairs in the average
    std::size_t excluded = 0;  ///< point pairs with |x1| < epsilon
};

/// Mean over paired samples and time steps of |x1−x2| / |x1|.
MapeResult mape_paired(const linalg::Matrix& x1, const linalg::Matrix& x2, Pairing pairing,
                       std::uint64_t seed = 0, double epsilon = 1e-8);

/// One row per window, channels concatenated.
linalg::Matrix flatten(const SeriesBatch& x);

/// fpd between Gaussians fitted directly to the flattened raw windows.
double raw_frechet(const SeriesBatch& x1, const SeriesBatch& x2);

}  // namespace fpd::metrics
