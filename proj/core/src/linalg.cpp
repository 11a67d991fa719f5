#include "fpd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "fpd/error.hpp"

namespace fpd::linalg {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;

ConstMap as_eigen(const Matrix& m) { return ConstMap(m.data().data(), m.rows(), m.cols()); }

Matrix from_eigen(const RowMajor& e) {
    Matrix out(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    std::copy(e.data(), e.data() + e.size(), out.data().begin());
    return out;
}

void require_finite(const Matrix& a, const char* op) {
    if (!all_finite(a.data())) {
        throw NumericError(std::string(op) + ": matrix has non-finite entries");
    }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        std::ostringstream os;
        os << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows()
           << "x" << b.cols();
        throw DimensionError(os.str());
    }
}

std::vector<std::size_t> canonical_row_order(const Matrix& z) {
    std::vector<std::size_t> order(z.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = z.row(a);
        const auto rb = z.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    return order;
}

Matrix symmetrized(const Matrix& a) {
    Matrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            s(i, j) = 0.5 * (a(i, j) + a(j, i));
        }
    }
    return s;
}

}  // namespace

Vector::Vector(std::size_t dim, double fill) : data_(dim, fill) {}

Vector::Vector(std::vector<double> values) : data_(std::move(values)) {}

Vector::Vector(std::initializer_list<double> values) : data_(values) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("Matrix: data length does not equal rows*cols");
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw DimensionError("Matrix: ragged initializer list");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        m(i, i) = diag[i];
    }
    return m;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            t(j, i) = a(i, j);
        }
    }
    return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("multiply: inner dimensions differ");
    }
    RowMajor product = as_eigen(a) * as_eigen(b);
    return from_eigen(product);
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) {
        out.data()[i] += b.data()[i];
    }
    return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "subtract");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) {
        out.data()[i] -= b.data()[i];
    }
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (double& v : out.data()) {
        v *= s;
    }
    return out;
}

double trace(const Matrix& a) {
    if (!a.square()) {
        throw DimensionError("trace: matrix is not square");
    }
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        t += a(i, i);
    }
    return t;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) {
        s += v * v;
    }
    return std::sqrt(s);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("squared_distance: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

bool all_finite(std::span<const double> values) noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double asymmetry(const Matrix& a) {
    const double norm = frobenius_norm(a);
    if (norm == 0.0) {
        return 0.0;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = i + 1; j < a.cols(); ++j) {
            worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
        }
    }
    return worst / norm;
}

SymmetricEigen sym_eig(const Matrix& a) {
    if (!a.square()) {
        std::ostringstream os;
        os << "sym_eig: matrix is " << a.rows() << "x" << a.cols() << ", expected square";
        throw DimensionError(os.str());
    }
    require_finite(a, "sym_eig");
    if (asymmetry(a) > 1e-8) {
        throw ArgumentError("sym_eig: matrix is not symmetric within 1e-8*||A||");
    }
    const std::size_t n = a.rows();
    if (n == 0) {
        return {Vector{}, Matrix{}};
    }

    const Matrix s = symmetrized(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(as_eigen(s)));
    if (solver.info() != Eigen::Success) {
        throw NumericError("sym_eig: eigensolver did not converge");
    }

    // Eigen returns ascending order; flip to descending.
    SymmetricEigen out{Vector(n), Matrix(n, n)};
    const auto& values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();
    for (std::size_t k = 0; k < n; ++k) {
        const auto src = static_cast<Eigen::Index>(n - 1 - k);
        out.values[k] = values(src);
        for (std::size_t i = 0; i < n; ++i) {
            out.vectors(i, k) = vectors(static_cast<Eigen::Index>(i), src);
        }
    }
    return out;
}

namespace {

// V·diag(f(λ))·Vᵀ for a decomposition whose eigenvalues were already validated.
Matrix reassemble(const SymmetricEigen& eig, const std::vector<double>& mapped) {
    const std::size_t n = eig.values.dim();
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                s += eig.vectors(i, k) * mapped[k] * eig.vectors(j, k);
            }
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return out;
}

std::vector<double> clamped_roots(const Vector& values, double tr, const char* op) {
    const double clip = 1e-10 * std::abs(tr);
    std::vector<double> roots(values.dim());
    for (std::size_t k = 0; k < values.dim(); ++k) {
        const double lambda = values[k];
        if (lambda < -clip) {
            std::ostringstream os;
            os << op << ": matrix is not PSD (eigenvalue " << lambda << " below clip -" << clip
               << ")";
            throw NotPsdError(lambda, os.str());
        }
        roots[k] = lambda > 0.0 ? std::sqrt(lambda) : 0.0;
    }
    return roots;
}

}  // namespace

Matrix spd_sqrt(const Matrix& a) {
    const SymmetricEigen eig = sym_eig(a);
    const auto roots = clamped_roots(eig.values, trace(a), "spd_sqrt");
    const std::size_t n = a.rows();
    if (n <= 64) {
        return reassemble(eig, roots);
    }
    // Large matrices: scale the columns and let Eigen do the product.
    RowMajor v = as_eigen(eig.vectors);
    RowMajor scaled = v;
    for (std::size_t k = 0; k < n; ++k) {
        scaled.col(static_cast<Eigen::Index>(k)) *= roots[k];
    }
    RowMajor product = scaled * v.transpose();
    return symmetrized(from_eigen(product));
}

double cross_sqrt_trace(const Matrix& sigma1, const Matrix& sigma2) {
    if (!sigma1.square() || !sigma2.square() || sigma1.rows() != sigma2.rows()) {
        std::ostringstream os;
        os << "cross_sqrt_trace: dimension mismatch " << sigma1.rows() << "x" << sigma1.cols()
           << " vs " << sigma2.rows() << "x" << sigma2.cols();
        throw DimensionError(os.str());
    }
    // The singular values of Σ1^{1/2} Σ2^{1/2} are the square roots of the
    // eigenvalues of Σ1^{1/2} Σ2 Σ1^{1/2}; taking them directly avoids the
    // sqrt(eps) loss of rooting tiny eigenvalues of the squared form.
    const RowMajor product = as_eigen(spd_sqrt(sigma1)) * as_eigen(spd_sqrt(sigma2));
    const Eigen::BDCSVD<RowMajor> svd(product);
    const auto& s = svd.singularValues();
    double total = 0.0;
    for (Eigen::Index i = s.size(); i-- > 0;) {
        total += s[i];
    }
    return total;
}

Vector batch_mean(const Matrix& rows) {
    if (rows.rows() == 0) {
        throw ArgumentError("batch_mean: empty batch");
    }
    require_finite(rows, "batch_mean");
    const auto order = canonical_row_order(rows);
    Vector mean(rows.cols());
    for (std::size_t idx : order) {
        const auto r = rows.row(idx);
        for (std::size_t j = 0; j < r.size(); ++j) {
            mean[j] += r[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.rows());
    for (std::size_t j = 0; j < mean.dim(); ++j) {
        mean[j] *= inv;
    }
    return mean;
}

Matrix batch_cov(const Matrix& rows) {
    if (rows.rows() < 2) {
        throw ArgumentError("batch_cov: need at least 2 rows");
    }
    const Vector mean = batch_mean(rows);
    const auto order = canonical_row_order(rows);
    const std::size_t d = rows.cols();
    Matrix cov(d, d);
    std::vector<double> centred(d);
    for (std::size_t idx : order) {
        const auto r = rows.row(idx);
        for (std::size_t j = 0; j < d; ++j) {
            centred[j] = r[j] - mean[j];
        }
        for (std::size_t i = 0; i < d; ++i) {
            const double ci = centred[i];
            double* out = &cov(i, 0);
            for (std::size_t j = i; j < d; ++j) {
                out[j] += ci * centred[j];
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.rows());
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) *= inv;
            cov(j, i) = cov(i, j);
        }
    }
    return cov;
}

}  // namespace fpd::linalg
