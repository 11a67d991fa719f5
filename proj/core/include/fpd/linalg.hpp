#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fpd::linalg {

/// Dense real vector with value semantics.
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t dim, double fill = 0.0);
    explicit Vector(std::vector<double> values);
    Vector(std::initializer_list<double> values);

    std::size_t dim() const noexcept { return data_.size(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool operator==(const Vector&) const = default;

private:
    std::vector<double> data_;
};

/// Dense real matrix stored row-major.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix transpose(const Matrix& a);
Matrix multiply(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
double trace(const Matrix& a);
double frobenius_norm(const Matrix& a);
double squared_distance(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> values) noexcept;

/// Max |A_ij - A_ji| relative to the Frobenius norm; 0 for exactly symmetric input.
double asymmetry(const Matrix& a);

struct SymmetricEigen {
    Vector values;   ///< descending
    Matrix vectors;  ///< orthonormal columns, column k pairs with values[k]
};

/// Eigendecomposition of a symmetric matrix (symmetry tolerance 1e-8·‖A‖_F).
SymmetricEigen sym_eig(const Matrix& a);

/// Principal square root of a symmetric PSD matrix.
///
/// Eigenvalues in [-1e-10·trace(A), 0) are treated as round-off and clamped to
/// zero; anything more negative raises NotPsdError carrying the eigenvalue.
Matrix spd_sqrt(const Matrix& a);

/// Tr((Σ1 Σ2)^{1/2}), evaluated as the nuclear norm of Σ1^{1/2} Σ2^{1/2}
/// (equal to Tr((Σ1^{1/2} Σ2 Σ1^{1/2})^{1/2})).
double cross_sqrt_trace(const Matrix& sigma1, const Matrix& sigma2);

/// Row mean of an N×d sample matrix. Rows are accumulated in a canonical
/// (lexicographic) order, so the result is bitwise invariant under row shuffles.
Vector batch_mean(const Matrix& rows);

/// Population covariance (1/N normalisation) of an N×d sample matrix, N ≥ 2.
Matrix batch_cov(const Matrix& rows);

}  // namespace fpd::linalg
