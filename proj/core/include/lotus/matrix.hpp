#ifndef LOTUS_MATRIX_HPP
#define LOTUS_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace lotus {

/// Dense row-major matrix of doubles. The single carrier type for weights,
/// gradients and projector bases.
class DenseMatrix {
public:
    DenseMatrix() = default;

    /// Zero-initialized rows x cols matrix.
    DenseMatrix(std::size_t rows, std::size_t cols);

    /// Takes ownership of row-major data; data.size() must equal rows*cols.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    /// Build from nested initializer lists; rows must have equal length.
    /// Entries are validated to be finite (this is the external-input path).
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }

    /// True iff every entry is finite (no NaN/Inf).
    bool all_finite() const noexcept;

    /// Throws NonFiniteError naming `label` if any entry is NaN/Inf.
    void require_finite(const char* label) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a * b. Throws DimensionError naming both shapes on mismatch.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double s);

/// Elementwise product.
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);

/// Entrywise inner product <a, b>.
double dot(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm(const DenseMatrix& a);

/// max_ij |a_ij - b_ij|
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

double max_abs(const DenseMatrix& a);

} // namespace lotus

#endif
