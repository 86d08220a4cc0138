#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kaczmarz {

class IndexSet;

/// Dense real vector (b, x_t, x_star).
using Vector = std::vector<double>;

/// One (row, col, value) entry for CSR assembly. Duplicates are summed.
struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Small dense row-major matrix used for Gram blocks, sub-matrices and the
/// Jacobi SVD.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    DenseMatrix transposed() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Column-major dense block for multiple right-hand sides (B, X, X_star).
/// Column j is contiguous.
class DenseColMajor {
public:
    DenseColMajor() = default;
    DenseColMajor(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }
    DenseColMajor(std::size_t rows, std::size_t cols, std::vector<double> col_major);

    static DenseColMajor from_column(std::span<const double> column);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
    std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const DenseColMajor&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Read-only view of one stored row. Dense rows have `cols` empty and
/// `values` of length n_cols; sparse rows list their stored entries.
struct RowView {
    std::span<const std::size_t> cols;
    std::span<const double> values;
    bool dense = false;

    double dot(std::span<const double> x) const;
    /// y += alpha * row^T
    void axpy(double alpha, std::span<double> y) const;
};

/// Immutable system matrix A, either CSR or dense row-major, with cached row
/// norms and squared Frobenius norm. Safe to share across concurrent runs.
class ProblemMatrix {
public:
    enum class Storage { Sparse, Dense };

    ProblemMatrix() = default;

    /// Assemble a CSR matrix. Duplicate (row, col) entries are summed;
    /// explicit zeros are kept. Throws ContractError naming the first
    /// out-of-range entry.
    static ProblemMatrix from_triplets(std::size_t rows, std::size_t cols, std::span<const Triplet> entries);

    /// Adopt CSR arrays directly; they are validated against the CSR invariants.
    static ProblemMatrix from_csr(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                                  std::vector<std::size_t> col_indices, std::vector<double> values);

    static ProblemMatrix from_dense(std::size_t rows, std::size_t cols, std::vector<double> row_major);
    static ProblemMatrix from_dense(const DenseMatrix& m);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    Storage storage() const noexcept { return storage_; }
    bool is_sparse() const noexcept { return storage_ == Storage::Sparse; }
    std::size_t nnz() const noexcept;

    RowView row(std::size_t i) const;

    double row_norm(std::size_t i) const { return row_norms_[i]; }
    double row_norm_sq(std::size_t i) const { return row_norms_[i] * row_norms_[i]; }
    std::span<const double> row_norms() const noexcept { return row_norms_; }
    double frob_sq() const noexcept { return frob_sq_; }

    // CSR arrays (empty for dense storage).
    std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
    std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
    /// Stored values: CSR values, or the dense row-major array.
    std::span<const double> values() const noexcept { return values_; }

    /// y = A x
    Vector multiply(std::span<const double> x) const;
    /// Transposed copy in the same storage kind.
    ProblemMatrix transposed() const;
    /// Dense copy of the rows listed in `rows` (in that order).
    DenseMatrix dense_rows(std::span<const std::size_t> rows) const;
    DenseMatrix to_dense() const;

private:
    void compute_norms();

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Storage storage_ = Storage::Dense;
    std::vector<std::size_t> row_offsets_;
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
    std::vector<double> row_norms_;
    double frob_sq_ = 0.0;
};

/// CSR assembly from triplets.
ProblemMatrix build_csr(std::size_t rows, std::size_t cols, std::span<const Triplet> entries);

/// A_(i) x over the stored entries of row i.
double row_dot(const ProblemMatrix& a, std::size_t i, std::span<const double> x);

/// (b_i - A_(i) x) for i in idx, in idx order. Rows outside idx are not read.
Vector residual_on(const ProblemMatrix& a, std::span<const double> b, std::span<const double> x,
                   const IndexSet& idx);

/// z = A_J^+ r without forming the pseudoinverse.
///
/// Builds the |J|x|J| Gram matrix G = A_J A_J^T and solves G y = r by
/// Cholesky; z = A_J^T y. When a Cholesky pivot falls below
/// 1e-12 * max(diag G) the block is treated as rank deficient and the
/// Moore-Penrose action is realized through a Jacobi eigendecomposition of G,
/// discarding eigenvalues below 1e-12 * lambda_max.
Vector apply_block_pinv(const ProblemMatrix& a, const IndexSet& rows, std::span<const double> r);

struct SpectralExtremes {
    double sigma_min_nonzero = 0.0;
    double sigma_max = 0.0;
    /// Right singular vectors for the two values above (unit length).
    Vector v_min;
    Vector v_max;
};

/// Singular values of a small dense matrix, descending, by one-sided Jacobi.
/// When `right_vectors` is non-null it receives V (cols x k, row-major) with
/// k = min(rows, cols) and column i paired with value i.
Vector singular_values(const DenseMatrix& m, DenseMatrix* right_vectors = nullptr);

/// Smallest nonzero and largest singular values by one-sided Jacobi. A value
/// counts as nonzero when it exceeds sigma_max * max(rows, cols) * 1e-12.
/// Throws ContractError on an empty matrix.
SpectralExtremes spectral_extremes(const DenseMatrix& m);

} // namespace kaczmarz
