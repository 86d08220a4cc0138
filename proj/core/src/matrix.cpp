#include "kaczmarz/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kaczmarz/error.hpp"
#include "kaczmarz/sampling.hpp"

namespace kaczmarz {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double row_pair_dot(const RowView& u, const RowView& v)
{
    if (u.dense && v.dense) {
        return dot(u.values, v.values);
    }
    if (u.dense) {
        return v.dot(u.values);
    }
    if (v.dense) {
        return u.dot(v.values);
    }
    double s = 0.0;
    std::size_t p = 0;
    std::size_t q = 0;
    while (p < u.cols.size() && q < v.cols.size()) {
        if (u.cols[p] < v.cols[q]) {
            ++p;
        } else if (v.cols[q] < u.cols[p]) {
            ++q;
        } else {
            s += u.values[p++] * v.values[q++];
        }
    }
    return s;
}

// Cholesky in place (lower triangle). False if a pivot drops below
// `pivot_floor`.
bool cholesky(DenseMatrix& g, double pivot_floor)
{
    const std::size_t k = g.rows();
    for (std::size_t j = 0; j < k; ++j) {
        double d = g(j, j);
        for (std::size_t p = 0; p < j; ++p) {
            d -= g(j, p) * g(j, p);
        }
        if (!(d > pivot_floor)) {
            return false;
        }
        const double ljj = std::sqrt(d);
        g(j, j) = ljj;
        for (std::size_t i = j + 1; i < k; ++i) {
            double s = g(i, j);
            for (std::size_t p = 0; p < j; ++p) {
                s -= g(i, p) * g(j, p);
            }
            g(i, j) = s / ljj;
        }
    }
    return true;
}

void cholesky_solve(const DenseMatrix& l, std::span<double> y)
{
    const std::size_t k = l.rows();
    for (std::size_t i = 0; i < k; ++i) {
        double s = y[i];
        for (std::size_t p = 0; p < i; ++p) {
            s -= l(i, p) * y[p];
        }
        y[i] = s / l(i, i);
    }
    for (std::size_t i = k; i-- > 0;) {
        double s = y[i];
        for (std::size_t p = i + 1; p < k; ++p) {
            s -= l(p, i) * y[p];
        }
        y[i] = s / l(i, i);
    }
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix. On return `s` holds
// the eigenvalues on its diagonal and `q` the eigenvectors as columns.
void symmetric_jacobi(DenseMatrix& s, DenseMatrix& q)
{
    const std::size_t k = s.rows();
    q = DenseMatrix(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        q(i, i) = 1.0;
    }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                total += s(i, j) * s(i, j);
                if (i != j) {
                    off += s(i, j) * s(i, j);
                }
            }
        }
        if (off <= 1e-30 * total) {
            return;
        }
        for (std::size_t p = 0; p + 1 < k; ++p) {
            for (std::size_t r = p + 1; r < k; ++r) {
                const double apr = s(p, r);
                if (apr == 0.0) {
                    continue;
                }
                const double theta = (s(r, r) - s(p, p)) / (2.0 * apr);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t i = 0; i < k; ++i) {
                    const double sip = s(i, p);
                    const double sir = s(i, r);
                    s(i, p) = c * sip - sn * sir;
                    s(i, r) = sn * sip + c * sir;
                }
                for (std::size_t i = 0; i < k; ++i) {
                    const double spi = s(p, i);
                    const double sri = s(r, i);
                    s(p, i) = c * spi - sn * sri;
                    s(r, i) = sn * spi + c * sri;
                }
                for (std::size_t i = 0; i < k; ++i) {
                    const double qip = q(i, p);
                    const double qir = q(i, r);
                    q(i, p) = c * qip - sn * qir;
                    q(i, r) = sn * qip + c * qir;
                }
            }
        }
    }
}

} // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major))
{
    if (data_.size() != rows_ * cols_) {
        throw ContractError("DenseMatrix: expected " + std::to_string(rows_ * cols_) + " values, got " +
                            std::to_string(data_.size()));
    }
}

DenseMatrix DenseMatrix::transposed() const
{
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            t(j, i) = (*this)(i, j);
        }
    }
    return t;
}

DenseColMajor::DenseColMajor(std::size_t rows, std::size_t cols, std::vector<double> col_major)
    : rows_(rows), cols_(cols), data_(std::move(col_major))
{
    if (data_.size() != rows_ * cols_) {
        throw ContractError("DenseColMajor: expected " + std::to_string(rows_ * cols_) + " values, got " +
                            std::to_string(data_.size()));
    }
}

DenseColMajor DenseColMajor::from_column(std::span<const double> column)
{
    return DenseColMajor(column.size(), 1, std::vector<double>(column.begin(), column.end()));
}

double RowView::dot(std::span<const double> x) const
{
    if (dense) {
        return kaczmarz::dot(values, x);
    }
    double s = 0.0;
    for (std::size_t p = 0; p < cols.size(); ++p) {
        s += values[p] * x[cols[p]];
    }
    return s;
}

void RowView::axpy(double alpha, std::span<double> y) const
{
    if (dense) {
        for (std::size_t j = 0; j < values.size(); ++j) {
            y[j] += alpha * values[j];
        }
        return;
    }
    for (std::size_t p = 0; p < cols.size(); ++p) {
        y[cols[p]] += alpha * values[p];
    }
}

ProblemMatrix ProblemMatrix::from_triplets(std::size_t rows, std::size_t cols, std::span<const Triplet> entries)
{
    for (std::size_t e = 0; e < entries.size(); ++e) {
        const Triplet& t = entries[e];
        if (t.row >= rows || t.col >= cols) {
            throw ContractError("build_csr: entry " + std::to_string(e) + " at (" + std::to_string(t.row) + ", " +
                                std::to_string(t.col) + ") is outside a " + std::to_string(rows) + " x " +
                                std::to_string(cols) + " matrix");
        }
    }

    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return entries[l].row != entries[r].row ? entries[l].row < entries[r].row : entries[l].col < entries[r].col;
    });

    std::vector<std::size_t> offsets(rows + 1, 0);
    std::vector<std::size_t> col_idx;
    std::vector<double> vals;
    col_idx.reserve(entries.size());
    vals.reserve(entries.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const Triplet& t = entries[order[pos]];
        const bool same_as_last = !col_idx.empty() && pos > 0 && entries[order[pos - 1]].row == t.row &&
                                  col_idx.back() == t.col;
        if (same_as_last) {
            vals.back() += t.value;
        } else {
            col_idx.push_back(t.col);
            vals.push_back(t.value);
            ++offsets[t.row + 1];
        }
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return from_csr(rows, cols, std::move(offsets), std::move(col_idx), std::move(vals));
}

ProblemMatrix ProblemMatrix::from_csr(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                                      std::vector<std::size_t> col_indices, std::vector<double> values)
{
    if (row_offsets.size() != rows + 1 || row_offsets.front() != 0 || row_offsets.back() != col_indices.size() ||
        col_indices.size() != values.size()) {
        throw ContractError("from_csr: inconsistent CSR array sizes");
    }
    for (std::size_t i = 0; i < rows; ++i) {
        if (row_offsets[i] > row_offsets[i + 1]) {
            throw ContractError("from_csr: row offsets decrease at row " + std::to_string(i));
        }
        for (std::size_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p) {
            if (col_indices[p] >= cols) {
                throw ContractError("from_csr: column " + std::to_string(col_indices[p]) + " out of range in row " +
                                    std::to_string(i));
            }
            if (p > row_offsets[i] && col_indices[p] <= col_indices[p - 1]) {
                throw ContractError("from_csr: columns not strictly increasing in row " + std::to_string(i));
            }
        }
    }
    ProblemMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.storage_ = Storage::Sparse;
    m.row_offsets_ = std::move(row_offsets);
    m.col_indices_ = std::move(col_indices);
    m.values_ = std::move(values);
    m.compute_norms();
    return m;
}

ProblemMatrix ProblemMatrix::from_dense(std::size_t rows, std::size_t cols, std::vector<double> row_major)
{
    if (row_major.size() != rows * cols) {
        throw ContractError("from_dense: expected " + std::to_string(rows * cols) + " values, got " +
                            std::to_string(row_major.size()));
    }
    ProblemMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.storage_ = Storage::Dense;
    m.values_ = std::move(row_major);
    m.compute_norms();
    return m;
}

ProblemMatrix ProblemMatrix::from_dense(const DenseMatrix& d)
{
    return from_dense(d.rows(), d.cols(), std::vector<double>(d.data().begin(), d.data().end()));
}

void ProblemMatrix::compute_norms()
{
    row_norms_.assign(rows_, 0.0);
    frob_sq_ = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        const RowView r = row(i);
        double s = 0.0;
        for (double v : r.values) {
            s += v * v;
        }
        row_norms_[i] = std::sqrt(s);
        frob_sq_ += s;
    }
}

std::size_t ProblemMatrix::nnz() const noexcept
{
    if (storage_ == Storage::Sparse) {
        return values_.size();
    }
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return v != 0.0; }));
}

RowView ProblemMatrix::row(std::size_t i) const
{
    if (storage_ == Storage::Dense) {
        return RowView{{}, std::span<const double>(values_).subspan(i * cols_, cols_), true};
    }
    const std::size_t begin = row_offsets_[i];
    const std::size_t len = row_offsets_[i + 1] - begin;
    return RowView{std::span<const std::size_t>(col_indices_).subspan(begin, len),
                   std::span<const double>(values_).subspan(begin, len), false};
}

Vector ProblemMatrix::multiply(std::span<const double> x) const
{
    if (x.size() != cols_) {
        throw ContractError("multiply: x has length " + std::to_string(x.size()) + ", expected " +
                            std::to_string(cols_));
    }
    Vector y(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        y[i] = row(i).dot(x);
    }
    return y;
}

ProblemMatrix ProblemMatrix::transposed() const
{
    if (storage_ == Storage::Dense) {
        std::vector<double> t(values_.size());
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                t[j * rows_ + i] = values_[i * cols_ + j];
            }
        }
        return from_dense(cols_, rows_, std::move(t));
    }
    std::vector<std::size_t> offsets(cols_ + 1, 0);
    for (std::size_t c : col_indices_) {
        ++offsets[c + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    std::vector<std::size_t> next(offsets.begin(), offsets.end() - 1);
    std::vector<std::size_t> cols(values_.size());
    std::vector<double> vals(values_.size());
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            const std::size_t dst = next[col_indices_[p]]++;
            cols[dst] = i;
            vals[dst] = values_[p];
        }
    }
    return from_csr(cols_, rows_, std::move(offsets), std::move(cols), std::move(vals));
}

DenseMatrix ProblemMatrix::dense_rows(std::span<const std::size_t> rows) const
{
    DenseMatrix d(rows.size(), cols_);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] >= rows_) {
            throw ContractError("dense_rows: row " + std::to_string(rows[k]) + " out of range");
        }
        const RowView r = row(rows[k]);
        r.axpy(1.0, d.row(k));
    }
    return d;
}

DenseMatrix ProblemMatrix::to_dense() const
{
    std::vector<std::size_t> all(rows_);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return dense_rows(all);
}

ProblemMatrix build_csr(std::size_t rows, std::size_t cols, std::span<const Triplet> entries)
{
    return ProblemMatrix::from_triplets(rows, cols, entries);
}

double row_dot(const ProblemMatrix& a, std::size_t i, std::span<const double> x)
{
    if (i >= a.rows()) {
        throw ContractError("row_dot: row " + std::to_string(i) + " out of range (" + std::to_string(a.rows()) +
                            " rows)");
    }
    if (x.size() != a.cols()) {
        throw ContractError("row_dot: x has length " + std::to_string(x.size()) + ", expected " +
                            std::to_string(a.cols()));
    }
    return a.row(i).dot(x);
}

Vector residual_on(const ProblemMatrix& a, std::span<const double> b, std::span<const double> x, const IndexSet& idx)
{
    idx.check_bound(a.rows());
    Vector r(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        r[k] = b[idx[k]] - a.row(idx[k]).dot(x);
    }
    return r;
}

Vector apply_block_pinv(const ProblemMatrix& a, const IndexSet& rows, std::span<const double> r)
{
    if (rows.size() != r.size()) {
        throw ContractError("apply_block_pinv: block has " + std::to_string(rows.size()) + " rows but r has " +
                            std::to_string(r.size()) + " entries");
    }
    rows.check_bound(a.rows());
    Vector z(a.cols(), 0.0);
    const std::size_t k = rows.size();
    if (k == 0) {
        return z;
    }

    std::vector<RowView> views;
    views.reserve(k);
    for (std::size_t i : rows) {
        views.push_back(a.row(i));
    }

    if (k == 1) {
        const double nsq = a.row_norm_sq(rows[0]);
        if (nsq > 0.0) {
            views[0].axpy(r[0] / nsq, z);
        }
        return z;
    }

    DenseMatrix g(k, k);
    double max_diag = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        g(i, i) = a.row_norm_sq(rows[i]);
        max_diag = std::max(max_diag, g(i, i));
        for (std::size_t j = 0; j < i; ++j) {
            g(i, j) = g(j, i) = row_pair_dot(views[i], views[j]);
        }
    }
    if (max_diag == 0.0) {
        return z;
    }

    Vector y(r.begin(), r.end());
    DenseMatrix l = g;
    if (cholesky(l, 1e-12 * max_diag)) {
        cholesky_solve(l, y);
    } else {
        DenseMatrix q;
        symmetric_jacobi(g, q);
        double lambda_max = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            lambda_max = std::max(lambda_max, g(i, i));
        }
        const double cutoff = 1e-12 * lambda_max;
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t e = 0; e < k; ++e) {
            const double lambda = g(e, e);
            if (!(lambda > cutoff)) {
                continue;
            }
            double proj = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                proj += q(i, e) * r[i];
            }
            proj /= lambda;
            for (std::size_t i = 0; i < k; ++i) {
                y[i] += proj * q(i, e);
            }
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        views[i].axpy(y[i], z);
    }
    return z;
}

Vector singular_values(const DenseMatrix& m, DenseMatrix* right_vectors)
{
    if (m.empty()) {
        throw ContractError("singular_values: empty matrix");
    }
    // Orthogonalize the columns of W (tall orientation, stored column-major as
    // a row-major transpose). Tracks V when W = M, or U-columns when W = M^T.
    const bool wide = m.rows() < m.cols();
    const DenseMatrix tall = wide ? m.transposed() : m;
    const std::size_t rows = tall.rows();
    const std::size_t k = tall.cols();
    DenseMatrix w = tall.transposed(); // k x rows, row p = column p of tall
    DenseMatrix v(k, k);               // row p = column p of V
    for (std::size_t i = 0; i < k; ++i) {
        v(i, i) = 1.0;
    }

    constexpr double eps = 1e-15;
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < k; ++p) {
            for (std::size_t q = p + 1; q < k; ++q) {
                auto wp = w.row(p);
                auto wq = w.row(q);
                double alpha = 0.0;
                double beta = 0.0;
                double gamma = 0.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    alpha += wp[i] * wp[i];
                    beta += wq[i] * wq[i];
                    gamma += wp[i] * wq[i];
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double a = wp[i];
                    const double b = wq[i];
                    wp[i] = c * a - s * b;
                    wq[i] = s * a + c * b;
                }
                auto vp = v.row(p);
                auto vq = v.row(q);
                for (std::size_t i = 0; i < k; ++i) {
                    const double a = vp[i];
                    const double b = vq[i];
                    vp[i] = c * a - s * b;
                    vq[i] = s * a + c * b;
                }
            }
        }
        if (!rotated) {
            break;
        }
    }

    Vector sigma(k);
    for (std::size_t p = 0; p < k; ++p) {
        const auto wp = w.row(p);
        sigma[p] = std::sqrt(std::inner_product(wp.begin(), wp.end(), wp.begin(), 0.0));
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return sigma[l] > sigma[r]; });

    Vector sorted(k);
    for (std::size_t i = 0; i < k; ++i) {
        sorted[i] = sigma[order[i]];
    }

    if (right_vectors != nullptr) {
        // Right singular vectors of m: columns of V for a tall m, normalized
        // columns of W (left vectors of m^T) for a wide m.
        const std::size_t dim = m.cols();
        DenseMatrix out(dim, k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t src = order[i];
            if (!wide) {
                for (std::size_t j = 0; j < dim; ++j) {
                    out(j, i) = v(src, j);
                }
            } else if (sigma[src] > 0.0) {
                for (std::size_t j = 0; j < dim; ++j) {
                    out(j, i) = w(src, j) / sigma[src];
                }
            }
        }
        *right_vectors = std::move(out);
    }
    return sorted;
}

SpectralExtremes spectral_extremes(const DenseMatrix& m)
{
    DenseMatrix vecs;
    const Vector sigma = singular_values(m, &vecs);
    SpectralExtremes out;
    out.sigma_max = sigma.front();
    const double floor = out.sigma_max * static_cast<double>(std::max(m.rows(), m.cols())) * 1e-12;
    std::size_t min_pos = 0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (sigma[i] > floor) {
            min_pos = i;
        }
    }
    out.sigma_min_nonzero = sigma[min_pos];
    out.v_max.resize(vecs.rows());
    out.v_min.resize(vecs.rows());
    for (std::size_t j = 0; j < vecs.rows(); ++j) {
        out.v_max[j] = vecs(j, 0);
        out.v_min[j] = vecs(j, min_pos);
    }
    return out;
}

} // namespace kaczmarz
