#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kaczmarz/matrix.hpp"
#include "kaczmarz/rng.hpp"

namespace kaczmarz {

/// Strictly increasing list of row indices (Omega_t, J_t, partition blocks).
class IndexSet {
public:
    IndexSet() = default;

    /// Takes indices in any order; sorts them and rejects duplicates.
    static IndexSet from_unsorted(std::vector<std::size_t> indices);
    /// Takes an already strictly increasing list (checked).
    static IndexSet from_sorted(std::vector<std::size_t> indices);
    /// {first, first+1, ..., first+count-1}
    static IndexSet range(std::size_t first, std::size_t count);

    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }
    std::size_t operator[](std::size_t k) const { return indices_[k]; }
    auto begin() const noexcept { return indices_.begin(); }
    auto end() const noexcept { return indices_.end(); }
    std::span<const std::size_t> span() const noexcept { return indices_; }
    const std::vector<std::size_t>& vector() const noexcept { return indices_; }

    bool contains(std::size_t row) const;
    /// Throws ContractError when any index is >= bound.
    void check_bound(std::size_t bound) const;

    bool operator==(const IndexSet&) const = default;

private:
    explicit IndexSet(std::vector<std::size_t> sorted) : indices_(std::move(sorted)) {}
    std::vector<std::size_t> indices_;
};

/// Row partition T = {tau_1, ..., tau_p} with per-block squared Frobenius
/// weights. Blocks are disjoint, non-empty and tile [0, m).
struct Partition {
    std::vector<IndexSet> blocks;
    /// ||A_tau||_F^2 per block; empty until weigh() is called.
    std::vector<double> block_frob_sq;
    /// Running sum of block_frob_sq, used for inverse-CDF draws.
    std::vector<double> cumulative;

    std::size_t size() const noexcept { return blocks.size(); }
    /// Fill block_frob_sq / cumulative from the row norms of `a`.
    void weigh(const ProblemMatrix& a);
};

/// Sample size ceil(eta * m), clamped to [1, m]. The product is nudged down
/// by a relative 1e-12 so that e.g. 0.07 * 100 yields 7, not 8.
std::size_t sample_size(std::size_t m, double eta);

/// Reusable simple-random-sampling engine over [0, m).
///
/// Keeps a permutation workspace so each draw is a partial Fisher-Yates
/// shuffle of O(k) swaps; a partial shuffle of any permutation yields a
/// uniformly random k-subset, so the workspace is never reset.
class SimpleRandomSampler {
public:
    SimpleRandomSampler(std::size_t m, double eta);

    std::size_t population() const noexcept { return perm_.size(); }
    std::size_t sample_size() const noexcept { return k_; }

    /// Draw Omega_t (sorted ascending). When k == m no randomness is consumed.
    IndexSet draw(RngStream& rng);

private:
    std::vector<std::size_t> perm_;
    std::size_t k_;
};

/// ceil(eta*m) distinct indices drawn uniformly without replacement, sorted.
/// Throws ContractError unless 0 < eta <= 1 and m >= 1.
IndexSet simple_random_sample(std::size_t m, double eta, RngStream& rng);

/// beta_j = |b_j - A_(j) x| / ||A_(j)||_2 for j in idx; zero rows score 0.
std::vector<double> score_rows(const ProblemMatrix& a, std::span<const double> b, std::span<const double> x,
                               const IndexSet& idx);

/// Indices of the k largest scores within idx (scores[k] belongs to idx[k]).
/// Ties go to the smaller row index; k is capped at |idx|; result is sorted.
IndexSet top_k(std::span<const double> scores, const IndexSet& idx, std::size_t k);

/// Position in idx of the largest score, ties to the smaller row index.
/// Returns idx.size() when idx is empty.
std::size_t argmax_position(std::span<const double> scores, const IndexSet& idx);

/// p = ceil(m / block_size) contiguous blocks; the last holds the remainder.
/// Weights are not filled (see Partition::weigh).
Partition uniform_partition(std::size_t m, std::size_t block_size);

/// Block index drawn with probability block_frob_sq[i] / sum. The partition
/// must be weighed; throws ContractError if all weights are zero.
std::size_t sample_block(const Partition& partition, RngStream& rng);

/// Row sampler with probability ||A_(i)||^2 / ||A||_F^2.
class RowNormSampler {
public:
    explicit RowNormSampler(const ProblemMatrix& a);
    std::size_t draw(RngStream& rng) const;

private:
    std::vector<double> cumulative_;
};

/// One draw from RowNormSampler. Throws ContractError for a zero matrix.
std::size_t sample_row_by_norm(const ProblemMatrix& a, RngStream& rng);

} // namespace kaczmarz
