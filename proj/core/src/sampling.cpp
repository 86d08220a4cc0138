#include "kaczmarz/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kaczmarz/error.hpp"

namespace kaczmarz {

IndexSet IndexSet::from_unsorted(std::vector<std::size_t> indices)
{
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
        throw ContractError("IndexSet: duplicate index");
    }
    return IndexSet(std::move(indices));
}

IndexSet IndexSet::from_sorted(std::vector<std::size_t> indices)
{
    for (std::size_t k = 1; k < indices.size(); ++k) {
        if (indices[k] <= indices[k - 1]) {
            throw ContractError("IndexSet: indices not strictly increasing at position " + std::to_string(k));
        }
    }
    return IndexSet(std::move(indices));
}

IndexSet IndexSet::range(std::size_t first, std::size_t count)
{
    std::vector<std::size_t> v(count);
    std::iota(v.begin(), v.end(), first);
    return IndexSet(std::move(v));
}

bool IndexSet::contains(std::size_t row) const
{
    return std::binary_search(indices_.begin(), indices_.end(), row);
}

void IndexSet::check_bound(std::size_t bound) const
{
    if (!indices_.empty() && indices_.back() >= bound) {
        throw ContractError("IndexSet: index " + std::to_string(indices_.back()) + " out of range [0, " +
                            std::to_string(bound) + ")");
    }
}

void Partition::weigh(const ProblemMatrix& a)
{
    block_frob_sq.assign(blocks.size(), 0.0);
    cumulative.assign(blocks.size(), 0.0);
    double running = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        blocks[b].check_bound(a.rows());
        double s = 0.0;
        for (std::size_t i : blocks[b]) {
            s += a.row_norm_sq(i);
        }
        block_frob_sq[b] = s;
        running += s;
        cumulative[b] = running;
    }
}

std::size_t sample_size(std::size_t m, double eta)
{
    if (m == 0) {
        throw ContractError("sample_size: population must be non-empty");
    }
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw ContractError("sample_size: eta must lie in (0, 1], got " + std::to_string(eta));
    }
    const double raw = eta * static_cast<double>(m);
    const auto k = static_cast<std::size_t>(std::ceil(raw * (1.0 - 1e-12)));
    return std::clamp<std::size_t>(k, 1, m);
}

SimpleRandomSampler::SimpleRandomSampler(std::size_t m, double eta) : perm_(m), k_(kaczmarz::sample_size(m, eta))
{
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
}

IndexSet SimpleRandomSampler::draw(RngStream& rng)
{
    const std::size_t m = perm_.size();
    if (k_ == m) {
        return IndexSet::range(0, m);
    }
    for (std::size_t i = 0; i < k_; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
        std::swap(perm_[i], perm_[j]);
    }
    return IndexSet::from_unsorted(std::vector<std::size_t>(perm_.begin(), perm_.begin() + static_cast<long>(k_)));
}

IndexSet simple_random_sample(std::size_t m, double eta, RngStream& rng)
{
    SimpleRandomSampler sampler(m, eta);
    return sampler.draw(rng);
}

std::vector<double> score_rows(const ProblemMatrix& a, std::span<const double> b, std::span<const double> x,
                               const IndexSet& idx)
{
    idx.check_bound(a.rows());
    std::vector<double> scores(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const std::size_t i = idx[k];
        const double norm = a.row_norm(i);
        scores[k] = norm > 0.0 ? std::abs(b[i] - a.row(i).dot(x)) / norm : 0.0;
    }
    return scores;
}

IndexSet top_k(std::span<const double> scores, const IndexSet& idx, std::size_t k)
{
    if (scores.size() != idx.size()) {
        throw ContractError("top_k: scores and index set differ in length");
    }
    if (k >= idx.size()) {
        return idx;
    }
    std::vector<std::size_t> pos(idx.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    // idx is increasing, so comparing positions breaks ties by row index.
    auto better = [&](std::size_t l, std::size_t r) { return scores[l] != scores[r] ? scores[l] > scores[r] : l < r; };
    std::partial_sort(pos.begin(), pos.begin() + static_cast<long>(k), pos.end(), better);
    std::vector<std::size_t> rows(k);
    for (std::size_t j = 0; j < k; ++j) {
        rows[j] = idx[pos[j]];
    }
    return IndexSet::from_unsorted(std::move(rows));
}

std::size_t argmax_position(std::span<const double> scores, const IndexSet& idx)
{
    std::size_t best = idx.size();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (best == idx.size() || scores[k] > scores[best]) {
            best = k;
        }
    }
    return best;
}

Partition uniform_partition(std::size_t m, std::size_t block_size)
{
    if (block_size < 1 || block_size > m) {
        throw ContractError("uniform_partition: block size " + std::to_string(block_size) + " outside [1, " +
                            std::to_string(m) + "]");
    }
    Partition p;
    const std::size_t count = (m + block_size - 1) / block_size;
    p.blocks.reserve(count);
    for (std::size_t b = 0; b < count; ++b) {
        const std::size_t first = b * block_size;
        p.blocks.push_back(IndexSet::range(first, std::min(block_size, m - first)));
    }
    return p;
}

namespace {

std::size_t inverse_cdf(std::span<const double> cumulative, double u)
{
    const double target = u * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    auto pos = static_cast<std::size_t>(it - cumulative.begin());
    // Guard the u*total == total rounding edge and skip zero-weight tails.
    pos = std::min(pos, cumulative.size() - 1);
    while (pos > 0 && cumulative[pos] == cumulative[pos - 1]) {
        --pos;
    }
    return pos;
}

} // namespace

std::size_t sample_block(const Partition& partition, RngStream& rng)
{
    if (partition.cumulative.size() != partition.blocks.size() || partition.blocks.empty()) {
        throw ContractError("sample_block: partition has not been weighed");
    }
    if (!(partition.cumulative.back() > 0.0)) {
        throw ContractError("sample_block: all block weights are zero");
    }
    return inverse_cdf(partition.cumulative, rng.uniform());
}

RowNormSampler::RowNormSampler(const ProblemMatrix& a) : cumulative_(a.rows())
{
    double running = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        running += a.row_norm_sq(i);
        cumulative_[i] = running;
    }
    if (cumulative_.empty() || !(running > 0.0)) {
        throw ContractError("sample_row_by_norm: matrix has no nonzero row");
    }
}

std::size_t RowNormSampler::draw(RngStream& rng) const
{
    return inverse_cdf(cumulative_, rng.uniform());
}

std::size_t sample_row_by_norm(const ProblemMatrix& a, RngStream& rng)
{
    return RowNormSampler(a).draw(rng);
}

} // namespace kaczmarz
