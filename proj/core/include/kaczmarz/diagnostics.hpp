#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "kaczmarz/matrix.hpp"
#include "kaczmarz/sampling.hpp"
#include "kaczmarz/solvers.hpp"

namespace kaczmarz {

// Convergence-bound checks for the semi-randomized block methods. These form
// dense sub-matrices and run a Jacobi SVD per call, so they are meant for small
// instances only.

struct SpectralEstimates {
    /// Full scan: sigma_min(A), zero unless A has full column rank.
    /// Sampled: smallest nonzero singular value of A_t.
    double sigma_min_ref = 0.0;
    double sigma_max_block = 0.0; ///< largest singular value of A_J
    double frob_sq_ref = 0.0;     ///< ||A||_F^2 (or ||A_t||_F^2)
    double frob_sq_block = 0.0;   ///< ||A_J||_F^2
};

/// 1 - frob_block / (frob_ref - frob_block) * sigma_min_ref^2 / sigma_max_block^2.
/// nullopt when frob_ref == frob_block (the block exhausts the reference).
std::optional<double> contraction_factor(const SpectralEstimates& s);

/// Full-scan factor, reference matrix A.
SpectralEstimates spectral_estimates_alg3(const ProblemMatrix& a, const IndexSet& block);
std::optional<double> contraction_factor_alg3(const ProblemMatrix& a, const IndexSet& block);

/// Sampled factor, reference matrix A_t = rows omega of A.
SpectralEstimates spectral_estimates_alg4(const ProblemMatrix& a, const IndexSet& omega, const IndexSet& block);
std::optional<double> contraction_factor_alg4(const ProblemMatrix& a, const IndexSet& omega, const IndexSet& block);

/// 1 - sigma_min^2(A_t) / ||A_t||_F^2. Throws ContractError for empty omega.
double contraction_factor_multirhs(const ProblemMatrix& a, const IndexSet& omega);

/// 1 - sigma_min^2(A) / (m * max_tau sigma_max^2(A_tau)) for a fixed partition.
double rbk_reference_factor(const ProblemMatrix& a, const Partition& partition);

struct BoundRecord {
    std::uint64_t seed = 0;
    std::size_t t = 0;
    double ratio = 0.0; ///< ||x_{t+1} - x*||^2 / ||x_t - x*||^2
    double bound = 1.0; ///< contraction factor for the block actually used
    bool defined = true;
    bool satisfied = true;
    double slack = 0.0; ///< bound - ratio (negative means violated)
};

struct BoundReport {
    std::vector<BoundRecord> records;
    std::size_t violations = 0;
    /// Largest amount by which ratio exceeded bound (0 if none).
    double max_violation = 0.0;
    double min_slack = 0.0;
};

/// Absolute slack allowed before a step counts as a violation.
inline constexpr double kBoundSlack = 1e-9;

/// Run cfg.method (SemiRandomizedBlockFull or SemiRandomizedBlock) from
/// x = 0 for each seed, checking ratio <= bound + kBoundSlack at every step.
/// The sampled variant uses the Omega_t actually drawn. Iteration stops when
/// the error metric drops below cfg.tol, x hits x_star, or cfg.max_iter.
BoundReport verify_trajectory_bound(const ProblemMatrix& a, std::span<const double> b, std::span<const double> x_star,
                                    const SolverConfig& cfg, std::span<const std::uint64_t> seeds);

/// Columns: t, ratio, bound, satisfied, slack (plus seed as the first column).
void write_bound_csv(const std::filesystem::path& path, const BoundReport& report);

} // namespace kaczmarz
