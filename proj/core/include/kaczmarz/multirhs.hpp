#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "kaczmarz/matrix.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/sampling.hpp"
#include "kaczmarz/solvers.hpp"

namespace kaczmarz {

/// X^(t) for A X = B (n_cols x k_b, column-major) plus the iteration count.
struct MultiState {
    DenseColMajor x;
    std::size_t t = 0;
};

struct MultiStepInfo {
    IndexSet omega;
    /// Working row per column; each entry lies in omega.
    std::vector<std::size_t> selection;
    std::size_t rows_touched = 0;
    /// Every column's scores over omega were zero; X unchanged.
    bool stagnant = false;
};

struct MultiSolveResult {
    MultiState state;
    Trajectory trajectory;
};

/// One multi-RHS step against a given Omega_t: for each column j, pick the
/// row of omega maximizing |B_ij - A_(i) x_j| / ||A_(i)|| (ties to the smaller
/// index) and project x_j onto it. Columns all read the same X^(t).
MultiStepInfo step_multirhs_on(const ProblemMatrix& a, const DenseColMajor& b, MultiState& state, IndexSet omega);

/// Draw one shared Omega_t from `sampler`, then step_multirhs_on.
MultiStepInfo step_multirhs(const ProblemMatrix& a, const DenseColMajor& b, MultiState& state,
                            SimpleRandomSampler& sampler, RngStream& rng);

/// Max over columns of ||x_j - x_j*||^2 / ||x_j*||^2. Throws ConfigError on a
/// zero column of x_star.
double res_metric_multi(const DenseColMajor& x, const DenseColMajor& x_star);

/// Max over columns of ||B_j - A x_j||^2 / ||B_j||^2.
double relative_residual_multi(const ProblemMatrix& a, const DenseColMajor& b, const DenseColMajor& x);

/// Loop step_multirhs until the max-over-columns metric is below cfg.tol or
/// cfg.max_iter. Uses cfg.eta, cfg.seed, cfg.stopping; cfg.method is ignored.
MultiSolveResult solve_multirhs(const ProblemMatrix& a, const DenseColMajor& b, const SolverConfig& cfg,
                                const DenseColMajor& x0, const std::optional<DenseColMajor>& x_star = std::nullopt);

} // namespace kaczmarz
