#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kaczmarz/matrix.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/sampling.hpp"

namespace kaczmarz {

enum class Method {
    Kaczmarz,              ///< cyclic row order
    RandomizedKaczmarz,    ///< rows sampled by squared norm
    SemiRandomized,        ///< argmax residual row within a simple random sample
    RandomizedBlock,       ///< Frobenius-weighted block of a fixed partition
    GreedyBlock,           ///< full residual scan, epsilon-greedy block
    RandomizedAverage,     ///< averaged single-row projections over a block
    SemiRandomizedBlockFull, ///< top-k_max residual rows over all rows
    SemiRandomizedBlock,   ///< top-k_max residual rows within a simple random sample
    MultiRhs,              ///< per-column argmax over a shared sample (AX = B)
};

enum class StoppingRule {
    ErrorVsKnown,     ///< ||x - x_star||^2 / ||x_star||^2 < tol
    RelativeResidual, ///< ||b - A x||^2 / ||b||^2 < tol
};

enum class Status { Converged, MaxIter, Diverged };

std::string_view to_string(Method m);
std::string_view to_string(StoppingRule s);
std::string_view to_string(Status s);
/// Accepts the CLI spellings: k, rk, srk, rbk, gbk, rabk, srbk-full, srbk, multi.
Method parse_method(std::string_view name);
StoppingRule parse_stopping(std::string_view name);

struct SolverConfig {
    Method method = Method::SemiRandomizedBlock;
    double tol = 1e-3;
    std::size_t max_iter = 1'000'000;
    double eta = 0.1;
    std::size_t k_max = 10;
    /// Partition block size N_r for RandomizedBlock / RandomizedAverage.
    std::size_t block_rows = 10;
    double alpha = 1.95;
    std::uint64_t seed = 0;
    StoppingRule stopping = StoppingRule::ErrorVsKnown;
    /// Keep the selected index set of every iteration in the trajectory.
    bool record_indices = true;

    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

struct IterateState {
    Vector x;
    std::size_t t = 0;
};

struct IterationRecord {
    std::size_t t = 0;
    double res = 0.0;
    /// Rows used in the update (|J_t|, 1 for single-row methods, k_b for
    /// multi-RHS).
    std::size_t block_size = 0;
    /// Rows whose residual was evaluated to make the selection.
    std::size_t rows_touched = 0;
    std::uint64_t elapsed_ns = 0;
    bool stagnant = false;
    std::vector<std::size_t> selected;
};

struct Trajectory {
    std::vector<IterationRecord> records;
    Status status = Status::MaxIter;

    std::size_t iterations() const noexcept { return records.size(); }
    double final_res() const noexcept { return final_res_; }
    void set_initial_res(double r) noexcept { final_res_ = r; }
    void push(IterationRecord rec)
    {
        final_res_ = rec.res;
        records.push_back(std::move(rec));
    }

private:
    double final_res_ = 0.0;
};

struct SolveResult {
    IterateState state;
    Trajectory trajectory;
};

/// Outcome of one step kernel.
struct StepInfo {
    IndexSet selected;
    std::size_t rows_touched = 0;
    /// No violated row among the candidates; x unchanged.
    bool stagnant = false;
};

/// ||x - x_star||^2 / ||x_star||^2. Throws ConfigError when x_star is zero.
double res_metric(std::span<const double> x, std::span<const double> x_star);

/// ||b - A x||^2 / ||b||^2 (0 when b is zero and the residual is zero).
double relative_residual(const ProblemMatrix& a, std::span<const double> b, std::span<const double> x);

/// Classical projection onto row `row`'s hyperplane. Zero rows are skipped
/// with a warning; returns whether x changed.
bool step_kaczmarz(const ProblemMatrix& a, std::span<const double> b, IterateState& state, std::size_t row);

StepInfo step_srk(const ProblemMatrix& a, std::span<const double> b, IterateState& state,
                  SimpleRandomSampler& sampler, RngStream& rng);

StepInfo step_rbk(const ProblemMatrix& a, std::span<const double> b, IterateState& state,
                  const Partition& partition, RngStream& rng);

/// Greedy block step with the adaptive epsilon rule. A zero residual leaves x
/// unchanged and reports an empty selection.
StepInfo step_gbk(const ProblemMatrix& a, std::span<const double> b, IterateState& state);

/// Averaged block projection with norm-proportional convex weights.
StepInfo step_rabk(const ProblemMatrix& a, std::span<const double> b, IterateState& state,
                   const Partition& partition, double alpha, RngStream& rng);

/// Top-k_max residual rows over all m rows, projected jointly.
StepInfo step_srbk_full(const ProblemMatrix& a, std::span<const double> b, IterateState& state,
                        std::size_t k_max);

struct SampledStepInfo {
    IndexSet omega;
    StepInfo step;
};

/// Top-k_max residual rows within a fresh simple random sample Omega_t.
/// Rows outside Omega_t are not read.
SampledStepInfo step_srbk_sampled(const ProblemMatrix& a, std::span<const double> b, IterateState& state,
                                  std::size_t k_max, SimpleRandomSampler& sampler, RngStream& rng);

/// Run `cfg.method` from x0 until the stopping metric drops below cfg.tol or
/// cfg.max_iter steps. x_star is required for StoppingRule::ErrorVsKnown.
/// A non-finite iterate ends the run with Status::Diverged.
SolveResult solve(const ProblemMatrix& a, std::span<const double> b, const SolverConfig& cfg,
                  std::span<const double> x0, std::optional<std::span<const double>> x_star = std::nullopt);

} // namespace kaczmarz
