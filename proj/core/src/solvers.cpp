#include "kaczmarz/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <string>

#include "kaczmarz/error.hpp"

namespace kaczmarz {

namespace {

void warn(const std::string& msg)
{
    std::clog << "kaczmarz: warning: " << msg << '\n';
}

double squared_norm(std::span<const double> v)
{
    double s = 0.0;
    for (double e : v) {
        s += e * e;
    }
    return s;
}

bool all_finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

void add_into(std::span<double> x, std::span<const double> z)
{
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] += z[j];
    }
}

// Shared body of the full-scan and sampled semi-randomized block steps: score
// `candidates`, keep the k_max largest, project onto that block.
StepInfo block_step_over(const ProblemMatrix& a, std::span<const double> b, IterateState& state,
                         const IndexSet& candidates, std::size_t k_max)
{
    StepInfo info;
    info.rows_touched = candidates.size();
    const Vector residual = residual_on(a, b, state.x, candidates);
    std::vector<double> scores(candidates.size());
    double best = 0.0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const double norm = a.row_norm(candidates[k]);
        scores[k] = norm > 0.0 ? std::abs(residual[k]) / norm : 0.0;
        best = std::max(best, scores[k]);
    }
    if (best == 0.0) {
        info.stagnant = true;
        return info;
    }
    info.selected = top_k(scores, candidates, k_max);
    Vector r_block(info.selected.size());
    std::size_t k = 0;
    for (std::size_t j = 0; j < info.selected.size(); ++j) {
        while (candidates[k] != info.selected[j]) {
            ++k;
        }
        r_block[j] = residual[k];
    }
    add_into(state.x, apply_block_pinv(a, info.selected, r_block));
    return info;
}

} // namespace

std::string_view to_string(Method m)
{
    switch (m) {
    case Method::Kaczmarz: return "k";
    case Method::RandomizedKaczmarz: return "rk";
    case Method::SemiRandomized: return "srk";
    case Method::RandomizedBlock: return "rbk";
    case Method::GreedyBlock: return "gbk";
    case Method::RandomizedAverage: return "rabk";
    case Method::SemiRandomizedBlockFull: return "srbk-full";
    case Method::SemiRandomizedBlock: return "srbk";
    case Method::MultiRhs: return "multi";
    }
    return "?";
}

std::string_view to_string(StoppingRule s)
{
    return s == StoppingRule::ErrorVsKnown ? "error" : "residual";
}

std::string_view to_string(Status s)
{
    switch (s) {
    case Status::Converged: return "CONVERGED";
    case Status::MaxIter: return "MAX_ITER";
    case Status::Diverged: return "DIVERGED";
    }
    return "?";
}

Method parse_method(std::string_view name)
{
    for (Method m : {Method::Kaczmarz, Method::RandomizedKaczmarz, Method::SemiRandomized, Method::RandomizedBlock,
                     Method::GreedyBlock, Method::RandomizedAverage, Method::SemiRandomizedBlockFull,
                     Method::SemiRandomizedBlock, Method::MultiRhs}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw ConfigError("unknown method '" + std::string(name) +
                      "' (expected k, rk, srk, rbk, gbk, rabk, srbk-full, srbk or multi)");
}

StoppingRule parse_stopping(std::string_view name)
{
    if (name == "error") {
        return StoppingRule::ErrorVsKnown;
    }
    if (name == "residual") {
        return StoppingRule::RelativeResidual;
    }
    throw ConfigError("unknown stopping rule '" + std::string(name) + "' (expected error or residual)");
}

void SolverConfig::validate() const
{
    if (!(tol > 0.0)) {
        throw ConfigError("tol must be positive");
    }
    if (max_iter < 1) {
        throw ConfigError("max_iter must be at least 1");
    }
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw ConfigError("eta must lie in (0, 1]");
    }
    if (k_max < 1) {
        throw ConfigError("k_max must be at least 1");
    }
    if (block_rows < 1) {
        throw ConfigError("block size N_r must be at least 1");
    }
    if (method == Method::RandomizedAverage && !(alpha > 0.0 && alpha < 2.0)) {
        throw ConfigError("alpha must lie in (0, 2) for rabk");
    }
}

double res_metric(std::span<const double> x, std::span<const double> x_star)
{
    if (x.size() != x_star.size()) {
        throw ContractError("res_metric: length mismatch");
    }
    const double denom = squared_norm(x_star);
    if (denom == 0.0) {
        throw ConfigError("x_star is zero; the error-vs-known metric is undefined, use the relative residual rule");
    }
    double num = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - x_star[j];
        num += d * d;
    }
    return num / denom;
}

double relative_residual(const ProblemMatrix& a, std::span<const double> b, std::span<const double> x)
{
    double num = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double r = b[i] - a.row(i).dot(x);
        num += r * r;
    }
    const double denom = squared_norm(b);
    if (denom == 0.0) {
        return num == 0.0 ? 0.0 : num;
    }
    return num / denom;
}

bool step_kaczmarz(const ProblemMatrix& a, std::span<const double> b, IterateState& state, std::size_t row)
{
    if (row >= a.rows()) {
        throw ContractError("step_kaczmarz: row " + std::to_string(row) + " out of range");
    }
    const double nsq = a.row_norm_sq(row);
    if (nsq == 0.0) {
        warn("zero row " + std::to_string(row) + " skipped");
        return false;
    }
    const RowView r = a.row(row);
    const double residual = b[row] - r.dot(state.x);
    r.axpy(residual / nsq, state.x);
    return residual != 0.0;
}

StepInfo step_srk(const ProblemMatrix& a, std::span<const double> b, IterateState& state,
                  SimpleRandomSampler& sampler, RngStream& rng)
{
    const IndexSet omega = sampler.draw(rng);
    const std::vector<double> scores = score_rows(a, b, state.x, omega);
    StepInfo info;
    info.rows_touched = omega.size();
    const std::size_t pos = argmax_position(scores, omega);
    if (pos == omega.size() || scores[pos] == 0.0) {
        info.stagnant = true;
        return info;
    }
    info.selected = IndexSet::range(omega[pos], 1);
    step_kaczmarz(a, b, state, omega[pos]);
    return info;
}

StepInfo step_rbk(const ProblemMatrix& a, std::span<const double> b, IterateState& state,
                  const Partition& partition, RngStream& rng)
{
    StepInfo info;
    info.selected = partition.blocks[sample_block(partition, rng)];
    info.rows_touched = info.selected.size();
    const Vector r = residual_on(a, b, state.x, info.selected);
    add_into(state.x, apply_block_pinv(a, info.selected, r));
    return info;
}

StepInfo step_gbk(const ProblemMatrix& a, std::span<const double> b, IterateState& state)
{
    const std::size_t m = a.rows();
    StepInfo info;
    info.rows_touched = m;
    Vector r(m);
    std::vector<double> ratio(m, 0.0);
    double res_sq = 0.0;
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        r[i] = b[i] - a.row(i).dot(state.x);
        res_sq += r[i] * r[i];
        const double nsq = a.row_norm_sq(i);
        if (nsq > 0.0) {
            ratio[i] = r[i] * r[i] / nsq;
            best = std::max(best, ratio[i]);
        }
    }
    if (best == 0.0) {
        info.stagnant = true;
        return info;
    }
    // epsilon <= 1 holds exactly (a weighted mean never exceeds the max);
    // clamp so rounding cannot exclude the maximizing row.
    const double eps = std::min(1.0, 0.5 + 0.5 * (res_sq / a.frob_sq()) / best);
    const double threshold = eps * best;
    std::vector<std::size_t> rows;
    Vector r_block;
    for (std::size_t i = 0; i < m; ++i) {
        if (ratio[i] > 0.0 && ratio[i] >= threshold) {
            rows.push_back(i);
            r_block.push_back(r[i]);
        }
    }
    info.selected = IndexSet::from_sorted(std::move(rows));
    add_into(state.x, apply_block_pinv(a, info.selected, r_block));
    return info;
}

StepInfo step_rabk(const ProblemMatrix& a, std::span<const double> b, IterateState& state,
                   const Partition& partition, double alpha, RngStream& rng)
{
    const std::size_t block = sample_block(partition, rng);
    StepInfo info;
    info.selected = partition.blocks[block];
    info.rows_touched = info.selected.size();
    const double block_frob = partition.block_frob_sq[block];
    if (!(block_frob > 0.0)) {
        throw ContractError("step_rabk: zero-norm block");
    }
    // Every coefficient comes from the same x_t before any row is applied.
    Vector coef(info.selected.size(), 0.0);
    for (std::size_t k = 0; k < info.selected.size(); ++k) {
        const std::size_t i = info.selected[k];
        const double nsq = a.row_norm_sq(i);
        if (nsq == 0.0) {
            continue;
        }
        const double weight = nsq / block_frob;
        const double violation = a.row(i).dot(state.x) - b[i];
        coef[k] = -alpha * weight * violation / nsq;
    }
    for (std::size_t k = 0; k < info.selected.size(); ++k) {
        if (coef[k] != 0.0) {
            a.row(info.selected[k]).axpy(coef[k], state.x);
        }
    }
    return info;
}

StepInfo step_srbk_full(const ProblemMatrix& a, std::span<const double> b, IterateState& state, std::size_t k_max)
{
    return block_step_over(a, b, state, IndexSet::range(0, a.rows()), k_max);
}

SampledStepInfo step_srbk_sampled(const ProblemMatrix& a, std::span<const double> b, IterateState& state,
                                  std::size_t k_max, SimpleRandomSampler& sampler, RngStream& rng)
{
    SampledStepInfo out;
    out.omega = sampler.draw(rng);
    out.step = block_step_over(a, b, state, out.omega, k_max);
    return out;
}

SolveResult solve(const ProblemMatrix& a, std::span<const double> b, const SolverConfig& cfg,
                  std::span<const double> x0, std::optional<std::span<const double>> x_star)
{
    cfg.validate();
    if (cfg.method == Method::MultiRhs) {
        throw ConfigError("solve: the multi-RHS method runs through solve_multirhs");
    }
    if (b.size() != a.rows() || x0.size() != a.cols()) {
        throw ContractError("solve: dimension mismatch (A is " + std::to_string(a.rows()) + " x " +
                            std::to_string(a.cols()) + ", b has " + std::to_string(b.size()) + ", x0 has " +
                            std::to_string(x0.size()) + ")");
    }
    if (cfg.stopping == StoppingRule::ErrorVsKnown) {
        if (!x_star) {
            throw ConfigError("solve: the error-vs-known stopping rule needs x_star");
        }
        if (x_star->size() != a.cols()) {
            throw ContractError("solve: x_star has the wrong length");
        }
    }

    auto metric = [&](std::span<const double> x) {
        return cfg.stopping == StoppingRule::ErrorVsKnown ? res_metric(x, *x_star) : relative_residual(a, b, x);
    };

    SolveResult out;
    IterateState& state = out.state;
    Trajectory& traj = out.trajectory;
    state.x.assign(x0.begin(), x0.end());

    double res = metric(state.x);
    traj.set_initial_res(res);
    if (res < cfg.tol) {
        traj.status = Status::Converged;
        return out;
    }

    RngStream rng(cfg.seed);
    std::optional<SimpleRandomSampler> sampler;
    std::optional<RowNormSampler> row_sampler;
    Partition partition;
    switch (cfg.method) {
    case Method::SemiRandomized:
    case Method::SemiRandomizedBlock:
        sampler.emplace(a.rows(), cfg.eta);
        break;
    case Method::RandomizedKaczmarz:
        row_sampler.emplace(a);
        break;
    case Method::RandomizedBlock:
    case Method::RandomizedAverage:
        partition = uniform_partition(a.rows(), std::min(cfg.block_rows, a.rows()));
        partition.weigh(a);
        break;
    default:
        break;
    }

    const auto start = std::chrono::steady_clock::now();
    traj.status = Status::MaxIter;
    for (std::size_t it = 0; it < cfg.max_iter; ++it) {
        StepInfo info;
        bool exact = false;
        switch (cfg.method) {
        case Method::Kaczmarz: {
            const std::size_t row = state.t % a.rows();
            step_kaczmarz(a, b, state, row);
            info.selected = IndexSet::range(row, 1);
            info.rows_touched = 1;
            break;
        }
        case Method::RandomizedKaczmarz: {
            const std::size_t row = row_sampler->draw(rng);
            step_kaczmarz(a, b, state, row);
            info.selected = IndexSet::range(row, 1);
            info.rows_touched = 1;
            break;
        }
        case Method::SemiRandomized:
            info = step_srk(a, b, state, *sampler, rng);
            break;
        case Method::RandomizedBlock:
            info = step_rbk(a, b, state, partition, rng);
            break;
        case Method::GreedyBlock:
            info = step_gbk(a, b, state);
            exact = info.stagnant;
            break;
        case Method::RandomizedAverage:
            info = step_rabk(a, b, state, partition, cfg.alpha, rng);
            break;
        case Method::SemiRandomizedBlockFull:
            info = step_srbk_full(a, b, state, cfg.k_max);
            exact = info.stagnant;
            break;
        case Method::SemiRandomizedBlock:
            info = step_srbk_sampled(a, b, state, cfg.k_max, *sampler, rng).step;
            break;
        case Method::MultiRhs:
            break;
        }
        if (exact) {
            // Full scan found no violated row: x solves the system.
            traj.status = Status::Converged;
            break;
        }
        ++state.t;

        IterationRecord rec;
        rec.t = state.t;
        rec.block_size = info.selected.size();
        rec.rows_touched = info.rows_touched;
        rec.stagnant = info.stagnant;
        if (cfg.record_indices) {
            rec.selected = info.selected.vector();
        }
        res = all_finite(state.x) ? metric(state.x) : std::nan("");
        rec.res = res;
        rec.elapsed_ns = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count());
        if (!std::isfinite(res)) {
            traj.status = Status::Diverged;
            break;
        }
        traj.push(std::move(rec));
        if (res < cfg.tol) {
            traj.status = Status::Converged;
            break;
        }
    }
    return out;
}

} // namespace kaczmarz
