#include "kaczmarz/multirhs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "kaczmarz/error.hpp"

namespace kaczmarz {

MultiStepInfo step_multirhs_on(const ProblemMatrix& a, const DenseColMajor& b, MultiState& state, IndexSet omega)
{
    const std::size_t k_b = b.cols();
    omega.check_bound(a.rows());
    MultiStepInfo info;
    info.rows_touched = omega.size();
    info.selection.assign(k_b, 0);

    // Select and compute every column's step from the same X^(t), then commit.
    std::vector<double> step(k_b, 0.0);
    std::vector<bool> moves(k_b, false);
    bool any = false;
    for (std::size_t j = 0; j < k_b; ++j) {
        const auto x = state.x.col(j);
        const auto rhs = b.col(j);
        double best_score = -1.0;
        std::size_t best_row = omega.empty() ? 0 : omega[0];
        double best_residual = 0.0;
        for (std::size_t i : omega) {
            const double norm = a.row_norm(i);
            const double residual = rhs[i] - a.row(i).dot(x);
            const double score = norm > 0.0 ? std::abs(residual) / norm : 0.0;
            if (score > best_score) {
                best_score = score;
                best_row = i;
                best_residual = residual;
            }
        }
        info.selection[j] = best_row;
        if (best_score > 0.0) {
            step[j] = best_residual / a.row_norm_sq(best_row);
            moves[j] = true;
            any = true;
        }
    }
    for (std::size_t j = 0; j < k_b; ++j) {
        if (moves[j]) {
            a.row(info.selection[j]).axpy(step[j], state.x.col(j));
        }
    }
    info.stagnant = !any;
    info.omega = std::move(omega);
    return info;
}

MultiStepInfo step_multirhs(const ProblemMatrix& a, const DenseColMajor& b, MultiState& state,
                            SimpleRandomSampler& sampler, RngStream& rng)
{
    return step_multirhs_on(a, b, state, sampler.draw(rng));
}

double res_metric_multi(const DenseColMajor& x, const DenseColMajor& x_star)
{
    if (x.rows() != x_star.rows() || x.cols() != x_star.cols()) {
        throw ContractError("res_metric_multi: shape mismatch");
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        worst = std::max(worst, res_metric(x.col(j), x_star.col(j)));
    }
    return worst;
}

double relative_residual_multi(const ProblemMatrix& a, const DenseColMajor& b, const DenseColMajor& x)
{
    double worst = 0.0;
    for (std::size_t j = 0; j < b.cols(); ++j) {
        worst = std::max(worst, relative_residual(a, b.col(j), x.col(j)));
    }
    return worst;
}

MultiSolveResult solve_multirhs(const ProblemMatrix& a, const DenseColMajor& b, const SolverConfig& cfg,
                                const DenseColMajor& x0, const std::optional<DenseColMajor>& x_star)
{
    cfg.validate();
    if (b.rows() != a.rows() || x0.rows() != a.cols() || x0.cols() != b.cols() || b.cols() == 0) {
        throw ContractError("solve_multirhs: dimension mismatch");
    }
    if (cfg.stopping == StoppingRule::ErrorVsKnown) {
        if (!x_star) {
            throw ConfigError("solve_multirhs: the error-vs-known stopping rule needs X_star");
        }
        if (x_star->rows() != a.cols() || x_star->cols() != b.cols()) {
            throw ContractError("solve_multirhs: X_star has the wrong shape");
        }
    }
    auto metric = [&](const DenseColMajor& x) {
        return cfg.stopping == StoppingRule::ErrorVsKnown ? res_metric_multi(x, *x_star)
                                                          : relative_residual_multi(a, b, x);
    };

    MultiSolveResult out;
    out.state.x = x0;
    Trajectory& traj = out.trajectory;
    double res = metric(out.state.x);
    traj.set_initial_res(res);
    if (res < cfg.tol) {
        traj.status = Status::Converged;
        return out;
    }

    RngStream rng(cfg.seed);
    SimpleRandomSampler sampler(a.rows(), cfg.eta);
    const auto start = std::chrono::steady_clock::now();
    traj.status = Status::MaxIter;
    for (std::size_t it = 0; it < cfg.max_iter; ++it) {
        MultiStepInfo info = step_multirhs(a, b, out.state, sampler, rng);
        ++out.state.t;
        IterationRecord rec;
        rec.t = out.state.t;
        rec.block_size = info.selection.size();
        rec.rows_touched = info.rows_touched;
        rec.stagnant = info.stagnant;
        if (cfg.record_indices) {
            rec.selected = std::move(info.selection);
        }
        const auto data = out.state.x.data();
        const bool finite = std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
        res = finite ? metric(out.state.x) : std::nan("");
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
