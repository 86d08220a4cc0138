#include "kaczmarz/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "kaczmarz/error.hpp"
#include "kaczmarz/experiment.hpp"

namespace kaczmarz {

namespace {

// Smallest singular value as a lower bound for ||M e|| / ||e|| over all e:
// zero unless M has full column rank. Values at or below
// sigma_max * max(dims) * 1e-12 count as zero.
double column_rank_sigma_min(const DenseMatrix& m)
{
    const Vector sigma = singular_values(m);
    if (m.rows() < m.cols()) {
        return 0.0;
    }
    const double floor = sigma.front() * static_cast<double>(std::max(m.rows(), m.cols())) * 1e-12;
    const double smallest = sigma.back();
    return smallest > floor ? smallest : 0.0;
}

double frob_sq_of(const ProblemMatrix& a, const IndexSet& rows)
{
    double s = 0.0;
    for (std::size_t i : rows) {
        s += a.row_norm_sq(i);
    }
    return s;
}

double sigma_max_of(const ProblemMatrix& a, const IndexSet& rows)
{
    return spectral_extremes(a.dense_rows(rows.span())).sigma_max;
}

double squared_distance(std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - y[j];
        s += d * d;
    }
    return s;
}

} // namespace

std::optional<double> contraction_factor(const SpectralEstimates& s)
{
    const double rest = s.frob_sq_ref - s.frob_sq_block;
    if (!(rest > 0.0)) {
        return std::nullopt;
    }
    if (s.sigma_max_block == 0.0) {
        return 1.0;
    }
    const double sigma_ratio = (s.sigma_min_ref * s.sigma_min_ref) / (s.sigma_max_block * s.sigma_max_block);
    return 1.0 - (s.frob_sq_block / rest) * sigma_ratio;
}

SpectralEstimates spectral_estimates_alg3(const ProblemMatrix& a, const IndexSet& block)
{
    block.check_bound(a.rows());
    SpectralEstimates s;
    s.sigma_min_ref = column_rank_sigma_min(a.to_dense());
    s.sigma_max_block = block.empty() ? 0.0 : sigma_max_of(a, block);
    s.frob_sq_ref = a.frob_sq();
    s.frob_sq_block = frob_sq_of(a, block);
    return s;
}

std::optional<double> contraction_factor_alg3(const ProblemMatrix& a, const IndexSet& block)
{
    return contraction_factor(spectral_estimates_alg3(a, block));
}

SpectralEstimates spectral_estimates_alg4(const ProblemMatrix& a, const IndexSet& omega, const IndexSet& block)
{
    omega.check_bound(a.rows());
    for (std::size_t i : block) {
        if (!omega.contains(i)) {
            throw ContractError("contraction_factor_alg4: block row " + std::to_string(i) + " is not in Omega_t");
        }
    }
    SpectralEstimates s;
    // The sampled bound is stated with the smallest nonzero singular value of
    // A_t, which need not bound ||A_t e|| / ||e|| when A_t is wide or
    // rank-deficient; verify_trajectory_bound reports what that does.
    s.sigma_min_ref = omega.empty() ? 0.0 : spectral_extremes(a.dense_rows(omega.span())).sigma_min_nonzero;
    s.sigma_max_block = block.empty() ? 0.0 : sigma_max_of(a, block);
    s.frob_sq_ref = frob_sq_of(a, omega);
    s.frob_sq_block = frob_sq_of(a, block);
    return s;
}

std::optional<double> contraction_factor_alg4(const ProblemMatrix& a, const IndexSet& omega, const IndexSet& block)
{
    return contraction_factor(spectral_estimates_alg4(a, omega, block));
}

double contraction_factor_multirhs(const ProblemMatrix& a, const IndexSet& omega)
{
    if (omega.empty()) {
        throw ContractError("contraction_factor_multirhs: empty sample");
    }
    omega.check_bound(a.rows());
    const double frob = frob_sq_of(a, omega);
    if (frob == 0.0) {
        return 1.0;
    }
    const double sigma = spectral_extremes(a.dense_rows(omega.span())).sigma_min_nonzero;
    return 1.0 - sigma * sigma / frob;
}

double rbk_reference_factor(const ProblemMatrix& a, const Partition& partition)
{
    double worst_block = 0.0;
    for (const IndexSet& block : partition.blocks) {
        worst_block = std::max(worst_block, sigma_max_of(a, block));
    }
    if (worst_block == 0.0) {
        return 1.0;
    }
    const double sigma = column_rank_sigma_min(a.to_dense());
    return 1.0 - sigma * sigma / (static_cast<double>(a.rows()) * worst_block * worst_block);
}

BoundReport verify_trajectory_bound(const ProblemMatrix& a, std::span<const double> b, std::span<const double> x_star,
                                    const SolverConfig& cfg, std::span<const std::uint64_t> seeds)
{
    cfg.validate();
    const bool sampled = cfg.method == Method::SemiRandomizedBlock;
    if (!sampled && cfg.method != Method::SemiRandomizedBlockFull) {
        throw ConfigError("verify_trajectory_bound: method must be srbk-full or srbk");
    }
    if (b.size() != a.rows() || x_star.size() != a.cols()) {
        throw ContractError("verify_trajectory_bound: dimension mismatch");
    }
    const double star_sq = std::inner_product(x_star.begin(), x_star.end(), x_star.begin(), 0.0);
    if (star_sq == 0.0) {
        throw ConfigError("verify_trajectory_bound: x_star must be nonzero");
    }
    // sigma_min(A) is shared by every full-scan step.
    const double sigma_a = sampled ? 0.0 : column_rank_sigma_min(a.to_dense());

    BoundReport report;
    report.min_slack = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed : seeds) {
        RngStream rng(seed);
        SimpleRandomSampler sampler(a.rows(), cfg.eta);
        IterateState state{Vector(a.cols(), 0.0), 0};
        for (std::size_t it = 0; it < cfg.max_iter; ++it) {
            const double before = squared_distance(state.x, x_star);
            if (before == 0.0 || before / star_sq < cfg.tol) {
                break;
            }
            IndexSet omega;
            StepInfo step;
            if (sampled) {
                SampledStepInfo s = step_srbk_sampled(a, b, state, cfg.k_max, sampler, rng);
                omega = std::move(s.omega);
                step = std::move(s.step);
            } else {
                step = step_srbk_full(a, b, state, cfg.k_max);
            }
            if (step.stagnant) {
                if (!sampled) {
                    break;
                }
                ++state.t;
                continue;
            }
            ++state.t;
            const double after = squared_distance(state.x, x_star);

            SpectralEstimates est;
            if (sampled) {
                est = spectral_estimates_alg4(a, omega, step.selected);
            } else {
                est.sigma_min_ref = sigma_a;
                est.sigma_max_block = sigma_max_of(a, step.selected);
                est.frob_sq_ref = a.frob_sq();
                est.frob_sq_block = frob_sq_of(a, step.selected);
            }
            const std::optional<double> factor = contraction_factor(est);

            BoundRecord rec;
            rec.seed = seed;
            rec.t = state.t;
            rec.ratio = after / before;
            rec.defined = factor.has_value();
            rec.bound = factor.value_or(1.0);
            rec.slack = rec.bound - rec.ratio;
            rec.satisfied = !rec.defined || rec.ratio <= rec.bound + kBoundSlack;
            if (!rec.satisfied) {
                ++report.violations;
                report.max_violation = std::max(report.max_violation, rec.ratio - rec.bound);
            }
            if (rec.defined) {
                report.min_slack = std::min(report.min_slack, rec.slack);
            }
            report.records.push_back(rec);
        }
    }
    if (report.records.empty()) {
        report.min_slack = 0.0;
    }
    return report;
}

void write_bound_csv(const std::filesystem::path& path, const BoundReport& report)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << "seed,t,ratio,bound,satisfied,slack\n";
    for (const BoundRecord& r : report.records) {
        out << r.seed << ',' << r.t << ',' << format_double(r.ratio) << ',' << (r.defined ? format_double(r.bound) : "nan")
            << ',' << (r.satisfied ? 1 : 0) << ',' << (r.defined ? format_double(r.slack) : "nan") << '\n';
    }
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

} // namespace kaczmarz
