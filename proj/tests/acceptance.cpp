// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

#include "kaczmarz/diagnostics.hpp"
#include "kaczmarz/multirhs.hpp"
#include "kaczmarz/problems.hpp"
#include "kaczmarz/solvers.hpp"
#include "support.hpp"
#include "tomo_oracle.hpp"

using namespace kaczmarz;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

Vector col_vec(std::span<const double> s)
{
    return Vector(s.begin(), s.end());
}

double mean_of(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v)
{
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// 1. Error norms never increase for the full-scan and sampled block methods.
Outcome pythagorean_monotonicity()
{
    const auto start = Clock::now();
    double worst = -1e300;
    std::size_t steps = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const ProblemInstance p = gen_gaussian(100, 30, 1, 1000 + seed);
        const Vector b = col_vec(p.rhs(0));
        const Vector xs = col_vec(p.x_star->col(0));
        for (bool sampled : {false, true}) {
            IterateState s{Vector(30, 0.0), 0};
            SimpleRandomSampler sampler(100, 0.1);
            RngStream rng(seed);
            double prev = std::sqrt(ktest::dist_sq(s.x, xs));
            const double star = std::sqrt(ktest::dist_sq(xs, Vector(30, 0.0)));
            for (int t = 0; t < 100000 && prev * prev >= 1e-8 * star * star; ++t) {
                if (sampled) {
                    step_srbk_sampled(p.a, b, s, 5, sampler, rng);
                } else if (step_srbk_full(p.a, b, s, 5).stagnant) {
                    break;
                }
                const double now = std::sqrt(ktest::dist_sq(s.x, xs));
                worst = std::max(worst, now - prev);
                prev = now;
                ++steps;
            }
        }
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-10 && elapsed < 10.0,
            std::to_string(steps) + " steps, max increase " + fmt(worst) + ", " + fmt(elapsed) + " s"};
}

// 2. Per-step full-scan contraction factor on 80 x 25 systems.
Outcome full_scan_bound()
{
    const auto start = Clock::now();
    std::size_t violations = 0, records = 0;
    double max_violation = 0.0, min_slack = 1e300;
    for (std::size_t k_max : {1, 3, 5}) {
        for (std::uint64_t seed = 1; seed <= 50; ++seed) {
            const ProblemInstance p = gen_gaussian(80, 25, 1, 2000 + seed);
            SolverConfig cfg;
            cfg.method = Method::SemiRandomizedBlockFull;
            cfg.k_max = k_max;
            cfg.tol = 1e-10;
            cfg.max_iter = 5000;
            const std::vector<std::uint64_t> seeds = {seed};
            const BoundReport r = verify_trajectory_bound(p.a, p.rhs(0), p.x_star->col(0), cfg, seeds);
            violations += r.violations;
            records += r.records.size();
            max_violation = std::max(max_violation, r.max_violation);
            min_slack = std::min(min_slack, r.min_slack);
        }
    }
    const double elapsed = seconds_since(start);
    return {violations == 0 && elapsed < 30.0,
            "150 runs (50 per k_max in {1,3,5}), " + std::to_string(records) + " steps, " +
                std::to_string(violations) + " violations, max violation " + fmt(max_violation) + ", min slack " +
                fmt(min_slack) + ", " + fmt(elapsed) + " s"};
}

// 3. The selected block is solved exactly after every block step.
Outcome block_exactness()
{
    RngStream meta(3);
    std::size_t checked = 0, skipped = 0;
    double worst = 0.0;
    for (int method = 0; method < 4; ++method) {
        for (int trial = 0; trial < 25; ++trial) {
            const std::size_t m = 40 + meta.below(80), n = 10 + meta.below(30);
            const ProblemInstance p = gen_gaussian(m, n, 1, meta.next_u64());
            const Vector b = col_vec(p.rhs(0));
            double b_inf = 0.0;
            for (double v : b) {
                b_inf = std::max(b_inf, std::abs(v));
            }
            IterateState s{ktest::randn(n, meta), 0};
            RngStream rng(meta.next_u64());
            Partition part = uniform_partition(m, 1 + meta.below(n));
            part.weigh(p.a);
            SimpleRandomSampler sampler(m, 0.3);
            const std::size_t k_max = 1 + meta.below(n);
            for (int t = 0; t < 10; ++t) {
                StepInfo info;
                switch (method) {
                case 0: info = step_rbk(p.a, b, s, part, rng); break;
                case 1: info = step_gbk(p.a, b, s); break;
                case 2: info = step_srbk_full(p.a, b, s, k_max); break;
                default: info = step_srbk_sampled(p.a, b, s, k_max, sampler, rng).step; break;
                }
                if (info.stagnant || info.selected.empty()) {
                    continue;
                }
                const Eigen::MatrixXd aj = ktest::to_eigen(p.a.dense_rows(info.selected.span()));
                Eigen::FullPivLU<Eigen::MatrixXd> lu(aj);
                if (static_cast<std::size_t>(lu.rank()) < info.selected.size()) {
                    ++skipped;
                    continue;
                }
                double r = 0.0;
                for (std::size_t i : info.selected) {
                    r = std::max(r, std::abs(b[i] - p.a.row(i).dot(s.x)) / (1.0 + b_inf));
                }
                worst = std::max(worst, r);
                ++checked;
            }
        }
    }
    return {worst <= 1e-8 && checked >= 900,
            std::to_string(checked) + " full-row-rank block steps (" + std::to_string(skipped) +
                " rank-deficient skipped), max scaled residual " + fmt(worst)};
}

bool same_indices(const Trajectory& a, const Trajectory& b)
{
    if (a.records.empty() || a.records.size() != b.records.size() || a.records.front().selected.empty()) {
        return false;
    }
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        if (a.records[k].selected != b.records[k].selected) {
            return false;
        }
    }
    return true;
}

// 4. Degenerate parameter choices reproduce the simpler methods.
Outcome reductions()
{
    std::vector<std::string> failed;
    std::size_t compared = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ProblemInstance p = gen_gaussian(150, 20, 1, 4000 + seed);
        const Vector x0(20, 0.0);
        const auto xs = std::optional<std::span<const double>>(p.x_star->col(0));
        SolverConfig base;
        base.tol = 1e-10;
        base.seed = seed;
        base.max_iter = 20000;

        SolverConfig alg4 = base, alg3 = base;
        alg4.method = Method::SemiRandomizedBlock;
        alg4.eta = 1.0;
        alg4.k_max = 6;
        alg3.method = Method::SemiRandomizedBlockFull;
        alg3.k_max = 6;
        const Trajectory t4 = solve(p.a, p.rhs(0), alg4, x0, xs).trajectory;
        const Trajectory t3 = solve(p.a, p.rhs(0), alg3, x0, xs).trajectory;
        // The full scan stops on an exact solution without a record; the
        // sampled variant records that step as stagnant, so compare the
        // common prefix and require any extra steps to be stagnant.
        bool ok4 = t4.records.size() >= t3.records.size();
        for (std::size_t k = 0; ok4 && k < t4.records.size(); ++k) {
            ok4 = k < t3.records.size() ? t4.records[k].selected == t3.records[k].selected : t4.records[k].stagnant;
        }
        if (!ok4) {
            failed.push_back("srbk(eta=1)~srbk-full");
        }

        SolverConfig one = alg3, srk = base;
        one.k_max = 1;
        srk.method = Method::SemiRandomized;
        srk.eta = 1.0;
        if (!same_indices(solve(p.a, p.rhs(0), one, x0, xs).trajectory, solve(p.a, p.rhs(0), srk, x0, xs).trajectory)) {
            failed.push_back("srbk-full(k=1)~srk");
        }

        SolverConfig srk_sampled = base, multi = base;
        srk_sampled.method = Method::SemiRandomized;
        srk_sampled.eta = 0.1;
        multi.method = Method::MultiRhs;
        multi.eta = 0.1;
        const Trajectory ts = solve(p.a, p.rhs(0), srk_sampled, x0, xs).trajectory;
        const Trajectory tm = solve_multirhs(p.a, p.b, multi, DenseColMajor(20, 1), p.x_star).trajectory;
        bool ok5 = ts.records.size() == tm.records.size();
        for (std::size_t k = 0; ok5 && k < ts.records.size(); ++k) {
            ok5 = ts.records[k].stagnant ? tm.records[k].stagnant
                                         : ts.records[k].selected == tm.records[k].selected;
        }
        if (!ok5) {
            failed.push_back("multi(kb=1)~srk");
        }

        SolverConfig rabk = base, rk = base;
        rabk.method = Method::RandomizedAverage;
        rabk.block_rows = 1;
        rabk.alpha = 1.0;
        rk.method = Method::RandomizedKaczmarz;
        const SolveResult ra = solve(p.a, p.rhs(0), rabk, x0, xs);
        const SolveResult rr = solve(p.a, p.rhs(0), rk, x0, xs);
        const double gap = std::sqrt(ktest::dist_sq(ra.state.x, rr.state.x));
        if (!same_indices(ra.trajectory, rr.trajectory) || gap > 1e-10 * std::sqrt(ktest::dist_sq(rr.state.x, x0))) {
            failed.push_back("rabk(|J|=1,alpha=1)~kaczmarz");
        }
        compared += 4;
    }
    std::string detail = std::to_string(compared) + " trajectory pairs compared";
    for (const std::string& f : failed) {
        detail += "; mismatch " + f;
    }
    return {failed.empty(), detail};
}

double chi_square(const std::vector<double>& counts, const std::vector<double>& expected,
                  const std::vector<double>& variance)
{
    double s = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        s += (counts[i] - expected[i]) * (counts[i] - expected[i]) / variance[i];
    }
    return s;
}

// 5. Sampler frequencies pass a chi-square test at three standard deviations.
Outcome sampler_distributions()
{
    const std::size_t draws = 100000;
    const std::size_t m = 100;
    const double eta = 0.05;
    SimpleRandomSampler sampler(m, eta);
    RngStream rng(5);
    std::vector<double> counts(m, 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
        for (std::size_t i : sampler.draw(rng)) {
            counts[i] += 1.0;
        }
    }
    const double dof_u = static_cast<double>(m - 1);
    const double chi_u = chi_square(counts, std::vector<double>(m, draws * eta),
                                    std::vector<double>(m, draws * eta * (1.0 - eta)));
    const double limit_u = dof_u + 3.0 * std::sqrt(2.0 * dof_u);

    // Eight blocks with unequal Frobenius weights.
    std::vector<Triplet> t;
    RngStream gen(6);
    for (std::size_t i = 0; i < 40; ++i) {
        t.push_back({i, i % 4, 0.2 + gen.uniform() * (1.0 + static_cast<double>(i / 5))});
    }
    const ProblemMatrix a = build_csr(40, 4, t);
    Partition part = uniform_partition(40, 5);
    part.weigh(a);
    std::vector<double> block_counts(part.size(), 0.0), expected(part.size()), var(part.size());
    for (std::size_t d = 0; d < draws; ++d) {
        block_counts[sample_block(part, rng)] += 1.0;
    }
    for (std::size_t k = 0; k < part.size(); ++k) {
        const double pk = part.block_frob_sq[k] / a.frob_sq();
        expected[k] = draws * pk;
        var[k] = draws * pk;
    }
    const double dof_b = static_cast<double>(part.size() - 1);
    const double chi_b = chi_square(block_counts, expected, var);
    const double limit_b = dof_b + 3.0 * std::sqrt(2.0 * dof_b);
    return {chi_u <= limit_u && chi_b <= limit_b,
            "simple random sample chi2 " + fmt(chi_u) + " <= " + fmt(limit_u) + "; Frobenius blocks chi2 " +
                fmt(chi_b) + " <= " + fmt(limit_b)};
}

// 6. Tomography sizing and row sums against analytic chord lengths.
Outcome tomography()
{
    TomoGeometry g;
    g.n = 60;
    g.angles_deg = parse_angles("0:1:178");
    g.rays = 125;
    const TomoProblem p = gen_paralleltomo(g);
    const ProblemMatrix& a = p.instance.a;
    std::size_t row = 0;
    double worst = 0.0;
    bool aligned = true;
    for (std::size_t ai = 0; ai < g.angles_deg.size(); ++ai) {
        for (std::size_t ri = 0; ri < g.rays; ++ri) {
            const double chord = ktest::chord_in_box(tomo_ray(g, ai, ri), g.n);
            if (!(chord > 1e-12)) {
                continue;
            }
            if (row >= a.rows()) {
                aligned = false;
                break;
            }
            const RowView rv = a.row(row++);
            const double sum = std::accumulate(rv.values.begin(), rv.values.end(), 0.0);
            worst = std::max(worst, std::abs(sum - chord));
        }
    }
    aligned = aligned && row == a.rows();
    const bool sized = p.rows_before_drop == 22375 && a.cols() == 3600;
    return {sized && aligned && worst <= 1e-9,
            std::to_string(p.rows_before_drop) + " x " + std::to_string(a.cols()) + " before dropping (" +
                std::to_string(p.dropped_rows) + " empty rows dropped), max row-sum error " + fmt(worst)};
}

// 7. Desk-scale convergence and per-iteration row counts.
Outcome convergence_order()
{
    const auto start = Clock::now();
    const ProblemInstance p = gen_gaussian(5000, 500, 1, 7);
    const Vector x0(500, 0.0);
    const auto xs = std::optional<std::span<const double>>(p.x_star->col(0));
    SolverConfig alg4;
    alg4.method = Method::SemiRandomizedBlock;
    alg4.eta = 0.1;
    alg4.k_max = 50;
    alg4.tol = 1e-6;
    alg4.seed = 7;
    const Trajectory t4 = solve(p.a, p.rhs(0), alg4, x0, xs).trajectory;
    const bool alg4_ok = t4.status == Status::Converged && t4.final_res() < 1e-6;
    std::size_t touched4 = 0;
    for (const IterationRecord& r : t4.records) {
        touched4 = std::max(touched4, r.rows_touched);
    }

    SolverConfig gbk;
    gbk.method = Method::GreedyBlock;
    gbk.max_iter = 3;
    gbk.tol = 1e-6;
    const Trajectory tg = solve(p.a, p.rhs(0), gbk, x0, xs).trajectory;
    std::size_t touched_g = tg.records.empty() ? 0 : tg.records.front().rows_touched;

    const ProblemInstance q = gen_gaussian(5000, 500, 10, 8);
    SolverConfig alg5;
    alg5.method = Method::MultiRhs;
    alg5.eta = 0.01;
    alg5.tol = 1e-6;
    alg5.record_indices = false;
    std::vector<double> its;
    bool alg5_converged = true;
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
        alg5.seed = 100 + rep;
        const Trajectory t5 = solve_multirhs(q.a, q.b, alg5, DenseColMajor(500, 10), q.x_star).trajectory;
        alg5_converged = alg5_converged && t5.status == Status::Converged;
        its.push_back(static_cast<double>(t5.iterations()));
    }
    const double mean_it = mean_of(its);
    const double elapsed = seconds_since(start);
    const bool pass = alg4_ok && alg5_converged && mean_it >= 625.0 && mean_it <= 1880.0 && touched4 == 500 &&
                      touched_g == 5000 && elapsed < 120.0;
    return {pass, "srbk " + std::string(to_string(t4.status)) + " in " + std::to_string(t4.iterations()) +
                      " it; multi mean IT " + fmt(mean_it) + " in [625, 1880]; rows/it srbk " +
                      std::to_string(touched4) + " vs gbk " + std::to_string(touched_g) + "; " + fmt(elapsed) + " s"};
}

// 8. Mean multi-RHS error ratio against the per-sample contraction factor.
Outcome multirhs_contraction()
{
    const ProblemInstance p = gen_gaussian(50, 20, 3, 9);
    const double eta = 0.5;
    std::vector<double> ratios, factors, gaps;
    std::size_t step_violations = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        MultiState s{DenseColMajor(20, 3), 0};
        SimpleRandomSampler sampler(50, eta);
        RngStream rng(seed);
        double run_ratio = 0.0, run_factor = 0.0;
        const int steps = 5;
        for (int t = 0; t < steps; ++t) {
            const double before = ktest::dist_sq(s.x.data(), p.x_star->data());
            const MultiStepInfo info = step_multirhs(p.a, p.b, s, sampler, rng);
            const double ratio = ktest::dist_sq(s.x.data(), p.x_star->data()) / before;
            const double factor = contraction_factor_multirhs(p.a, info.omega);
            step_violations += ratio > factor + 1e-9 ? 1 : 0;
            run_ratio += ratio / steps;
            run_factor += factor / steps;
        }
        ratios.push_back(run_ratio);
        factors.push_back(run_factor);
        gaps.push_back(run_ratio - run_factor);
    }
    const double mean_ratio = mean_of(ratios);
    const double mean_factor = mean_of(factors);
    const double spread = sd_of(ratios);
    return {mean_ratio <= mean_factor + 3.0 * spread,
            "200 runs x 5 steps: mean ratio " + fmt(mean_ratio) + " vs mean factor " + fmt(mean_factor) +
                " (3 sd = " + fmt(3.0 * spread) + "); per-step violations " + std::to_string(step_violations)};
}

// 9. Matrix Market round trip and symmetric expansion.
Outcome matrix_market()
{
    const fs::path dir = fs::temp_directory_path() / "kaczmarz_acceptance";
    fs::create_directories(dir);
    RngStream rng(10);
    const ProblemMatrix a = ktest::random_sparse(70, 45, 0.08, rng);
    write_matrix_market(dir / "round.mtx", a);
    const ProblemMatrix b = load_matrix_market(dir / "round.mtx");
    const bool round = a.rows() == b.rows() && a.cols() == b.cols() &&
                       std::ranges::equal(a.row_offsets(), b.row_offsets()) &&
                       std::ranges::equal(a.col_indices(), b.col_indices()) &&
                       std::ranges::equal(a.values(), b.values());

    // Lower triangle of a symmetric 5 x 5 matrix.
    std::ofstream(dir / "sym5.mtx") << "%%MatrixMarket matrix coordinate real symmetric\n"
                                       "% hand-built\n"
                                       "5 5 8\n"
                                       "1 1 4\n"
                                       "2 1 -1\n"
                                       "2 2 4\n"
                                       "3 2 -1.5\n"
                                       "4 1 2\n"
                                       "4 4 3\n"
                                       "5 3 0.25\n"
                                       "5 5 1\n";
    const double expected[5][5] = {{4, -1, 0, 2, 0},
                                   {-1, 4, -1.5, 0, 0},
                                   {0, -1.5, 0, 0, 0.25},
                                   {2, 0, 0, 3, 0},
                                   {0, 0, 0.25, 0, 1}};
    const ProblemMatrix s = load_matrix_market(dir / "sym5.mtx");
    const DenseMatrix d = s.to_dense();
    bool sym = s.rows() == 5 && s.cols() == 5 && s.nnz() == 12;
    for (std::size_t i = 0; i < 5 && sym; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            sym = sym && d(i, j) == expected[i][j];
        }
    }
    return {round && sym, std::string("round trip ") + (round ? "exact" : "MISMATCH") + " (70 x 45, nnz " +
                              std::to_string(a.nnz()) + "); symmetric 5 x 5 expansion " + (sym ? "exact" : "WRONG")};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 error monotonicity (full-scan and sampled block)", pythagorean_monotonicity},
        {"2 full-scan per-step contraction bound", full_scan_bound},
        {"3 block exactness", block_exactness},
        {"4 reduction identities", reductions},
        {"5 sampler distributions", sampler_distributions},
        {"6 tomography sizing and row sums", tomography},
        {"7 desk-scale convergence", convergence_order},
        {"8 multi-RHS aggregate contraction", multirhs_contraction},
        {"9 Matrix Market round trip and symmetric expansion", matrix_market},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
    return failures == 0 ? 0 : 1;
}
